import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["test/**/*.test.ts"],
    // The live-server suite spawns the Python gateway; give it room.
    testTimeout: 30_000,
    hookTimeout: 30_000,
  },
});
