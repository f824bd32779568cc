"""Network front end for a live session: NDJSON streaming plus a small
HTTP gateway for browser panels.

Two listeners share one asyncio loop and one session:

* a TCP port speaking newline-delimited JSON both ways (frames and
  ack/nack replies out, command envelopes in), and
* an optional HTTP port serving ``GET /stream`` (the same frames as
  server-sent events), ``POST /cmd`` (one envelope per request), and
  static files for the operator panel.

The scan loop is the only writer to the controller.  Inbound envelopes
are queued and drained completely between scans, so commands from any
number of clients serialize cleanly and every envelope gets exactly one
reply.  Mutating commands additionally require the control token, which
a client claims with ``acquire_token`` and loses on disconnect.

Each frame is serialized exactly once; the broadcast copy and the event
log line are the same string.  A slow consumer's queue fills up and the
consumer is dropped rather than ever stalling the scan.
"""

from __future__ import annotations

import asyncio
import json
import logging
from itertools import count
from pathlib import Path
from urllib.parse import parse_qs, unquote

from .session import SimSession, frame_json

__all__ = ["EventLog", "TelemetryServer", "replay", "MUTATING_COMMANDS"]

log = logging.getLogger("cyclonesim.telemetry")

MUTATING_COMMANDS = frozenset(
    {
        "start",
        "stop",
        "set_mode",
        "open_upper",
        "close_upper",
        "open_lower",
        "close_lower",
        "reset_alarms",
    }
)

CONTENT_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "text/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".map": "application/json",
    ".json": "application/json",
    ".svg": "image/svg+xml",
    ".png": "image/png",
    ".ico": "image/x-icon",
    ".txt": "text/plain; charset=utf-8",
    ".wasm": "application/wasm",
}

MAX_BODY_BYTES = 1 << 20


def _no_nonfinite(token: str):
    raise ValueError(f"non-finite number {token}")


def _strict_loads(text):
    # NaN/Infinity literals would poison re-serialization downstream.
    return json.loads(text, parse_constant=_no_nonfinite)


class EventLog:
    """Append-only NDJSON log of everything the server emitted or heard."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._fh = open(self.path, "w", encoding="utf-8")

    def append(self, line: str) -> None:
        self._fh.write(line + "\n")
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()


def replay(path: str | Path) -> list[str]:
    """Return the frame lines of a log, byte-identical to what was sent.

    Command and ack traffic interleaved in the log is skipped.  A torn
    final line (no trailing newline, e.g. the process died mid-write) is
    dropped with a warning; anything unparseable before that means the
    file is damaged and raises ValueError naming the line.
    """
    text = Path(path).read_text(encoding="utf-8")
    if not text:
        return []
    ends_clean = text.endswith("\n")
    lines = text.split("\n")
    if lines[-1] == "":
        lines.pop()
    frames: list[str] = []
    for number, line in enumerate(lines, start=1):
        try:
            message = json.loads(line)
            if not isinstance(message, dict) or "type" not in message:
                raise ValueError("not a log message")
        except ValueError:
            if number == len(lines) and not ends_clean:
                log.warning("dropping torn final line %d of %s", number, path)
                break
            raise ValueError(f"corrupt log line {number} in {path}") from None
        if message["type"] == "frame":
            frames.append(line)
    return frames


class _Client:
    """One connected consumer: its outbound queue and how to kick it."""

    def __init__(self, key: str, queue_size: int):
        self.key = key
        self.queue: asyncio.Queue[str | None] = asyncio.Queue(maxsize=queue_size)
        self.task: asyncio.Task | None = None  # the task writing to the peer
        self.writer: asyncio.StreamWriter | None = None


class TelemetryServer:
    """Serve one session over TCP NDJSON and (optionally) HTTP/SSE.

    ``time_scale`` stretches simulated time onto the wall clock
    (1.0 = real time, 0.0 = free-running).  ``duration_ms`` defaults to
    the scenario's duration; 0 means run until stopped.  With
    ``wait_clients`` > 0 the scan loop holds at t=0 until that many
    stream consumers are attached, so none of them miss the first frame.
    """

    def __init__(
        self,
        session: SimSession,
        host: str = "127.0.0.1",
        port: int = 0,
        http_port: int | None = None,
        http_host: str | None = None,
        static_dir: str | Path | None = None,
        log_path: str | Path | None = None,
        time_scale: float = 1.0,
        duration_ms: int | None = None,
        wait_clients: int = 0,
        max_client_queue: int = 512,
    ):
        if time_scale < 0:
            raise ValueError("time_scale must be >= 0")
        self.session = session
        self.host = host
        self.port = port
        self.http_port = http_port
        self.http_host = http_host or host
        self.static_dir = Path(static_dir).resolve() if static_dir else None
        self.log_path = log_path
        self.time_scale = time_scale
        self.duration_ms = (
            session.scenario.duration_ms if duration_ms is None else duration_ms
        )
        self.wait_clients = wait_clients
        self.max_client_queue = max_client_queue
        self._clients: dict[int, _Client] = {}
        self._conn_ids = count(1)
        self._token: str | None = None
        self._loop: asyncio.AbstractEventLoop | None = None
        self._stop: asyncio.Event | None = None
        self._commands: asyncio.Queue | None = None
        self._log: EventLog | None = None

    # -- lifecycle ----------------------------------------------------------

    async def serve(self, on_started=None) -> None:
        self._loop = asyncio.get_running_loop()
        self._stop = asyncio.Event()
        self._commands = asyncio.Queue()
        self._log = EventLog(self.log_path) if self.log_path else None
        tcp = await asyncio.start_server(self._handle_tcp, self.host, self.port)
        self.port = tcp.sockets[0].getsockname()[1]
        http = None
        if self.http_port is not None:
            http = await asyncio.start_server(
                self._handle_http, self.http_host, self.http_port
            )
            self.http_port = http.sockets[0].getsockname()[1]
        if on_started is not None:
            on_started()
        try:
            await self._scan_loop()
        finally:
            tcp.close()
            await tcp.wait_closed()
            if http is not None:
                http.close()
                await http.wait_closed()
            await self._flush_and_close_clients()
            self._fail_pending_commands()
            if self._log is not None:
                self._log.close()

    def request_stop(self) -> None:
        """Thread-safe: ask the serve loop to wind down."""
        if self._loop is None or self._stop is None:
            return
        try:
            self._loop.call_soon_threadsafe(self._stop.set)
        except RuntimeError:
            pass  # loop already finished on its own

    def client_count(self) -> int:
        return len(self._clients)

    # -- scan loop ------------------------------------------------------------

    async def _scan_loop(self) -> None:
        session = self.session
        stop = self._stop
        while self.wait_clients and len(self._clients) < self.wait_clients:
            if stop.is_set():
                return
            await asyncio.sleep(0.01)
        loop = asyncio.get_running_loop()
        deadline = loop.time()
        total = None if self.duration_ms == 0 else self.duration_ms // session.dt
        while not stop.is_set():
            if total is not None and session.ticks >= total:
                break
            await self._drain_commands()
            result = session.tick()
            if result.frame is not None:
                line = frame_json(result.frame)
                if self._log is not None:
                    self._log.append(line)
                self._broadcast(line)
            if self.time_scale > 0:
                deadline += session.dt * self.time_scale / 1000
                delay = deadline - loop.time()
                if delay > 0:
                    try:
                        await asyncio.wait_for(stop.wait(), timeout=delay)
                    except asyncio.TimeoutError:
                        pass
                else:
                    deadline = loop.time()  # fell behind; no catch-up burst
            else:
                await asyncio.sleep(0)  # free-running, but let IO in each tick

    async def _drain_commands(self) -> None:
        while not self._commands.empty():
            key, envelope, future = self._commands.get_nowait()
            reply = self._execute(key, envelope)
            if self._log is not None:
                self._log.append(
                    frame_json(
                        {
                            "type": "cmd",
                            "id": envelope.get("id"),
                            "name": envelope.get("name"),
                            "arg": envelope.get("arg"),
                            "client": key,
                        }
                    )
                )
                self._log.append(frame_json(reply))
            if not future.done():
                future.set_result(reply)

    def _fail_pending_commands(self) -> None:
        while self._commands is not None and not self._commands.empty():
            _, envelope, future = self._commands.get_nowait()
            if not future.done():
                future.set_result(
                    {"type": "nack", "id": envelope.get("id"), "reason": "server stopped"}
                )

    # -- command execution ------------------------------------------------------

    def _execute(self, key: str, envelope: dict) -> dict:
        env_id = envelope.get("id")
        name = envelope.get("name")
        if not isinstance(name, str):
            return {"type": "nack", "id": env_id, "reason": "missing command name"}
        if name == "acquire_token":
            if self._token in (None, key):
                self._token = key
                return {"type": "ack", "id": env_id}
            return {"type": "nack", "id": env_id, "reason": "token held by another client"}
        if name == "release_token":
            if self._token == key:
                self._token = None
                return {"type": "ack", "id": env_id}
            return {"type": "nack", "id": env_id, "reason": "not control holder"}
        if name in MUTATING_COMMANDS:
            if self._token != key:
                return {"type": "nack", "id": env_id, "reason": "not control holder"}
            arg = envelope.get("arg")
            result = self.session.command(name, arg if isinstance(arg, str) else None)
            if result.accepted:
                return {"type": "ack", "id": env_id}
            return {"type": "nack", "id": env_id, "reason": result.reason}
        return {"type": "nack", "id": env_id, "reason": f"unknown command: {name}"}

    async def _submit(self, key: str, text: str) -> dict:
        try:
            envelope = _strict_loads(text)
            if not isinstance(envelope, dict):
                raise ValueError("not an object")
        except ValueError:
            return {"type": "nack", "id": None, "reason": "malformed message"}
        future = asyncio.get_running_loop().create_future()
        await self._commands.put((key, envelope, future))
        return await future

    # -- client bookkeeping -------------------------------------------------------

    def _register(self, key: str | None = None) -> tuple[int, _Client]:
        conn_id = next(self._conn_ids)
        client = _Client(key or f"tcp:{conn_id}", self.max_client_queue)
        self._clients[conn_id] = client
        return conn_id, client

    def _drop(self, conn_id: int) -> None:
        client = self._clients.pop(conn_id, None)
        if client is None:
            return
        if self._token == client.key:
            self._token = None
        if client.task is not None and client.task is not asyncio.current_task():
            client.task.cancel()
        if client.writer is not None:
            client.writer.close()

    def _broadcast(self, line: str) -> None:
        for conn_id, client in list(self._clients.items()):
            try:
                client.queue.put_nowait(line)
            except asyncio.QueueFull:
                log.warning("dropping slow client %s", client.key)
                self._drop(conn_id)

    async def _flush_and_close_clients(self) -> None:
        # Ask every sender to finish its queue, then stop; slow ones are
        # cut off rather than holding shutdown hostage.
        tasks = []
        for conn_id, client in list(self._clients.items()):
            try:
                client.queue.put_nowait(None)
            except asyncio.QueueFull:
                self._drop(conn_id)
                continue
            if client.task is not None:
                tasks.append(client.task)
        if tasks:
            done, pending = await asyncio.wait(tasks, timeout=5)
            for task in pending:
                task.cancel()
        for conn_id in list(self._clients):
            self._drop(conn_id)

    # -- tcp ndjson -------------------------------------------------------------

    async def _handle_tcp(self, reader, writer) -> None:
        conn_id, client = self._register()
        key = client.key
        client.writer = writer
        client.task = asyncio.create_task(self._tcp_sender(client, writer))
        try:
            while True:
                raw = await reader.readline()
                if not raw:
                    break
                text = raw.decode("utf-8", errors="replace").strip()
                if not text:
                    continue
                reply = await self._submit(key, text)
                try:
                    client.queue.put_nowait(frame_json(reply))
                except asyncio.QueueFull:
                    break
        except (ConnectionError, asyncio.IncompleteReadError):
            pass
        finally:
            self._drop(conn_id)

    async def _tcp_sender(self, client: _Client, writer) -> None:
        try:
            while True:
                line = await client.queue.get()
                if line is None:
                    break
                writer.write(line.encode() + b"\n")
                await writer.drain()
        except (ConnectionError, asyncio.CancelledError):
            pass
        finally:
            writer.close()

    # -- http gateway -----------------------------------------------------------

    async def _handle_http(self, reader, writer) -> None:
        keep_open = False
        try:
            request = await reader.readline()
            parts = request.decode("latin-1").split()
            if len(parts) != 3:
                self._respond(writer, 400, "Bad Request", b"bad request line")
                return
            method, target, _ = parts
            headers = {}
            while True:
                line = await reader.readline()
                if line in (b"\r\n", b"\n", b""):
                    break
                name, _, value = line.decode("latin-1").partition(":")
                headers[name.strip().lower()] = value.strip()
            path, _, query = target.partition("?")
            path = unquote(path)
            if method == "OPTIONS":
                self._respond(writer, 204, "No Content", b"")
            elif method == "GET" and path == "/stream":
                keep_open = True
                await self._serve_sse(writer, query)
            elif method == "POST" and path == "/cmd":
                await self._serve_cmd(reader, writer, headers)
            elif method == "GET":
                self._serve_static(writer, path)
            else:
                self._respond(writer, 405, "Method Not Allowed", b"")
        except (ConnectionError, asyncio.IncompleteReadError):
            pass
        finally:
            if not keep_open:
                writer.close()

    async def _serve_sse(self, writer, query: str) -> None:
        params = parse_qs(query)
        declared = params.get("client", [f"anon-{next(self._conn_ids)}"])[0]
        key = f"http:{declared}"
        conn_id, client = self._register(key)
        client.writer = writer
        client.task = asyncio.current_task()
        writer.write(
            b"HTTP/1.1 200 OK\r\n"
            b"Content-Type: text/event-stream\r\n"
            b"Cache-Control: no-cache\r\n"
            b"Access-Control-Allow-Origin: *\r\n"
            b"Connection: close\r\n\r\n"
        )
        try:
            while True:
                line = await client.queue.get()
                if line is None:
                    break
                writer.write(b"data: " + line.encode() + b"\n\n")
                await writer.drain()
        except (ConnectionError, asyncio.CancelledError):
            pass
        finally:
            self._drop(conn_id)
            writer.close()

    async def _serve_cmd(self, reader, writer, headers: dict) -> None:
        try:
            length = int(headers.get("content-length", "0"))
        except ValueError:
            self._respond(writer, 400, "Bad Request", b"bad content-length")
            return
        if length <= 0 or length > MAX_BODY_BYTES:
            self._respond(writer, 400, "Bad Request", b"missing or oversized body")
            return
        body = await reader.readexactly(length)
        try:
            envelope = _strict_loads(body.decode("utf-8", errors="replace"))
            if not isinstance(envelope, dict):
                raise ValueError
        except ValueError:
            reply = {"type": "nack", "id": None, "reason": "malformed message"}
        else:
            declared = envelope.get("client")
            key = f"http:{declared}" if isinstance(declared, str) else "http:anon"
            reply = await self._submit(key, body.decode("utf-8", errors="replace"))
        self._respond(
            writer,
            200,
            "OK",
            (frame_json(reply) + "\n").encode(),
            content_type="application/json",
        )

    def _serve_static(self, writer, path: str) -> None:
        if self.static_dir is None:
            self._respond(writer, 404, "Not Found", b"no static root")
            return
        rel = path.lstrip("/") or "index.html"
        candidate = (self.static_dir / rel).resolve()
        if not candidate.is_relative_to(self.static_dir) or not candidate.is_file():
            self._respond(writer, 404, "Not Found", b"not found")
            return
        body = candidate.read_bytes()
        ctype = CONTENT_TYPES.get(candidate.suffix, "application/octet-stream")
        self._respond(writer, 200, "OK", body, content_type=ctype)

    def _respond(self, writer, status, reason, body, content_type="text/plain"):
        head = (
            f"HTTP/1.1 {status} {reason}\r\n"
            f"Content-Type: {content_type}\r\n"
            f"Content-Length: {len(body)}\r\n"
            "Access-Control-Allow-Origin: *\r\n"
            "Access-Control-Allow-Headers: content-type\r\n"
            "Access-Control-Allow-Methods: GET, POST, OPTIONS\r\n"
            "Connection: close\r\n\r\n"
        )
        writer.write(head.encode() + body)
