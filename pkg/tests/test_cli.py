"""Golden CLI invocations: exit codes, formats, determinism."""

import json
import os
import signal
import socket
import subprocess
import sys
import time

import pytest

from cyclonesim import cli


def invoke(argv, capsys):
    try:
        code = cli.main(argv)
    except SystemExit as exc:  # argparse paths
        code = exc.code if isinstance(exc.code, int) else 1
    out, err = capsys.readouterr()
    return code, out, err


# -- usage ------------------------------------------------------------------


def test_no_subcommand_is_usage_error(capsys):
    code, _, err = invoke([], capsys)
    assert code == 1
    assert "usage" in err.lower()


def test_unknown_flag_is_usage_error(capsys):
    code, _, err = invoke(["shield-calc", "--electrodes-mm", "50"], capsys)
    assert code == 1
    assert "usage" in err.lower()


def test_bad_duration_string_is_usage_error(capsys):
    code, _, err = invoke(
        ["run", "--scenario", "scenarios/nominal.toml", "--duration", "fast"], capsys
    )
    assert code == 1


# -- shield-calc / codec ------------------------------------------------------


def test_shield_calc_worked_example(capsys):
    code, out, _ = invoke(["shield-calc", "--electrode-mm", "50"], capsys)
    assert code == 0
    assert out == "S=66.67 P=37.50 M=33.33\n"


def test_shield_calc_rejects_nonpositive(capsys):
    code, _, err = invoke(["shield-calc", "--electrode-mm", "0"], capsys)
    assert code == 1


def test_codec_round_trip(capsys):
    code, out, _ = invoke(["codec", "--encode", "100.0"], capsys)
    assert code == 0
    word = out.strip()
    assert word == "0x0C80"  # 400 counts of 0.25 C, shifted past the status bits
    code, out, _ = invoke(["codec", "--decode", word], capsys)
    assert code == 0
    assert out == "100.00\n"


def test_codec_reports_faults_as_values(capsys):
    code, out, _ = invoke(["codec", "--decode", "0x0004"], capsys)
    assert code == 0
    assert out == "FAULT open_thermocouple\n"
    code, out, _ = invoke(["codec", "--decode", "0x8000"], capsys)
    assert code == 0
    assert out == "FAULT invalid_frame\n"


def test_codec_rejects_wide_word(capsys):
    code, _, _ = invoke(["codec", "--decode", "0x10000"], capsys)
    assert code == 1
    code, _, _ = invoke(["codec", "--encode", "2000"], capsys)
    assert code == 1


# -- ladder ------------------------------------------------------------------


def test_ladder_check_shipped_asset(capsys):
    code, out, _ = invoke(
        ["ladder", "check", "src/cyclonesim/assets/cyclone.lad"], capsys
    )
    assert code == 0
    assert out == "0 diagnostics\n"


def test_ladder_check_bad_file(tmp_path, capsys):
    bad = tmp_path / "bad.lad"
    bad.write_text("VAR X : BOOL ;\nRUNG : NO Ghost => COIL X ;\n")
    code, out, _ = invoke(["ladder", "check", str(bad)], capsys)
    assert code == 2
    assert "Ghost" in out
    assert "1 diagnostics" in out


def test_ladder_check_missing_file(capsys):
    code, _, err = invoke(["ladder", "check", "nope.lad"], capsys)
    assert code == 2


@pytest.fixture
def tiny_program(tmp_path):
    path = tmp_path / "tiny.lad"
    path.write_text("VAR X : BOOL ;\nVAR Y : BOOL ;\nRUNG : NO X => COIL Y ;\n")
    return path


def test_ladder_run_prints_final_image(tiny_program, capsys):
    code, out, _ = invoke(
        [
            "ladder",
            "run",
            str(tiny_program),
            "--duration",
            "400ms",
            "--dt-ms",
            "100",
            "--set",
            "X=true",
        ],
        capsys,
    )
    assert code == 0
    assert json.loads(out) == {"X": True, "Y": True}


def test_ladder_trace_emits_one_line_per_scan(tiny_program, capsys):
    code, out, _ = invoke(
        [
            "ladder",
            "trace",
            str(tiny_program),
            "--duration",
            "400ms",
            "--dt-ms",
            "100",
            "--at",
            "200:X=true",
        ],
        capsys,
    )
    assert code == 0
    lines = [json.loads(l) for l in out.splitlines()]
    assert [l["t_ms"] for l in lines] == [0, 100, 200, 300]
    assert [l["values"]["Y"] for l in lines] == [False, False, True, True]


def test_ladder_trace_unknown_variable(tiny_program, capsys):
    code, _, err = invoke(
        [
            "ladder",
            "trace",
            str(tiny_program),
            "--duration",
            "100ms",
            "--dt-ms",
            "100",
            "--at",
            "0:Zed=true",
        ],
        capsys,
    )
    assert code == 2
    assert "Zed" in err


# -- run ----------------------------------------------------------------------


def test_run_nominal_120s(tmp_path, capsys):
    report = tmp_path / "report.json"
    argv = [
        "run",
        "--scenario",
        "scenarios/nominal.toml",
        "--duration",
        "120s",
        "--out",
        str(report),
    ]
    code, out, err = invoke(argv, capsys)
    assert code == 0
    assert "5 cycles" in err and "0 violations" in err
    lines = out.splitlines()
    assert len(lines) == 1200  # 120 s at 10 Hz
    first = json.loads(lines[0])
    assert first["type"] == "frame" and first["seq"] == 1
    data = json.loads(report.read_text())
    assert data["cycles_completed"] == 5
    assert data["invariant_violations"] == 0
    # Same invocation, byte-identical outputs.
    first_bytes = report.read_bytes()
    code2, out2, _ = invoke(argv, capsys)
    assert code2 == 0
    assert out2 == out
    assert report.read_bytes() == first_bytes


def test_run_snapshot_hz_and_quiet(tmp_path, capsys):
    code, out, err = invoke(
        [
            "run",
            "--scenario",
            "scenarios/nominal.toml",
            "--duration",
            "24s",
            "--snapshot-hz",
            "2",
        ],
        capsys,
    )
    assert code == 0
    assert len(out.splitlines()) == 48
    code, out, _ = invoke(
        [
            "run",
            "--scenario",
            "scenarios/nominal.toml",
            "--duration",
            "24s",
            "--quiet",
        ],
        capsys,
    )
    assert code == 0
    assert out == ""


def test_run_missing_scenario_fails(capsys):
    code, _, err = invoke(["run", "--scenario", "nope.toml"], capsys)
    assert code == 2


def test_run_seed_override_reaches_report(tmp_path, capsys):
    report = tmp_path / "r.json"
    code, _, _ = invoke(
        [
            "run",
            "--scenario",
            "scenarios/nominal.toml",
            "--duration",
            "24s",
            "--quiet",
            "--seed",
            "99",
            "--out",
            str(report),
        ],
        capsys,
    )
    assert code == 0
    assert json.loads(report.read_text())["seed"] == 99


def test_run_log_dir_env(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("CYCLONESIM_LOG_DIR", str(tmp_path))
    code, out, _ = invoke(
        ["run", "--scenario", "scenarios/nominal.toml", "--duration", "24s"],
        capsys,
    )
    assert code == 0
    logs = list(tmp_path.glob("*.ndjson"))
    assert len(logs) == 1
    from cyclonesim.telemetry import replay

    assert replay(logs[0]) == out.splitlines()


# -- replay ---------------------------------------------------------------------


def test_replay_round_trip(tmp_path, capsys):
    log = tmp_path / "run.ndjson"
    code, out, _ = invoke(
        [
            "run",
            "--scenario",
            "scenarios/nominal.toml",
            "--duration",
            "24s",
            "--log",
            str(log),
        ],
        capsys,
    )
    assert code == 0
    code, replayed, err = invoke(["replay", str(log)], capsys)
    assert code == 0
    assert replayed == out


def test_replay_corrupt_log(tmp_path, capsys):
    log = tmp_path / "bad.ndjson"
    log.write_text('{"type":"frame","seq":1}\ngarbage\n{"type":"frame","seq":2}\n')
    code, _, err = invoke(["replay", str(log)], capsys)
    assert code == 2
    assert "line 2" in err


# -- serve (console script, end to end) -------------------------------------------


def test_serve_console_script_streams_and_stops():
    proc = subprocess.Popen(
        [
            sys.executable,
            "-m",
            "cyclonesim.cli",
            "serve",
            "--listen",
            "127.0.0.1:0",
            "--scenario",
            "scenarios/nominal.toml",
            "--time-scale",
            "0.02",
        ],
        stdout=subprocess.PIPE,
        stderr=subprocess.PIPE,
        text=True,
    )
    try:
        line = proc.stderr.readline()
        assert "listening" in line, line
        port = int(line.split("tcp=")[1].split()[0].rsplit(":", 1)[1])
        sock = socket.create_connection(("127.0.0.1", port), timeout=10)
        reader = sock.makefile("r", encoding="utf-8")
        frames = [json.loads(reader.readline()) for _ in range(3)]
        assert [f["seq"] for f in frames] == [1, 2, 3]
        reader.close()
        sock.close()
        proc.send_signal(signal.SIGTERM)
        assert proc.wait(timeout=10) == 0
    finally:
        if proc.poll() is None:
            proc.kill()
            proc.wait()
