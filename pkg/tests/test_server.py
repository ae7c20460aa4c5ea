"""End-to-end runs of the session server over real sockets.

Each test spawns ``python -m maintrain serve`` with ephemeral ports, drives
it through the plain-text protocol, and checks the JSONL log afterwards.
"""

from __future__ import annotations

import json
import socket
import subprocess
import sys
import urllib.error
import urllib.request
from types import SimpleNamespace

import pytest

MAINTRAIN = [sys.executable, "-m", "maintrain"]
WAIT = 30.0  # generous; a hang should fail the test, not block the suite


class LineClient:
    """Blocking line-oriented TCP client, one line per protocol message."""

    def __init__(self, port: int):
        self.sock = socket.create_connection(("127.0.0.1", port), timeout=WAIT)
        self.rfile = self.sock.makefile("r", encoding="utf-8", newline="\n")

    def send(self, line: str) -> None:
        self.sock.sendall((line + "\n").encode("utf-8"))

    def recv(self) -> str:
        line = self.rfile.readline()
        if not line:
            raise ConnectionError("server closed the stream")
        return line.rstrip("\n")

    def recv_until(self, prefix: str) -> list[str]:
        """Read lines up to and including the first one starting with prefix."""
        seen = []
        while True:
            line = self.recv()
            seen.append(line)
            if line.startswith(prefix):
                return seen

    def close(self) -> None:
        try:
            self.sock.close()
        except OSError:
            pass


def start_server(corpus_dir, log_path, *extra: str) -> tuple[subprocess.Popen, dict[str, int]]:
    proc = subprocess.Popen(
        [
            *MAINTRAIN, "serve",
            "--model", str(corpus_dir / "xppu.plant"),
            "--lesson", str(corpus_dir / "replace_pickalpha.lesson"),
            "--log", str(log_path),
            "--listen", "127.0.0.1:0", "--http", "127.0.0.1:0",
            *extra,
        ],
        stdout=subprocess.DEVNULL,
        stderr=subprocess.PIPE,
        text=True,
    )
    # The endpoints are announced on stderr once bound; port 0 means "pick".
    ports: dict[str, int] = {}
    while len(ports) < 2:
        line = proc.stderr.readline()
        if not line:
            raise RuntimeError(f"server quit during startup, exit {proc.wait()}")
        if line.startswith("LISTEN "):
            _, kind, endpoint = line.split()
            ports[kind] = int(endpoint.rsplit(":", 1)[1])
    return proc, ports


def read_log(log_path) -> list[dict]:
    with open(log_path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh]


@pytest.fixture(scope="module")
def finished_run(corpus_dir, tmp_path_factory):
    """One complete scripted session: join, walk 0..13, mirror, one support."""
    log = tmp_path_factory.mktemp("serve") / "session.jsonl"
    proc, ports = start_server(corpus_dir, log)
    transcript: list[str] = []
    client = LineClient(ports["tcp"])
    try:
        client.send("HELLO remote")
        transcript += client.recv_until("STEP 0 :")
        for k in range(1, 14):
            client.send("NEXT")
            transcript += client.recv_until(f"STEP {k} :")
        client.send("MIRROR on")
        transcript += client.recv_until("OK")
        client.send("SUPPORT")
        transcript += client.recv_until("OK")
        client.send("BYE")
    finally:
        client.close()
    stderr = proc.communicate(timeout=WAIT)[1]
    return SimpleNamespace(
        log=log, exit_code=proc.returncode, transcript=transcript, stderr=stderr
    )


def test_scripted_session_runs_to_completion(finished_run):
    assert finished_run.exit_code == 0, finished_run.stderr


def test_join_is_answered_with_welcome_and_the_current_step(finished_run):
    assert finished_run.transcript[0] == "WELCOME replace_pickalpha 13"
    assert finished_run.transcript[1] == "STEP 0 :"


def test_every_step_is_broadcast_in_order(finished_run):
    indices = [
        int(line.split()[1])
        for line in finished_run.transcript
        if line.startswith("STEP ")
    ]
    assert indices == list(range(14))


def test_log_opens_with_meta_and_closes_with_the_report(finished_run, corpus_dir):
    records = read_log(finished_run.log)
    meta = records[0]
    assert meta["dir"] == "meta"
    assert meta["session_id"] == "replace_pickalpha"
    assert meta["model_text"] == (corpus_dir / "xppu.plant").read_text()
    assert meta["lesson_text"] == (corpus_dir / "replace_pickalpha.lesson").read_text()

    report = records[-1]
    assert report["dir"] == "report"
    assert report["penalties"] == 1
    assert report["steps_visited"] == list(range(14))
    assert report["ended_early"] is True

    stamps = [r["t"] for r in records]
    assert stamps == sorted(stamps)


def test_log_mirrors_the_wire_traffic(finished_run):
    records = read_log(finished_run.log)
    sent = [r["line"] for r in records if r["dir"] == "in"]
    received = [r["line"] for r in records if r["dir"] == "out"]
    assert sent == ["HELLO remote"] + ["NEXT"] * 13 + ["MIRROR on", "SUPPORT", "BYE"]
    assert received == finished_run.transcript


def test_replay_reproduces_the_log(finished_run):
    done = subprocess.run(
        [*MAINTRAIN, "replay", str(finished_run.log)],
        capture_output=True, text=True, timeout=WAIT,
    )
    assert done.returncode == 0, done.stderr
    summary = json.loads(done.stdout)
    assert summary["penalties"] == 1
    assert summary["steps_visited"] == list(range(14))


def tampered(finished_run, tmp_path, mangle) -> subprocess.CompletedProcess:
    records = read_log(finished_run.log)
    mangle(records)
    copy = tmp_path / "tampered.jsonl"
    copy.write_text("".join(json.dumps(r) + "\n" for r in records))
    return subprocess.run(
        [*MAINTRAIN, "replay", str(copy)], capture_output=True, text=True, timeout=WAIT
    )


def test_replay_rejects_an_edited_output_line(finished_run, tmp_path):
    def mangle(records):
        victim = next(r for r in records if r["dir"] == "out" and r["line"] == "OK")
        victim["line"] = "ERR 500 :forged"

    done = tampered(finished_run, tmp_path, mangle)
    assert done.returncode == 1
    assert done.stderr.startswith("replay: record ")
    assert "diverges" in done.stderr


def test_replay_rejects_a_forged_report(finished_run, tmp_path):
    done = tampered(finished_run, tmp_path, lambda rs: rs[-1].update(penalties=3))
    assert done.returncode == 1
    assert "replay: report diverges" in done.stderr


def test_replay_notices_a_missing_report(finished_run, tmp_path):
    done = tampered(finished_run, tmp_path, lambda rs: rs.pop())
    assert done.returncode == 1
    assert done.stderr == "replay: log has no final report\n"


def test_step_images_over_http(corpus_dir, tmp_path):
    proc, ports = start_server(corpus_dir, tmp_path / "http.jsonl")
    base = f"http://127.0.0.1:{ports['http']}"
    try:
        with urllib.request.urlopen(f"{base}/step/3.svg", timeout=WAIT) as resp:
            assert resp.headers["content-type"].startswith("image/svg+xml")
            body = resp.read().decode("utf-8")
        assert 'id="conn_c_air"' in body and ">remove</text>" in body

        with urllib.request.urlopen(f"{base}/step/0.svg", timeout=WAIT) as resp:
            assert ">remove</text>" not in resp.read().decode("utf-8")

        with pytest.raises(urllib.error.HTTPError) as caught:
            urllib.request.urlopen(f"{base}/step/99.svg", timeout=WAIT)
        assert caught.value.code == 404
        assert "unknown step" in caught.value.read().decode("utf-8")
    finally:
        # joining and leaving is the polite way to bring the server down
        client = LineClient(ports["tcp"])
        client.send("HELLO remote")
        client.recv_until("STEP 0 :")
        client.send("BYE")
        client.close()
        proc.communicate(timeout=WAIT)
    assert proc.returncode == 0


def test_view_lines_reach_only_the_display(corpus_dir, tmp_path):
    proc, ports = start_server(corpus_dir, tmp_path / "view.jsonl")
    display = LineClient(ports["tcp"])
    remote = LineClient(ports["tcp"])
    stranger = LineClient(ports["tcp"])
    try:
        display.send("HELLO display")
        display.recv_until("STEP 0 :")
        remote.send("HELLO remote")
        remote.recv_until("STEP 0 :")

        remote.send("VIEW zoom 1.5")
        assert display.recv() == "VIEW zoom 1.5"
        # the sender gets nothing back; the next reply it sees is its own OK
        remote.send("MIRROR on")
        assert remote.recv() == "OK"

        stranger.send("HELLO display")
        assert stranger.recv() == "ERR 409 :display role already taken"
        stranger.send("FROB nonsense")
        assert stranger.recv() == "ERR 400 :unknown verb 'FROB'"

        remote.send("BYE")
        display.send("BYE")
    finally:
        for peer in (display, remote, stranger):
            peer.close()
        proc.communicate(timeout=WAIT)
    assert proc.returncode == 0


def test_time_limit_expires_a_running_session(corpus_dir, tmp_path):
    log = tmp_path / "expired.jsonl"
    proc, ports = start_server(corpus_dir, log, "--time-limit", "1")
    client = LineClient(ports["tcp"])
    try:
        client.send("HELLO remote")
        client.recv_until("STEP 0 :")
        assert client.recv_until("ERR 408")[-1] == "ERR 408 :time limit reached"
    finally:
        client.close()
        proc.communicate(timeout=WAIT)
    assert proc.returncode == 0

    records = read_log(log)
    assert any(r["dir"] == "expire" for r in records)
    report = records[-1]
    assert report["ended_early"] is False
    assert report["duration"] >= 1.0


def test_serve_rejects_a_malformed_endpoint(corpus_dir, tmp_path):
    done = subprocess.run(
        [
            *MAINTRAIN, "serve",
            "--model", str(corpus_dir / "xppu.plant"),
            "--lesson", str(corpus_dir / "replace_pickalpha.lesson"),
            "--log", str(tmp_path / "x.jsonl"),
            "--listen", "garbage",
        ],
        capture_output=True, text=True, timeout=WAIT,
    )
    assert done.returncode == 2
    assert "bad endpoint 'garbage'" in done.stderr


def test_serve_reports_missing_inputs(corpus_dir, tmp_path):
    done = subprocess.run(
        [
            *MAINTRAIN, "serve",
            "--model", str(tmp_path / "absent.plant"),
            "--lesson", str(corpus_dir / "replace_pickalpha.lesson"),
            "--log", str(tmp_path / "x.jsonl"),
        ],
        capture_output=True, text=True, timeout=WAIT,
    )
    assert done.returncode == 1
    assert done.stderr.startswith("serve: ")


def test_replay_requires_an_existing_log(tmp_path):
    done = subprocess.run(
        [*MAINTRAIN, "replay", str(tmp_path / "absent.jsonl")],
        capture_output=True, text=True, timeout=WAIT,
    )
    assert done.returncode == 1
    assert done.stderr.startswith("replay: ")
