"""Network shell around the session state machine.

``serve`` runs exactly one session and exits when it ends.  Two doors in:
a raw TCP listener speaking newline-terminated protocol lines, and an
HTTP server carrying the same lines over a WebSocket (one line per frame)
plus ``GET /step/{k}.svg`` for the rendered plant per step.  Both doors
feed one actor; a lock serializes every message, so the JSONL log is a
total order of the whole session.

The log is self-contained: the first record embeds the model and lesson
text, so ``replay_log`` can re-run the session from the log alone and
check that every emitted line and the final report are reproduced.

Log record shapes (one JSON object per line):

    {"dir": "meta", "t": 0.0, "session_id": ..., "time_limit": ...,
     "started_at": 0.0, "model_text": ..., "lesson_text": ...}
    {"dir": "in",   "t": ..., "client": "c1", "line": "NEXT"}
    {"dir": "out",  "t": ..., "client": "c1", "line": "STEP 1 :..."}
    {"dir": "drop", "t": ..., "client": "c1"}        # vanished without BYE
    {"dir": "expire", "t": ...}
    {"dir": "report", "t": ..., "duration": ..., "penalties": ...,
     "steps_visited": [...], "ended_early": ...}
"""

from __future__ import annotations

import asyncio
import json
import socket
import sys
from typing import Awaitable, Callable, Optional, TextIO

from fastapi import FastAPI, HTTPException, Response, WebSocket, WebSocketDisconnect
import uvicorn

from .model import PlantModel
from .procedure import Lesson, state_at, step_annotation, validate_lesson
from .protocol import Bye, Err, ProtocolFault, decode, encode
from .render import RenderSpec, render_svg
from .session import (
    SessionState,
    expire,
    handle,
    new_session,
    session_report,
)
from .textformat import ParseError, parse_lesson, parse_model

_LINE_LIMIT = 64 * 1024


def _line(message) -> str:
    """Wire line without the terminator; transports re-frame as needed."""
    return encode(message).rstrip("\n")


def _parse_endpoint(spec: str) -> Optional[tuple[str, int]]:
    """'host:port' -> pair, the literal 'none' -> disabled."""
    if spec == "none":
        return None
    host, _, port = spec.rpartition(":")
    if not host or not port.isdigit():
        raise ValueError(f"bad endpoint {spec!r}, expected host:port or none")
    return host, int(port)


class _Hub:
    """Single-session actor shared by both transports."""

    def __init__(
        self,
        model: PlantModel,
        lesson: Lesson,
        session: SessionState,
        log: TextIO,
        model_text: str,
        lesson_text: str,
    ) -> None:
        self.model = model
        self.lesson = lesson
        self.session = session
        self.log = log
        self.model_text = model_text
        self.lesson_text = lesson_text
        self.lock = asyncio.Lock()
        self.sends: dict[str, Callable[[str], Awaitable[None]]] = {}
        self.counter = 0
        self.t0 = 0.0
        self.done = asyncio.Event()

    def now(self) -> float:
        return asyncio.get_running_loop().time() - self.t0

    def write_record(self, **record: object) -> None:
        self.log.write(json.dumps(record, sort_keys=True) + "\n")
        self.log.flush()

    async def register(self, send: Callable[[str], Awaitable[None]]) -> str:
        async with self.lock:
            self.counter += 1
            client = f"c{self.counter}"
            self.sends[client] = send
            return client

    async def _deliver(self, client: str, line: str) -> None:
        self.write_record(dir="out", t=self.now(), client=client, line=line)
        send = self.sends.get(client)
        if send is not None:
            try:
                await send(line)
            except Exception:
                pass  # the drop path will clean up

    def _check_end(self) -> None:
        if self.session.ended():
            self.done.set()

    async def on_line(self, client: str, raw: str) -> None:
        async with self.lock:
            if self.session.ended():
                return  # tearing down, the report is already the last record
            t = self.now()
            self.write_record(dir="in", t=t, client=client, line=raw)
            try:
                message = decode(raw)
            except ProtocolFault as fault:
                await self._deliver(client, _line(Err(fault.code, fault.text)))
                return
            result = handle(self.session, client, message, self.lesson, self.model, t)
            self.session = result.session
            for target, reply in result.replies:
                await self._deliver(target, _line(reply))
            if result.broadcast:
                lines = [_line(m) for m in result.broadcast]
                for target in sorted(self.session.clients):
                    for line in lines:
                        await self._deliver(target, line)
            self._check_end()

    async def on_drop(self, client: str) -> None:
        async with self.lock:
            self.sends.pop(client, None)
            # once the session has ended a drop changes nothing, and logging
            # it would put records after the final report
            if client in self.session.clients and not self.session.ended():
                t = self.now()
                self.write_record(dir="drop", t=t, client=client)
                result = handle(self.session, client, Bye(), self.lesson, self.model, t)
                self.session = result.session
            self._check_end()

    async def fire_expiry(self) -> None:
        async with self.lock:
            t = self.now()
            session, broadcast = expire(self.session, t)
            if session is self.session:
                return
            self.session = session
            self.write_record(dir="expire", t=t)
            lines = [_line(m) for m in broadcast]
            for target in sorted(self.session.clients):
                for line in lines:
                    await self._deliver(target, line)
            self._check_end()


async def _tcp_client(hub: _Hub, reader: asyncio.StreamReader, writer: asyncio.StreamWriter) -> None:
    async def send(line: str) -> None:
        writer.write(line.encode("utf-8") + b"\n")
        await writer.drain()

    client = await hub.register(send)
    try:
        while True:
            try:
                raw = await reader.readline()
            except (ConnectionError, asyncio.LimitOverrunError):
                break
            if not raw:
                break
            await hub.on_line(client, raw.decode("utf-8", "replace").rstrip("\r\n"))
    finally:
        await hub.on_drop(client)
        writer.close()


def _build_app(hub: _Hub) -> FastAPI:
    app = FastAPI()

    @app.get("/step/{index}.svg")
    def step_svg(index: int) -> Response:
        if not 0 <= index <= len(hub.lesson.steps):
            raise HTTPException(status_code=404, detail="unknown step")
        annotation = step_annotation(hub.lesson, index) if index >= 1 else None
        svg = render_svg(
            RenderSpec(
                state=state_at(hub.lesson, hub.model, index),
                model=hub.model,
                annotation=annotation,
            )
        )
        return Response(content=svg, media_type="image/svg+xml")

    @app.websocket("/ws")
    async def ws_channel(websocket: WebSocket) -> None:
        await websocket.accept()

        async def send(line: str) -> None:
            await websocket.send_text(line)

        client = await hub.register(send)
        try:
            while True:
                frame = await websocket.receive_text()
                await hub.on_line(client, frame.rstrip("\r\n"))
        except WebSocketDisconnect:
            pass
        finally:
            await hub.on_drop(client)

    return app


async def _run(
    hub: _Hub,
    tcp_sock: Optional[socket.socket],
    http_sock: Optional[socket.socket],
    time_limit: Optional[float],
) -> None:
    loop = asyncio.get_running_loop()
    hub.t0 = loop.time()
    hub.write_record(
        dir="meta",
        t=0.0,
        session_id=hub.session.session_id,
        time_limit=time_limit,
        started_at=hub.session.started_at,
        model_text=hub.model_text,
        lesson_text=hub.lesson_text,
    )

    tcp_server = None
    uv_server = None
    uv_task = None
    timer_task = None
    if tcp_sock is not None:
        tcp_server = await asyncio.start_server(
            lambda r, w: _tcp_client(hub, r, w), sock=tcp_sock, limit=_LINE_LIMIT
        )
    if http_sock is not None:
        config = uvicorn.Config(
            _build_app(hub),
            log_config=None,
            log_level="warning",
            access_log=False,
            lifespan="off",
        )
        uv_server = uvicorn.Server(config)
        uv_task = asyncio.create_task(uv_server.serve(sockets=[http_sock]))
    if time_limit is not None:

        async def timer() -> None:
            await asyncio.sleep(time_limit)
            await hub.fire_expiry()

        timer_task = asyncio.create_task(timer())

    await hub.done.wait()

    report = session_report(hub.session)
    hub.write_record(
        dir="report",
        t=hub.now(),
        duration=report.duration,
        penalties=report.penalties,
        steps_visited=sorted(report.steps_visited),
        ended_early=report.ended_early,
    )

    if timer_task is not None:
        timer_task.cancel()
        try:
            await timer_task
        except asyncio.CancelledError:
            pass
    if tcp_server is not None:
        tcp_server.close()
        await tcp_server.wait_closed()
    if uv_server is not None and uv_task is not None:
        uv_server.should_exit = True
        try:
            await asyncio.wait_for(uv_task, timeout=3.0)
        except asyncio.TimeoutError:
            uv_task.cancel()
            try:
                await uv_task
            except asyncio.CancelledError:
                pass


def serve(
    model_path: str,
    lesson_path: str,
    log_path: str,
    listen: str = "127.0.0.1:0",
    http: str = "127.0.0.1:0",
    time_limit: Optional[float] = 300.0,
    session_id: Optional[str] = None,
) -> int:
    """Run one session to completion.  Returns a process exit code.

    Listening endpoints are announced on stderr as ``LISTEN tcp host:port``
    and ``LISTEN http host:port`` once bound, so callers may pass port 0.
    The session ends when every client has left after at least one joined,
    or when the time limit fires; either way the process exits.
    """
    try:
        with open(model_path, encoding="utf-8") as fh:
            model_text = fh.read()
        with open(lesson_path, encoding="utf-8") as fh:
            lesson_text = fh.read()
    except OSError as err:
        print(f"serve: {err}", file=sys.stderr)
        return 1
    try:
        model = parse_model(model_text)
        lesson = parse_lesson(lesson_text, model)
    except ParseError as err:
        for fault in err.faults:
            print(f"serve: {fault}", file=sys.stderr)
        return 1
    report = validate_lesson(lesson, model)
    if not report.is_clean():
        for violation in report.violations:
            print(
                f"serve: lesson violates {violation.rule}: {violation.detail}",
                file=sys.stderr,
            )
        for fault in report.op_faults:
            print(
                f"serve: step {fault.step_index} fails to apply: {fault.detail}",
                file=sys.stderr,
            )
        return 1

    try:
        tcp_endpoint = _parse_endpoint(listen)
        http_endpoint = _parse_endpoint(http)
    except ValueError as err:
        print(f"serve: {err}", file=sys.stderr)
        return 2
    if tcp_endpoint is None and http_endpoint is None:
        print("serve: both endpoints disabled, nothing to do", file=sys.stderr)
        return 2

    tcp_sock = http_sock = None
    try:
        if tcp_endpoint is not None:
            tcp_sock = socket.create_server(tcp_endpoint)
            host, port = tcp_sock.getsockname()[:2]
            print(f"LISTEN tcp {host}:{port}", file=sys.stderr, flush=True)
        if http_endpoint is not None:
            http_sock = socket.create_server(http_endpoint)
            host, port = http_sock.getsockname()[:2]
            print(f"LISTEN http {host}:{port}", file=sys.stderr, flush=True)
    except OSError as err:
        print(f"serve: {err}", file=sys.stderr)
        return 1

    session = new_session(lesson, session_id=session_id, started_at=0.0, time_limit=time_limit)
    with open(log_path, "w", encoding="utf-8") as log:
        hub = _Hub(model, lesson, session, log, model_text, lesson_text)
        asyncio.run(_run(hub, tcp_sock, http_sock, time_limit))
    return 0


def _fail(message: str) -> int:
    print(f"replay: {message}", file=sys.stderr)
    return 1


def replay_log(log_path: str) -> int:
    """Re-run a serve log and verify every line it emitted.

    The session is rebuilt from the embedded model and lesson text, each
    incoming line is pushed through the state machine, and the produced
    output lines must match the logged ones record for record.  The final
    report must match too.  Exits 0 only on a perfect reproduction.
    """
    try:
        with open(log_path, encoding="utf-8") as fh:
            records = [json.loads(line) for line in fh if line.strip()]
    except (OSError, json.JSONDecodeError) as err:
        return _fail(str(err))
    if not records or records[0].get("dir") != "meta":
        return _fail("log does not start with a meta record")
    meta = records[0]
    try:
        model = parse_model(meta["model_text"])
        lesson = parse_lesson(meta["lesson_text"], model)
    except (KeyError, ParseError) as err:
        return _fail(f"embedded model or lesson is unusable: {err}")

    session = new_session(
        lesson,
        session_id=meta.get("session_id"),
        started_at=meta.get("started_at", 0.0),
        time_limit=meta.get("time_limit"),
    )
    report_record = None
    index = 1
    while index < len(records):
        record = records[index]
        index += 1
        direction = record.get("dir")
        produced: list[tuple[str, str]] = []
        if direction == "in":
            try:
                message = decode(record["line"])
            except ProtocolFault as fault:
                produced = [(record["client"], _line(Err(fault.code, fault.text)))]
            else:
                result = handle(
                    session, record["client"], message, lesson, model, record["t"]
                )
                session = result.session
                produced = [(c, _line(m)) for c, m in result.replies]
                lines = [_line(m) for m in result.broadcast]
                for target in sorted(session.clients):
                    produced.extend((target, line) for line in lines)
        elif direction == "drop":
            result = handle(session, record["client"], Bye(), lesson, model, record["t"])
            session = result.session
        elif direction == "expire":
            session, broadcast = expire(session, record["t"])
            lines = [_line(m) for m in broadcast]
            for target in sorted(session.clients):
                produced.extend((target, line) for line in lines)
        elif direction == "report":
            report_record = record
            continue
        elif direction == "out":
            return _fail(f"record {index - 1}: output with no cause")
        else:
            return _fail(f"record {index - 1}: unknown dir {direction!r}")
        for target, line in produced:
            if index >= len(records):
                return _fail(f"log ends early, expected out to {target}: {line}")
            actual = records[index]
            index += 1
            if (
                actual.get("dir") != "out"
                or actual.get("client") != target
                or actual.get("line") != line
            ):
                return _fail(
                    f"record {index - 1} diverges: expected out to {target} "
                    f"{line!r}, log has {actual}"
                )

    if report_record is None:
        return _fail("log has no final report")
    if not session.ended():
        return _fail("log ends with the session still running")
    report = session_report(session)
    expected = {
        "duration": report.duration,
        "penalties": report.penalties,
        "steps_visited": sorted(report.steps_visited),
        "ended_early": report.ended_early,
    }
    actual = {key: report_record.get(key) for key in expected}
    if actual != expected:
        return _fail(f"report diverges: expected {expected}, log has {actual}")
    print(json.dumps(expected, sort_keys=True))
    return 0
