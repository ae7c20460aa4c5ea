"""Training session state machine, free of any I/O.

One session drives one lesson for a set of clients (a display, a remote,
optionally support staff).  ``handle`` is a pure function from (state,
client, message) to (state, addressed replies, broadcast); a transport
shell delivers the lines and owns the clock.  Every handled message lands
in the append-only event log, so replaying a log reproduces the final
state exactly; penalties equal the SUPPORT count in the log by
construction.

Messages from clients that never said HELLO are answered with an error
but deliberately kept out of the event log: they are not part of the
session.  Cursor moves after the time limit fired are refused with 408;
the cursor is frozen from that point on.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Mapping, Optional

from .model import PlantModel, diff_states
from .procedure import Lesson, state_at, step_annotation
from .protocol import (
    Bye,
    Err,
    Goto,
    Hello,
    Hilite,
    Message,
    Mirror,
    Next,
    Obs,
    Ok,
    Prev,
    StepBroadcast,
    Support,
    Target,
    View,
    Welcome,
)

DEFAULT_TIME_LIMIT = 300.0

#: Reserved client id for events the session itself generates (expiry).
SERVER_CLIENT = ""


class SessionActive(Exception):
    """session_report was asked about a session that has not ended."""


@dataclass(frozen=True, slots=True)
class LogEvent:
    t: float
    client: str
    message: Message


@dataclass(frozen=True, slots=True)
class SessionState:
    session_id: str
    lesson_id: str
    current_step: int = 0
    clients: Mapping[str, str] = field(default_factory=dict)  # client id -> role
    penalties: int = 0
    mirror: bool = False
    event_log: tuple[LogEvent, ...] = ()
    started_at: float = 0.0
    time_limit: Optional[float] = DEFAULT_TIME_LIMIT
    visited: frozenset[int] = frozenset({0})
    expired: bool = False
    ended_at: Optional[float] = None
    ever_joined: bool = False

    def ended(self) -> bool:
        return self.expired or (self.ever_joined and not self.clients)


@dataclass(frozen=True, slots=True)
class HandleResult:
    session: SessionState
    replies: tuple[tuple[str, Message], ...]  # (client id, message)
    broadcast: tuple[Message, ...]


@dataclass(frozen=True, slots=True)
class SessionReport:
    duration: float
    steps_visited: frozenset[int]
    penalties: int
    ended_early: bool


def new_session(
    lesson: Lesson,
    session_id: Optional[str] = None,
    started_at: float = 0.0,
    time_limit: Optional[float] = DEFAULT_TIME_LIMIT,
) -> SessionState:
    return SessionState(
        session_id=session_id if session_id is not None else lesson.id,
        lesson_id=lesson.id,
        started_at=started_at,
        time_limit=time_limit,
    )


def _step_messages(
    session: SessionState, lesson: Lesson, model: PlantModel, from_step: int, to_step: int
) -> tuple[Message, ...]:
    """Broadcast bundle for a cursor move: STEP, TARGET, HILITE*, OBS*."""
    if to_step == 0:
        instruction = ""
    else:
        instruction = lesson.steps[to_step - 1].instruction
    messages: list[Message] = [StepBroadcast(to_step, instruction)]
    note: Optional[tuple[str, float]] = None
    if to_step >= 1:
        annotation = step_annotation(lesson, to_step)
        messages.append(Target(annotation.target))
        messages.extend(Hilite(cid, kind) for cid, kind in annotation.highlights)
        note = annotation.observable_note
    changes = diff_states(
        state_at(lesson, model, from_step), state_at(lesson, model, to_step)
    )
    changed = {name: new for name, _old, new in changes.observable_changes}
    messages.extend(Obs(name, changed[name]) for name in sorted(changed))
    if note is not None and note[0] not in changed:
        messages.append(Obs(note[0], note[1]))
    return tuple(messages)


def handle(
    session: SessionState,
    client: str,
    message: Message,
    lesson: Lesson,
    model: PlantModel,
    now: float,
) -> HandleResult:
    """Advance the session by one incoming message.

    The lesson must fold cleanly over the model (serve validates before
    accepting clients).  Replies are addressed; broadcasts go to every
    connected client including the sender.
    """

    def logged(s: SessionState) -> SessionState:
        return replace(s, event_log=s.event_log + (LogEvent(now, client, message),))

    def refuse(code: int, text: str) -> HandleResult:
        return HandleResult(logged(session), ((client, Err(code, text)),), ())

    if isinstance(message, Hello):
        if client in session.clients:
            return refuse(400, "already joined")
        if message.role == "display" and "display" in session.clients.values():
            return refuse(409, "display role already taken")
        clients = dict(session.clients)
        clients[client] = message.role
        new = replace(
            logged(session), clients=clients, ever_joined=True, ended_at=None
        )
        replies: tuple[tuple[str, Message], ...] = (
            (client, Welcome(session.session_id, len(lesson.steps))),
            (
                client,
                StepBroadcast(
                    session.current_step,
                    lesson.steps[session.current_step - 1].instruction
                    if session.current_step >= 1
                    else "",
                ),
            ),
        )
        return HandleResult(new, replies, ())

    if client not in session.clients:
        # not part of the session: answered but never logged
        return HandleResult(session, ((client, Err(400, "unknown client")),), ())

    if isinstance(message, (Next, Prev, Goto)):
        if isinstance(message, Next):
            target = session.current_step + 1
        elif isinstance(message, Prev):
            target = session.current_step - 1
        else:
            target = message.step
        if session.expired:
            return refuse(408, "time limit reached")
        if not 0 <= target <= len(lesson.steps):
            return refuse(404, "unknown step")
        broadcast = _step_messages(session, lesson, model, session.current_step, target)
        new = replace(
            logged(session),
            current_step=target,
            visited=session.visited | {target},
        )
        return HandleResult(new, (), broadcast)

    if isinstance(message, View):
        displays = tuple(
            (cid, message) for cid, role in session.clients.items() if role == "display"
        )
        return HandleResult(logged(session), displays, ())

    if isinstance(message, Mirror):
        return HandleResult(
            replace(logged(session), mirror=message.on), ((client, Ok()),), ()
        )

    if isinstance(message, Support):
        return HandleResult(
            replace(logged(session), penalties=session.penalties + 1),
            ((client, Ok()),),
            (),
        )

    if isinstance(message, Bye):
        clients = dict(session.clients)
        clients.pop(client, None)
        new = replace(logged(session), clients=clients)
        if not clients and new.ever_joined:
            new = replace(new, ended_at=now)
        return HandleResult(new, (), ())

    # server-to-client messages arriving inbound are a protocol misuse
    return refuse(400, "unexpected message")


def expire(session: SessionState, now: float) -> tuple[SessionState, tuple[Message, ...]]:
    """Fire the time limit: freeze the cursor and tell every client."""
    if session.expired:
        return session, ()
    message = Err(408, "time limit reached")
    new = replace(
        session,
        expired=True,
        event_log=session.event_log + (LogEvent(now, SERVER_CLIENT, message),),
    )
    return new, (message,)


def replay_events(
    session: SessionState,
    events: tuple[LogEvent, ...],
    lesson: Lesson,
    model: PlantModel,
) -> SessionState:
    """Re-run an event log from a fresh state; reproduces the final state."""
    current = session
    for event in events:
        if event.client == SERVER_CLIENT:
            current, _ = expire(current, event.t)
        else:
            current = handle(current, event.client, event.message, lesson, model, event.t).session
    return current


def session_report(session: SessionState) -> SessionReport:
    """Summary of an ended session; raises SessionActive otherwise."""
    if not session.ended():
        raise SessionActive(f"session {session.session_id} is still running")
    if session.expired and session.time_limit is not None:
        duration = session.time_limit
    elif session.ended_at is not None:
        duration = session.ended_at - session.started_at
    else:
        duration = 0.0
    return SessionReport(
        duration=duration,
        steps_visited=session.visited,
        penalties=session.penalties,
        ended_early=not session.expired,
    )
