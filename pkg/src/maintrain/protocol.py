"""Line protocol spoken between training sessions and their clients.

One message is one LF-terminated line: an uppercase verb, space-separated
arguments, and optionally a final ``:``-prefixed field that captures the
rest of the line verbatim (instruction texts, error descriptions).

Client to server::

    HELLO <display|remote|support>
    NEXT | PREV | GOTO <n> | SUPPORT | BYE
    VIEW <pan|zoom|rotate> <decimal> [<decimal>]
    MIRROR <on|off>

Server to client::

    WELCOME <session-id> <step-count>
    STEP <n> :<instruction>
    TARGET <block-id>
    HILITE <conn-id> <remove|establish>
    OBS <name> <decimal>
    OK
    ERR <code> :<text>

decode(encode(m)) is the identity for every message; unknown verbs and
wrong arities raise ProtocolFault with code 400.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

ROLES = ("display", "remote", "support")
VIEW_VERBS = ("pan", "zoom", "rotate")
HILITE_KINDS = ("remove", "establish")

_INT = re.compile(r"-?\d+\Z")
_NUMBER = re.compile(r"[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?\Z")


class ProtocolFault(Exception):
    def __init__(self, text: str, code: int = 400):
        super().__init__(text)
        self.code = code
        self.text = text


@dataclass(frozen=True, slots=True)
class Hello:
    role: str


@dataclass(frozen=True, slots=True)
class Next:
    pass


@dataclass(frozen=True, slots=True)
class Prev:
    pass


@dataclass(frozen=True, slots=True)
class Goto:
    step: int


@dataclass(frozen=True, slots=True)
class View:
    verb: str
    args: tuple[float, ...]


@dataclass(frozen=True, slots=True)
class Mirror:
    on: bool


@dataclass(frozen=True, slots=True)
class Support:
    pass


@dataclass(frozen=True, slots=True)
class Bye:
    pass


@dataclass(frozen=True, slots=True)
class Welcome:
    session_id: str
    step_count: int


@dataclass(frozen=True, slots=True)
class StepBroadcast:
    index: int
    instruction: str


@dataclass(frozen=True, slots=True)
class Target:
    block_id: str


@dataclass(frozen=True, slots=True)
class Hilite:
    conn_id: str
    kind: str  # "remove" | "establish"


@dataclass(frozen=True, slots=True)
class Obs:
    name: str
    value: float


@dataclass(frozen=True, slots=True)
class Err:
    code: int
    text: str


@dataclass(frozen=True, slots=True)
class Ok:
    pass


Message = Union[
    Hello, Next, Prev, Goto, View, Mirror, Support, Bye,
    Welcome, StepBroadcast, Target, Hilite, Obs, Err, Ok,
]


def _fmt(value: float) -> str:
    return repr(float(value))


def encode(message: Message) -> str:
    """Wire line for a message, including the trailing LF."""
    if isinstance(message, Hello):
        line = f"HELLO {message.role}"
    elif isinstance(message, Next):
        line = "NEXT"
    elif isinstance(message, Prev):
        line = "PREV"
    elif isinstance(message, Goto):
        line = f"GOTO {message.step}"
    elif isinstance(message, View):
        line = f"VIEW {message.verb}" + "".join(f" {_fmt(a)}" for a in message.args)
    elif isinstance(message, Mirror):
        line = f"MIRROR {'on' if message.on else 'off'}"
    elif isinstance(message, Support):
        line = "SUPPORT"
    elif isinstance(message, Bye):
        line = "BYE"
    elif isinstance(message, Welcome):
        line = f"WELCOME {message.session_id} {message.step_count}"
    elif isinstance(message, StepBroadcast):
        line = f"STEP {message.index} :{message.instruction}"
    elif isinstance(message, Target):
        line = f"TARGET {message.block_id}"
    elif isinstance(message, Hilite):
        line = f"HILITE {message.conn_id} {message.kind}"
    elif isinstance(message, Obs):
        line = f"OBS {message.name} {_fmt(message.value)}"
    elif isinstance(message, Err):
        line = f"ERR {message.code} :{message.text}"
    elif isinstance(message, Ok):
        line = "OK"
    else:
        raise TypeError(f"not a protocol message: {message!r}")
    return line + "\n"


def _split(line: str) -> tuple[list[str], str | None]:
    """Space-separated fields plus the verbatim trailing field, if any."""
    fields: list[str] = []
    i = 0
    n = len(line)
    while i < n:
        if line[i] == " ":
            i += 1
            continue
        if line[i] == ":":
            return fields, line[i + 1:]
        j = i
        while j < n and line[j] != " ":
            j += 1
        fields.append(line[i:j])
        i = j
    return fields, None


def _want(fields: list[str], count: int, verb: str, trailing: str | None = None) -> None:
    if len(fields) != count or trailing is not None:
        raise ProtocolFault(f"{verb} takes {count - 1} argument(s)")


def _int_field(text: str, what: str) -> int:
    if not _INT.match(text):
        raise ProtocolFault(f"{what} must be an integer, got {text!r}")
    return int(text)


def _float_field(text: str, what: str) -> float:
    if not _NUMBER.match(text):
        raise ProtocolFault(f"{what} must be a decimal, got {text!r}")
    return float(text)


def decode(line: str) -> Message:
    """Parse one wire line (trailing LF and CR are tolerated).

    Raises ProtocolFault (code 400) for unknown verbs, bad arity, or
    malformed arguments; never raises anything else.
    """
    line = line.rstrip("\n").rstrip("\r")
    fields, trailing = _split(line)
    if not fields:
        raise ProtocolFault("empty message")
    verb = fields[0]

    if verb == "HELLO":
        _want(fields, 2, verb, trailing)
        if fields[1] not in ROLES:
            raise ProtocolFault(f"unknown role {fields[1]!r}")
        return Hello(fields[1])
    if verb == "NEXT":
        _want(fields, 1, verb, trailing)
        return Next()
    if verb == "PREV":
        _want(fields, 1, verb, trailing)
        return Prev()
    if verb == "GOTO":
        _want(fields, 2, verb, trailing)
        return Goto(_int_field(fields[1], "step"))
    if verb == "VIEW":
        if len(fields) not in (3, 4) or trailing is not None:
            raise ProtocolFault("VIEW takes a verb and one or two decimals")
        if fields[1] not in VIEW_VERBS:
            raise ProtocolFault(f"unknown view verb {fields[1]!r}")
        args = tuple(_float_field(f, "view argument") for f in fields[2:])
        return View(fields[1], args)
    if verb == "MIRROR":
        _want(fields, 2, verb, trailing)
        if fields[1] not in ("on", "off"):
            raise ProtocolFault("MIRROR takes on or off")
        return Mirror(fields[1] == "on")
    if verb == "SUPPORT":
        _want(fields, 1, verb, trailing)
        return Support()
    if verb == "BYE":
        _want(fields, 1, verb, trailing)
        return Bye()
    if verb == "WELCOME":
        _want(fields, 3, verb, trailing)
        return Welcome(fields[1], _int_field(fields[2], "step count"))
    if verb == "STEP":
        if len(fields) != 2 or trailing is None:
            raise ProtocolFault("STEP takes an index and a :instruction")
        return StepBroadcast(_int_field(fields[1], "step"), trailing)
    if verb == "TARGET":
        _want(fields, 2, verb, trailing)
        return Target(fields[1])
    if verb == "HILITE":
        _want(fields, 3, verb, trailing)
        if fields[2] not in HILITE_KINDS:
            raise ProtocolFault(f"unknown highlight kind {fields[2]!r}")
        return Hilite(fields[1], fields[2])
    if verb == "OBS":
        _want(fields, 3, verb, trailing)
        return Obs(fields[1], _float_field(fields[2], "value"))
    if verb == "ERR":
        if len(fields) != 2 or trailing is None:
            raise ProtocolFault("ERR takes a code and a :text")
        return Err(_int_field(fields[1], "code"), trailing)
    if verb == "OK":
        _want(fields, 1, verb, trailing)
        return Ok()
    raise ProtocolFault(f"unknown verb {verb!r}")
