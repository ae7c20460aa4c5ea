"""Line-oriented text formats for plant models and lessons.

Model files::

    model <id>                                          # exactly one, first
    block <id> kind=<discipline> [parent=<block-id>] [name="<display>"]
    port <block-id>.<port-name> kind=<port-kind>
    connect <conn-id> <port-id> <port-id> [status=<connected|disconnected>]
    observable <name> = <decimal>

Lesson files::

    lesson <id> model=<model-id>
    constraint precedence <classA> < <classB> [scope=module:<block-id>]
    constraint verify <name> <==|<=|>=> <decimal> after=<classA> before=<classB>
    reverse_pair <classX_off> <classX_on>
    step <n> "<instruction>" target=<block-id> class=<class> op=<op clause>

Both formats share the lexical rules: ``#`` starts a comment outside
quotes, blank lines are ignored, tokens are separated by spaces,
identifiers match ``[A-Za-z_][A-Za-z0-9_.]*``, display strings are quoted
with backslash escapes for ``\"`` and ``\\``.  Input tolerates CR line
endings; output is always LF.  Parsing never raises anything but
ParseError, which carries every fault found, ordered by source position.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from typing import Iterable, Optional

from .model import (
    Block,
    Comparator,
    Connect,
    Connection,
    Disconnect,
    Discipline,
    ModelOp,
    PlantModel,
    Port,
    PortKind,
    SetObservable,
    Status,
    Verify,
    check_model,
)
from .procedure import Lesson, Precedence, Step, VerifyBetween

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_.]*\Z")
_NUMBER = re.compile(r"[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?\Z")
_INT = re.compile(r"\d+\Z")

_DISCIPLINES = {d.value: d for d in Discipline}
_PORT_KINDS = {k.value: k for k in PortKind}
_COMPARATORS = {c.value: c for c in Comparator}


@dataclass(frozen=True, slots=True)
class SourceSpan:
    file: str
    line: int  # 1-based
    column: int  # 1-based


class FaultCode(enum.Enum):
    SYNTAX = "syntax"
    UNKNOWN_KEYWORD = "unknown-keyword"
    DUPLICATE_ID = "duplicate-id"
    DANGLING_REF = "dangling-ref"
    KIND_MISMATCH = "kind-mismatch"
    BAD_NUMBER = "bad-number"


@dataclass(frozen=True, slots=True)
class ParseFault:
    span: SourceSpan
    code: FaultCode
    message: str


class ParseError(Exception):
    """Parsing failed; ``faults`` lists every finding in source order."""

    def __init__(self, faults: list[ParseFault]):
        self.faults = sorted(faults, key=lambda f: (f.span.line, f.span.column))
        first = self.faults[0]
        more = f" (+{len(self.faults) - 1} more)" if len(self.faults) > 1 else ""
        super().__init__(
            f"{first.span.file}:{first.span.line}:{first.span.column}: "
            f"{first.message}{more}"
        )


class InvalidModel(ValueError):
    """Refusing to serialize a model that fails its structural check."""


@dataclass(frozen=True, slots=True)
class _Token:
    text: str
    column: int
    quoted: bool


class _Collector:
    def __init__(self, file: str):
        self.file = file
        self.faults: list[ParseFault] = []

    def add(self, code: FaultCode, line: int, column: int, message: str) -> None:
        self.faults.append(
            ParseFault(span=SourceSpan(self.file, line, column), code=code, message=message)
        )

    def raise_if_any(self) -> None:
        if self.faults:
            raise ParseError(self.faults)


def _tokenize(line: str, lineno: int, out: _Collector) -> Optional[list[_Token]]:
    """Split one line into tokens; None means the line was malformed."""
    tokens: list[_Token] = []
    i = 0
    n = len(line)
    while i < n:
        ch = line[i]
        if ch in " \t":
            i += 1
            continue
        if ch == "#":
            break
        start = i
        parts: list[str] = []
        quoted = False
        while i < n and line[i] not in " \t":
            if line[i] == "#":
                break
            if line[i] == '"':
                quoted = True
                i += 1
                closed = False
                while i < n:
                    c = line[i]
                    if c == "\\":
                        if i + 1 >= n:
                            break
                        esc = line[i + 1]
                        if esc not in ('"', "\\"):
                            out.add(
                                FaultCode.SYNTAX,
                                lineno,
                                i + 1,
                                f"unknown escape \\{esc}",
                            )
                            return None
                        parts.append(esc)
                        i += 2
                        continue
                    if c == '"':
                        closed = True
                        i += 1
                        break
                    parts.append(c)
                    i += 1
                if not closed:
                    out.add(FaultCode.SYNTAX, lineno, start + 1, "unterminated string")
                    return None
            else:
                parts.append(line[i])
                i += 1
        tokens.append(_Token(text="".join(parts), column=start + 1, quoted=quoted))
    return tokens


def _significant_lines(text: str, out: _Collector) -> Iterable[tuple[int, list[_Token]]]:
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.rstrip("\r")
        tokens = _tokenize(line, lineno, out)
        if tokens:
            yield lineno, tokens


_ATTR = re.compile(r"([a-z_]+)=(.*)\Z", re.DOTALL)


def _attrs(
    tokens: list[_Token],
    lineno: int,
    allowed: set[str],
    out: _Collector,
) -> Optional[dict[str, _Token]]:
    """Parse ``key=value`` tokens; None on any malformed attribute."""
    found: dict[str, _Token] = {}
    for tok in tokens:
        m = _ATTR.match(tok.text)
        if m is None:
            out.add(FaultCode.SYNTAX, lineno, tok.column, f"expected key=value, got {tok.text!r}")
            return None
        key, value = m.group(1), m.group(2)
        if key not in allowed:
            out.add(FaultCode.SYNTAX, lineno, tok.column, f"unknown attribute {key}")
            return None
        if key in found:
            out.add(FaultCode.SYNTAX, lineno, tok.column, f"duplicate attribute {key}")
            return None
        found[key] = _Token(text=value, column=tok.column + len(key) + 1, quoted=tok.quoted)
    return found


def _ident(tok: _Token, lineno: int, what: str, out: _Collector) -> Optional[str]:
    if tok.quoted or not _IDENT.match(tok.text):
        out.add(FaultCode.SYNTAX, lineno, tok.column, f"invalid {what}: {tok.text!r}")
        return None
    return tok.text


def _decimal(tok: _Token, lineno: int, out: _Collector) -> Optional[float]:
    if tok.quoted or not _NUMBER.match(tok.text):
        out.add(FaultCode.BAD_NUMBER, lineno, tok.column, f"not a decimal: {tok.text!r}")
        return None
    return float(tok.text)


# --- model files --------------------------------------------------------------


def parse_model(text: str, file: str = "<model>") -> PlantModel:
    """Parse a model file; the result always passes check_model.

    Raises ParseError carrying all faults (syntax, duplicate ids, dangling
    references, kind mismatches) ordered by source position.
    """
    out = _Collector(file)
    model_id: Optional[str] = None
    blocks: list[tuple[int, int, Block]] = []
    ports: list[tuple[int, int, Port]] = []
    conns: list[tuple[int, int, str, str, str, Status]] = []
    observables: list[tuple[int, int, str, float]] = []

    for lineno, tokens in _significant_lines(text, out):
        head = tokens[0]
        if model_id is None and head.text != "model":
            out.add(FaultCode.SYNTAX, lineno, head.column, "expected model header first")
            # keep going so later faults are still reported
        if head.text == "model":
            if model_id is not None:
                out.add(FaultCode.SYNTAX, lineno, head.column, "duplicate model header")
                continue
            if len(tokens) != 2:
                out.add(FaultCode.SYNTAX, lineno, head.column, "usage: model <id>")
                model_id = ""
                continue
            model_id = _ident(tokens[1], lineno, "model id", out) or ""
        elif head.text == "block":
            if len(tokens) < 3:
                out.add(
                    FaultCode.SYNTAX, lineno, head.column,
                    "usage: block <id> kind=<kind> [parent=<id>] [name=\"...\"]",
                )
                continue
            bid = _ident(tokens[1], lineno, "block id", out)
            attrs = _attrs(tokens[2:], lineno, {"kind", "parent", "name"}, out)
            if bid is None or attrs is None:
                continue
            if "kind" not in attrs:
                out.add(FaultCode.SYNTAX, lineno, head.column, f"block {bid} is missing kind=")
                continue
            kind_tok = attrs["kind"]
            discipline = _DISCIPLINES.get(kind_tok.text)
            if discipline is None:
                out.add(
                    FaultCode.SYNTAX, lineno, kind_tok.column,
                    f"unknown block kind {kind_tok.text!r}",
                )
                continue
            parent = attrs["parent"].text if "parent" in attrs else None
            name = attrs["name"].text if "name" in attrs else bid
            blocks.append(
                (lineno, tokens[1].column, Block(id=bid, name=name, discipline=discipline, parent=parent))
            )
        elif head.text == "port":
            if len(tokens) != 3:
                out.add(
                    FaultCode.SYNTAX, lineno, head.column,
                    "usage: port <block-id>.<port-name> kind=<kind>",
                )
                continue
            pid = _ident(tokens[1], lineno, "port id", out)
            attrs = _attrs(tokens[2:], lineno, {"kind"}, out)
            if pid is None or attrs is None or "kind" not in attrs:
                if pid is not None and attrs is not None:
                    out.add(FaultCode.SYNTAX, lineno, head.column, f"port {pid} is missing kind=")
                continue
            if "." not in pid:
                out.add(
                    FaultCode.SYNTAX, lineno, tokens[1].column,
                    f"port id {pid} is not block-qualified",
                )
                continue
            kind = _PORT_KINDS.get(attrs["kind"].text)
            if kind is None:
                out.add(
                    FaultCode.SYNTAX, lineno, attrs["kind"].column,
                    f"unknown port kind {attrs['kind'].text!r}",
                )
                continue
            owner = pid.rsplit(".", 1)[0]
            ports.append((lineno, tokens[1].column, Port(id=pid, owner=owner, kind=kind)))
        elif head.text == "connect":
            if len(tokens) not in (4, 5):
                out.add(
                    FaultCode.SYNTAX, lineno, head.column,
                    "usage: connect <conn-id> <port-id> <port-id> [status=<status>]",
                )
                continue
            cid = _ident(tokens[1], lineno, "connection id", out)
            a = _ident(tokens[2], lineno, "port id", out)
            b = _ident(tokens[3], lineno, "port id", out)
            status = Status.CONNECTED
            if len(tokens) == 5:
                attrs = _attrs(tokens[4:], lineno, {"status"}, out)
                if attrs is None:
                    continue
                value = attrs.get("status")
                if value is None or value.text not in ("connected", "disconnected"):
                    out.add(
                        FaultCode.SYNTAX, lineno, tokens[4].column,
                        "status must be connected or disconnected",
                    )
                    continue
                status = Status.CONNECTED if value.text == "connected" else Status.DISCONNECTED
            if cid is None or a is None or b is None:
                continue
            conns.append((lineno, tokens[1].column, cid, a, b, status))
        elif head.text == "observable":
            if len(tokens) != 4 or tokens[2].text != "=" or tokens[2].quoted:
                out.add(
                    FaultCode.SYNTAX, lineno, head.column,
                    "usage: observable <name> = <decimal>",
                )
                continue
            name = _ident(tokens[1], lineno, "observable name", out)
            value = _decimal(tokens[3], lineno, out)
            if name is None or value is None:
                continue
            observables.append((lineno, tokens[1].column, name, value))
        else:
            out.add(
                FaultCode.UNKNOWN_KEYWORD, lineno, head.column,
                f"unknown keyword {head.text!r}",
            )

    if model_id is None:
        out.add(FaultCode.SYNTAX, 1, 1, "missing model header")
        model_id = ""

    block_map: dict[str, Block] = {}
    for lineno, column, block in blocks:
        if block.id in block_map:
            out.add(FaultCode.DUPLICATE_ID, lineno, column, f"duplicate block id {block.id}")
            continue
        block_map[block.id] = block
    for lineno, column, block in blocks:
        if block.parent is not None and block.parent not in block_map:
            out.add(
                FaultCode.DANGLING_REF, lineno, column,
                f"block {block.id} names unknown parent {block.parent}",
            )
    # containment must stay a forest even though parents parse independently
    for lineno, column, block in blocks:
        seen = {block.id}
        cursor = block.parent
        while cursor is not None and cursor in block_map:
            if cursor in seen:
                out.add(
                    FaultCode.SYNTAX, lineno, column,
                    f"containment cycle through {block.id}",
                )
                break
            seen.add(cursor)
            cursor = block_map[cursor].parent

    port_map: dict[str, Port] = {}
    for lineno, column, port in ports:
        if port.id in port_map:
            out.add(FaultCode.DUPLICATE_ID, lineno, column, f"duplicate port id {port.id}")
            continue
        if port.owner not in block_map:
            out.add(
                FaultCode.DANGLING_REF, lineno, column,
                f"port {port.id} belongs to unknown block {port.owner}",
            )
            continue
        port_map[port.id] = port

    conn_map: dict[str, Connection] = {}
    for lineno, column, cid, a, b, status in conns:
        if cid in conn_map:
            out.add(FaultCode.DUPLICATE_ID, lineno, column, f"duplicate connection id {cid}")
            continue
        dangling = False
        for p in (a, b):
            if p not in port_map:
                out.add(
                    FaultCode.DANGLING_REF, lineno, column,
                    f"connection {cid} references unknown port {p}",
                )
                dangling = True
        if dangling:
            continue
        if a == b:
            out.add(FaultCode.SYNTAX, lineno, column, f"connection {cid} endpoints must differ")
            continue
        if port_map[a].kind is not port_map[b].kind:
            out.add(
                FaultCode.KIND_MISMATCH, lineno, column,
                f"connection {cid} joins {port_map[a].kind.value} to {port_map[b].kind.value}",
            )
            continue
        conn_map[cid] = Connection(id=cid, a=a, b=b, kind=port_map[a].kind, initial_status=status)

    obs_map: dict[str, float] = {}
    for lineno, column, name, value in observables:
        if name in obs_map:
            out.add(FaultCode.DUPLICATE_ID, lineno, column, f"duplicate observable {name}")
            continue
        obs_map[name] = value

    out.raise_if_any()
    return PlantModel(
        id=model_id,
        blocks={bid: block_map[bid] for bid in sorted(block_map)},
        ports={pid: port_map[pid] for pid in sorted(port_map)},
        connections={cid: conn_map[cid] for cid in sorted(conn_map)},
        observables={name: obs_map[name] for name in sorted(obs_map)},
    )


def _quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def serialize_model(model: PlantModel) -> str:
    """Canonical text for a model: declarations sorted by (kind, id), LF lines.

    parse_model(serialize_model(m)) is structurally identical to m, and
    serialization is byte-stable no matter how the model was assembled.
    Raises InvalidModel when the model fails check_model.
    """
    faults = check_model(model)
    if faults:
        first = faults[0]
        raise InvalidModel(f"{first.rule} on {first.subject}: {first.detail}")
    lines = [f"model {model.id}"]
    for bid in sorted(model.blocks):
        block = model.blocks[bid]
        line = f"block {bid} kind={block.discipline.value}"
        if block.parent is not None:
            line += f" parent={block.parent}"
        if block.name != bid:
            line += f" name={_quote(block.name)}"
        lines.append(line)
    for pid in sorted(model.ports):
        lines.append(f"port {pid} kind={model.ports[pid].kind.value}")
    for cid in sorted(model.connections):
        conn = model.connections[cid]
        line = f"connect {cid} {conn.a} {conn.b}"
        if conn.initial_status is Status.DISCONNECTED:
            line += " status=disconnected"
        lines.append(line)
    for name in sorted(model.observables):
        lines.append(f"observable {name} = {model.observables[name]!r}")
    return "\n".join(lines) + "\n"


# --- lesson files --------------------------------------------------------------


def _parse_op_clause(
    tokens: list[_Token],
    lineno: int,
    model: PlantModel,
    out: _Collector,
) -> tuple[bool, Optional[ModelOp]]:
    """(ok, op) for the tokens following ``op=``; op None means ``none``."""
    head = tokens[0]
    if head.text == "none":
        if len(tokens) != 1:
            out.add(FaultCode.SYNTAX, lineno, head.column, "op=none takes no arguments")
            return False, None
        return True, None
    if head.text in ("connect", "disconnect"):
        if len(tokens) != 2:
            out.add(FaultCode.SYNTAX, lineno, head.column, f"usage: op={head.text} <conn-id>")
            return False, None
        conn = tokens[1].text
        if conn not in model.connections:
            out.add(
                FaultCode.DANGLING_REF, lineno, tokens[1].column,
                f"unknown connection {conn}",
            )
            return False, None
        return True, Connect(conn) if head.text == "connect" else Disconnect(conn)
    if head.text == "set":
        if len(tokens) != 3:
            out.add(FaultCode.SYNTAX, lineno, head.column, "usage: op=set <name> <decimal>")
            return False, None
        name = tokens[1].text
        value = _decimal(tokens[2], lineno, out)
        if name not in model.observables:
            out.add(FaultCode.DANGLING_REF, lineno, tokens[1].column, f"unknown observable {name}")
            return False, None
        if value is None:
            return False, None
        return True, SetObservable(name, value)
    if head.text == "verify":
        if len(tokens) != 4:
            out.add(
                FaultCode.SYNTAX, lineno, head.column,
                "usage: op=verify <name> <==|<=|>=> <decimal>",
            )
            return False, None
        name = tokens[1].text
        comparator = _COMPARATORS.get(tokens[2].text)
        value = _decimal(tokens[3], lineno, out)
        if name not in model.observables:
            out.add(FaultCode.DANGLING_REF, lineno, tokens[1].column, f"unknown observable {name}")
            return False, None
        if comparator is None:
            out.add(
                FaultCode.SYNTAX, lineno, tokens[2].column,
                f"unknown comparator {tokens[2].text!r}",
            )
            return False, None
        if value is None:
            return False, None
        return True, Verify(name, comparator, value)
    out.add(FaultCode.SYNTAX, lineno, head.column, f"unknown op {head.text!r}")
    return False, None


def parse_lesson(text: str, model: PlantModel, file: str = "<lesson>") -> Lesson:
    """Parse a lesson against its model; references are resolved eagerly.

    Steps must be numbered 1..N contiguously in file order.  Unknown
    blocks, connections, and observables are dangling-reference faults.
    """
    out = _Collector(file)
    lesson_id: Optional[str] = None
    steps: list[Step] = []
    constraints: list = []
    pairs: list[tuple[str, str]] = []
    pair_classes: set[str] = set()

    for lineno, tokens in _significant_lines(text, out):
        head = tokens[0]
        if lesson_id is None and head.text != "lesson":
            out.add(FaultCode.SYNTAX, lineno, head.column, "expected lesson header first")
        if head.text == "lesson":
            if lesson_id is not None:
                out.add(FaultCode.SYNTAX, lineno, head.column, "duplicate lesson header")
                continue
            attrs = _attrs(tokens[2:], lineno, {"model"}, out) if len(tokens) >= 2 else None
            lid = _ident(tokens[1], lineno, "lesson id", out) if len(tokens) >= 2 else None
            if len(tokens) < 3 or attrs is None or lid is None or "model" not in attrs:
                out.add(FaultCode.SYNTAX, lineno, head.column, "usage: lesson <id> model=<model-id>")
                lesson_id = lesson_id or ""
                continue
            if attrs["model"].text != model.id:
                out.add(
                    FaultCode.DANGLING_REF, lineno, attrs["model"].column,
                    f"lesson is for model {attrs['model'].text!r}, got {model.id!r}",
                )
            lesson_id = lid
        elif head.text == "constraint":
            if len(tokens) < 2:
                out.add(FaultCode.SYNTAX, lineno, head.column, "constraint kind missing")
                continue
            kind = tokens[1].text
            if kind == "precedence":
                if len(tokens) not in (5, 6) or tokens[3].text != "<" or tokens[3].quoted:
                    out.add(
                        FaultCode.SYNTAX, lineno, head.column,
                        "usage: constraint precedence <classA> < <classB> [scope=module:<block>]",
                    )
                    continue
                before = _ident(tokens[2], lineno, "class", out)
                after = _ident(tokens[4], lineno, "class", out)
                scope = None
                if len(tokens) == 6:
                    attrs = _attrs(tokens[5:], lineno, {"scope"}, out)
                    if attrs is None or "scope" not in attrs:
                        continue
                    value = attrs["scope"].text
                    if not value.startswith("module:"):
                        out.add(
                            FaultCode.SYNTAX, lineno, attrs["scope"].column,
                            "scope must look like module:<block-id>",
                        )
                        continue
                    scope = value[len("module:"):]
                    if scope not in model.blocks:
                        out.add(
                            FaultCode.DANGLING_REF, lineno, attrs["scope"].column,
                            f"unknown scope block {scope}",
                        )
                        continue
                if before is None or after is None:
                    continue
                constraints.append(Precedence(before=before, after=after, scope=scope))
            elif kind == "verify":
                if len(tokens) != 7:
                    out.add(
                        FaultCode.SYNTAX, lineno, head.column,
                        "usage: constraint verify <name> <cmp> <decimal> after=<class> before=<class>",
                    )
                    continue
                name = _ident(tokens[2], lineno, "observable", out)
                comparator = _COMPARATORS.get(tokens[3].text)
                value = _decimal(tokens[4], lineno, out)
                attrs = _attrs(tokens[5:], lineno, {"after", "before"}, out)
                if comparator is None:
                    out.add(
                        FaultCode.SYNTAX, lineno, tokens[3].column,
                        f"unknown comparator {tokens[3].text!r}",
                    )
                    continue
                if name is None or value is None or attrs is None:
                    continue
                if "after" not in attrs or "before" not in attrs:
                    out.add(FaultCode.SYNTAX, lineno, head.column, "verify needs after= and before=")
                    continue
                if name not in model.observables:
                    out.add(
                        FaultCode.DANGLING_REF, lineno, tokens[2].column,
                        f"unknown observable {name}",
                    )
                    continue
                constraints.append(
                    VerifyBetween(
                        observable=name,
                        comparator=comparator,
                        value=value,
                        after_class=attrs["after"].text,
                        before_class=attrs["before"].text,
                    )
                )
            else:
                out.add(
                    FaultCode.UNKNOWN_KEYWORD, lineno, tokens[1].column,
                    f"unknown constraint kind {kind!r}",
                )
        elif head.text == "reverse_pair":
            if len(tokens) != 3:
                out.add(FaultCode.SYNTAX, lineno, head.column, "usage: reverse_pair <off> <on>")
                continue
            off = _ident(tokens[1], lineno, "class", out)
            on = _ident(tokens[2], lineno, "class", out)
            if off is None or on is None:
                continue
            for cls, column in ((off, tokens[1].column), (on, tokens[2].column)):
                if cls in pair_classes:
                    out.add(
                        FaultCode.DUPLICATE_ID, lineno, column,
                        f"class {cls} appears in more than one reverse pair",
                    )
            if off not in pair_classes and on not in pair_classes:
                pairs.append((off, on))
            pair_classes.update((off, on))
        elif head.text == "step":
            if len(tokens) < 5:
                out.add(
                    FaultCode.SYNTAX, lineno, head.column,
                    'usage: step <n> "<instruction>" target=<block> class=<class> op=<op>',
                )
                continue
            if tokens[1].quoted or not _INT.match(tokens[1].text):
                out.add(FaultCode.BAD_NUMBER, lineno, tokens[1].column, "step number must be an integer")
                continue
            index = int(tokens[1].text)
            expected = len(steps) + 1
            if index != expected:
                out.add(
                    FaultCode.SYNTAX, lineno, tokens[1].column,
                    f"steps must be contiguous: expected {expected}, got {index}",
                )
                continue
            if not tokens[2].quoted:
                out.add(FaultCode.SYNTAX, lineno, tokens[2].column, "instruction must be quoted")
                continue
            instruction = tokens[2].text
            op_at = next(
                (i for i, t in enumerate(tokens) if i >= 3 and t.text.startswith("op=")), None
            )
            if op_at is None:
                out.add(FaultCode.SYNTAX, lineno, head.column, f"step {index} is missing op=")
                continue
            attrs = _attrs(tokens[3:op_at], lineno, {"target", "class"}, out)
            if attrs is None:
                continue
            if "target" not in attrs or "class" not in attrs:
                out.add(
                    FaultCode.SYNTAX, lineno, head.column,
                    f"step {index} needs target= and class=",
                )
                continue
            target = attrs["target"].text
            if target not in model.blocks:
                out.add(
                    FaultCode.DANGLING_REF, lineno, attrs["target"].column,
                    f"unknown target block {target}",
                )
                continue
            op_tokens = [
                _Token(
                    text=tokens[op_at].text[len("op="):],
                    column=tokens[op_at].column + len("op="),
                    quoted=tokens[op_at].quoted,
                )
            ] + tokens[op_at + 1:]
            if not op_tokens[0].text:
                out.add(FaultCode.SYNTAX, lineno, tokens[op_at].column, "empty op clause")
                continue
            ok, op = _parse_op_clause(op_tokens, lineno, model, out)
            if not ok:
                continue
            steps.append(
                Step(
                    index=index,
                    instruction=instruction,
                    target=target,
                    op_class=attrs["class"].text,
                    op=op,
                )
            )
        else:
            out.add(
                FaultCode.UNKNOWN_KEYWORD, lineno, head.column,
                f"unknown keyword {head.text!r}",
            )

    if lesson_id is None:
        out.add(FaultCode.SYNTAX, 1, 1, "missing lesson header")
        lesson_id = ""

    out.raise_if_any()
    return Lesson(
        id=lesson_id,
        model_id=model.id,
        steps=tuple(steps),
        constraints=tuple(constraints),
        reverse_pairs=tuple(pairs),
    )
