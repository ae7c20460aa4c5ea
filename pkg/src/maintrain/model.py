"""Structural plant models and the pure operations over their state.

A plant model is a discipline-typed block structure: blocks form a
containment forest, blocks own ports, ports pair up into connections of a
single kind, and named observables carry scalar display values.  Model
state is the binary status of every connection plus the current observable
values.  Everything here is immutable; operations return new states and
raise a fault instead of mutating anything on error.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Mapping, Optional, Union

#: Absolute tolerance for equality checks in Verify operations.
VERIFY_TOLERANCE = 1e-9


class Discipline(enum.Enum):
    """Engineering discipline a block belongs to."""

    MECHATRONIC_MODULE = "mechatronic_module"
    ELECTRIC_ELECTRONIC = "electric_electronic"
    SOFTWARE = "software"
    MECHANICAL = "mechanical"


class PortKind(enum.Enum):
    """Physical kind of a port; both ends of a connection must agree."""

    MECHANICAL = "mechanical"
    ELECTRICAL = "electrical"
    PNEUMATIC = "pneumatic"
    SIGNAL = "signal"


class Status(enum.Enum):
    CONNECTED = "connected"
    DISCONNECTED = "disconnected"


class Comparator(enum.Enum):
    EQ = "=="
    LE = "<="
    GE = ">="

    def holds(self, actual: float, value: float) -> bool:
        if self is Comparator.EQ:
            return math.isclose(actual, value, rel_tol=0.0, abs_tol=VERIFY_TOLERANCE)
        if self is Comparator.LE:
            return actual <= value
        return actual >= value


@dataclass(frozen=True, slots=True)
class Block:
    """A named structural component; ``parent`` expresses containment."""

    id: str
    name: str
    discipline: Discipline
    parent: Optional[str] = None


@dataclass(frozen=True, slots=True)
class Port:
    """A connection point owned by a block.  Ids are block-qualified."""

    id: str
    owner: str
    kind: PortKind


@dataclass(frozen=True, slots=True)
class Connection:
    """An undirected link between two ports of the same kind.

    ``initial_status`` seeds the model's starting state; a replacement
    scenario typically ships the incoming module's connections disconnected.
    """

    id: str
    a: str
    b: str
    kind: PortKind
    initial_status: Status = Status.CONNECTED


@dataclass(frozen=True, slots=True)
class PlantModel:
    id: str
    blocks: Mapping[str, Block]
    ports: Mapping[str, Port]
    connections: Mapping[str, Connection]
    observables: Mapping[str, float]


@dataclass(frozen=True, slots=True)
class ModelState:
    """Connection statuses plus observable values for one plant model."""

    status: Mapping[str, Status]
    observables: Mapping[str, float]


# --- operations -------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class Connect:
    conn: str


@dataclass(frozen=True, slots=True)
class Disconnect:
    conn: str


@dataclass(frozen=True, slots=True)
class SetObservable:
    name: str
    value: float


@dataclass(frozen=True, slots=True)
class Verify:
    """Check an observable against a comparator; never changes state."""

    name: str
    comparator: Comparator
    value: float


ModelOp = Union[Connect, Disconnect, SetObservable, Verify]


# --- faults -----------------------------------------------------------------


class OpFault(Exception):
    """An operation could not be applied to the given state."""

    code = "op-fault"


class AlreadyInStatus(OpFault):
    code = "already-in-status"

    def __init__(self, conn: str, status: Status):
        super().__init__(f"connection {conn} is already {status.value}")
        self.conn = conn
        self.status = status


class VerifyFailed(OpFault):
    """Carries the actual value so reports can show what was seen."""

    code = "verify-failed"

    def __init__(self, name: str, comparator: Comparator, value: float, actual: float):
        super().__init__(
            f"verify failed: {name} is {actual}, expected {comparator.value} {value}"
        )
        self.name = name
        self.comparator = comparator
        self.value = value
        self.actual = actual


class UnknownRef(OpFault):
    code = "unknown-ref"

    def __init__(self, ref: str):
        super().__init__(f"unknown reference: {ref}")
        self.ref = ref


class MismatchedModels(ValueError):
    """Two states do not share a key domain and cannot be diffed."""


def initial_state(model: PlantModel) -> ModelState:
    return ModelState(
        status={cid: c.initial_status for cid, c in model.connections.items()},
        observables=dict(model.observables),
    )


def apply_op(state: ModelState, op: ModelOp) -> ModelState:
    """Apply one operation, returning the successor state.

    Raises AlreadyInStatus for redundant connect/disconnect, VerifyFailed
    when a Verify predicate does not hold, and UnknownRef for references
    outside the state's domain.  A successful Verify returns the input
    state unchanged.
    """
    if isinstance(op, (Connect, Disconnect)):
        want = Status.CONNECTED if isinstance(op, Connect) else Status.DISCONNECTED
        current = state.status.get(op.conn)
        if current is None:
            raise UnknownRef(op.conn)
        if current is want:
            raise AlreadyInStatus(op.conn, current)
        status = dict(state.status)
        status[op.conn] = want
        return ModelState(status=status, observables=state.observables)
    if isinstance(op, SetObservable):
        if op.name not in state.observables:
            raise UnknownRef(op.name)
        observables = dict(state.observables)
        observables[op.name] = op.value
        return ModelState(status=state.status, observables=observables)
    if isinstance(op, Verify):
        actual = state.observables.get(op.name)
        if actual is None:
            raise UnknownRef(op.name)
        if not op.comparator.holds(actual, op.value):
            raise VerifyFailed(op.name, op.comparator, op.value, actual)
        return state
    raise TypeError(f"not a model operation: {op!r}")


@dataclass(frozen=True, slots=True)
class ChangeSet:
    """Keyed deltas between two states; entries never map a value to itself."""

    connection_changes: tuple[tuple[str, Status, Status], ...]
    observable_changes: tuple[tuple[str, float, float], ...]

    def is_empty(self) -> bool:
        return not self.connection_changes and not self.observable_changes


def diff_states(a: ModelState, b: ModelState) -> ChangeSet:
    """Minimal change set turning state ``a`` into state ``b``.

    Raises MismatchedModels when the two states do not cover the same
    connections and observables.
    """
    if set(a.status) != set(b.status) or set(a.observables) != set(b.observables):
        raise MismatchedModels("states describe different models")
    conn = tuple(
        (cid, a.status[cid], b.status[cid])
        for cid in sorted(a.status)
        if a.status[cid] is not b.status[cid]
    )
    obs = tuple(
        (name, a.observables[name], b.observables[name])
        for name in sorted(a.observables)
        if a.observables[name] != b.observables[name]
    )
    return ChangeSet(connection_changes=conn, observable_changes=obs)


def apply_changeset(state: ModelState, changes: ChangeSet) -> ModelState:
    status = dict(state.status)
    for cid, _old, new in changes.connection_changes:
        if cid not in status:
            raise UnknownRef(cid)
        status[cid] = new
    observables = dict(state.observables)
    for name, _old, new in changes.observable_changes:
        if name not in observables:
            raise UnknownRef(name)
        observables[name] = new
    return ModelState(status=status, observables=observables)


# --- structural validation ---------------------------------------------------


@dataclass(frozen=True, slots=True)
class ModelFault:
    rule: str
    subject: str
    detail: str


def check_model(model: PlantModel) -> list[ModelFault]:
    """Structural invariant check; an empty list means the model is sound."""
    faults: list[ModelFault] = []

    def fault(rule: str, subject: str, detail: str) -> None:
        faults.append(ModelFault(rule=rule, subject=subject, detail=detail))

    for bid in sorted(model.blocks):
        block = model.blocks[bid]
        if block.id != bid:
            fault("id-key-mismatch", bid, f"block keyed {bid} carries id {block.id}")
        if block.parent is not None and block.parent not in model.blocks:
            fault("unknown-parent", bid, f"parent {block.parent} is not a block")

    # Containment must be a forest: walking parents never revisits a block.
    for bid in sorted(model.blocks):
        seen = {bid}
        cursor = model.blocks[bid].parent
        while cursor is not None and cursor in model.blocks:
            if cursor in seen:
                fault("containment-cycle", bid, f"parent chain revisits {cursor}")
                break
            seen.add(cursor)
            cursor = model.blocks[cursor].parent

    for pid in sorted(model.ports):
        port = model.ports[pid]
        if port.id != pid:
            fault("id-key-mismatch", pid, f"port keyed {pid} carries id {port.id}")
        if port.owner not in model.blocks:
            fault("unknown-port-owner", pid, f"owner {port.owner} is not a block")

    for cid in sorted(model.connections):
        conn = model.connections[cid]
        if conn.id != cid:
            fault("id-key-mismatch", cid, f"connection keyed {cid} carries id {conn.id}")
        if conn.a == conn.b:
            fault("self-connection", cid, "both endpoints are the same port")
        missing = [p for p in (conn.a, conn.b) if p not in model.ports]
        for p in missing:
            fault("unknown-endpoint", cid, f"endpoint {p} is not a port")
        if not missing:
            ka = model.ports[conn.a].kind
            kb = model.ports[conn.b].kind
            if ka is not kb:
                fault(
                    "kind-mismatch",
                    cid,
                    f"endpoints disagree: {conn.a} is {ka.value}, {conn.b} is {kb.value}",
                )
            elif conn.kind is not ka:
                fault(
                    "kind-mismatch",
                    cid,
                    f"connection kind {conn.kind.value} does not match ports ({ka.value})",
                )
    return faults


def contains(model: PlantModel, ancestor: str, block: str) -> bool:
    """True when ``block`` is ``ancestor`` or sits inside it."""
    cursor: Optional[str] = block
    seen = set()
    while cursor is not None and cursor not in seen:
        if cursor == ancestor:
            return True
        seen.add(cursor)
        entry = model.blocks.get(cursor)
        cursor = entry.parent if entry else None
    return False
