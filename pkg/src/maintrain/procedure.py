"""Lessons: ordered procedure steps with constraints over step classes.

A lesson is the unit a trainee walks through.  Each step carries free
instruction text, a target block, a class token, and at most one model
operation.  Constraints speak about classes, never about concrete step
numbers, so a lesson can be reordered and revalidated:

* ``Precedence(before, after)`` demands that no step of class ``after``
  precede any step of class ``before``.  An optional module scope limits
  the rule to steps targeting that block or one of its descendants.
* ``VerifyBetween`` demands a holding Verify step strictly between the
  last ``after_class`` step and the first ``before_class`` step.

Reverse pairs declare which classes mirror each other between removal and
installation (``x_off`` undone by ``x_on``); classes outside the declared
pairs are invisible to the reversal check.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional, Union

from .model import (
    Comparator,
    Connect,
    Disconnect,
    ModelOp,
    ModelState,
    OpFault,
    PlantModel,
    SetObservable,
    Verify,
    apply_op,
    contains,
    initial_state,
)

#: Hard ceiling for exhaustive order enumeration (9! is the last tolerable factorial).
MAX_ENUMERATION_STEPS = 9


@dataclass(frozen=True, slots=True)
class Step:
    index: int
    instruction: str
    target: str
    op_class: str
    op: Optional[ModelOp] = None


@dataclass(frozen=True, slots=True)
class Precedence:
    """Every step of class ``before`` must precede every step of class ``after``."""

    before: str
    after: str
    scope: Optional[str] = None  # block id restricting the rule to a module


@dataclass(frozen=True, slots=True)
class VerifyBetween:
    observable: str
    comparator: Comparator
    value: float
    after_class: str
    before_class: str


Constraint = Union[Precedence, VerifyBetween]


@dataclass(frozen=True, slots=True)
class Lesson:
    id: str
    model_id: str
    steps: tuple[Step, ...]
    constraints: tuple[Constraint, ...]
    reverse_pairs: tuple[tuple[str, str], ...]


@dataclass(frozen=True, slots=True)
class Violation:
    rule: str
    step_indices: tuple[int, ...]
    detail: str


@dataclass(frozen=True, slots=True)
class OpFaultRecord:
    step_index: int
    code: str
    detail: str


@dataclass(frozen=True, slots=True)
class ValidationReport:
    violations: tuple[Violation, ...]
    op_faults: tuple[OpFaultRecord, ...]

    def is_clean(self) -> bool:
        return not self.violations and not self.op_faults


class LessonError(Exception):
    pass


class TooManySteps(LessonError):
    pass


class NoReversePairs(LessonError):
    pass


class StepFault(LessonError):
    """Folding a lesson hit an operation fault at a concrete step."""

    def __init__(self, step_index: int, fault: OpFault):
        super().__init__(f"step {step_index}: {fault}")
        self.step_index = step_index
        self.fault = fault

    def report(self) -> ValidationReport:
        return ValidationReport(
            violations=(),
            op_faults=(
                OpFaultRecord(self.step_index, self.fault.code, str(self.fault)),
            ),
        )


def state_at(lesson: Lesson, model: PlantModel, k: int) -> ModelState:
    """Model state after folding steps 1..k; k=0 is the initial state.

    Raises IndexError for k outside 0..N and StepFault when an operation
    in the prefix cannot apply.
    """
    if not 0 <= k <= len(lesson.steps):
        raise IndexError(f"step index {k} outside 0..{len(lesson.steps)}")
    state = initial_state(model)
    for step in lesson.steps[:k]:
        if step.op is None:
            continue
        try:
            state = apply_op(state, step.op)
        except OpFault as fault:
            raise StepFault(step.index, fault) from fault
    return state


def _fold_states(
    steps: tuple[Step, ...], model: PlantModel
) -> tuple[list[Optional[ModelState]], list[OpFaultRecord]]:
    """States before each step position (index i holds the state step i+1 sees).

    After the first fault the remaining entries are None: later predicates
    can no longer be evaluated.
    """
    states: list[Optional[ModelState]] = []
    faults: list[OpFaultRecord] = []
    state: Optional[ModelState] = initial_state(model)
    for step in steps:
        states.append(state)
        if state is None or step.op is None:
            continue
        try:
            state = apply_op(state, step.op)
        except OpFault as fault:
            faults.append(OpFaultRecord(step.index, fault.code, str(fault)))
            state = None
    return states, faults


def _in_scope(model: PlantModel, scope: Optional[str], step: Step) -> bool:
    return scope is None or contains(model, scope, step.target)


def validate_lesson(lesson: Lesson, model: PlantModel) -> ValidationReport:
    """Check a lesson's step order against its own constraints.

    Three families of findings: operations that fail to apply in sequence,
    precedence violations (reported once per offending step pair), and
    missing or non-holding verification between constraint-named classes.
    """
    states, op_faults = _fold_states(lesson.steps, model)
    violations: list[Violation] = []

    for constraint in lesson.constraints:
        if isinstance(constraint, Precedence):
            scoped = [s for s in lesson.steps if _in_scope(model, constraint.scope, s)]
            afters = [s for s in scoped if s.op_class == constraint.after]
            befores = [s for s in scoped if s.op_class == constraint.before]
            for a in afters:
                for b in befores:
                    if a.index < b.index:
                        violations.append(
                            Violation(
                                rule=f"precedence {constraint.before} < {constraint.after}",
                                step_indices=(a.index, b.index),
                                detail=(
                                    f"step {a.index} ({constraint.after}) precedes "
                                    f"step {b.index} ({constraint.before})"
                                ),
                            )
                        )
        else:
            violation = _check_verify_between(lesson, states, constraint)
            if violation is not None:
                violations.append(violation)

    return ValidationReport(violations=tuple(violations), op_faults=tuple(op_faults))


def _check_verify_between(
    lesson: Lesson,
    states: list[Optional[ModelState]],
    constraint: VerifyBetween,
) -> Optional[Violation]:
    after_positions = [
        i for i, s in enumerate(lesson.steps) if s.op_class == constraint.after_class
    ]
    before_positions = [
        i for i, s in enumerate(lesson.steps) if s.op_class == constraint.before_class
    ]
    if not after_positions or not before_positions:
        return None  # vacuous without both classes present
    last_after = after_positions[-1]
    first_before = before_positions[0]
    rule = (
        f"verify {constraint.observable} {constraint.comparator.value} "
        f"{constraint.value:g} after={constraint.after_class} "
        f"before={constraint.before_class}"
    )
    for pos in range(last_after + 1, first_before):
        op = lesson.steps[pos].op
        state = states[pos]
        if not isinstance(op, Verify) or state is None:
            continue
        if (
            op.name == constraint.observable
            and op.comparator is constraint.comparator
            and op.value == constraint.value
            and op.name in state.observables
            and op.comparator.holds(state.observables[op.name], op.value)
        ):
            return None
    return Violation(
        rule=rule,
        step_indices=(lesson.steps[last_after].index, lesson.steps[first_before].index),
        detail=(
            f"no holding verification of {constraint.observable} between "
            f"step {lesson.steps[last_after].index} ({constraint.after_class}) and "
            f"step {lesson.steps[first_before].index} ({constraint.before_class})"
        ),
    )


@dataclass(frozen=True, slots=True)
class Annotation:
    """What a display should emphasize while one step is active."""

    step_index: int
    target: str
    highlights: tuple[tuple[str, str], ...]  # (connection id, "remove"|"establish")
    observable_note: Optional[tuple[str, float]] = None


HIGHLIGHT_REMOVE = "remove"
HIGHLIGHT_ESTABLISH = "establish"


def step_annotation(lesson: Lesson, k: int) -> Annotation:
    """Display annotation for step k (1-based); derived solely from the op."""
    if not 1 <= k <= len(lesson.steps):
        raise IndexError(f"step index {k} outside 1..{len(lesson.steps)}")
    step = lesson.steps[k - 1]
    highlights: tuple[tuple[str, str], ...] = ()
    note: Optional[tuple[str, float]] = None
    if isinstance(step.op, Disconnect):
        highlights = ((step.op.conn, HIGHLIGHT_REMOVE),)
    elif isinstance(step.op, Connect):
        highlights = ((step.op.conn, HIGHLIGHT_ESTABLISH),)
    elif isinstance(step.op, Verify):
        note = (step.op.name, step.op.value)
    return Annotation(
        step_index=step.index,
        target=step.target,
        highlights=highlights,
        observable_note=note,
    )


@dataclass(frozen=True, slots=True)
class EnumerationResult:
    count: int
    sample: tuple[tuple[int, ...], ...]


def order_is_valid(
    steps: tuple[Step, ...],
    model: PlantModel,
    constraints: tuple[Constraint, ...],
) -> bool:
    """Independent validity check used by the order enumerator.

    Deliberately shares no logic with validate_lesson: precedence is done
    as pairwise position comparison over the raw sequence, verification
    windows as a linear scan, and the op fold stops at the first fault.
    """
    n = len(steps)
    # fold ops; any fault invalidates the order
    state = initial_state(model)
    folded: list[ModelState] = []
    ok = True
    for step in steps:
        folded.append(state)
        if step.op is None:
            continue
        try:
            state = apply_op(state, step.op)
        except OpFault:
            ok = False
            break
    if not ok:
        return False

    for constraint in constraints:
        if isinstance(constraint, Precedence):
            for i in range(n):
                for j in range(i + 1, n):
                    if (
                        steps[i].op_class == constraint.after
                        and steps[j].op_class == constraint.before
                        and _in_scope(model, constraint.scope, steps[i])
                        and _in_scope(model, constraint.scope, steps[j])
                    ):
                        return False
        else:
            if not _window_has_verify(steps, folded, constraint):
                return False
    return True


def _window_has_verify(
    steps: tuple[Step, ...],
    folded: list[ModelState],
    constraint: VerifyBetween,
) -> bool:
    last_after = -1
    first_before = -1
    for i, step in enumerate(steps):
        if step.op_class == constraint.after_class:
            last_after = i
        if step.op_class == constraint.before_class and first_before < 0:
            first_before = i
    if last_after < 0 or first_before < 0:
        return True
    for i in range(last_after + 1, first_before):
        op = steps[i].op
        if (
            isinstance(op, Verify)
            and op.name == constraint.observable
            and op.comparator is constraint.comparator
            and op.value == constraint.value
            and op.name in folded[i].observables
            and op.comparator.holds(folded[i].observables[op.name], op.value)
        ):
            return True
    return False


def enumerate_valid_orders(
    steps: tuple[Step, ...],
    model: PlantModel,
    constraints: tuple[Constraint, ...],
    cap: int = 10,
) -> EnumerationResult:
    """Count constraint-satisfying orderings of the given steps.

    Exhausts all permutations, so the step count is capped at
    MAX_ENUMERATION_STEPS (TooManySteps beyond that).  Returned sample
    orderings are tuples of the steps' original indices, at most ``cap``
    of them, in lexicographic permutation order.
    """
    if len(steps) > MAX_ENUMERATION_STEPS:
        raise TooManySteps(
            f"{len(steps)} steps; exhaustive ordering is capped at {MAX_ENUMERATION_STEPS}"
        )
    count = 0
    sample: list[tuple[int, ...]] = []
    for perm in itertools.permutations(steps):
        if order_is_valid(perm, model, constraints):
            count += 1
            if len(sample) < cap:
                sample.append(tuple(step.index for step in perm))
    return EnumerationResult(count=count, sample=tuple(sample))


@dataclass(frozen=True, slots=True)
class ReversalCheck:
    holds: bool
    mismatch: Optional[str] = None


def check_reversal(lesson: Lesson) -> ReversalCheck:
    """Does installation mirror removal under the declared class pairs?

    The step class sequence is restricted to classes named in
    reverse_pairs; the on-side subsequence must equal the reversed
    off-side subsequence mapped through the pairing.  Classes outside the
    pairs (inspections, software installs, tests) are ignored.
    """
    if not lesson.reverse_pairs:
        raise NoReversePairs(f"lesson {lesson.id} declares no reverse pairs")
    off_to_on = {off: on for off, on in lesson.reverse_pairs}
    on_side = {on for _off, on in lesson.reverse_pairs}

    removal = [s.op_class for s in lesson.steps if s.op_class in off_to_on]
    install = [s.op_class for s in lesson.steps if s.op_class in on_side]
    expected = [off_to_on[c] for c in reversed(removal)]

    if len(install) != len(expected):
        return ReversalCheck(
            holds=False,
            mismatch=(
                f"installation covers {len(install)} paired steps, "
                f"removal expects {len(expected)}"
            ),
        )
    for pos, (want, got) in enumerate(zip(expected, install)):
        if want != got:
            return ReversalCheck(
                holds=False,
                mismatch=f"installation position {pos + 1}: expected {want}, found {got}",
            )
    return ReversalCheck(holds=True)
