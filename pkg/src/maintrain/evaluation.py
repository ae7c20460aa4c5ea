"""Study bookkeeping: recall scoring and plausibility audits of summary tables.

Two jobs live here.  ``score_recall`` turns raw per-participant error
records into group means, the number a study report would print.
``audit_tables`` goes the other way: given only printed summary rows
(median, mean, sd, n) for small integer scales, it searches every
attainable response multiset and says whether the row is reachable at
all.  Printed tables sometimes swap the median and mean columns, so each
row is also tried with the two exchanged; count rows (error tallies) get
a mean-attainability check instead, since a mean of integers over n
participants can only take values k/n.

All statistics use the stdlib; sd is checked under both the population
and the sample convention because reports rarely say which they used.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import combinations_with_replacement
from statistics import fmean, median, pstdev, stdev
from typing import Iterable, Optional, Sequence

#: Comparison slack on top of every tolerance, absorbing float noise only.
SLACK = 1e-9

CATEGORY_OK = "ok"
CATEGORY_SWAPPED = "ok-if-swapped"
CATEGORY_INFEASIBLE = "infeasible-both"
CATEGORY_SKIPPED = "skipped"

ROW_KINDS = ("likert", "count", "summary")
CONVENTIONS = ("population", "sample")


@dataclass(frozen=True, slots=True)
class Tolerances:
    median: float = 0.05
    mean: float = 0.05
    sd: float = 0.1


DEFAULT_TOLERANCES = Tolerances()


@dataclass(frozen=True, slots=True)
class RecallRecord:
    """One participant's reproduction attempt of a learned procedure."""

    participant: str
    group: str
    errors: int
    per_step: tuple[int, ...] = ()
    consultations: int = 0


@dataclass(frozen=True, slots=True)
class QuestionnaireResponse:
    participant: str
    group: str
    item: str
    score: int


@dataclass(frozen=True, slots=True)
class StatTriple:
    median: float
    mean: float
    sd: float
    n: int


@dataclass(frozen=True, slots=True)
class TableRow:
    """One printed summary line, transcribed as-is from a report."""

    table: str
    item: str
    group: str
    mean: float
    n: int
    kind: str = "likert"
    median: Optional[float] = None
    sd: Optional[float] = None
    scale_min: int = 1
    scale_max: int = 6


@dataclass(frozen=True, slots=True)
class FeasibilityVerdict:
    category: str
    convention: Optional[str] = None
    witness: Optional[tuple[int, ...]] = None
    distance: Optional[float] = None
    note: Optional[str] = None


@dataclass(frozen=True, slots=True)
class GroupScore:
    group: str
    n: int
    total_errors: int
    mean_errors: float


def descriptive_stats(values: Sequence[float], convention: str = "population") -> StatTriple:
    """Median, mean, sd of raw scores.  n = 1 has sd 0 either way."""
    if not values:
        raise ValueError("no values")
    if convention not in CONVENTIONS:
        raise ValueError(f"unknown convention {convention!r}")
    if len(values) == 1:
        sd = 0.0
    elif convention == "population":
        sd = pstdev(values)
    else:
        sd = stdev(values)
    return StatTriple(median=median(values), mean=fmean(values), sd=sd, n=len(values))


def _jsonl(path: str) -> Iterable[tuple[int, dict]]:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as err:
                raise ValueError(f"{path}:{lineno}: not JSON: {err}") from None
            if not isinstance(record, dict):
                raise ValueError(f"{path}:{lineno}: expected an object")
            yield lineno, record


def load_recall_records(path: str) -> list[RecallRecord]:
    records = []
    for lineno, raw in _jsonl(path):
        try:
            records.append(
                RecallRecord(
                    participant=raw["participant"],
                    group=raw["group"],
                    errors=int(raw["errors"]),
                    per_step=tuple(int(x) for x in raw.get("per_step", ())),
                    consultations=int(raw.get("consultations", 0)),
                )
            )
        except (KeyError, TypeError, ValueError) as err:
            raise ValueError(f"{path}:{lineno}: bad recall record: {err}") from None
    return records


def load_responses(path: str) -> list[QuestionnaireResponse]:
    responses = []
    for lineno, raw in _jsonl(path):
        try:
            responses.append(
                QuestionnaireResponse(
                    participant=raw["participant"],
                    group=raw["group"],
                    item=raw["item"],
                    score=int(raw["score"]),
                )
            )
        except (KeyError, TypeError, ValueError) as err:
            raise ValueError(f"{path}:{lineno}: bad response: {err}") from None
    return responses


def load_table_rows(path: str) -> list[TableRow]:
    rows = []
    for lineno, raw in _jsonl(path):
        kind = raw.get("kind", "likert")
        if kind not in ROW_KINDS:
            raise ValueError(f"{path}:{lineno}: unknown row kind {kind!r}")
        try:
            rows.append(
                TableRow(
                    table=raw["table"],
                    item=raw["item"],
                    group=raw.get("group", ""),
                    mean=float(raw["mean"]),
                    n=int(raw["n"]),
                    kind=kind,
                    median=None if raw.get("median") is None else float(raw["median"]),
                    sd=None if raw.get("sd") is None else float(raw["sd"]),
                    scale_min=int(raw.get("scale_min", 1)),
                    scale_max=int(raw.get("scale_max", 6)),
                )
            )
        except (KeyError, TypeError, ValueError) as err:
            raise ValueError(f"{path}:{lineno}: bad table row: {err}") from None
    return rows


def score_recall(records: Sequence[RecallRecord]) -> dict[str, GroupScore]:
    """Group error means, keyed by group name."""
    by_group: dict[str, list[RecallRecord]] = {}
    for record in records:
        by_group.setdefault(record.group, []).append(record)
    scores = {}
    for group in sorted(by_group):
        members = by_group[group]
        total = sum(r.errors for r in members)
        scores[group] = GroupScore(
            group=group,
            n=len(members),
            total_errors=total,
            mean_errors=fmean([r.errors for r in members]),
        )
    return scores


def compare_reported_means(
    scores: dict[str, GroupScore],
    rows: Sequence[TableRow],
    tolerance: float = DEFAULT_TOLERANCES.mean,
) -> list[str]:
    """Mismatch notes between computed recall means and printed count rows."""
    notes = []
    for row in rows:
        if row.kind != "count":
            continue
        score = scores.get(row.group)
        if score is None:
            notes.append(f"{row.table} {row.group}: no records for printed row")
            continue
        if score.n != row.n:
            notes.append(
                f"{row.table} {row.group}: printed n {row.n}, records have {score.n}"
            )
        if abs(score.mean_errors - row.mean) > tolerance + SLACK:
            notes.append(
                f"{row.table} {row.group}: printed mean {row.mean:g}, "
                f"records give {score.mean_errors:g}"
            )
    return notes


def _close(a: float, b: float, tolerance: float) -> bool:
    return abs(a - b) <= tolerance + SLACK


def _sd(values: Sequence[int], convention: str) -> float:
    if len(values) == 1:
        return 0.0
    return pstdev(values) if convention == "population" else stdev(values)


def _find_witness(
    row: TableRow,
    target_median: Optional[float],
    target_mean: float,
    tolerances: Tolerances,
) -> Optional[tuple[str, tuple[int, ...]]]:
    """First response multiset matching the targets, or None.

    Order never affects median/mean/sd, so multisets cover every
    arrangement of n responses on the scale.
    """
    scale = range(row.scale_min, row.scale_max + 1)
    for convention in CONVENTIONS:
        if convention == "sample" and row.sd is not None and row.n < 2:
            continue
        for values in combinations_with_replacement(scale, row.n):
            if not _close(fmean(values), target_mean, tolerances.mean):
                continue
            if target_median is not None and not _close(
                median(values), target_median, tolerances.median
            ):
                continue
            if row.sd is not None and not _close(
                _sd(values, convention), row.sd, tolerances.sd
            ):
                continue
            return convention, values
        if row.sd is None:
            break  # nothing distinguishes the conventions
    return None


def _audit_count_row(row: TableRow, tolerances: Tolerances) -> FeasibilityVerdict:
    # GRIM argument: a mean of n integer counts is a multiple of 1/n.
    total = row.mean * row.n
    nearest_mean = round(total) / row.n
    distance = abs(row.mean - nearest_mean)
    half_mean = round(total * 2) / 2 / row.n
    half_distance = abs(row.mean - half_mean)
    if _close(row.mean, nearest_mean, tolerances.mean):
        return FeasibilityVerdict(
            category=CATEGORY_OK,
            distance=distance,
            note=f"mean is attainable: {round(total)} over {row.n}",
        )
    note = (
        f"nearest attainable mean {nearest_mean:g} (off by {distance:g}); "
        f"allowing half-credit errors, {half_mean:g} (off by {half_distance:g})"
    )
    return FeasibilityVerdict(
        category=CATEGORY_INFEASIBLE, distance=distance, note=note
    )


def audit_row(row: TableRow, tolerances: Tolerances = DEFAULT_TOLERANCES) -> FeasibilityVerdict:
    """Can any set of responses produce this printed row?"""
    if row.kind == "summary":
        return FeasibilityVerdict(
            category=CATEGORY_SKIPPED, note="aggregate over items, not one response set"
        )
    if row.kind == "count":
        return _audit_count_row(row, tolerances)

    found = _find_witness(row, row.median, row.mean, tolerances)
    if found is not None:
        convention, witness = found
        return FeasibilityVerdict(
            category=CATEGORY_OK, convention=convention, witness=witness
        )
    if row.median is not None:
        swapped = _find_witness(row, row.mean, row.median, tolerances)
        if swapped is not None:
            convention, witness = swapped
            return FeasibilityVerdict(
                category=CATEGORY_SWAPPED,
                convention=convention,
                witness=witness,
                note="reachable only with the median and mean columns exchanged",
            )
    return FeasibilityVerdict(
        category=CATEGORY_INFEASIBLE,
        note=f"no multiset on {row.scale_min}..{row.scale_max} fits, either column order",
    )


def audit_tables(
    rows: Sequence[TableRow], tolerances: Tolerances = DEFAULT_TOLERANCES
) -> list[tuple[TableRow, FeasibilityVerdict]]:
    return [(row, audit_row(row, tolerances)) for row in rows]


def _fmt(value: Optional[float]) -> str:
    return "-" if value is None else f"{value:g}"


def render_audit_lines(results: Sequence[tuple[TableRow, FeasibilityVerdict]]) -> list[str]:
    lines = []
    for row, verdict in results:
        stats = (
            f"median {_fmt(row.median)}, mean {_fmt(row.mean)}, "
            f"sd {_fmt(row.sd)}, n {row.n}"
        )
        line = f"[{verdict.category}] {row.table} {row.group} {row.item!r} ({stats})"
        if verdict.convention is not None:
            line += f" {verdict.convention} sd"
        if verdict.witness is not None:
            line += " witness " + ",".join(str(v) for v in verdict.witness)
        if verdict.note is not None:
            line += f" -- {verdict.note}"
        lines.append(line)
    return lines


def audit_as_json(results: Sequence[tuple[TableRow, FeasibilityVerdict]]) -> str:
    payload = []
    for row, verdict in results:
        payload.append(
            {
                "table": row.table,
                "item": row.item,
                "group": row.group,
                "kind": row.kind,
                "median": row.median,
                "mean": row.mean,
                "sd": row.sd,
                "n": row.n,
                "category": verdict.category,
                "convention": verdict.convention,
                "witness": list(verdict.witness) if verdict.witness else None,
                "distance": verdict.distance,
                "note": verdict.note,
            }
        )
    return json.dumps(payload, indent=2, sort_keys=True)
