"""Command line front end.

Exit codes follow one rule everywhere: 0 clean, 1 negative result on
valid input (violations found, audit flagged rows, replay divergence),
2 unusable input or usage error.  Machine-readable output goes to
stdout, diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

from .evaluation import (
    DEFAULT_TOLERANCES,
    audit_as_json,
    audit_tables,
    compare_reported_means,
    descriptive_stats,
    load_recall_records,
    load_responses,
    load_table_rows,
    render_audit_lines,
    score_recall,
)
from .model import PlantModel, initial_state
from .procedure import Lesson, StepFault, state_at, step_annotation, validate_lesson
from .render import RenderSpec, render_dot, render_svg
from .server import replay_log, serve
from .textformat import ParseError, parse_lesson, parse_model


def _read(path: str) -> str:
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _load_model(path: str) -> PlantModel:
    return parse_model(_read(path))


def _load_lesson(path: str, model: PlantModel) -> Lesson:
    return parse_lesson(_read(path), model)


def _complain(err: Exception) -> int:
    if isinstance(err, ParseError):
        for fault in err.faults:
            print(fault, file=sys.stderr)
    else:
        print(err, file=sys.stderr)
    return 2


def _cmd_validate(args: argparse.Namespace) -> int:
    try:
        model = _load_model(args.model)
    except (OSError, ParseError) as err:
        return _complain(err)
    if args.lesson is None:
        print(
            f"model {model.id} ok, {len(model.blocks)} blocks, "
            f"{len(model.connections)} connections"
        )
        return 0
    try:
        lesson = _load_lesson(args.lesson, model)
    except (OSError, ParseError) as err:
        return _complain(err)
    report = validate_lesson(lesson, model)
    for violation in report.violations:
        indices = ",".join(str(i) for i in violation.step_indices)
        print(f"violation {violation.rule}: steps {indices}")
    for fault in report.op_faults:
        print(f"op-fault step {fault.step_index} {fault.code}: {fault.detail}")
    print(f"{len(report.violations)} violations, {len(lesson.steps)} steps")
    return 0 if report.is_clean() else 1


def _cmd_render(args: argparse.Namespace) -> int:
    try:
        model = _load_model(args.model)
    except (OSError, ParseError) as err:
        return _complain(err)
    annotation = None
    if args.lesson is not None:
        try:
            lesson = _load_lesson(args.lesson, model)
        except (OSError, ParseError) as err:
            return _complain(err)
        step = args.step if args.step is not None else 0
        if not 0 <= step <= len(lesson.steps):
            print(f"unknown step {step}", file=sys.stderr)
            return 2
        try:
            state = state_at(lesson, model, step)
        except StepFault as err:
            print(err.report(), file=sys.stderr)
            return 1
        if step >= 1:
            annotation = step_annotation(lesson, step)
    elif args.step is not None:
        print("--step needs --lesson", file=sys.stderr)
        return 2
    else:
        state = initial_state(model)
    spec = RenderSpec(state=state, model=model, annotation=annotation)
    output = render_svg(spec) if args.format == "svg" else render_dot(spec)
    if args.out == "-":
        sys.stdout.write(output)
    else:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(output)
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    if args.time_limit is not None and args.time_limit < 0:
        print("serve: time limit must not be negative", file=sys.stderr)
        return 2
    return serve(
        model_path=args.model,
        lesson_path=args.lesson,
        log_path=args.log,
        listen=args.listen,
        http=args.http,
        time_limit=None if args.time_limit == 0 else args.time_limit,
        session_id=args.session_id,
    )


def _cmd_replay(args: argparse.Namespace) -> int:
    return replay_log(args.log)


def _cmd_score(args: argparse.Namespace) -> int:
    if args.recall is None and args.responses is None:
        print("score: nothing to do, pass --recall or --responses", file=sys.stderr)
        return 2
    code = 0
    if args.recall is not None:
        try:
            records = load_recall_records(args.recall)
        except (OSError, ValueError) as err:
            return _complain(err)
        if args.lesson is not None:
            try:
                model = _load_model(args.model) if args.model else None
            except (OSError, ParseError) as err:
                return _complain(err)
            if model is None:
                print("score: --lesson needs --model", file=sys.stderr)
                return 2
            try:
                lesson = _load_lesson(args.lesson, model)
            except (OSError, ParseError) as err:
                return _complain(err)
            expected = len(lesson.steps)
            for record in records:
                if record.per_step and len(record.per_step) != expected:
                    print(
                        f"score: {record.participant} has {len(record.per_step)} "
                        f"per-step entries, lesson has {expected} steps",
                        file=sys.stderr,
                    )
                    code = 1
        scores = score_recall(records)
        for group, score in scores.items():
            print(
                f"{group}: n={score.n} total={score.total_errors} "
                f"mean={score.mean_errors:g}"
            )
        if args.reported is not None:
            try:
                rows = load_table_rows(args.reported)
            except (OSError, ValueError) as err:
                return _complain(err)
            notes = compare_reported_means(scores, rows)
            for note in notes:
                print(f"mismatch: {note}")
            if notes:
                code = 1
    if args.responses is not None:
        try:
            responses = load_responses(args.responses)
        except (OSError, ValueError) as err:
            return _complain(err)
        grouped: dict[tuple[str, str], list[int]] = {}
        for response in responses:
            grouped.setdefault((response.item, response.group), []).append(response.score)
        for item, group in sorted(grouped):
            stats = descriptive_stats(grouped[(item, group)], args.convention)
            print(
                f"{group} {item!r}: median {stats.median:g} mean {stats.mean:g} "
                f"sd {stats.sd:g} n {stats.n}"
            )
    return code


def _cmd_audit(args: argparse.Namespace) -> int:
    try:
        rows = load_table_rows(args.tables)
    except (OSError, ValueError) as err:
        return _complain(err)
    results = audit_tables(rows, DEFAULT_TOLERANCES)
    if args.json:
        print(audit_as_json(results))
    else:
        for line in render_audit_lines(results):
            print(line)
    flagged = sum(
        1 for _row, verdict in results if verdict.category not in ("ok", "skipped")
    )
    return 1 if flagged else 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="maintrain",
        description="validate, render, and serve maintenance training lessons",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a model, or a lesson against it")
    p.add_argument("--model", required=True)
    p.add_argument("--lesson")
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("render", help="draw the plant at a step")
    p.add_argument("--model", required=True)
    p.add_argument("--lesson")
    p.add_argument("--step", type=int)
    p.add_argument("--format", choices=("svg", "dot"), default="svg")
    p.add_argument("--out", default="-")
    p.set_defaults(func=_cmd_render)

    p = sub.add_parser("serve", help="run one training session")
    p.add_argument("--model", required=True)
    p.add_argument("--lesson", required=True)
    p.add_argument("--listen", default="127.0.0.1:0", help="tcp endpoint or none")
    p.add_argument("--http", default="127.0.0.1:0", help="http endpoint or none")
    p.add_argument("--time-limit", type=float, default=300.0, help="seconds, 0 = none")
    p.add_argument("--log", default="session.log.jsonl")
    p.add_argument("--session-id")
    p.set_defaults(func=_cmd_serve)

    p = sub.add_parser("replay", help="verify a session log reproduces itself")
    p.add_argument("log")
    p.set_defaults(func=_cmd_replay)

    p = sub.add_parser("score", help="recall scores and questionnaire stats")
    p.add_argument("--recall")
    p.add_argument("--responses")
    p.add_argument("--reported")
    p.add_argument("--model")
    p.add_argument("--lesson")
    p.add_argument("--convention", choices=("population", "sample"), default="population")
    p.set_defaults(func=_cmd_score)

    p = sub.add_parser("audit", help="feasibility audit of printed summary tables")
    p.add_argument("--tables", required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_audit)

    return parser


def dispatch(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    return args.func(args)


def main() -> None:
    raise SystemExit(dispatch(sys.argv[1:]))
