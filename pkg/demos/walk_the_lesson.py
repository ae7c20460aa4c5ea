"""Fold the corpus lesson step by step and show what each step changes.

Writes the step-3 diagram (valve highlighted, air line marked for removal)
next to this script as walk_step3.svg.
"""

from pathlib import Path

from maintrain import (
    RenderSpec,
    diff_states,
    parse_lesson,
    parse_model,
    render_svg,
    state_at,
    step_annotation,
)

CORPUS = Path(__file__).resolve().parent.parent / "corpus"


def describe(change):
    conn_lines = [
        f"    {cid}: {before.value} -> {after.value}"
        for cid, before, after in change.connection_changes
    ]
    obs_lines = [
        f"    {name}: {before:g} -> {after:g}"
        for name, before, after in change.observable_changes
    ]
    return conn_lines + obs_lines or ["    (verification only, nothing changes)"]


def main():
    model = parse_model((CORPUS / "xppu.plant").read_text(), file="xppu.plant")
    lesson = parse_lesson(
        (CORPUS / "replace_pickalpha.lesson").read_text(), model,
        file="replace_pickalpha.lesson",
    )

    print(f"{lesson.id}: {len(lesson.steps)} steps on model {model.id}")
    for step in lesson.steps:
        before = state_at(lesson, model, step.index - 1)
        after = state_at(lesson, model, step.index)
        print(f"step {step.index:2} [{step.op_class}] {step.instruction}")
        for line in describe(diff_states(before, after)):
            print(line)

    spec = RenderSpec(
        state=state_at(lesson, model, 3),
        model=model,
        annotation=step_annotation(lesson, 3),
    )
    out = Path(__file__).with_name("walk_step3.svg")
    out.write_text(render_svg(spec))
    print(f"\nstep-3 diagram written to {out.name}")


if __name__ == "__main__":
    main()
