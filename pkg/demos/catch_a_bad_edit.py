"""Show the validator catching unsafe step orderings.

A training author swapping two steps, or dropping the pressure check,
gets told exactly which steps break which rule.  The second half counts
how many orderings of a five-step removal slice would have been safe at
all: one, out of 120.
"""

import math
from dataclasses import replace
from pathlib import Path

from maintrain import enumerate_valid_orders, parse_lesson, parse_model, validate_lesson

CORPUS = Path(__file__).resolve().parent.parent / "corpus"

PERTURBED = (
    "swapped_electrical_first.lesson",
    "swapped_mechanical_first.lesson",
    "missing_verify.lesson",
)


def main():
    model = parse_model((CORPUS / "xppu.plant").read_text())
    lesson = parse_lesson((CORPUS / "replace_pickalpha.lesson").read_text(), model)

    report = validate_lesson(lesson, model)
    print(f"{lesson.id}: {len(report.violations)} violations")

    for name in PERTURBED:
        broken = parse_lesson((CORPUS / name).read_text(), model)
        for violation in validate_lesson(broken, model).violations:
            print(f"{name}")
            print(f"    {violation.rule}")
            print(f"    {violation.detail}")

    # every ordering of the first five removal steps, checked exhaustively
    kept = [s for s in lesson.steps if s.index in (1, 2, 4, 6, 7)]
    sliced = tuple(replace(s, index=i) for i, s in enumerate(kept, start=1))
    result = enumerate_valid_orders(sliced, model, lesson.constraints)
    space = math.factorial(len(sliced))
    print(f"\nremoval slice: {result.count} safe ordering(s) out of {space}")
    for order in result.sample:
        names = " -> ".join(sliced[i - 1].op_class for i in order)
        print(f"    {names}")


if __name__ == "__main__":
    main()
