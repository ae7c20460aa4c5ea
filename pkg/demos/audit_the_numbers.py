"""Audit the shipped questionnaire tables for arithmetic feasibility.

Every printed (median, mean, sd, n) row is checked against brute-forced
integer response sets on the 1..6 scale.  Rows that only work with the
median and mean columns exchanged, and rows no response set can produce
at all, are listed with witnesses or distances.
"""

from collections import Counter
from pathlib import Path

from maintrain import audit_tables, load_table_rows, render_audit_lines

CORPUS = Path(__file__).resolve().parent.parent / "corpus"


def main():
    rows = load_table_rows(str(CORPUS / "reported_tables.jsonl"))
    results = audit_tables(rows)

    tally = Counter(verdict.category for _, verdict in results)
    print(f"{len(results)} printed rows:", dict(sorted(tally.items())))
    print()

    flagged = [
        (row, verdict)
        for row, verdict in results
        if verdict.category not in ("ok", "skipped")
    ]
    for line in render_audit_lines(flagged):
        print(line)


if __name__ == "__main__":
    main()
