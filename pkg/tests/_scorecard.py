"""Collects acceptance-criterion results for the end-of-run summary.

test_acceptance.py appends one line per criterion; conftest.py prints the
accumulated scorecard in pytest's terminal summary so it survives output
capture and shows up in any pytest invocation.
"""

LINES = []


def record(name, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}"
    LINES.append(line)
    return line
