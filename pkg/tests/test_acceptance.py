"""Acceptance criteria, one line each.

Run under pytest (lines go straight to the terminal) or directly with
``python tests/test_acceptance.py``.
"""
import sys

import pytest

from sublinear_minkowski import config
from sublinear_minkowski.checks import run_suite

CRITERIA = [
    (1, "disk oracle agreement (sup error, flux uniformity, runtime)", "disk"),
    (2, "energy identity on disk, square and 20 random bodies", "identity"),
    (3, "scaling laws F ratio 256 and mass ratio 128 at t=2", "scaling"),
    (4, "comparison principle on 50 nested pairs", "comparison"),
    (5, "continuity of F over inscribed n-gons", "continuity"),
    (6, "weak continuity of pairings over n = 8..128", "weak"),
    (7, "first variation and Euler identity", "variation"),
    (8, "Minkowski round trip (square, disk, wall time)", "roundtrip"),
    (9, "isoperimetric inequality on 100 random bodies and the disk", "iso"),
    (10, "necessary centroid condition and target rejection", "necessary"),
]


def evaluate(suite: str):
    checks = run_suite(suite, config.solver_config())
    return all(c.passed for c in checks), checks


def criterion_line(number, title, ok, checks) -> str:
    head = f"{'PASS' if ok else 'FAIL'} criterion {number}: {title}"
    return "\n".join([head] + ["    " + c.line() for c in checks])


@pytest.mark.parametrize("number,title,suite", CRITERIA, ids=[c[2] for c in CRITERIA])
def test_criterion(number, title, suite, capsys):
    ok, checks = evaluate(suite)
    with capsys.disabled():
        print("\n" + criterion_line(number, title, ok, checks))
    assert ok, [c.line() for c in checks if not c.passed]


if __name__ == "__main__":
    failed = 0
    for number, title, suite in CRITERIA:
        ok, checks = evaluate(suite)
        failed += not ok
        print(criterion_line(number, title, ok, checks), flush=True)
    sys.exit(1 if failed else 0)
