import math

import numpy as np
import pytest

from hillconvex.hill_core import C0, Q2_BOUND, X_CRIT


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def region_points(rng, n, rmin=0.05):
    """n points of the open Hill region with |q| >= rmin (rejection sampling)."""
    out = []
    while len(out) < n:
        q1 = rng.uniform(-X_CRIT, X_CRIT)
        q2 = rng.uniform(-Q2_BOUND, Q2_BOUND)
        r = math.hypot(q1, q2)
        if r >= rmin and 1.5 * q1 * q1 + 1 / r > C0:
            out.append((q1, q2))
    return out


# One PASS/FAIL line per acceptance criterion, shown at the end of the run.
ACCEPTANCE_LINES: dict = {}


def record(criterion: int, ok: bool, detail: str) -> None:
    ACCEPTANCE_LINES[criterion] = f"criterion {criterion}: {'PASS' if ok else 'FAIL'}  {detail}"


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
