import re

import numpy as np
import pytest

from tbaudit.base import builtin_metric
from tbaudit.sampling import sample_bundle_points

# the four metrics most checks run on
CORE_METRICS = [
    ("euclidean", [2]),
    ("sphere", [1]),
    ("hyperbolic_half_plane", []),
    ("flat_torus", [2]),
]


def metric_id(entry):
    name, params = entry
    return f"{name}{params}" if params else name


@pytest.fixture(params=CORE_METRICS, ids=metric_id)
def core_metric(request):
    name, params = request.param
    return builtin_metric(name, params)


def points(m, count=6, seed=3, y_max=3.0):
    return sample_bundle_points(m, count, seed, y_max)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# -- acceptance summary: one pass/fail line per criterion -------------------------------
_CRITERION = re.compile(r"test_criterion_(\d+)")
_outcomes: dict[int, list[bool]] = {}
_details: dict[int, list[str]] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance" not in report.nodeid:
        return
    match = _CRITERION.search(report.nodeid)
    if not match:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        k = int(match.group(1))
        _outcomes.setdefault(k, []).append(report.outcome == "passed")
        _details.setdefault(k, []).extend(
            ln for ln in report.capstdout.splitlines() if ln.startswith("criterion")
        )


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_outcomes):
        ok = all(_outcomes[k])
        terminalreporter.write_line(f"criterion {k:>2}: {'PASS' if ok else 'FAIL'}")
        for detail in _details.get(k, []):
            terminalreporter.write_line(f"    {detail}")
