import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture
def unit_interval_10():
    from fuzzycausal.fuzzy_core import Universe

    return Universe.interval(0.0, 10.0)


@pytest.fixture
def low_high(unit_interval_10):
    from fuzzycausal.fuzzy_core import AttributePair, FuzzyAttribute, Triangular

    u = unit_interval_10
    return AttributePair(FuzzyAttribute("low", u, Triangular(0, 0, 5)),
                         FuzzyAttribute("high", u, Triangular(5, 10, 10)))


def linear_curve(beta, a=0.0, b=10.0, intercept=0.0, points=101):
    from fuzzycausal.scm import OutcomeCurve

    t = np.linspace(a, b, points)
    return OutcomeCurve(t, intercept + beta * t)


# --- acceptance reporting ---------------------------------------------------------------
# Sub-checks register under a criterion number; the terminal summary prints one
# line per criterion.  Criterion 9 is judged from the whole session.

import time
from collections import defaultdict

SUITE_BUDGET_S = 300.0
_checks: dict[int, list[tuple[str, bool, str]]] = defaultdict(list)
_state = {"start": time.perf_counter(), "property_failures": 0, "property_tests": 0}


@pytest.fixture
def criterion():
    def record(number: int, name: str, ok: bool, detail: str = "") -> None:
        _checks[number].append((name, bool(ok), detail))
        print(f"[criterion {number}] {name}: {'PASS' if ok else 'FAIL'} {detail}")
        assert ok, f"criterion {number} / {name}: {detail}"

    return record


def pytest_runtest_logreport(report):
    if report.when != "call" or "test_acceptance" in report.nodeid:
        return
    _state["property_tests"] += 1
    if report.failed:
        _state["property_failures"] += 1


def pytest_terminal_summary(terminalreporter):
    if not _checks:
        return
    elapsed = time.perf_counter() - _state["start"]
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(_checks):
        checks = _checks[number]
        ok = all(c[1] for c in checks)
        failed = [f"{n} ({d})" for n, good, d in checks if not good]
        tail = f"{len(checks)} checks" if ok else "failed: " + "; ".join(failed)
        tr.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {tail}")
    n_prop, n_bad = _state["property_tests"], _state["property_failures"]
    if n_prop == 0:
        tr.write_line("criterion 9: not assessed (run the whole suite)")
        return
    ok9 = elapsed < SUITE_BUDGET_S and n_bad == 0 and n_prop > 0
    tr.write_line(f"criterion 9: {'PASS' if ok9 else 'FAIL'}  {n_prop} property/unit tests, "
                  f"{n_bad} failing, session {elapsed:.1f} s (budget {SUITE_BUDGET_S:.0f} s)")
