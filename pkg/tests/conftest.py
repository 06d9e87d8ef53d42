import numpy as np
import pytest

from reyesi.statistic import reyes_i, upper_bound

# Every (I_a, bound) pair checked anywhere in the suite; the acceptance
# summary reports the total alongside the Case-1 saturation check.
BOUND_AUDIT = {"checked": 0, "violations": 0}
# criterion number -> (passed, detail); filled by tests/test_acceptance.py
ACCEPTANCE = {}


def audit_bound(sample, w):
    """Compute I_a and its bound, record the pair, and assert the bound."""
    value, bound = reyes_i(sample, w), upper_bound(sample, w)
    record_bound(value, bound)
    assert abs(value) <= bound + 1e-10, (value, bound)
    return value, bound


def record_bound(value, bound):
    BOUND_AUDIT["checked"] += 1
    if abs(value) > bound + 1e-10:
        BOUND_AUDIT["violations"] += 1


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_compositions(rng, n, D, spread=1.0):
    return np.exp(rng.normal(scale=spread, size=(n, D)))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[k]
        if k == 2:
            passed = passed and BOUND_AUDIT["violations"] == 0
            detail += f"; suite-wide bound audit {BOUND_AUDIT['checked']} samples, {BOUND_AUDIT['violations']} violations"
        tr.write_line(f"criterion {k}: {'PASS' if passed else 'FAIL'}  {detail}")
