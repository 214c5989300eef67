import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

# (criterion, passed, detail) lines collected by tests/test_acceptance.py
ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance_log():
    return ACCEPTANCE_LINES


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    by_id = {}
    for crit, passed, detail in ACCEPTANCE_LINES:
        by_id.setdefault(crit, []).append((passed, detail))
    for crit in sorted(by_id, key=lambda c: int(c.split()[0][2:])):
        entries = by_id[crit]
        status = "PASS" if all(p for p, _ in entries) else "FAIL"
        details = "; ".join(d for _, d in entries)
        terminalreporter.write_line(f"{status}  {crit}: {details}")
