import os
import sys

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile(
    "ggt",
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile("ggt")

ACCEPTANCE_FILE = "test_acceptance.py"


def pytest_collection_modifyitems(config, items):
    # acceptance runs last so the honesty check sees every oracle answer
    items.sort(key=lambda item: item.fspath.basename == ACCEPTANCE_FILE)


def pytest_configure(config):
    config._ggt_acceptance = {}


@pytest.fixture
def criterion(request):
    """Record a pass/fail line for an acceptance criterion."""
    results = request.config._ggt_acceptance

    def record(name, ok, detail=""):
        results[name] = (bool(ok), detail)
        line = f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}"
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = getattr(config, "_ggt_acceptance", {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for name, (ok, detail) in results.items():
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
