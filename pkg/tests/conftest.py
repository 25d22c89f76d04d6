import logging

import pytest
from hypothesis import HealthCheck, settings

logging.getLogger("darkcat").setLevel(logging.ERROR)

settings.register_profile("default", deadline=None, max_examples=25,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


_LINES = []


@pytest.fixture
def report():
    """Record one PASS/FAIL line for an acceptance criterion; echoed in the terminal summary."""
    def _report(tag: str, ok: bool, detail: str) -> bool:
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {tag}: {detail}"
        print(line)
        _LINES.append(line)
        return ok
    return _report


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in _LINES:
            terminalreporter.write_line(line)
