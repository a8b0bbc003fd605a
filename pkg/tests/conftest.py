"""Collects the acceptance verdict lines and prints them after the run."""
import pytest

ACCEPTANCE = {}


@pytest.fixture
def record():
    def _record(k: int, status: str, detail: str):
        ACCEPTANCE[k] = (status, detail)
        print(f"ACCEPTANCE {k}: {status}  {detail}")
    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        status, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {status:4s}  {detail}")
