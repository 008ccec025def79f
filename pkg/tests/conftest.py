"""Shared fixtures plus a terminal section listing acceptance gate results."""

import pytest

_CRITERIA: list[tuple[str, bool, str]] = []


def _record(criterion_id: str, passed: bool, detail: str) -> None:
    _CRITERIA.append((criterion_id, passed, detail))


@pytest.fixture(scope="session")
def criteria():
    """Callable (id, passed, detail) collecting gate outcomes for the summary."""
    return _record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance gates")
    for cid, ok, detail in sorted(_CRITERIA):
        terminalreporter.write_line(f"[{cid}] {'PASS' if ok else 'FAIL'} - {detail}")
