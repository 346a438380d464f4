"""Shared test fixtures, plus the acceptance-criterion result banner."""

import pytest

_RESULTS: list[tuple[int, str, bool, str]] = []


@pytest.fixture
def criterion():
    """Record a one-line verdict for an acceptance criterion.

    Tests call record(number, description, ok, detail) before asserting, so
    the banner shows a line for every criterion that ran, pass or fail.
    """

    def record(number: int, description: str, ok: bool, detail: str) -> None:
        _RESULTS.append((number, description, bool(ok), detail))

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, description, ok, detail in sorted(_RESULTS):
        verdict = "PASS" if ok else "FAIL"
        terminalreporter.write_line(
            f"criterion {number:2d} {verdict}  {description}: {detail}"
        )
