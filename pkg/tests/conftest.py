from contextlib import contextmanager

import pytest

_ACCEPTANCE: dict[int, tuple[str, str, str]] = {}


@pytest.fixture
def criterion():
    """Context manager recording one acceptance criterion as PASS or FAIL."""

    @contextmanager
    def record(number: int, title: str):
        notes: list[str] = []
        try:
            yield notes
        except BaseException:
            _ACCEPTANCE[number] = ("FAIL", title, "; ".join(notes))
            raise
        _ACCEPTANCE[number] = ("PASS", title, "; ".join(notes))

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        verdict, title, notes = _ACCEPTANCE[number]
        line = f"[{verdict}] {number}. {title}"
        terminalreporter.write_line(f"{line} ({notes})" if notes else line)
