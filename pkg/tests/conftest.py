"""Collects one pass/fail line per acceptance criterion and prints them after the run."""
from __future__ import annotations

import contextlib

ACCEPTANCE: dict[int, tuple[str, str]] = {}


@contextlib.contextmanager
def criterion(number: int, title: str):
    ACCEPTANCE[number] = ("FAIL", title)
    yield
    ACCEPTANCE[number] = ("PASS", title)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        status, title = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {status}  {title}")
