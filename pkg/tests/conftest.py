"""Shared test plumbing: refimpl import path and the acceptance summary."""

from __future__ import annotations

import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

ACCEPTANCE_LINES: list[tuple[bool, str]] = []


def record_check(ok: bool, text: str) -> None:
    """Collect one acceptance line; printed live and again in the summary."""
    ACCEPTANCE_LINES.append((bool(ok), text))
    print(("[PASS] " if ok else "[FAIL] ") + text)


@pytest.hookimpl(trylast=True)
def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.write_sep("-", "acceptance checks")
    for ok, text in ACCEPTANCE_LINES:
        terminalreporter.write_line(("PASS  " if ok else "FAIL  ") + text)
