from __future__ import annotations

import pytest

from osow.generators import reuse_ex, sr_ex

# Acceptance lines collected by tests/test_acceptance.py, printed at the end.
ACCEPTANCE: dict[str, str] = {}


@pytest.fixture
def sr():
    return sr_ex()


@pytest.fixture
def reuse():
    return reuse_ex()


def pick(inst, *ids):
    return frozenset(inst.by_id[x] for x in ids)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: int(k[1:])):
        terminalreporter.write_line(ACCEPTANCE[key])
