"""Shared fixtures plus a terminal section collecting acceptance results.

Tests marked ``slow`` reproduce full publication-scale runs and are skipped
unless LEVYKLE_ACCEPTANCE_FULL=1 is set.
"""

import os

import pytest

from levykle.models import make_variance_gamma
from levykle.special import default_e1_inverse


def pytest_collection_modifyitems(config, items):
    if os.environ.get("LEVYKLE_ACCEPTANCE_FULL"):
        return
    skip = pytest.mark.skip(reason="long mode; set LEVYKLE_ACCEPTANCE_FULL=1")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


ACCEPTANCE_LINES = []


def record_acceptance(line: str) -> None:
    ACCEPTANCE_LINES.append(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def vg():
    return make_variance_gamma()


@pytest.fixture(scope="session")
def e1_table():
    return default_e1_inverse()
