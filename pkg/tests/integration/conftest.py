"""Pytest configuration for the corpus-scale acceptance tests.

Every test under this directory is marked ``integration`` and ``slow`` so
that ``pytest -m "not slow"`` keeps the unit run quick. Counts that the
tests tolerate rather than fail on (attribution-ambiguous runs, truncated
games) are collected in ``TOLERATED`` and printed at the end of the run.
"""

from __future__ import annotations

import random
from collections import Counter
from typing import Any

import pytest

from apitc.generate import random_well_typed
from apitc.syntax import Config

TOLERATED: Counter[str] = Counter()


def pytest_collection_modifyitems(
    config: pytest.Config,  # noqa: ARG001
    items: list[pytest.Item],
) -> None:
    """Mark every test in this directory as a slow integration test."""
    for item in items:
        if "tests/integration" in str(item.fspath):
            item.add_marker(pytest.mark.integration)
            item.add_marker(pytest.mark.slow)


def pytest_terminal_summary(
    terminalreporter: Any,
    exitstatus: int,  # noqa: ARG001
    config: pytest.Config,  # noqa: ARG001
) -> None:
    """Report tolerated counts from the acceptance run."""
    if not TOLERATED:
        return
    terminalreporter.write_sep("=", "apitc acceptance tolerances")
    for key, count in sorted(TOLERATED.items()):
        terminalreporter.write_line(f"  {key}: {count}")


@pytest.fixture(scope="module")
def corpus() -> list[Config]:
    """A fixed corpus of small well-typed configurations."""
    rng = random.Random(2024)
    return [random_well_typed(rng, 2) for _ in range(200)]
