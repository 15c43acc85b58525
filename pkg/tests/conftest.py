"""Shared fixtures for the drcflex test suite."""

from __future__ import annotations

import pytest

from drcflex import ScenarioParams, table2_params


@pytest.fixture(scope="session")
def table2() -> ScenarioParams:
    return table2_params()
