"""Pytest configuration and shared fixtures."""

import os
from unittest import mock

import pytest

from apitc.lts import Bounds
from apitc.parser import parse_definitions

DIVERGE = "def Diverge(x) = x?(u).(x!u | Diverge<x;>)"


@pytest.fixture
def diverge_defs():
    """The looping behaviour that re-sends to itself forever."""
    return parse_definitions(DIVERGE)


@pytest.fixture
def small_bounds():
    """Bounds small enough for exhaustive exploration in unit tests."""
    return Bounds(max_depth=4, max_states=2000)


@pytest.fixture
def clean_env():
    """Run a test without any APITC_* variables from the outer environment."""
    env = {k: v for k, v in os.environ.items() if not k.upper().startswith("APITC_")}
    with mock.patch.dict(os.environ, env, clear=True):
        yield


@pytest.fixture
def write_file(tmp_path):
    """Write text into a file under the test's temporary directory."""

    def write(name: str, text: str):
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path

    return write
