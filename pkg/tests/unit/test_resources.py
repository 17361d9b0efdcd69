"""Tests for apitc MCP resources."""

import json
from collections.abc import Callable
from typing import Any
from unittest.mock import MagicMock

import pytest

from apitc.config import WorkbenchConfig


class TestWorkbenchResources:
    """Tests for workbench resources."""

    @pytest.fixture
    def mock_mcp(self) -> MagicMock:
        """Create a mock MCP server that captures resource registrations."""
        mcp = MagicMock()
        mcp._registered_resources = {}

        def resource_decorator(
            uri: str,
        ) -> Callable[[Callable[..., Any]], Callable[..., Any]]:
            def wrapper(func: Callable[..., Any]) -> Callable[..., Any]:
                mcp._registered_resources[uri] = func
                return func

            return wrapper

        mcp.resource = resource_decorator
        return mcp

    @pytest.fixture
    def register_resources(self, mock_mcp: MagicMock) -> dict[str, Callable[..., Any]]:
        """Register resources and return the registered functions."""
        from apitc.resources import register_resources

        register_resources(mock_mcp, lambda: WorkbenchConfig(max_depth=3, seed=9))
        return mock_mcp._registered_resources

    def test_registered_uris(self, register_resources):
        """All workbench resources should be registered."""
        assert set(register_resources) == {"apitc://axioms", "apitc://axioms/{axiom_id}", "apitc://config"}

    @pytest.mark.asyncio
    async def test_axioms(self, register_resources):
        """apitc://axioms should list all twenty laws."""
        laws = json.loads(await register_resources["apitc://axioms"]())

        assert [law["id"] for law in laws] == [f"A{i}" for i in range(1, 21)]
        assert laws[12]["note"] is not None

    @pytest.mark.asyncio
    async def test_single_axiom(self, register_resources):
        """A law can be looked up case-insensitively."""
        law = json.loads(await register_resources["apitc://axioms/{axiom_id}"]("a9"))

        assert law["id"] == "A9"
        assert law["statement"].startswith("nu x.")

    @pytest.mark.asyncio
    async def test_unknown_axiom(self, register_resources):
        """Unknown ids should return an error object."""
        result = json.loads(await register_resources["apitc://axioms/{axiom_id}"]("A99"))

        assert "error" in result

    @pytest.mark.asyncio
    async def test_config(self, register_resources):
        """apitc://config should show the active configuration."""
        config = json.loads(await register_resources["apitc://config"]())

        assert config["max_depth"] == 3
        assert config["seed"] == 9
