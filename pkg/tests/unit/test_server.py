"""Tests for the main server module."""

from unittest.mock import patch

import pytest

from apitc.config import WorkbenchConfig


class TestGetWorkbenchConfig:
    """Tests for get_workbench_config function."""

    def test_falls_back_to_environment(self, clean_env):
        """Without run_server the config comes from the environment."""
        import apitc.server as server_module

        original = server_module._config
        try:
            server_module._config = None
            with patch.dict("os.environ", {"APITC_MAX_DEPTH": "3"}):
                config = server_module.get_workbench_config()
            assert config.max_depth == 3
        finally:
            server_module._config = original

    def test_returns_config_set_by_server(self):
        """A config installed by run_server is returned unchanged."""
        import apitc.server as server_module

        original = server_module._config
        try:
            installed = WorkbenchConfig(max_states=42)
            server_module._config = installed
            assert server_module.get_workbench_config() is installed
        finally:
            server_module._config = original


class TestRunServer:
    """Tests for run_server function."""

    def test_installs_config_and_runs(self):
        """run_server should install the config before starting the transport."""
        import apitc.server as server_module

        original = server_module._config
        config = WorkbenchConfig(max_depth=5)
        try:
            with patch.object(server_module.mcp, "run") as run:
                server_module.run_server(config)
            run.assert_called_once_with()
            assert server_module._config is config
        finally:
            server_module._config = original


class TestLifespan:
    """Tests for the server lifespan."""

    @pytest.mark.asyncio
    async def test_lifespan_yields(self):
        """The lifespan context should enter and exit cleanly."""
        from apitc.server import lifespan, mcp

        async with lifespan(mcp) as value:
            assert value is None


class TestRegisterAllComponents:
    """Tests for register_all_components."""

    def test_registers_tools_and_resources(self):
        """Both registration hooks receive the server and the config getter."""
        import apitc.server as server_module

        with (
            patch("apitc.tools.register_all_tools") as tools,
            patch("apitc.resources.register_resources") as resources,
        ):
            server_module.register_all_components()

        tools.assert_called_once_with(server_module.mcp, server_module.get_workbench_config)
        resources.assert_called_once_with(server_module.mcp, server_module.get_workbench_config)
