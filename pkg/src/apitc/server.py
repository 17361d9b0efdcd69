"""apitc MCP server.

Exposes the workbench to MCP clients: typing, transition systems, traces,
fair simulation, bisimilarity and the law report as tools, and the laws
and active configuration as resources.

Example:
    Start on stdio through the command line::

        $ apitc serve

    With environment variables::

        $ APITC_MAX_DEPTH=4 APITC_LOG_LEVEL=INFO apitc serve
"""

import logging
from collections.abc import AsyncIterator
from contextlib import asynccontextmanager

from mcp.server.fastmcp import FastMCP

from apitc.config import WorkbenchConfig, get_config

logger = logging.getLogger(__name__)

# Set by run_server; tools fall back to the environment otherwise
_config: WorkbenchConfig | None = None


def get_workbench_config() -> WorkbenchConfig:
    """Get the configuration the server was started with.

    Returns:
        The active WorkbenchConfig.
    """
    global _config
    if _config is None:
        _config = get_config()
    return _config


@asynccontextmanager
async def lifespan(_server: FastMCP) -> AsyncIterator[None]:
    """Log the bounds in force for the lifetime of the server.

    Args:
        _server: The FastMCP server instance (unused).

    Yields:
        None.
    """
    config = get_workbench_config()
    logger.info(
        "Workbench ready (max_depth=%d, max_states=%d, fair_window=%d)",
        config.max_depth,
        config.max_states,
        config.fair_window,
    )
    try:
        yield
    finally:
        logger.info("Workbench shutting down")


mcp = FastMCP(
    name="apitc",
    lifespan=lifespan,
)


def register_all_components() -> None:
    """Register all MCP components (tools and resources)."""
    from apitc.tools import register_all_tools

    register_all_tools(mcp, get_workbench_config)

    from apitc.resources import register_resources

    register_resources(mcp, get_workbench_config)


register_all_components()


def run_server(config: WorkbenchConfig) -> None:
    """Serve the workbench on stdio until the client disconnects.

    Args:
        config: Configuration used by every tool call.
    """
    global _config
    _config = config
    logger.info("Starting stdio transport")
    mcp.run()
