"""MCP tool implementations for the apitc workbench.

Tools are organized by category:

- workbench: typing, transition systems, traces and simulation
- equivalence: bisimilarity, rewriting and the law report
"""

from collections.abc import Callable
from typing import Any

from apitc.config import WorkbenchConfig
from apitc.tools.equivalence import register_equivalence_tools
from apitc.tools.workbench import register_workbench_tools

__all__ = [
    "register_all_tools",
    "register_equivalence_tools",
    "register_workbench_tools",
]


def register_all_tools(mcp: Any, get_config: Callable[[], WorkbenchConfig]) -> None:
    """Register all workbench tools with the MCP server.

    Args:
        mcp: The FastMCP instance (Any due to lack of stubs).
        get_config: Function returning the active workbench configuration.
    """
    register_workbench_tools(mcp, get_config)
    register_equivalence_tools(mcp, get_config)
