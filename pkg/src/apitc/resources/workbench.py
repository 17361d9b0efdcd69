"""Read-only workbench data exposed as MCP resources."""

import json
from collections.abc import Callable
from typing import Any

from apitc.config import WorkbenchConfig
from apitc.laws import AXIOMS, LEDGER_NOTES


def register_resources(mcp: Any, get_config: Callable[[], WorkbenchConfig]) -> None:
    """Register workbench resources with the MCP server.

    Args:
        mcp: The FastMCP instance.
        get_config: Function returning the active workbench configuration.
    """

    @mcp.resource("apitc://axioms")
    async def resource_axioms() -> str:
        """List every law.

        Returns:
            JSON string containing a list of laws, each with:
                - id: Law identifier (A1 to A20)
                - statement: The law as usually written
                - lhs, rhs: Patterns used for matching
                - side_conditions: Conditions an instance must meet
                - note: Known reason for negative verdicts, if any
        """
        laws = [{**schema.to_json(), "note": LEDGER_NOTES.get(schema.id)} for schema in AXIOMS.values()]
        return json.dumps(laws, indent=2)

    @mcp.resource("apitc://axioms/{axiom_id}")
    async def resource_axiom(axiom_id: str) -> str:
        """Get one law by identifier."""
        schema = AXIOMS.get(axiom_id.upper())
        if schema is None:
            return json.dumps({"error": f"unknown axiom {axiom_id}"})
        return json.dumps({**schema.to_json(), "note": LEDGER_NOTES.get(schema.id)}, indent=2)

    @mcp.resource("apitc://config")
    async def resource_config() -> str:
        """Get the active workbench configuration as JSON."""
        return get_config().model_dump_json(indent=2)
