"""Workbench tools for the apitc MCP server.

This module exposes the analysis side of the workbench: typing,
transition systems, event structures, trace checking and fair
simulation. Every tool takes source text in the concrete syntax
(optionally preceded by ``def`` lines) and returns JSON-ready data.

Tools that explore state spaces run in a worker thread.
"""

import asyncio
from collections.abc import Callable
from typing import Any

from apitc.config import WorkbenchConfig
from apitc.errors import ApitcError, TypingError
from apitc.events import unfold_to_pes
from apitc.lts import Bounds, build_lts
from apitc.parser import parse_module, parse_trace
from apitc.syntax import Config, Definitions
from apitc.traces import check_well_formed, rcp_extend, simulate_fair
from apitc.typesystem import check_definitions, typecheck


def read_source(source: str) -> tuple[Config, Definitions]:
    """Parse tool input, turning workbench errors into ``ValueError``."""
    try:
        return parse_module(source)
    except ApitcError as e:
        msg = f"Invalid configuration: {e}"
        raise ValueError(msg) from e


def bounds_for(config: WorkbenchConfig, max_depth: int | None, max_states: int | None) -> Bounds:
    """Bounds from the server config, with per-call overrides."""
    base = Bounds.from_config(config)
    return Bounds(
        max_depth=max_depth if max_depth is not None else base.max_depth,
        max_states=max_states if max_states is not None else base.max_states,
        universe_extra=base.universe_extra,
        universe_size=base.universe_size,
    )


def register_workbench_tools(mcp: Any, get_config: Callable[[], WorkbenchConfig]) -> None:
    """Register analysis tools with the MCP server.

    Args:
        mcp: The FastMCP instance.
        get_config: Function returning the active workbench configuration.
    """

    @mcp.tool()
    async def typecheck_term(source: str) -> dict[str, Any]:
        """Typecheck a configuration.

        Args:
            source: Configuration in concrete syntax, optionally preceded
                by behaviour definitions.

        Returns:
            Dictionary containing:
                - well_typed: Whether a judgement exists
                - rho: Receptionists (when well typed)
                - f: Temporary-name map (when well typed)
                - judgement: The judgement as text
                - rule: Violated typing rule (when ill typed)
                - error: Why typing failed (when ill typed)
        """
        p, defs = read_source(source)
        try:
            check_definitions(defs)
            j = typecheck(p, defs)
        except TypingError as e:
            return {"well_typed": False, "rule": e.rule, "error": str(e)}
        return {"well_typed": True, **j.to_json(), "judgement": str(j)}

    @mcp.tool()
    async def transition_system(
        source: str,
        max_depth: int | None = None,
        max_states: int | None = None,
        output_format: str = "json",
    ) -> dict[str, Any]:
        """Explore the step-labelled transition system of a configuration.

        Args:
            source: Configuration in concrete syntax.
            max_depth: Exploration depth (default from configuration).
            max_states: State limit (default from configuration).
            output_format: "json" for states and edges, "dot" for Graphviz,
                "pes" for the unfolded event structure.

        Returns:
            Dictionary containing the requested rendering plus:
                - truncated: Whether a bound cut exploration short
        """
        if output_format not in ("json", "dot", "pes"):
            msg = f"Invalid output_format: {output_format}. Use: json, dot, pes"
            raise ValueError(msg)
        p, defs = read_source(source)
        bounds = bounds_for(get_config(), max_depth, max_states)

        def explore() -> dict[str, Any]:
            lts = build_lts(p, defs, bounds)
            if output_format == "dot":
                return {"dot": lts.to_dot(), "truncated": lts.is_truncated}
            if output_format == "pes":
                return unfold_to_pes(lts, bounds.max_depth).to_json()
            return {**lts.to_json(), "truncated": lts.is_truncated}

        return await asyncio.to_thread(explore)

    @mcp.tool()
    async def check_trace(
        source: str,
        trace: str,
        rho: list[str] | None = None,
    ) -> dict[str, Any]:
        """Check that a trace is well formed for a receptionist set.

        Args:
            source: Configuration whose typed receptionists are the default
                receptionist set.
            trace: One trace item per line, e.g. "[x] y!(x)".
            rho: Receptionist names; overrides the typed receptionists.

        Returns:
            Dictionary containing:
                - well_formed: The verdict
                - index: First offending item, if any
                - reason: Why that item is rejected
                - rho: Receptionist set used
                - rcp: Receptionist set after the whole trace
        """
        p, defs = read_source(source)
        try:
            items = parse_trace(trace)
            receptionists = frozenset(rho) if rho is not None else typecheck(p, defs).receptionists
        except ApitcError as e:
            msg = f"Invalid trace request: {e}"
            raise ValueError(msg) from e
        verdict = check_well_formed(receptionists, items)
        return {
            **verdict.to_json(),
            "rho": sorted(receptionists),
            "rcp": sorted(rcp_extend(receptionists, items)),
        }

    @mcp.tool()
    async def simulate_run(
        source: str,
        steps: int = 100,
        seed: int | None = None,
        fair_window: int | None = None,
    ) -> dict[str, Any]:
        """Run a configuration as a closed system under the fair scheduler.

        Args:
            source: Configuration in concrete syntax.
            steps: Maximum number of steps.
            seed: Scheduler seed (default from configuration).
            fair_window: Steps a deliverable message may wait (default from
                configuration).

        Returns:
            The run log: initial state, steps, stop reason and the delivery
            index of every message occurrence.
        """
        if steps < 1:
            msg = "steps must be positive"
            raise ValueError(msg)
        p, defs = read_source(source)
        config = get_config()
        log = await asyncio.to_thread(
            simulate_fair,
            p,
            defs,
            max_steps=steps,
            seed=config.seed if seed is None else seed,
            window=config.fair_window if fair_window is None else fair_window,
        )
        return log.to_json()
