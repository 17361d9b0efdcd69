"""Equivalence and law tools for the apitc MCP server."""

import asyncio
from collections.abc import Callable
from typing import Any

from apitc.bisim import EquivalenceKind, Mode, check_equivalence
from apitc.config import WorkbenchConfig
from apitc.errors import ApitcError
from apitc.laws import parse_axiom_selection, rewrite_step, soundness_report
from apitc.syntax import pretty_print
from apitc.tools.workbench import bounds_for, read_source


def _kind(kind: str) -> EquivalenceKind:
    try:
        return EquivalenceKind(kind)
    except ValueError as e:
        msg = f"Invalid kind: {kind}. Use: pomset, step, hp, hhp"
        raise ValueError(msg) from e


def _mode(mode: str) -> Mode:
    try:
        return Mode(mode)
    except ValueError as e:
        msg = f"Invalid mode: {mode}. Use: strong, weak"
        raise ValueError(msg) from e


def _selection(axioms: str | None) -> list[str] | None:
    return parse_axiom_selection(axioms) if axioms else None


def register_equivalence_tools(mcp: Any, get_config: Callable[[], WorkbenchConfig]) -> None:
    """Register bisimilarity and law tools with the MCP server.

    Args:
        mcp: The FastMCP instance.
        get_config: Function returning the active workbench configuration.
    """

    @mcp.tool()
    async def check_bisimilarity(
        left: str,
        right: str,
        kind: str = "step",
        mode: str = "strong",
        rho: list[str] | None = None,
        max_depth: int | None = None,
    ) -> dict[str, Any]:
        """Decide whether two configurations are bisimilar.

        Args:
            left: Left configuration (definitions allowed).
            right: Right configuration (definitions allowed).
            kind: "pomset", "step", "hp" or "hhp".
            mode: "strong" or "weak".
            rho: Receptionists; defaults to the union of both typed
                receptionist sets.
            max_depth: Exploration depth (default from configuration).

        Returns:
            Dictionary containing:
                - status: related, distinguished or inconclusive
                - rho: Receptionist set the game was played under
                - witness: Distinguishing play when distinguished
                - truncated: Whether a bound was hit
        """
        p, defs1 = read_source(left)
        q, defs2 = read_source(right)
        bounds = bounds_for(get_config(), max_depth, None)
        try:
            verdict = await asyncio.to_thread(
                check_equivalence, p, q, _kind(kind), _mode(mode), {**defs1, **defs2}, bounds, rho
            )
        except ApitcError as e:
            msg = f"Cannot compare: {e}"
            raise ValueError(msg) from e
        return verdict.to_json()

    @mcp.tool()
    async def rewrite_term(
        source: str,
        direction: str = "ltr",
        axioms: str | None = None,
        modulo_ac: bool = False,
    ) -> list[dict[str, str]]:
        """Apply each law once at every position where it matches.

        Args:
            source: Configuration in concrete syntax.
            direction: "ltr" or "rtl".
            axioms: Selection such as "A1-A5,A9"; all laws by default.
            modulo_ac: Also match up to rearranging parallel components.

        Returns:
            List of dictionaries, each containing:
                - axiom: Law identifier
                - term: The rewritten configuration
        """
        p, _ = read_source(source)
        results = rewrite_step(p, direction, _selection(axioms), modulo_ac=modulo_ac)
        return [{"axiom": schema.id, "term": pretty_print(term)} for schema, term in results]

    @mcp.tool()
    async def law_report(
        axioms: str = "A1-A20",
        kinds: list[str] | None = None,
        modes: list[str] | None = None,
        instances: int = 5,
        seed: int | None = None,
    ) -> dict[str, Any]:
        """Check the algebraic laws on generated instances.

        Args:
            axioms: Selection such as "A1-A20" or "A3,A9".
            kinds: Equivalence kinds (default ["step"]).
            modes: Modes (default ["strong"]).
            instances: Instances per law.
            seed: Instance seed (default from configuration).

        Returns:
            The soundness report: one cell per law, kind and mode with its
            verdict and instances, plus the discrepancy list.
        """
        config = get_config()
        report = await asyncio.to_thread(
            soundness_report,
            axioms=_selection(axioms),
            instances=instances,
            kinds=[_kind(k) for k in kinds or ["step"]],
            modes=[_mode(m) for m in modes or ["strong"]],
            bounds=bounds_for(config, None, None),
            seed=config.seed if seed is None else seed,
        )
        return report.to_json()
