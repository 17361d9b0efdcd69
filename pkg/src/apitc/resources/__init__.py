"""MCP resource implementations for the apitc workbench.

Available resources:
    - apitc://axioms - The algebraic laws with their side conditions
    - apitc://axioms/{axiom_id} - One law
    - apitc://config - Active workbench configuration
"""

from apitc.resources.workbench import register_resources

__all__ = ["register_resources"]
