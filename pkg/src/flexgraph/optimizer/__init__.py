"""Rule- and cost-based optimization over the logical IR."""

from .canon import pattern_canon
from .catalog import Catalog, catalog_build, freq_estimate
from .planner import ExpandStep, MatchPlan, cbo_order, enumerate_order_costs
from .rules import rule_edge_vertex_fusion, rule_filter_push_into_match
from .pipeline import expand_matches, optimize

__all__ = [
    "pattern_canon", "Catalog", "catalog_build", "freq_estimate",
    "MatchPlan", "ExpandStep", "cbo_order", "enumerate_order_costs",
    "rule_filter_push_into_match", "rule_edge_vertex_fusion",
    "expand_matches", "optimize",
]
