"""Logical IR: typed data model, operators, validated DAG, pattern oracle."""

from .exprs import (
    Aggregate,
    Arith,
    BoolOp,
    Cmp,
    Expr,
    FieldRef,
    InList,
    Literal,
    Param,
    PropAccess,
    aggregate_values,
    eval_expr,
    expr_aliases,
    expr_params,
    infer_expr_type,
)
from .ops import (
    ExpandEdge,
    ExpandVertex,
    Field,
    FieldSchema,
    FromEdgeSpec,
    GetVertex,
    Group,
    Join,
    LimitOp,
    LogicalOp,
    Match,
    Order,
    PathExpand,
    Project,
    ScanSpec,
    Select,
    Sink,
)
from .dag import LogicalDag
from .pattern import PatternEdge, PatternGraph, PatternVertex, match_count, match_semantics

__all__ = [
    "Expr", "Literal", "FieldRef", "PropAccess", "Param", "Arith", "Cmp",
    "BoolOp", "InList", "Aggregate", "eval_expr", "infer_expr_type",
    "aggregate_values", "expr_aliases", "expr_params",
    "Field", "FieldSchema", "ScanSpec", "FromEdgeSpec", "GetVertex",
    "ExpandEdge", "ExpandVertex", "Match", "PathExpand", "Project", "Select",
    "Order", "Group", "LimitOp", "Join", "Sink", "LogicalOp", "LogicalDag",
    "PatternGraph", "PatternVertex", "PatternEdge", "match_semantics",
    "match_count",
]
