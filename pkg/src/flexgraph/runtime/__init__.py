"""Physical plans and the two execution backends."""

from .physical import (
    Exchange,
    FlatMap,
    FilterP,
    GroupByP,
    JoinP,
    LimitP,
    MapP,
    PhysicalPlan,
    QueryResult,
    SinkP,
    SortP,
    SourceP,
    lower,
)
from .batch import execute_batch
from .oltp import OltpEngine, execute_oltp
from .update import apply_updates

__all__ = [
    "PhysicalPlan", "QueryResult", "SourceP", "FlatMap", "MapP", "FilterP",
    "SortP", "GroupByP", "JoinP", "Exchange", "LimitP", "SinkP", "lower",
    "execute_batch", "execute_oltp", "OltpEngine", "apply_updates",
]
