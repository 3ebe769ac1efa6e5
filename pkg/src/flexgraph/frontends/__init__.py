"""Two surfaces over one IR: a Cypher-subset parser and a fluent step
builder, plus the test-only DAG equivalence check."""

from .cypher import cypher_parse, parse_query, unparse
from .steps import StepChain, steps_to_dag
from .equivalence import frontend_equivalence

__all__ = ["cypher_parse", "parse_query", "unparse", "StepChain",
           "steps_to_dag", "frontend_equivalence"]
