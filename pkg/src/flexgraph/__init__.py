"""flexgraph: a modular property-graph computing stack.

Two frontends (a Cypher subset and a fluent step builder) compile to one
logical IR; a rule- and cost-based optimizer rewrites it; a batched
dataflow backend and a shared-nothing low-latency backend execute it; and
every engine reads graph data only through a capability-negotiated
retrieval surface backed by three interchangeable stores.
"""

__version__ = "0.1.0"
