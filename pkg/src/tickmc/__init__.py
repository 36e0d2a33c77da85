"""Tick-synchronized probabilistic state machines, compiled to DTMCs and checked."""

from .composer import SparseDtmc, compose, to_dot
from .engine import Query, QueryResult, bounded_reachability, eval_query, find_deadlocks
from .model import (
    ConcreteNetwork,
    Network,
    ScenarioConfig,
    bind_constants,
    evaluate_expression,
    validate_network,
)

__version__ = "0.1.0"

__all__ = [
    "ConcreteNetwork",
    "Network",
    "Query",
    "QueryResult",
    "ScenarioConfig",
    "SparseDtmc",
    "bind_constants",
    "bounded_reachability",
    "compose",
    "eval_query",
    "evaluate_expression",
    "find_deadlocks",
    "to_dot",
    "validate_network",
]
