"""Discrete-event simulation of closed automata."""

from __future__ import annotations

from .engine import (
    POLICIES,
    CompiledModel,
    Event,
    InvariantIssue,
    Observation,
    RuntimeState,
    check_inv,
    init_run,
    make_policy,
    observations,
    step,
    write_trace,
)
from .estimate import (
    Estimate,
    NondeterminismError,
    OrderComparison,
    QueryError,
    SimConfig,
    check_order_independence,
    compile_predicate,
    licensed,
    simulate,
)
from .query import Query

__all__ = [
    "POLICIES",
    "CompiledModel",
    "Estimate",
    "Event",
    "InvariantIssue",
    "NondeterminismError",
    "Observation",
    "OrderComparison",
    "Query",
    "QueryError",
    "RuntimeState",
    "SimConfig",
    "check_inv",
    "check_order_independence",
    "compile_predicate",
    "init_run",
    "licensed",
    "make_policy",
    "observations",
    "simulate",
    "step",
    "write_trace",
]
