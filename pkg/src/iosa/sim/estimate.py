"""Replicated estimation of queries, and the urgent-order comparison harness."""

from __future__ import annotations

import dataclasses as d
import math
import os
import typing as t
from concurrent.futures import ProcessPoolExecutor
from statistics import NormalDist

import numpy as np

from ..analysis import check_confluence_direct, check_compositional
from ..core import Automaton
from .engine import CompiledModel, Event, Policy, init_run, make_policy, observations
from .query import (
    MEAN_TIME_TO,
    STEADY_FRACTION,
    TRANSIENT_REACH,
    And,
    Const,
    Fired,
    InState,
    Not,
    Or,
    Predicate,
    Query,
)

JOBS_ENV = "IOSA_JOBS"


class NondeterminismError(RuntimeError):
    pass


class QueryError(ValueError):
    pass


Compiled = t.Callable[[int, frozenset], bool]


def compile_predicate(pred: Predicate, automaton: Automaton) -> Compiled:
    """Turn ``pred`` into a function of (state index, fired actions)."""
    if isinstance(pred, Const):
        value = pred.value
        return lambda s, fired: value
    if isinstance(pred, InState):
        mask = _state_mask(pred, automaton)
        return lambda s, fired: mask[s]
    if isinstance(pred, Fired):
        if pred.action not in automaton.actions:
            raise QueryError(f"unknown action {pred.action!r} in @{pred.action}")
        action = pred.action
        return lambda s, fired: action in fired
    if isinstance(pred, Not):
        inner = compile_predicate(pred.operand, automaton)
        return lambda s, fired: not inner(s, fired)
    if isinstance(pred, (And, Or)):
        left = compile_predicate(pred.left, automaton)
        right = compile_predicate(pred.right, automaton)
        if isinstance(pred, And):
            return lambda s, fired: left(s, fired) and right(s, fired)
        return lambda s, fired: left(s, fired) or right(s, fired)
    raise TypeError(f"not a predicate: {pred!r}")


def _state_mask(pred: InState, automaton: Automaton) -> list[bool]:
    factors = automaton.components()
    names = [f.name for f in factors]
    if pred.component is None or (not automaton.factors and pred.component == automaton.name):
        if pred.state not in automaton.state_index:
            raise QueryError(f"unknown state {pred.state!r} in {automaton.name}")
        return [s == pred.state for s in automaton.states]
    if pred.component not in names:
        raise QueryError(f"unknown component {pred.component!r}; system has {', '.join(names)}")
    i = names.index(pred.component)
    if pred.state not in factors[i].state_index:
        raise QueryError(f"unknown state {pred.state!r} in component {pred.component}")
    return [automaton.project(s)[i] == pred.state for s in automaton.states]


@d.dataclass(frozen=True)
class SimConfig:
    replications: int = 10_000
    seed: int = 0
    confidence: float = 0.99
    policy: str = "deterministic-sorted"
    jobs: int = 1
    monitor: bool = True
    max_steps: int = 10_000_000

    def __post_init__(self) -> None:
        if self.replications < 1:
            raise ValueError("at least one replication is required")
        if not 0 < self.confidence < 1:
            raise ValueError("confidence must lie in (0, 1)")
        make_policy(self.policy)


@d.dataclass(frozen=True)
class Outcome:
    """Per-replication result. ``value`` is nan for a first passage that
    never happened."""

    value: float
    hard_issues: int
    collisions: int
    advances_from_unstable: int
    chain_time_drift: int


@d.dataclass(frozen=True)
class Estimate:
    point: float
    half_width: float
    confidence: float
    replications: int
    seed: int
    policy: str
    samples: int
    nondeterministic: bool = False
    inv_violations: int = 0
    float_collisions: int = 0
    urgency_violations: int = 0
    values: tuple[float, ...] = d.field(default=(), repr=False, compare=False)

    @property
    def interval(self) -> tuple[float, float]:
        return self.point - self.half_width, self.point + self.half_width

    def contains(self, x: float) -> bool:
        lo, hi = self.interval
        return lo <= x <= hi

    def to_dict(self) -> dict:
        out = {
            "point": self.point,
            "half_width": self.half_width,
            "interval": list(self.interval),
            "confidence": self.confidence,
            "replications": self.replications,
            "samples": self.samples,
            "seed": self.seed,
            "policy": self.policy,
            "inv_violations": self.inv_violations,
            "float_collisions": self.float_collisions,
            "urgency_violations": self.urgency_violations,
        }
        if self.nondeterministic:
            out["warning"] = (
                "the model was not shown confluent; results depend on the urgent-choice policy"
            )
        return out


class _Tracker:
    """Collects trace-level checks while observing a run."""

    def __init__(self) -> None:
        self.advances_from_unstable = 0
        self.chain_drift = 0
        self.chain_time: float | None = None

    def __call__(self, event: Event) -> None:
        if event.kind == "timed":
            if not event.source_stable:
                self.advances_from_unstable += 1
            self.chain_time = event.time
        elif event.kind == "urgent":
            if self.chain_time is None:
                self.chain_time = event.time
            elif event.time != self.chain_time:
                self.chain_drift += 1
        elif event.kind == "init":
            self.chain_time = event.time


def run_replication(
    model: CompiledModel,
    query: Query,
    predicate: Compiled,
    index: int,
    config: SimConfig,
    sink: t.Callable[[Event], None] | None = None,
) -> Outcome:
    rt = init_run(model, config.seed, index)
    policy = make_policy(config.policy)
    tracker = _Tracker()

    def observe(event: Event) -> None:
        tracker(event)
        if sink is not None:
            sink(event)

    obs = observations(
        model,
        rt,
        policy,
        monitor=config.monitor,
        sink=observe,
        max_steps=config.max_steps,
        record_valuation=sink is not None,
    )
    horizon = math.inf if query.horizon is None else query.horizon
    value = _evaluate(query, predicate, obs, horizon)
    obs.close()
    hard = sum(1 for i in rt.issues if i.hard)
    return Outcome(
        value,
        hard,
        len(rt.issues) - hard,
        tracker.advances_from_unstable,
        tracker.chain_drift,
    )


def _evaluate(query: Query, predicate: Compiled, obs, horizon: float) -> float:
    if query.kind == TRANSIENT_REACH:
        for o in obs:
            if o.time > horizon:
                return 0.0
            if predicate(o.state, o.fired):
                return 1.0
        return 0.0
    if query.kind == MEAN_TIME_TO:
        for o in obs:
            if o.time > horizon:
                return math.nan
            if predicate(o.state, o.fired):
                return o.time
        return math.nan
    assert query.kind == STEADY_FRACTION
    lo, hi = query.warmup, horizon
    total = 0.0
    prev_time, prev_holds = None, False
    for o in obs:
        if prev_time is not None and prev_holds:
            total += max(0.0, min(o.time, hi) - max(prev_time, lo))
        if o.time >= hi:
            prev_time = None
            break
        prev_time, prev_holds = o.time, predicate(o.state, o.fired)
    if prev_time is not None and prev_holds:
        # absorbed before the horizon: the last point persists
        total += max(0.0, hi - max(prev_time, lo))
    return total / (hi - lo)


def _run_chunk(args) -> list[Outcome]:
    automaton, query, config, indices = args
    model = CompiledModel(automaton)
    predicate = compile_predicate(query.predicate, automaton)
    return [run_replication(model, query, predicate, i, config) for i in indices]


def default_jobs() -> int:
    try:
        return max(1, int(os.environ.get(JOBS_ENV, "1")))
    except ValueError:
        return 1


def licensed(automaton: Automaton) -> bool:
    """Whether simulation is sound without fixing a scheduler: the
    compositional check says confluent, or the direct check does on the
    potentially reachable states."""
    if check_compositional(list(automaton.components())).confluent:
        return True
    return check_confluence_direct(automaton, potentially_reachable_only=True).confluent


def outcomes(automaton: Automaton, query: Query, config: SimConfig) -> list[Outcome]:
    model = CompiledModel(automaton)
    predicate = compile_predicate(query.predicate, automaton)
    n = config.replications
    if config.jobs <= 1 or n < 2 * config.jobs:
        return [run_replication(model, query, predicate, i, config) for i in range(n)]
    bounds = np.linspace(0, n, config.jobs + 1).astype(int)
    chunks = [
        (automaton, query, config, range(bounds[k], bounds[k + 1])) for k in range(config.jobs)
    ]
    with ProcessPoolExecutor(config.jobs) as pool:
        parts = list(pool.map(_run_chunk, chunks))
    return [o for part in parts for o in part]


def _summarize(values: np.ndarray, config: SimConfig) -> tuple[float, float, int]:
    values = values[~np.isnan(values)]
    m = len(values)
    if m == 0:
        return math.nan, math.nan, 0
    point = float(np.mean(values))
    if m < 2:
        return point, math.nan, m
    z = NormalDist().inv_cdf((1 + config.confidence) / 2)
    return point, float(z * np.std(values, ddof=1) / math.sqrt(m)), m


def simulate(
    automaton: Automaton,
    query: Query,
    config: SimConfig | None = None,
    *,
    allow_nondeterminism: bool = False,
    **overrides: t.Any,
) -> Estimate:
    """Estimate ``query`` on a closed automaton over independent replications.

    Refuses models not shown confluent unless ``allow_nondeterminism``.
    For ``mean_time_to`` the point is the mean over replications where the
    predicate was reached; ``samples`` counts them.
    """
    config = d.replace(config or SimConfig(), **overrides)
    nondeterministic = not licensed(automaton)
    if nondeterministic and not allow_nondeterminism:
        raise NondeterminismError(
            f"{automaton.name} is not shown confluent, so its behaviour may depend on how "
            "urgent choices are resolved; check it with the direct confluence analysis or "
            "pass the override to simulate under a fixed policy"
        )
    results = outcomes(automaton, query, config)
    values = np.array([o.value for o in results], dtype=float)
    point, half_width, m = _summarize(values, config)
    return Estimate(
        point,
        half_width,
        config.confidence,
        config.replications,
        config.seed,
        config.policy,
        m,
        nondeterministic,
        sum(o.hard_issues for o in results),
        sum(o.collisions for o in results),
        sum(o.advances_from_unstable + o.chain_time_drift for o in results),
        tuple(values.tolist()),
    )


@d.dataclass(frozen=True)
class OrderComparison:
    first: Estimate
    second: Estimate
    difference: float
    tolerance: float
    ks_statistic: float
    ks_pvalue: float

    @property
    def consistent(self) -> bool:
        """Estimates differ by less than the combined half-widths."""
        return self.difference < self.tolerance or self.difference == 0.0

    def to_dict(self) -> dict:
        return {
            "policies": [self.first.policy, self.second.policy],
            "estimates": [self.first.to_dict(), self.second.to_dict()],
            "difference": self.difference,
            "tolerance": self.tolerance,
            "ks_statistic": self.ks_statistic,
            "ks_pvalue": self.ks_pvalue,
            "consistent": self.consistent,
        }


def check_order_independence(
    automaton: Automaton,
    query: Query,
    replications: int = 10_000,
    seed: int = 0,
    *,
    policies: tuple[str | Policy, str | Policy] = ("deterministic-sorted", "reverse"),
    allow_nondeterminism: bool = False,
    **overrides: t.Any,
) -> OrderComparison:
    """Run ``query`` under two urgent-choice policies with the same
    per-replication streams and compare the estimates."""
    runs = [
        simulate(
            automaton,
            query,
            SimConfig(replications=replications, seed=seed, policy=make_policy(p).name, **overrides),
            allow_nondeterminism=allow_nondeterminism,
        )
        for p in policies
    ]
    a, b = runs
    xs = np.array(a.values)
    ys = np.array(b.values)
    xs, ys = xs[~np.isnan(xs)], ys[~np.isnan(ys)]
    if len(xs) and len(ys):
        from scipy import stats

        ks = stats.ks_2samp(xs, ys)
        ks_stat, ks_p = float(ks.statistic), float(ks.pvalue)
    else:
        ks_stat, ks_p = math.nan, math.nan
    tolerance = (a.half_width or 0.0) + (b.half_width or 0.0)
    return OrderComparison(a, b, abs(a.point - b.point), tolerance, ks_stat, ks_p)
