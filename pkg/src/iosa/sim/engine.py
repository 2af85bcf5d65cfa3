"""Discrete-event execution of a closed automaton.

Clock values are kept as absolute expiry times: a clock reset at time
``now`` with sample ``v`` expires at ``now + v``. The remaining-time view
used by traces is ``expiry - now``.
"""

from __future__ import annotations

import dataclasses as d
import json
import typing as t

import numpy as np

from ..core import Automaton, ModelError, Transition, Valuation
from ..reduction import NotClosedError, ZenoError, zeno_cycle
from ..wellformed import infer_active
from .sampling import replication_streams, sample

INIT = "init"
URGENT = "urgent"
TIMED = "timed"
DEADLOCK = "deadlock"

FLOAT_COLLISION = "float-collision"
NEGATIVE = "negative-at-stable"
NON_POSITIVE = "non-positive-at-unstable"


@d.dataclass(frozen=True)
class _Edge:
    label: str
    resets: tuple[int, ...]
    target: int
    transition: Transition


class CompiledModel:
    """Index-based view of a closed, well-formed, non-Zeno automaton."""

    def __init__(self, automaton: Automaton, *, check_zeno: bool = True) -> None:
        if automaton.inputs:
            raise NotClosedError(
                f"{automaton.name} is not closed; compose it with components "
                f"providing {', '.join(sorted(automaton.inputs))}"
            )
        if check_zeno:
            cycle = zeno_cycle(automaton)
            if cycle is not None:
                raise ZenoError(cycle)
        inference = infer_active(automaton)
        if not inference.ok:
            raise ModelError(
                f"{automaton.name} is not well-formed: clocks "
                f"{sorted(inference.missing)} may be used inactive at {inference.failed_state}"
            )
        self.automaton = automaton
        self.states = automaton.states
        self.index = automaton.state_index
        self.clocks = automaton.clock_order
        cidx = automaton.clock_index
        self.distributions = [automaton.clocks[c].distribution for c in self.clocks]
        self.initial = self.index[automaton.initial_state]
        self.urgent: list[tuple[_Edge, ...]] = []
        self.timed: list[dict[int, _Edge]] = []
        self.active: list[tuple[int, ...]] = []
        for s in self.states:
            urgent, timed = [], {}
            for tr in automaton.outgoing(s):
                edge = _Edge(
                    tr.label, tuple(sorted(cidx[c] for c in tr.resets)), self.index[tr.target], tr
                )
                if tr.label in automaton.urgent:
                    urgent.append(edge)
                elif len(tr.trigger) == 1:
                    timed[cidx[next(iter(tr.trigger))]] = edge
            self.urgent.append(tuple(urgent))
            self.timed.append(dict(sorted(timed.items())))
            self.active.append(tuple(sorted(cidx[c] for c in inference.active[s])))

    def stable(self, s: int) -> bool:
        return not self.urgent[s]


@d.dataclass(frozen=True)
class InvariantIssue:
    kind: str
    time: float
    state: str
    clocks: tuple[str, ...]

    @property
    def hard(self) -> bool:
        return self.kind != FLOAT_COLLISION


@d.dataclass(frozen=True)
class Event:
    kind: str
    time: float
    source: str | None
    action: str | None
    target: str
    source_stable: bool = True
    delay: float = 0.0
    resampled: tuple[str, ...] = ()
    issues: tuple[InvariantIssue, ...] = ()
    remaining: tuple[float, ...] | None = None

    def to_dict(self, clocks: t.Sequence[str] = ()) -> dict:
        out = {
            "kind": self.kind,
            "time": self.time,
            "source": self.source,
            "action": self.action,
            "state": self.target,
            "delay": self.delay,
            "resampled": list(self.resampled),
        }
        if self.remaining is not None:
            out["valuation"] = dict(zip(clocks, self.remaining))
        if self.issues:
            out["warnings"] = [{"kind": i.kind, "clocks": list(i.clocks)} for i in self.issues]
        return out


@d.dataclass
class RuntimeState:
    state: int
    expiry: list[float]
    elapsed: float
    streams: list[np.random.Generator]
    policy_rng: np.random.Generator
    steps: int = 0
    chain: int = 0
    enabled_since: dict[str, int] = d.field(default_factory=dict)
    issues: list[InvariantIssue] = d.field(default_factory=list)

    def remaining(self) -> tuple[float, ...]:
        return tuple(e - self.elapsed for e in self.expiry)

    def valuation(self, model: CompiledModel) -> Valuation:
        """Remaining time of every clock, in clock order."""
        return Valuation(model.clocks, self.remaining())


# urgent-choice policies


class Policy:
    name = ""

    def choose(self, rt: RuntimeState, edges: tuple[_Edge, ...]) -> int:
        raise NotImplementedError


class SortedPolicy(Policy):
    name = "deterministic-sorted"

    def choose(self, rt, edges):
        return 0


class ReversePolicy(Policy):
    name = "reverse"

    def choose(self, rt, edges):
        return len(edges) - 1


class FifoPolicy(Policy):
    """Fire the urgent action that has been enabled the longest."""

    name = "fifo"

    def choose(self, rt, edges):
        since = rt.enabled_since
        return min(range(len(edges)), key=lambda i: (since.get(edges[i].label, rt.steps), i))


class RandomPolicy(Policy):
    name = "seeded-random"

    def choose(self, rt, edges):
        return int(rt.policy_rng.integers(len(edges)))


POLICIES: dict[str, type[Policy]] = {
    p.name: p for p in (SortedPolicy, FifoPolicy, ReversePolicy, RandomPolicy)
}


def make_policy(name: str | Policy) -> Policy:
    if isinstance(name, Policy):
        return name
    try:
        return POLICIES[name]()
    except KeyError:
        raise ValueError(f"unknown policy {name!r}; choose from {', '.join(POLICIES)}") from None


# execution


def init_run(model: CompiledModel | Automaton, seed: int, replication: int = 0) -> RuntimeState:
    """Initial runtime state: every clock is sampled, not only the initial ones."""
    if isinstance(model, Automaton):
        model = CompiledModel(model)
    streams, policy_rng = replication_streams(seed, replication, len(model.clocks))
    expiry = [sample(dist, rng) for dist, rng in zip(model.distributions, streams)]
    rt = RuntimeState(model.initial, expiry, 0.0, streams, policy_rng)
    _track_enabled(model, rt)
    return rt


def _track_enabled(model: CompiledModel, rt: RuntimeState) -> None:
    edges = model.urgent[rt.state]
    if not edges:
        if rt.enabled_since:
            rt.enabled_since = {}
        return
    labels = {e.label for e in edges}
    since = {a: k for a, k in rt.enabled_since.items() if a in labels}
    for a in sorted(labels - since.keys()):
        since[a] = rt.steps
    rt.enabled_since = since


def check_inv(model: CompiledModel, rt: RuntimeState) -> list[InvariantIssue]:
    """Deviations from the invariant at the current state: active clocks
    must hold pairwise distinct values, non-negative when the state is
    stable and strictly positive otherwise."""
    active = model.active[rt.state]
    if not active:
        return []
    issues = []
    name = model.states[rt.state]
    stable = model.stable(rt.state)
    values = sorted((rt.expiry[i] - rt.elapsed, i) for i in active)
    for (v1, i1), (v2, i2) in zip(values, values[1:]):
        if v1 == v2:
            issues.append(
                InvariantIssue(FLOAT_COLLISION, rt.elapsed, name, (model.clocks[i1], model.clocks[i2]))
            )
    low, i = values[0]
    if stable and low < 0:
        issues.append(InvariantIssue(NEGATIVE, rt.elapsed, name, (model.clocks[i],)))
    elif not stable and low <= 0:
        issues.append(InvariantIssue(NON_POSITIVE, rt.elapsed, name, (model.clocks[i],)))
    return issues


def _fire(model: CompiledModel, rt: RuntimeState, edge: _Edge) -> tuple[str, ...]:
    for c in edge.resets:
        rt.expiry[c] = rt.elapsed + sample(model.distributions[c], rt.streams[c])
    rt.state = edge.target
    rt.steps += 1
    _track_enabled(model, rt)
    return tuple(model.clocks[c] for c in edge.resets)


def step(
    model: CompiledModel,
    rt: RuntimeState,
    policy: Policy,
    *,
    monitor: bool = True,
    record_valuation: bool = False,
) -> tuple[Event, RuntimeState]:
    """Take one transition, updating ``rt`` in place.

    Unstable states fire an urgent transition chosen by ``policy`` without
    letting time pass. Stable states advance time to the earliest expiry
    among enabling clocks and fire the transition it triggers; on an exact
    tie the clock first in the clock order wins and a collision is logged.
    A stable state without enabling clocks yields a deadlock event.
    """
    source = rt.state
    name = model.states[source]
    issues: list[InvariantIssue] = []
    urgent = model.urgent[source]
    if urgent:
        rt.chain += 1
        if rt.chain > len(model.states):
            raise ZenoError([name])
        edge = urgent[policy.choose(rt, urgent)]
        kind, delay = URGENT, 0.0
    else:
        timed = model.timed[source]
        if not timed:
            event = Event(DEADLOCK, rt.elapsed, name, None, name)
            return event, rt
        best = min(timed, key=lambda c: rt.expiry[c])
        when = rt.expiry[best]
        ties = [c for c in timed if c != best and rt.expiry[c] == when]
        if ties:
            clocks = tuple(model.clocks[c] for c in [best, *ties])
            issues.append(InvariantIssue(FLOAT_COLLISION, rt.elapsed, name, clocks))
        edge = timed[best]
        kind, delay = TIMED, when - rt.elapsed
        rt.elapsed = when
        rt.chain = 0
    resampled = _fire(model, rt, edge)
    if monitor:
        issues.extend(check_inv(model, rt))
    if issues:
        rt.issues.extend(issues)
    event = Event(
        kind,
        rt.elapsed,
        name,
        edge.label,
        model.states[rt.state],
        source_stable=not urgent,
        delay=delay,
        resampled=resampled,
        issues=tuple(issues),
        remaining=rt.remaining() if record_valuation else None,
    )
    return event, rt


@d.dataclass(frozen=True)
class Observation:
    """A stable point of a run, with the actions fired since the previous one."""

    time: float
    state: int
    fired: frozenset[str]
    absorbing: bool


def observations(
    model: CompiledModel,
    rt: RuntimeState,
    policy: Policy,
    *,
    monitor: bool = True,
    sink: t.Callable[[Event], None] | None = None,
    max_steps: int | None = None,
    record_valuation: bool = False,
) -> t.Iterator[Observation]:
    """Stable points of the run starting at ``rt``, the first at time 0.

    The generator ends after yielding an absorbing point. Callers decide
    when to stop otherwise (horizon, first passage).
    """
    record = record_valuation
    if sink is not None:
        sink(Event(INIT, 0.0, None, None, model.states[rt.state], remaining=rt.remaining()))
    fired: set[str] = set()
    while True:
        if max_steps is not None and rt.steps > max_steps:
            raise RuntimeError(f"run exceeded {max_steps} steps without finishing")
        if model.stable(rt.state):
            absorbing = not model.timed[rt.state]
            yield Observation(rt.elapsed, rt.state, frozenset(fired), absorbing)
            if absorbing:
                if sink is not None:
                    sink(step(model, rt, policy)[0])
                return
            fired = set()
        event, rt = step(model, rt, policy, monitor=monitor, record_valuation=record)
        fired.add(event.action)
        if sink is not None:
            sink(event)


def write_trace(events: t.Iterable[Event], clocks: t.Sequence[str], stream: t.TextIO) -> None:
    for event in events:
        stream.write(json.dumps(event.to_dict(clocks)) + "\n")
