"""Compatibility and parallel composition of IOSA components."""

from __future__ import annotations

import dataclasses as d
import itertools
from collections import deque

from .core import INPUT, OUTPUT, TAU, Automaton, Label, Transition

SEPARATOR = "|"


class IncompatibleError(ValueError):
    def __init__(self, message: str, pair: tuple[int, int] | None = None, report=None) -> None:
        super().__init__(message)
        self.pair = pair
        self.report = report


@d.dataclass(frozen=True)
class Conflict:
    kind: str  # shared-output | shared-clock | urgency-mismatch
    name: str


@d.dataclass(frozen=True)
class CompatibilityReport:
    conflicts: tuple[Conflict, ...]

    @property
    def compatible(self) -> bool:
        return not self.conflicts

    def __bool__(self) -> bool:
        return self.compatible

    def describe(self) -> str:
        return ", ".join(f"{c.kind} {c.name}" for c in self.conflicts) or "compatible"

    def to_dict(self) -> dict:
        return {
            "compatible": self.compatible,
            "conflicts": [{"kind": c.kind, "name": c.name} for c in self.conflicts],
        }


def compatible(a: Automaton, b: Automaton) -> CompatibilityReport:
    conflicts = [Conflict("shared-output", n) for n in sorted((a.outputs & b.outputs) - {TAU})]
    conflicts += [Conflict("shared-clock", c) for c in sorted(set(a.clocks) & set(b.clocks))]
    mismatch = (a.actions & b.urgent) ^ (b.actions & a.urgent)
    conflicts += [Conflict("urgency-mismatch", n) for n in sorted(mismatch)]
    return CompatibilityReport(tuple(conflicts))


def _composite_alphabet(a: Automaton, b: Automaton) -> list[Label]:
    outputs = a.outputs | b.outputs
    urgent = a.urgent | b.urgent
    return [
        Label(name, OUTPUT if name in outputs else INPUT, name in urgent)
        for name in sorted(a.actions | b.actions)
    ]


def _moves(a: Automaton, b: Automaton, p: str, q: str):
    """Transitions of ``p || q`` per the three composition rules, as
    ``(trigger, label, resets, p', q')``."""
    shared = (a.actions & b.actions) - {TAU}
    for tr in a.outgoing(p):
        if tr.label not in shared:
            yield tr.trigger, tr.label, tr.resets, tr.target, q
    for tr in b.outgoing(q):
        if tr.label not in shared:
            yield tr.trigger, tr.label, tr.resets, p, tr.target
    for ta in a.outgoing(p):
        if ta.label not in shared:
            continue
        for tb in b.outgoing(q):
            if tb.label == ta.label:
                yield ta.trigger | tb.trigger, ta.label, ta.resets | tb.resets, ta.target, tb.target


def compose(a: Automaton, b: Automaton, *, full_product: bool = False, name: str | None = None) -> Automaton:
    """Parallel composition ``a || b``.

    By default only the fragment reachable from the initial state is built;
    ``full_product`` materialises every pair of states. Composite state ids
    join the component state ids with ``|``.
    """
    report = compatible(a, b)
    if not report:
        raise IncompatibleError(
            f"{a.name} and {b.name} are not compatible: {report.describe()}", report=report
        )
    proj_a = {s: a.project(s) for s in a.states}
    proj_b = {s: b.project(s) for s in b.states}

    def sid(p: str, q: str) -> str:
        return SEPARATOR.join(proj_a[p] + proj_b[q])

    start = (a.initial_state, b.initial_state)
    if full_product:
        frontier = deque(itertools.product(a.states, b.states))
        seen = set(frontier)
        order = list(frontier)
    else:
        frontier = deque([start])
        seen = {start}
        order = [start]
    transitions = []
    while frontier:
        p, q = frontier.popleft()
        for trigger, label, resets, p2, q2 in _moves(a, b, p, q):
            transitions.append(Transition(sid(p, q), trigger, label, resets, sid(p2, q2)))
            if (p2, q2) not in seen:
                seen.add((p2, q2))
                order.append((p2, q2))
                frontier.append((p2, q2))

    projection = {sid(p, q): proj_a[p] + proj_b[q] for p, q in order}
    if len(projection) != len(order):
        raise ValueError("composite state ids collide; avoid '|' in component state names")
    return Automaton(
        name or f"{a.name}_{b.name}",
        [sid(p, q) for p, q in order],
        _composite_alphabet(a, b),
        list(a.clocks.values()) + list(b.clocks.values()),
        transitions,
        sid(*start),
        a.initial_clocks | b.initial_clocks,
        factors=a.components() + b.components(),
        projection=projection,
    )


def compose_many(components: list[Automaton], *, full_product: bool = False, name: str | None = None) -> Automaton:
    """Left fold of ``compose`` after checking every pair for compatibility.

    Incompatible pairs are reported with 1-based positions.
    """
    if not components:
        raise ValueError("nothing to compose")
    for (i, a), (j, b) in itertools.combinations(enumerate(components, 1), 2):
        report = compatible(a, b)
        if not report:
            raise IncompatibleError(
                f"components {i} ({a.name}) and {j} ({b.name}) are not compatible: "
                f"{report.describe()}",
                pair=(i, j),
                report=report,
            )
    result = components[0]
    for other in components[1:]:
        result = compose(result, other, full_product=full_product)
    if name is not None and len(components) > 1:
        result = result.replace(name=name)
    return result


def unmatched_inputs(components: list[Automaton]) -> list[str]:
    """Inputs of some component that no component offers as output."""
    outputs = set().union(*(c.outputs for c in components))
    inputs = set().union(*(c.inputs for c in components))
    return sorted(inputs - outputs)
