"""Confluence analysis: the direct check on a closed automaton, and the
compositional sufficient conditions computed from the components alone
(potential reachability, spontaneously enabled and initial sets, the
approximate triggering relation and the enabled graph)."""

from __future__ import annotations

import dataclasses as d
import itertools
from collections import deque

from .compose import unmatched_inputs
from .core import TAU, Automaton, Transition, is_stable, uen

CONFLUENT = "confluent"
NOT_CONFLUENT = "not-confluent"
INCONCLUSIVE = "inconclusive"


class OpenSystemError(ValueError):
    def __init__(self, unmatched: list[str]) -> None:
        super().__init__(
            "the system is open; unmatched inputs: "
            + ", ".join(unmatched)
            + ". Add components providing these outputs before analysing it."
        )
        self.unmatched = unmatched


@d.dataclass(frozen=True)
class DiamondFailure:
    """Two urgent transitions leaving ``state`` that do not close a diamond."""

    pair: tuple[str, str]
    state: str
    first: Transition
    second: Transition

    def to_dict(self) -> dict:
        return {
            "pair": list(self.pair),
            "state": self.state,
            "targets": [self.first.target, self.second.target],
        }


@d.dataclass(frozen=True)
class Cause:
    kind: str  # "initial" or "spontaneous"
    action: str | None = None
    sets: tuple[frozenset[str], ...] = ()

    def to_dict(self) -> dict:
        out: dict = {"kind": self.kind}
        if self.kind == "spontaneous":
            out["action"] = self.action
            out["sets"] = [sorted(s) for s in self.sets]
        return out


@d.dataclass(frozen=True)
class Witness:
    pair: tuple[str, str]
    component: int | None = None
    component_name: str | None = None
    state: str | None = None
    chains: tuple[tuple[str, str], ...] = ()
    cause: Cause | None = None
    vertex: frozenset[str] | None = None

    def to_dict(self) -> dict:
        out: dict = {"pair": list(self.pair)}
        if self.component is not None:
            out["component"] = self.component
            out["component_name"] = self.component_name
        if self.state is not None:
            out["state"] = self.state
        if self.chains:
            out["chains"] = [list(c) for c in self.chains]
        if self.cause is not None:
            out["cause"] = self.cause.to_dict()
        if self.vertex is not None:
            out["vertex"] = sorted(self.vertex)
        return out


@d.dataclass(frozen=True)
class ConfluenceVerdict:
    status: str
    witnesses: tuple[Witness, ...] = ()
    method: str = "direct"

    @property
    def confluent(self) -> bool:
        return self.status == CONFLUENT

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "method": self.method,
            "witnesses": [w.to_dict() for w in self.witnesses],
        }


# potential reachability


def potentially_reachable(automaton: Automaton) -> frozenset[str]:
    """Endpoints of plausible paths: paths that never leave a state with an
    urgent output through a non-urgent action."""
    seen = {automaton.initial_state}
    frontier = deque(seen)
    while frontier:
        s = frontier.popleft()
        stable = is_stable(automaton, s)
        for tr in automaton.outgoing(s):
            if not stable and tr.label not in automaton.urgent:
                continue
            if tr.target not in seen:
                seen.add(tr.target)
                frontier.append(tr.target)
    return frozenset(seen)


# direct confluence


def _closes(automaton: Automaton, s1: str, label: str, resets: frozenset[str]) -> set[str]:
    return {
        tr.target
        for tr in automaton.outgoing(s1)
        if tr.label == label and tr.resets == resets and not tr.trigger
    }


def diamond_failures(
    automaton: Automaton,
    pair: tuple[str, str] | None = None,
    states: frozenset[str] | None = None,
    *,
    first_only: bool = False,
) -> list[DiamondFailure]:
    """States where two urgent transitions fail to commute to a common state
    with the same reset sets. Restrict to the action ``pair`` and to
    ``states`` when given. A transition is never compared with itself."""
    out = []
    wanted = None if pair is None else set(pair)
    for s in automaton.states:
        if states is not None and s not in states:
            continue
        urgent = [
            tr for tr in automaton.urgent_transitions(s) if not tr.trigger
        ]
        for t1, t2 in itertools.combinations(urgent, 2):
            labels = (t1.label, t2.label)
            if wanted is not None and set(labels) != wanted:
                continue
            via1 = _closes(automaton, t1.target, t2.label, t2.resets)
            via2 = _closes(automaton, t2.target, t1.label, t1.resets)
            if not via1 & via2:
                out.append(DiamondFailure(tuple(sorted(labels)), s, t1, t2))
                if first_only:
                    return out
    return out


def is_confluent_wrt(automaton: Automaton, a: str, b: str, states: frozenset[str] | None = None) -> bool:
    return not diamond_failures(automaton, (a, b), states, first_only=True)


def check_confluence_direct(
    automaton: Automaton,
    *,
    potentially_reachable_only: bool = False,
    all_witnesses: bool = False,
) -> ConfluenceVerdict:
    states = potentially_reachable(automaton) if potentially_reachable_only else None
    failures = diamond_failures(automaton, None, states, first_only=not all_witnesses)
    if not failures:
        return ConfluenceVerdict(CONFLUENT, method="direct")
    witnesses = tuple(Witness(f.pair, state=f.state) for f in failures)
    return ConfluenceVerdict(NOT_CONFLUENT, witnesses, method="direct")


def confluent_pair_components(components: list[Automaton], a: str, b: str) -> bool:
    """Whether every component is confluent for ``(a, b)``; enough for the
    composition to be confluent for that pair.

    Names absent from every component are fine (vacuous). A name known to
    some component but not urgent there is an error.
    """
    for c in components:
        for name in (a, b):
            if name in c.actions and name not in c.urgent:
                raise ValueError(f"action {name!r} is not urgent in {c.name}")
    return all(is_confluent_wrt(c, a, b) for c in components)


# compositional conditions


def spontaneously_enabled_sets(automaton: Automaton) -> dict[str, frozenset[frozenset[str]]]:
    """Maximal sets of urgent outputs spontaneously enabled by each
    non-urgent action. The empty set is always spontaneously enabled, so
    every action maps to at least one set."""
    reach = potentially_reachable(automaton)
    found: dict[str, set[frozenset[str]]] = {
        a: {frozenset()} for a in automaton.actions - automaton.urgent
    }
    for s in sorted(reach):
        if not is_stable(automaton, s):
            continue
        for tr in automaton.outgoing(s):
            if tr.label in automaton.urgent or tr.target not in reach:
                continue
            found[tr.label].add(uen(automaton, tr.target) & automaton.outputs)
    return {a: _maximal(sets) for a, sets in sorted(found.items())}


def _maximal(sets: set[frozenset[str]]) -> frozenset[frozenset[str]]:
    return frozenset(s for s in sets if not any(s < other for other in sets))


def initial_set(automaton: Automaton) -> frozenset[str]:
    return uen(automaton, automaton.initial_state) & automaton.outputs


def trigger_relation(automaton: Automaton) -> frozenset[tuple[str, str]]:
    """Pairs ``(a, b)`` where urgent ``a`` enables urgent output ``b`` through
    consecutive steps between potentially reachable states, ``b`` not being
    enabled before unless ``a == b``."""
    reach = potentially_reachable(automaton)
    pairs = set()
    for s1 in reach:
        before = uen(automaton, s1)
        for t1 in automaton.urgent_transitions(s1):
            s2 = t1.target
            if s2 not in reach:
                continue
            for t2 in automaton.outgoing(s2):
                b = t2.label
                if b not in automaton.urgent_outputs or t2.target not in reach:
                    continue
                if t1.label == b or b not in before:
                    pairs.add((t1.label, b))
    return frozenset(pairs)


@d.dataclass(frozen=True)
class TriggerRelation:
    relation: frozenset[tuple[str, str]]
    domain: frozenset[str]
    closure: frozenset[tuple[str, str]]

    def reaches(self, a: str, b: str) -> bool:
        """``a`` indirectly triggers ``b``; reflexivity always holds."""
        return a == b or (a, b) in self.closure

    def successors(self, a: str) -> frozenset[str]:
        return frozenset(b for x, b in self.relation if x == a)

    def restricted(self, names: set[str] | frozenset[str]) -> frozenset[tuple[str, str]]:
        return frozenset((a, b) for a, b in self.closure if a in names and b in names)


def approx_trigger_closure(components: list[Automaton]) -> TriggerRelation:
    """Union of the component trigger relations and its transitive closure.

    tau is the one output several components may share, so a tau of one
    component followed by a tau of another triggers tau in the composition
    without doing so in any component; that pair is added explicitly.
    """
    relation = frozenset().union(*(trigger_relation(c) for c in components))
    if sum(TAU in c.urgent_outputs for c in components) > 1:
        relation |= {(TAU, TAU)}
    domain = frozenset().union(*(c.urgent for c in components))
    closure = {(a, a) for a in domain} | set(relation)
    changed = True
    while changed:
        changed = False
        for (a, b), (c, e) in itertools.product(list(closure), repeat=2):
            if b == c and (a, e) not in closure:
                closure.add((a, e))
                changed = True
    return TriggerRelation(relation, domain, frozenset(closure))


@d.dataclass(frozen=True)
class EnabledGraph:
    vertices: dict[frozenset[str], int]  # vertex -> layer
    edges: frozenset[tuple[frozenset[str], str, frozenset[str]]]
    causes: dict[frozenset[str], tuple[Cause, ...]]  # layer-0 provenance

    @property
    def layer0(self) -> list[frozenset[str]]:
        return [v for v, k in self.vertices.items() if k == 0]

    def covers(self, enabled: frozenset[str]) -> bool:
        return any(enabled <= v for v in self.vertices)


def _layer0(components: list[Automaton]) -> dict[frozenset[str], list[Cause]]:
    causes: dict[frozenset[str], list[Cause]] = {}
    per_comp = [spontaneously_enabled_sets(c) for c in components]
    actions = sorted(set().union(*(c.actions - c.urgent for c in components)))
    for a in actions:
        choices = [sorted(m.get(a, {frozenset()}), key=sorted) for m in per_comp]
        for combo in itertools.product(*choices):
            v = frozenset().union(*combo)
            causes.setdefault(v, []).append(Cause("spontaneous", a, tuple(combo)))
    init = frozenset().union(*(initial_set(c) for c in components))
    causes.setdefault(init, []).insert(0, Cause("initial"))
    return causes


def enabled_graph(components: list[Automaton], triggers: TriggerRelation | None = None) -> EnabledGraph:
    triggers = triggers or approx_trigger_closure(components)
    causes = _layer0(components)
    vertices = {v: 0 for v in causes}
    edges = set()
    layer = list(causes)
    k = 0
    while layer:
        k += 1
        nxt = []
        for v in layer:
            for a in sorted(v):
                w = (v - {a}) | triggers.successors(a)
                edges.add((v, a, w))
                if w not in vertices:
                    vertices[w] = k
                    nxt.append(w)
        layer = nxt
    return EnabledGraph(vertices, frozenset(edges), {v: tuple(c) for v, c in causes.items()})


def _vertex_key(v: frozenset[str]) -> tuple:
    return (len(v), sorted(v))


def check_compositional(components: list[Automaton], *, all_witnesses: bool = False) -> ConfluenceVerdict:
    """Compositional confluence check on a closed system.

    Looks for urgent outputs ``a, b`` such that some component is not
    confluent for them and both are indirectly triggered by actions that
    are jointly initial or jointly spontaneously enabled by one action.
    If there is none the composition is confluent; otherwise the result is
    inconclusive, never a claim of non-confluence.
    """
    unmatched = unmatched_inputs(components)
    if unmatched:
        raise OpenSystemError(unmatched)
    triggers = approx_trigger_closure(components)
    causes = _layer0(components)
    layer0 = sorted(causes, key=_vertex_key)
    urgent_outputs = sorted(set().union(*(c.urgent_outputs for c in components)))
    witnesses = []
    for a, b in itertools.combinations_with_replacement(urgent_outputs, 2):
        broken = None
        for i, comp in enumerate(components):
            failure = diamond_failures(comp, (a, b), first_only=True)
            if failure:
                broken = (i, comp, failure[0])
                break
        if broken is None:
            continue
        for v in layer0:
            c = next((x for x in sorted(v) if triggers.reaches(x, a)), None)
            e = next((x for x in sorted(v) if triggers.reaches(x, b)), None)
            if c is None or e is None:
                continue
            i, comp, failure = broken
            witnesses.append(
                Witness(
                    (a, b),
                    component=i,
                    component_name=comp.name,
                    state=failure.state,
                    chains=((c, a), (e, b)),
                    cause=causes[v][0],
                    vertex=v,
                )
            )
            break
        if witnesses and not all_witnesses:
            break
    if not witnesses:
        return ConfluenceVerdict(CONFLUENT, method="compositional")
    return ConfluenceVerdict(INCONCLUSIVE, tuple(witnesses), method="compositional")


# name required by the documented public interface
check_theorem7 = check_compositional
