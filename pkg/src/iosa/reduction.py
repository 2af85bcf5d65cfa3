"""Urgent reduction: chains of zero-time urgent steps from a state to the
stable state (with accumulated resets) where time may pass again."""

from __future__ import annotations

import dataclasses as d

import networkx as nx

from .core import Automaton, UnknownStateError, fmt_set, is_stable


class NotClosedError(ValueError):
    pass


class ZenoError(RuntimeError):
    """An urgent cycle makes reduction non-terminating."""

    def __init__(self, cycle: list[str]) -> None:
        super().__init__("urgent cycle through " + " -> ".join(cycle + cycle[:1]))
        self.cycle = cycle


class DistinctNormalFormsError(RuntimeError):
    def __init__(self, first: NormalForm, second: NormalForm) -> None:
        super().__init__(f"reduction orders disagree: {first} versus {second}")
        self.first = first
        self.second = second


@d.dataclass(frozen=True, order=True)
class ReductionConfig:
    state: str
    accumulated: frozenset[str] = frozenset()
    length: int = 0

    def __str__(self) -> str:
        return f"({self.state}, {fmt_set(self.accumulated)}, {self.length})"


@d.dataclass(frozen=True)
class NormalForm:
    stable_state: str
    accumulated_resets: frozenset[str]
    path_length: int

    def __str__(self) -> str:
        return f"({self.stable_state}, {fmt_set(self.accumulated_resets)}, {self.path_length})"

    def to_dict(self) -> dict:
        return {
            "state": self.stable_state,
            "resets": sorted(self.accumulated_resets),
            "length": self.path_length,
        }


def _require_closed(automaton: Automaton) -> None:
    if automaton.inputs:
        raise NotClosedError(
            f"{automaton.name} is not closed; unresolved inputs: {fmt_set(automaton.inputs)}"
        )


def reduce_step(automaton: Automaton, config: ReductionConfig) -> list[ReductionConfig]:
    """Successors of ``config`` in sorted order; empty iff its state is stable."""
    _require_closed(automaton)
    return sorted(
        {
            ReductionConfig(tr.target, config.accumulated | tr.resets, config.length + 1)
            for tr in automaton.urgent_transitions(config.state)
        }
    )


def _normal(config: ReductionConfig) -> NormalForm:
    return NormalForm(config.state, config.accumulated, config.length)


def zeno_cycle(automaton: Automaton) -> list[str] | None:
    """Some cycle of urgent transitions, if any."""
    graph = nx.DiGraph()
    graph.add_nodes_from(automaton.states)
    graph.add_edges_from(
        (tr.source, tr.target) for tr in automaton.transitions if tr.label in automaton.urgent
    )
    try:
        edges = nx.find_cycle(graph)
    except nx.NetworkXNoCycle:
        return None
    return [u for u, _ in edges]


def is_non_zeno(automaton: Automaton) -> tuple[bool, list[str] | None]:
    cycle = zeno_cycle(automaton)
    return cycle is None, cycle


def normal_form(automaton: Automaton, state: str, *, exhaustive: bool = False) -> NormalForm:
    """Normal form of ``(state, {}, 0)``.

    The default follows the first successor in sorted order. With
    ``exhaustive`` every reduction order is explored and they must agree.
    """
    _require_closed(automaton)
    if state not in automaton.state_index:
        raise UnknownStateError(state)
    cycle = _urgent_cycle_from(automaton, state)
    if cycle is not None:
        raise ZenoError(cycle)
    start = ReductionConfig(state)
    if not exhaustive:
        config = start
        while True:
            nxt = reduce_step(automaton, config)
            if not nxt:
                return _normal(config)
            config = nxt[0]
    found: NormalForm | None = None
    seen = {start}
    stack = [start]
    while stack:
        config = stack.pop()
        nxt = reduce_step(automaton, config)
        if not nxt:
            nf = _normal(config)
            if found is None:
                found = nf
            elif nf != found:
                raise DistinctNormalFormsError(found, nf)
        for c in nxt:
            if c not in seen:
                seen.add(c)
                stack.append(c)
    assert found is not None
    return found


def _urgent_cycle_from(automaton: Automaton, state: str) -> list[str] | None:
    reach = {state}
    stack = [state]
    while stack:
        s = stack.pop()
        for tr in automaton.urgent_transitions(s):
            if tr.target not in reach:
                reach.add(tr.target)
                stack.append(tr.target)
    graph = nx.DiGraph()
    graph.add_nodes_from(reach)
    graph.add_edges_from(
        (tr.source, tr.target) for s in reach for tr in automaton.urgent_transitions(s)
    )
    try:
        return [u for u, _ in nx.find_cycle(graph)]
    except nx.NetworkXNoCycle:
        return None


def all_normal_forms(automaton: Automaton) -> dict[str, NormalForm]:
    """Normal form of every state, in state order."""
    return {s: normal_form(automaton, s) for s in automaton.states}


def is_stable_normal_form(automaton: Automaton, nf: NormalForm) -> bool:
    return is_stable(automaton, nf.stable_state)
