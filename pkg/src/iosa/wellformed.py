"""Well-formedness of IOSA components: structural conditions (a)-(e), the
``active`` function of condition (f), and input completion."""

from __future__ import annotations

import dataclasses as d
from collections import defaultdict

from .core import Automaton, Transition, enabling, is_stable


@d.dataclass(frozen=True)
class Violation:
    condition: str
    state: str
    message: str
    transition: Transition | None = None

    def to_dict(self) -> dict:
        out = {"condition": self.condition, "state": self.state, "message": self.message}
        if self.transition is not None:
            tr = self.transition
            out["transition"] = {
                "source": tr.source,
                "trigger": sorted(tr.trigger),
                "label": tr.label,
                "resets": sorted(tr.resets),
                "target": tr.target,
            }
        return out


@d.dataclass(frozen=True)
class WellformednessReport:
    automaton: str
    violations: tuple[Violation, ...]
    active: dict[str, frozenset[str]] | None

    @property
    def ok(self) -> bool:
        return not self.violations

    @property
    def verdict(self) -> str:
        return "pass" if self.ok else "fail"

    def to_dict(self) -> dict:
        return {
            "automaton": self.automaton,
            "verdict": self.verdict,
            "violations": [v.to_dict() for v in self.violations],
            "active": None
            if self.active is None
            else {s: sorted(cs) for s, cs in sorted(self.active.items())},
        }


@d.dataclass(frozen=True)
class ActiveInference:
    """Outcome of computing the greatest candidate ``active`` function.

    ``active`` is the candidate itself. It witnesses condition (f) iff
    ``failed_state`` is None; otherwise ``missing`` holds the enabling
    clocks that could not be active at ``failed_state``.
    """

    active: dict[str, frozenset[str]]
    failed_state: str | None
    missing: frozenset[str]
    shrink_steps: int

    @property
    def ok(self) -> bool:
        return self.failed_state is None


def canonicalize(automaton: Automaton) -> Automaton:
    """Add ``s --{}, a?, {}--> s`` for every input ``a`` not enabled at ``s``."""
    present = {(tr.source, tr.label) for tr in automaton.transitions}
    loops = [
        Transition(s, frozenset(), a, frozenset(), s)
        for s in automaton.states
        for a in sorted(automaton.inputs)
        if (s, a) not in present
    ]
    if not loops:
        return automaton
    return automaton.replace(transitions=automaton.transitions + tuple(loops))


def check_structure(automaton: Automaton) -> list[Violation]:
    """Conditions (a)-(e). Automata flagged ``complete_inputs`` are checked
    after input completion."""
    if automaton.complete_inputs:
        automaton = canonicalize(automaton)
    out: list[Violation] = []
    labels = automaton.labels
    for tr in automaton.transitions:
        label = labels[tr.label]
        if (label.is_input or label.urgent) and tr.trigger:
            out.append(
                Violation("a", tr.source, f"{label} must have an empty trigger set", tr)
            )
        if label.is_output and not label.urgent and len(tr.trigger) != 1:
            out.append(
                Violation("b", tr.source, f"{label} must be triggered by exactly one clock", tr)
            )
    for s in automaton.states:
        by_clock: dict[str, set[tuple]] = defaultdict(set)
        by_input: dict[str, set[tuple]] = defaultdict(set)
        for tr in automaton.outgoing(s):
            if len(tr.trigger) == 1:
                by_clock[next(iter(tr.trigger))].add((tr.label, tr.resets, tr.target))
            if tr.label in automaton.inputs and not tr.trigger:
                by_input[tr.label].add((tr.resets, tr.target))
        for clock, tuples in sorted(by_clock.items()):
            if len(tuples) > 1:
                out.append(
                    Violation("c", s, f"clock {clock} triggers {len(tuples)} distinct transitions")
                )
        for a in sorted(automaton.inputs):
            if a not in by_input:
                out.append(Violation("d", s, f"input {labels[a]} not enabled"))
        for a, tuples in sorted(by_input.items()):
            if len(tuples) > 1:
                out.append(Violation("e", s, f"input {labels[a]} is not deterministic"))
    return out


def infer_active(automaton: Automaton) -> ActiveInference:
    """Greatest candidate for ``active`` by downward fixpoint iteration.

    Start from ``active(s0) = C0`` and all clocks elsewhere, clamp stable
    states to their enabling clocks, and propagate
    ``active(s) <= (active(t) - C) | C'`` along every transition until
    nothing changes. Any function satisfying (i), (iii) and (iv) is
    pointwise below this candidate, so (ii) fails for it iff no witness
    exists.
    """
    all_clocks = frozenset(automaton.clocks)
    enab = {s: enabling(automaton, s) for s in automaton.states}
    active: dict[str, frozenset[str]] = {}
    for s in automaton.states:
        start = automaton.initial_clocks if s == automaton.initial_state else all_clocks
        if is_stable(automaton, s):
            start = start & enab[s]
        active[s] = start

    steps = 0
    pending = list(automaton.states)
    queued = set(pending)
    while pending:
        t_state = pending.pop()
        queued.discard(t_state)
        for tr in automaton.outgoing(t_state):
            bound = (active[t_state] - tr.trigger) | tr.resets
            current = active[tr.target]
            clamped = current & bound
            if clamped != current:
                active[tr.target] = clamped
                steps += 1
                if tr.target not in queued:
                    pending.append(tr.target)
                    queued.add(tr.target)

    for s in automaton.states:
        missing = enab[s] - active[s]
        if missing:
            return ActiveInference(active, s, frozenset(missing), steps)
    return ActiveInference(active, None, frozenset(), steps)


def verify_active(automaton: Automaton, active: dict[str, frozenset[str]]) -> list[Violation]:
    """Re-check (i)-(iv) of condition (f) for a given ``active`` map."""
    out = []
    s0 = automaton.initial_state
    if not active[s0] <= automaton.initial_clocks:
        out.append(Violation("f", s0, "(i) active(s0) is not contained in C0"))
    for s in automaton.states:
        enab = enabling(automaton, s)
        if not enab <= active[s]:
            out.append(Violation("f", s, "(ii) enabling clocks are not all active"))
        if is_stable(automaton, s) and active[s] != enab:
            out.append(Violation("f", s, "(iii) stable state with active != enabling"))
    for tr in automaton.transitions:
        if not active[tr.target] <= (active[tr.source] - tr.trigger) | tr.resets:
            out.append(Violation("f", tr.target, "(iv) active set not justified by predecessor", tr))
    return out


def check(automaton: Automaton) -> WellformednessReport:
    """Full check of conditions (a)-(f), collecting every violation."""
    if automaton.complete_inputs:
        automaton = canonicalize(automaton)
    violations = check_structure(automaton)
    inference = infer_active(automaton)
    active = None
    if inference.ok:
        active = inference.active
    else:
        names = ", ".join(sorted(inference.missing))
        violations.append(
            Violation(
                "f",
                inference.failed_state,
                f"enabling clock(s) {names} can never be guaranteed active here",
            )
        )
    return WellformednessReport(automaton.name, tuple(violations), active)
