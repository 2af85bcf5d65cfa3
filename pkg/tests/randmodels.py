"""Random well-formed components and systems for the property suites.

Well-formedness holds by construction: every transition into a state
resets the clocks enabling that state (so ``active = enabling`` is a
witness), enabling clocks are distinct per state, and every input is
enabled exactly once at every state.
"""

from __future__ import annotations

import random

from iosa.core import INPUT, OUTPUT, TAU, Automaton, ClockDecl, Distribution, Label, Transition

RATES = (0.5, 1.0, 2.0, 3.0)


def random_component(
    rng: random.Random,
    name: str,
    outputs: dict[str, bool],
    inputs: dict[str, bool],
    *,
    max_states: int = 5,
    max_clocks: int = 2,
    p_loop: float = 0.4,
    p_extra_reset: float = 0.15,
    quiet_urgent_inputs: bool = False,
) -> Automaton:
    """``outputs``/``inputs`` map action names to urgency.

    With ``quiet_urgent_inputs`` every urgent input is a self-loop without
    resets, which keeps the component confluent for most urgent pairs.
    """
    states = [f"{name.lower()}{i}" for i in range(rng.randint(2, max_states))]
    clocks = [f"{name.lower()}_c{k}" for k in range(rng.randint(1, max_clocks))]
    raw: list[tuple[str, frozenset[str], str, str, bool]] = []  # src, trigger, label, tgt, plain
    used: dict[str, set[str]] = {s: set() for s in states}
    for label, urgent in sorted(outputs.items()):
        for _ in range(rng.randint(1, 2)):
            src, tgt = rng.choice(states), rng.choice(states)
            if urgent:
                raw.append((src, frozenset(), label, tgt, False))
                continue
            free = [c for c in clocks if c not in used[src]]
            if free:
                clock = rng.choice(free)
                used[src].add(clock)
                raw.append((src, frozenset({clock}), label, tgt, False))
    for label, urgent in sorted(inputs.items()):
        for s in states:
            if urgent and quiet_urgent_inputs:
                raw.append((s, frozenset(), label, s, True))
                continue
            tgt = s if rng.random() < p_loop else rng.choice(states)
            raw.append((s, frozenset(), label, tgt, tgt == s and rng.random() < 0.5))

    enabling: dict[str, set[str]] = {s: set() for s in states}
    for src, trigger, _, _, _ in raw:
        enabling[src] |= trigger

    def resets(target: str) -> frozenset[str]:
        extra = {c for c in clocks if rng.random() < p_extra_reset}
        return frozenset(enabling[target] | extra)

    transitions = []
    for src, trigger, label, tgt, plain in raw:
        # an input self-loop without resets never invalidates the witness
        r = frozenset() if plain and not trigger and label in inputs else resets(tgt)
        transitions.append(Transition(src, trigger, label, r, tgt))
    labels = [Label(a, OUTPUT, u) for a, u in outputs.items()]
    labels += [Label(a, INPUT, u) for a, u in inputs.items()]
    decls = [ClockDecl(c, Distribution.exponential(rng.choice(RATES))) for c in clocks]
    s0 = states[0]
    c0 = enabling[s0] | {c for c in clocks if rng.random() < p_extra_reset}
    return Automaton(name, states, labels, decls, transitions, s0, c0)


def random_alphabets(
    rng: random.Random,
    n: int,
    *,
    actions: tuple[int, int] = (2, 5),
    p_urgent: float = 0.45,
    p_listen: float = 0.5,
    open_inputs: int = 0,
    p_tau: float = 0.15,
) -> list[tuple[dict[str, bool], dict[str, bool]]]:
    """Per-component (outputs, inputs) with a consistent urgency per name,
    pairwise disjoint outputs (besides tau) and, unless ``open_inputs``,
    every input matched by some output."""
    alph = [({}, {}) for _ in range(n)]
    for k in range(rng.randint(*actions)):
        name = f"a{k}"
        urgent = rng.random() < p_urgent
        owner = rng.randrange(n)
        alph[owner][0][name] = urgent
        for j in range(n):
            if j != owner and rng.random() < p_listen:
                alph[j][1][name] = urgent
    for k in range(open_inputs):
        name = f"ext{k}"
        urgent = rng.random() < p_urgent
        alph[rng.randrange(n)][1][name] = urgent
    for outs, _ in alph:
        if rng.random() < p_tau:
            outs[TAU] = True
    return alph


def random_system(rng: random.Random, n: int, *, closed: bool = True, **kwargs) -> list[Automaton]:
    alph_kwargs = {k: kwargs.pop(k) for k in ("actions", "p_urgent", "p_listen", "p_tau") if k in kwargs}
    open_inputs = 0 if closed else rng.randint(1, 2)
    alph = random_alphabets(rng, n, open_inputs=open_inputs, **alph_kwargs)
    names = [chr(ord("P") + i) for i in range(n)]
    return [
        random_component(rng, name, outs, ins, **kwargs) for name, (outs, ins) in zip(names, alph)
    ]
