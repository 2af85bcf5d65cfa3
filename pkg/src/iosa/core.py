"""Domain types for IOSA components and elementary state predicates."""

from __future__ import annotations

import dataclasses as d
import math
import typing as t
from functools import cached_property

TAU = "tau"

INPUT = "input"
OUTPUT = "output"


class UnknownStateError(KeyError):
    pass


class ModelError(ValueError):
    pass


@d.dataclass(frozen=True, order=True)
class Label:
    name: str
    kind: str
    urgent: bool

    def __post_init__(self) -> None:
        if self.kind not in (INPUT, OUTPUT):
            raise ModelError(f"label kind must be input or output, got {self.kind!r}")
        if self.name == TAU and not (self.kind == OUTPUT and self.urgent):
            raise ModelError("tau is always an urgent output")

    @property
    def is_input(self) -> bool:
        return self.kind == INPUT

    @property
    def is_output(self) -> bool:
        return self.kind == OUTPUT

    @property
    def suffix(self) -> str:
        if self.name == TAU:
            return ""
        mark = "!" if self.is_output else "?"
        return mark * 2 if self.urgent else mark

    def __str__(self) -> str:
        return self.name + self.suffix


TAU_LABEL = Label(TAU, OUTPUT, True)


_FAMILIES = {
    "exponential": ("rate",),
    "uniform": ("a", "b"),
    "weibull": ("shape", "scale"),
    "lognormal": ("mu", "sigma"),
    "erlang": ("k", "rate"),
}


@d.dataclass(frozen=True)
class Distribution:
    """A continuous distribution supported on the positive reals.

    ``params`` follows the order in ``Distribution.parameter_names``.
    """

    family: str
    params: tuple[float, ...]

    def __post_init__(self) -> None:
        if self.family not in _FAMILIES:
            raise ModelError(f"unknown distribution family {self.family!r}")
        expected = _FAMILIES[self.family]
        if len(self.params) != len(expected):
            raise ModelError(
                f"{self.family} takes {len(expected)} parameter(s) "
                f"({', '.join(expected)}), got {len(self.params)}"
            )
        if not all(math.isfinite(p) for p in self.params):
            raise ModelError(f"{self.family} parameters must be finite")
        p = self.params
        if self.family == "exponential" and not p[0] > 0:
            raise ModelError("exponential rate must be > 0")
        if self.family == "uniform" and not (0 <= p[0] < p[1]):
            raise ModelError("uniform(a, b) requires 0 <= a < b")
        if self.family == "weibull" and not (p[0] > 0 and p[1] > 0):
            raise ModelError("weibull shape and scale must be > 0")
        if self.family == "lognormal" and not p[1] > 0:
            raise ModelError("lognormal sigma must be > 0")
        if self.family == "erlang":
            if not (p[0] >= 1 and float(p[0]).is_integer()):
                raise ModelError("erlang k must be an integer >= 1")
            if not p[1] > 0:
                raise ModelError("erlang rate must be > 0")

    @classmethod
    def exponential(cls, rate: float) -> Distribution:
        return cls("exponential", (float(rate),))

    @classmethod
    def uniform(cls, a: float, b: float) -> Distribution:
        return cls("uniform", (float(a), float(b)))

    @classmethod
    def weibull(cls, shape: float, scale: float) -> Distribution:
        return cls("weibull", (float(shape), float(scale)))

    @classmethod
    def lognormal(cls, mu: float, sigma: float) -> Distribution:
        return cls("lognormal", (float(mu), float(sigma)))

    @classmethod
    def erlang(cls, k: int, rate: float) -> Distribution:
        return cls("erlang", (float(k), float(rate)))

    @property
    def parameter_names(self) -> tuple[str, ...]:
        return _FAMILIES[self.family]

    def __str__(self) -> str:
        args = []
        for name, value in zip(self.parameter_names, self.params):
            args.append(str(int(value)) if name == "k" else repr(float(value)))
        return f"{self.family}({', '.join(args)})"


@d.dataclass(frozen=True)
class ClockDecl:
    id: str
    distribution: Distribution


@d.dataclass(frozen=True)
class Valuation:
    """Clock values as a dense vector in the automaton's clock order."""

    clocks: tuple[str, ...]
    values: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.clocks) != len(self.values):
            raise ValueError("a valuation needs exactly one value per clock")

    @classmethod
    def of(cls, automaton: Automaton, values: t.Iterable[float]) -> Valuation:
        return cls(automaton.clock_order, tuple(float(v) for v in values))

    def __getitem__(self, clock: str) -> float:
        return self.values[self.clocks.index(clock)]

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.clocks, self.values))


def _sort_key(transition: Transition) -> tuple:
    return (
        transition.source,
        transition.label,
        tuple(sorted(transition.trigger)),
        tuple(sorted(transition.resets)),
        transition.target,
    )


@d.dataclass(frozen=True)
class Transition:
    """One tuple ``source --(trigger, label, resets)--> target``."""

    source: str
    trigger: frozenset[str]
    label: str
    resets: frozenset[str]
    target: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "trigger", frozenset(self.trigger))
        object.__setattr__(self, "resets", frozenset(self.resets))

    @property
    def sort_key(self) -> tuple:
        return _sort_key(self)


def fmt_set(items: t.Iterable[str]) -> str:
    return "{" + ", ".join(sorted(items)) + "}"


class Automaton:
    """An input/output stochastic automaton with urgency.

    Instances are immutable. States keep their construction order (the
    initial state need not come first); clocks are kept in lexicographic
    order, which is the total order used for valuations.

    A composed automaton additionally remembers the base components it was
    built from (``factors``) and, for every state, the tuple of component
    states it stands for (``projection``).
    """

    def __init__(
        self,
        name: str,
        states: t.Iterable[str],
        alphabet: t.Iterable[Label],
        clocks: t.Iterable[ClockDecl],
        transitions: t.Iterable[Transition],
        initial_state: str,
        initial_clocks: t.Iterable[str] = (),
        *,
        complete_inputs: bool = False,
        factors: t.Sequence[Automaton] = (),
        projection: t.Mapping[str, tuple[str, ...]] | None = None,
    ) -> None:
        self.name = name
        self.states: tuple[str, ...] = tuple(dict.fromkeys(states))
        labels: dict[str, Label] = {}
        for label in alphabet:
            if label.name in labels and labels[label.name] != label:
                raise ModelError(f"action {label.name!r} declared twice with different kinds")
            labels[label.name] = label
        self.labels: dict[str, Label] = dict(sorted(labels.items()))
        decls: dict[str, ClockDecl] = {}
        for decl in clocks:
            if decl.id in decls and decls[decl.id] != decl:
                raise ModelError(f"clock {decl.id!r} declared twice")
            decls[decl.id] = decl
        self.clocks: dict[str, ClockDecl] = dict(sorted(decls.items()))
        self.transitions: tuple[Transition, ...] = tuple(
            sorted(set(transitions), key=_sort_key)
        )
        self.initial_state = initial_state
        self.initial_clocks: frozenset[str] = frozenset(initial_clocks)
        self.complete_inputs = complete_inputs
        self.factors: tuple[Automaton, ...] = tuple(factors)
        self.projection: dict[str, tuple[str, ...]] = dict(projection or {})
        self._validate()

    def _validate(self) -> None:
        if not self.states:
            raise ModelError(f"automaton {self.name}: state set is empty")
        state_set = set(self.states)
        if self.initial_state not in state_set:
            raise ModelError(f"automaton {self.name}: initial state {self.initial_state!r} unknown")
        for clock in self.initial_clocks:
            if clock not in self.clocks:
                raise ModelError(f"automaton {self.name}: initial clock {clock!r} undeclared")
        for tr in self.transitions:
            for s in (tr.source, tr.target):
                if s not in state_set:
                    raise ModelError(f"automaton {self.name}: unknown state {s!r}")
            if tr.label not in self.labels:
                raise ModelError(f"automaton {self.name}: unknown action {tr.label!r}")
            for clock in tr.trigger | tr.resets:
                if clock not in self.clocks:
                    raise ModelError(f"automaton {self.name}: unknown clock {clock!r}")
        if self.factors and set(self.projection) != state_set:
            raise ModelError(f"automaton {self.name}: projection must cover every state")

    # Structural equality ignores ordering and the component decomposition.
    def _key(self) -> tuple:
        return (
            self.name,
            frozenset(self.states),
            tuple(self.labels.values()),
            tuple(self.clocks.values()),
            self.transitions,
            self.initial_state,
            self.initial_clocks,
            self.complete_inputs,
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Automaton):
            return NotImplemented
        return self._key() == other._key()

    def __hash__(self) -> int:
        return hash(self._key())

    def __repr__(self) -> str:
        return (
            f"Automaton({self.name!r}, states={len(self.states)}, "
            f"transitions={len(self.transitions)}, clocks={list(self.clocks)})"
        )

    def replace(self, **changes: t.Any) -> Automaton:
        fields = dict(
            name=self.name,
            states=self.states,
            alphabet=self.labels.values(),
            clocks=self.clocks.values(),
            transitions=self.transitions,
            initial_state=self.initial_state,
            initial_clocks=self.initial_clocks,
            complete_inputs=self.complete_inputs,
            factors=self.factors,
            projection=self.projection,
        )
        fields.update(changes)
        return Automaton(**fields)

    # alphabet views

    @cached_property
    def inputs(self) -> frozenset[str]:
        return frozenset(n for n, l in self.labels.items() if l.is_input)

    @cached_property
    def outputs(self) -> frozenset[str]:
        return frozenset(n for n, l in self.labels.items() if l.is_output)

    @cached_property
    def urgent(self) -> frozenset[str]:
        return frozenset(n for n, l in self.labels.items() if l.urgent)

    @cached_property
    def urgent_outputs(self) -> frozenset[str]:
        return self.urgent & self.outputs

    @property
    def actions(self) -> frozenset[str]:
        return frozenset(self.labels)

    @property
    def is_closed(self) -> bool:
        return not self.inputs

    # indexes

    @cached_property
    def clock_order(self) -> tuple[str, ...]:
        return tuple(self.clocks)

    @cached_property
    def clock_index(self) -> dict[str, int]:
        return {c: i for i, c in enumerate(self.clock_order)}

    @cached_property
    def state_index(self) -> dict[str, int]:
        return {s: i for i, s in enumerate(self.states)}

    @cached_property
    def _outgoing(self) -> dict[str, tuple[Transition, ...]]:
        out: dict[str, list[Transition]] = {s: [] for s in self.states}
        for tr in self.transitions:
            out[tr.source].append(tr)
        return {s: tuple(trs) for s, trs in out.items()}

    def outgoing(self, s: str) -> tuple[Transition, ...]:
        try:
            return self._outgoing[s]
        except KeyError:
            raise UnknownStateError(f"automaton {self.name}: unknown state {s!r}") from None

    def urgent_transitions(self, s: str) -> tuple[Transition, ...]:
        return tuple(tr for tr in self.outgoing(s) if tr.label in self.urgent)

    def components(self) -> tuple[Automaton, ...]:
        return self.factors or (self,)

    def project(self, s: str) -> tuple[str, ...]:
        if not self.factors:
            self.outgoing(s)
            return (s,)
        try:
            return self.projection[s]
        except KeyError:
            raise UnknownStateError(f"automaton {self.name}: unknown state {s!r}") from None


def enabling(automaton: Automaton, s: str) -> frozenset[str]:
    """Clocks ``y`` such that some transition leaving ``s`` is triggered by ``{y}``."""
    return frozenset(
        next(iter(tr.trigger)) for tr in automaton.outgoing(s) if len(tr.trigger) == 1
    )


def is_stable(automaton: Automaton, s: str) -> bool:
    return not any(tr.label in automaton.urgent_outputs for tr in automaton.outgoing(s))


def uen(automaton: Automaton, s: str) -> frozenset[str]:
    """Urgent actions (inputs and outputs) enabled at ``s``."""
    return frozenset(tr.label for tr in automaton.outgoing(s) if tr.label in automaton.urgent)
