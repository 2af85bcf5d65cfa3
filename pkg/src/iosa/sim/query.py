"""Queries and state predicates evaluated by the simulator."""

from __future__ import annotations

import dataclasses as d
import math
import typing as t

TRANSIENT_REACH = "transient_reach"
STEADY_FRACTION = "steady_fraction"
MEAN_TIME_TO = "mean_time_to"
KINDS = (TRANSIENT_REACH, STEADY_FRACTION, MEAN_TIME_TO)


class Predicate:
    def text(self, top: bool = True) -> str:
        raise NotImplementedError

    def atoms(self) -> t.Iterator[Predicate]:
        yield self

    def __str__(self) -> str:
        return self.text()


@d.dataclass(frozen=True)
class Const(Predicate):
    value: bool

    def text(self, top: bool = True) -> str:
        return "true" if self.value else "false"


@d.dataclass(frozen=True)
class InState(Predicate):
    """True while ``component`` sits in ``state``.

    ``component`` is None for predicates over a single (or already
    flattened) automaton, where ``state`` names a state of the system itself.
    """

    component: str | None
    state: str

    def text(self, top: bool = True) -> str:
        return self.state if self.component is None else f"{self.component}.{self.state}"


@d.dataclass(frozen=True)
class Fired(Predicate):
    """True at an observation point reached by a step that fired ``action``."""

    action: str

    def text(self, top: bool = True) -> str:
        return f"@{self.action}"


@d.dataclass(frozen=True)
class Not(Predicate):
    operand: Predicate

    def text(self, top: bool = True) -> str:
        return "!" + self.operand.text(top=False)

    def atoms(self) -> t.Iterator[Predicate]:
        yield from self.operand.atoms()


@d.dataclass(frozen=True)
class And(Predicate):
    left: Predicate
    right: Predicate

    def text(self, top: bool = True) -> str:
        inner = f"{self.left.text(False)} && {self.right.text(False)}"
        return inner if top else f"({inner})"

    def atoms(self) -> t.Iterator[Predicate]:
        yield from self.left.atoms()
        yield from self.right.atoms()


@d.dataclass(frozen=True)
class Or(Predicate):
    left: Predicate
    right: Predicate

    def text(self, top: bool = True) -> str:
        inner = f"{self.left.text(False)} || {self.right.text(False)}"
        return inner if top else f"({inner})"

    def atoms(self) -> t.Iterator[Predicate]:
        yield from self.left.atoms()
        yield from self.right.atoms()


def _num(x: float) -> str:
    return "inf" if math.isinf(x) else repr(float(x))


@d.dataclass(frozen=True)
class Query:
    """A simulation query.

    ``transient_reach(p, horizon)``: probability that ``p`` holds at some
    observation point within ``horizon``.
    ``steady_fraction(p, horizon, warmup)``: long-run fraction of time ``p``
    holds, estimated as a time average over ``[warmup, horizon]``.
    ``mean_time_to(p[, horizon])``: mean first-passage time to ``p``; runs
    that absorb (or pass ``horizon``) first count as non-occurrences.
    """

    kind: str
    predicate: Predicate
    horizon: float | None = None
    warmup: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown query kind {self.kind!r}")
        if self.kind in (TRANSIENT_REACH, STEADY_FRACTION) and self.horizon is None:
            raise ValueError(f"{self.kind} needs a horizon")
        if self.horizon is not None and not self.horizon > 0:
            raise ValueError("query horizon must be > 0")
        if self.kind == STEADY_FRACTION:
            if math.isinf(self.horizon):
                raise ValueError("steady_fraction needs a finite horizon")
            if not 0 <= self.warmup < self.horizon:
                raise ValueError("steady_fraction warm-up must lie in [0, horizon)")

    def text(self) -> str:
        args = [self.predicate.text()]
        if self.horizon is not None:
            args.append(_num(self.horizon))
        if self.kind == STEADY_FRACTION and self.warmup:
            args.append(_num(self.warmup))
        return f"{self.kind}({', '.join(args)})"
