"""Input/output stochastic automata with urgency: modelling, composition,
confluence analysis and discrete-event simulation."""

from __future__ import annotations

from .core import (
    INPUT,
    OUTPUT,
    TAU,
    Automaton,
    ClockDecl,
    Distribution,
    Label,
    ModelError,
    Transition,
    UnknownStateError,
    Valuation,
    enabling,
    is_stable,
    uen,
)

__version__ = "0.1.0"

__all__ = [
    "INPUT",
    "OUTPUT",
    "TAU",
    "Automaton",
    "ClockDecl",
    "Distribution",
    "Label",
    "ModelError",
    "Transition",
    "UnknownStateError",
    "Valuation",
    "enabling",
    "is_stable",
    "uen",
    "__version__",
]
