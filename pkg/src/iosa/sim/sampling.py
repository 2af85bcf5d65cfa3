"""Sampling clock values and deriving independent random streams."""

from __future__ import annotations

import math

import numpy as np

from ..core import Distribution


def sample(dist: Distribution, rng: np.random.Generator) -> float:
    """One strictly positive draw from ``dist``.

    Exponential, uniform and Weibull use the inverse CDF; lognormal
    exponentiates a normal draw and Erlang sums exponentials. A draw that
    rounds to exactly zero (possible for ``uniform(0, b)``) is redrawn.
    """
    while True:
        value = _draw(dist, rng)
        if value > 0:
            return value


def _draw(dist: Distribution, rng: np.random.Generator) -> float:
    p = dist.params
    family = dist.family
    if family == "exponential":
        return -math.log1p(-rng.random()) / p[0]
    if family == "uniform":
        return p[0] + (p[1] - p[0]) * rng.random()
    if family == "weibull":
        return p[1] * (-math.log1p(-rng.random())) ** (1.0 / p[0])
    if family == "lognormal":
        return math.exp(p[0] + p[1] * rng.standard_normal())
    if family == "erlang":
        return sum(-math.log1p(-rng.random()) for _ in range(int(p[0]))) / p[1]
    raise ValueError(f"unknown family {family!r}")


def mean(dist: Distribution) -> float:
    p = dist.params
    if dist.family == "exponential":
        return 1.0 / p[0]
    if dist.family == "uniform":
        return (p[0] + p[1]) / 2
    if dist.family == "weibull":
        return p[1] * math.gamma(1 + 1 / p[0])
    if dist.family == "lognormal":
        return math.exp(p[0] + p[1] ** 2 / 2)
    return p[0] / p[1]


def replication_streams(seed: int, replication: int, clocks: int) -> tuple[list[np.random.Generator], np.random.Generator]:
    """Independent generators for one replication: one per clock plus one
    for the urgent-choice policy.

    Streams depend only on ``(seed, replication)``, so replications can run
    in any order or in parallel, and runs under different policies see the
    same clock samples.
    """
    root = np.random.SeedSequence(entropy=seed, spawn_key=(replication,))
    children = root.spawn(clocks + 1)
    gens = [np.random.Generator(np.random.PCG64(c)) for c in children]
    return gens[:clocks], gens[clocks]
