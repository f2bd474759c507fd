"""Noise models for the stochastic iterations.

Two noise kinds enter the annealing update: a zero-mean gradient disturbance
(bounded second moment) and the standard-Gaussian annealing excitation that
is scaled by the gamma schedule.  Every (agent, noise kind) pair owns its own
named random stream, derived deterministically from the run seed, so agents
are mutually independent and runs are reproducible regardless of evaluation
order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Stream tags appended to the seed key; 0 and 1 are reserved for the engine's
# initializer and graph-draw streams.
_TAG_GRADIENT = 2
_TAG_ANNEAL = 3


def seed_key(seed) -> tuple:
    """Normalize a seed (int or tuple of ints) into a tuple of ints."""
    if isinstance(seed, (tuple, list)):
        return tuple(int(s) for s in seed)
    return (int(seed),)


def stream(seed, *tags) -> np.random.Generator:
    """A named generator derived from the seed and integer stream tags."""
    return np.random.default_rng(np.random.SeedSequence(seed_key(seed) + tuple(tags)))


@dataclass(frozen=True)
class GradientNoise:
    """Zero-mean disturbance added to the gradient evaluation.

    kind "uniform" draws each component uniformly from [-scale, scale];
    "gaussian" draws N(0, scale^2) components; "none" is exactly zero and
    consumes no randomness.
    """

    kind: str = "none"
    scale: float = 0.0

    def __post_init__(self):
        if self.kind not in ("none", "uniform", "gaussian"):
            raise ValueError(f"unknown gradient noise kind {self.kind!r}")
        if self.kind != "none" and self.scale <= 0:
            raise ValueError("uniform/gaussian gradient noise needs scale > 0")

    def sample(self, rng, d: int):
        if self.kind == "uniform":
            return rng.uniform(-self.scale, self.scale, d)
        if self.kind == "gaussian":
            return rng.normal(0.0, self.scale, d)
        return np.zeros(d)

    def second_moment_bound(self, n: int, d: int) -> float:
        """A strict upper bound on E||stacked disturbance||^2 for n agents."""
        if self.kind == "uniform":
            return 2.0 * n * d * self.scale ** 2 / 3.0
        if self.kind == "gaussian":
            return 2.0 * n * d * self.scale ** 2
        return 0.0


@dataclass(frozen=True)
class NoiseModel:
    """Gradient disturbance spec plus the annealing excitation switch.

    annealing "gaussian" is the standard N(0, I_d) per agent per iteration;
    "none" disables the excitation entirely (used by deterministic baselines
    and noise-off reduction checks).
    """

    gradient: GradientNoise = GradientNoise()
    annealing: str = "gaussian"

    def __post_init__(self):
        if self.annealing not in ("gaussian", "none"):
            raise ValueError(f"unknown annealing noise kind {self.annealing!r}")

    def open_streams(self, seed, n: int) -> "NoiseStreams":
        return NoiseStreams(self, seed, n)


class NoiseStreams:
    """Per-(agent, kind) generators bound to one run."""

    def __init__(self, model: NoiseModel, seed, n: int):
        self.model = model
        self.n = n
        key = seed_key(seed)
        self._grad = [stream(key, _TAG_GRADIENT, i) for i in range(n)]
        self._anneal = [stream(key, _TAG_ANNEAL, i) for i in range(n)]

    def gradient(self, d: int):
        """Stacked gradient disturbances, shape (n, d); None when disabled."""
        if self.model.gradient.kind == "none":
            return None
        g = self.model.gradient
        return np.stack([g.sample(self._grad[i], d) for i in range(self.n)])

    def annealing(self, d: int):
        """Stacked annealing excitations, shape (n, d); None when disabled."""
        if self.model.annealing == "none":
            return None
        if self.n == 1:
            return self._anneal[0].standard_normal((1, d))
        return np.stack([self._anneal[i].standard_normal(d) for i in range(self.n)])
