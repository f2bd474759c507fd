"""Independent ground truth: brute-force optima, the closed-form stationary
point of the two-agent quadratic game, and 1-D Gibbs densities.

Everything here evaluates games only through their public cost/gradient
surface and shares no code with the iteration engines, so oracle results can
referee the engines' output.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import games
from .games import GameInstance, SocialCostFn

Array = np.ndarray

GRID_DIM_LIMIT = 4
ARMIJO_C = 1e-4


class OracleError(RuntimeError):
    pass


@dataclass(frozen=True)
class OracleResult:
    point: Array              # joint decision in R^(n*d)
    value: float
    method: str               # "grid" | "multistart" | "closed-form"
    resolution: float | int   # grid spacing, or number of starts
    provenance: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "point": [float(t) for t in np.asarray(self.point).reshape(-1)],
            "value": float(self.value),
            "method": self.method,
            "resolution": self.resolution,
            "provenance": self.provenance,
        }

    def write_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def grid_search_social_optimum(game: GameInstance, box, resolution: float) -> OracleResult:
    """Exhaustive social-cost minimization on a regular joint grid.

    `box` is a (lo, hi) pair applied to every joint coordinate.  Guarded to
    n*d <= 4 joint dimensions; beyond that the grid explodes and callers are
    directed to the multistart oracle.  The returned point is certified in
    the sense that no grid point evaluates strictly smaller.
    """
    nd = game.n * game.d
    if nd > GRID_DIM_LIMIT:
        raise ValueError(
            f"grid search supports n*d <= {GRID_DIM_LIMIT} (got {nd}); use multistart_descent"
        )
    lo, hi = float(box[0]), float(box[1])
    if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
        raise ValueError("box bounds must be finite with lo < hi")
    if resolution <= 0:
        raise ValueError("resolution must be positive")
    count = int(np.floor((hi - lo) / resolution + 1e-9)) + 1
    axis = lo + resolution * np.arange(count)
    mesh = np.meshgrid(*([axis] * nd), indexing="ij")
    pts = np.stack([m.reshape(-1) for m in mesh], axis=-1)
    social = SocialCostFn(game)
    vals = social(pts)
    best = int(np.argmin(vals))
    return OracleResult(
        point=pts[best].copy(),
        value=float(vals[best]),
        method="grid",
        resolution=float(resolution),
        provenance={"game": game.name, "box": [lo, hi], "grid_points": int(len(pts))},
    )


def multistart_descent(game: GameInstance, box, starts: int, budget: int = 500,
                       seed: int = 0, gtol: float = 1e-9) -> OracleResult:
    """Best-found social-cost minimizer from multistart backtracking descent.

    Gradient descent with Armijo backtracking (constant 1e-4, halving) runs
    from `starts` uniform points in the box for at most `budget` iterations
    each.  The result is labeled best-found, never certified global.  Ties
    resolve to the lowest start index, so the outcome is independent of any
    evaluation schedule.
    """
    if starts < 1:
        raise ValueError("starts must be >= 1")
    nd = game.n * game.d
    lo, hi = float(box[0]), float(box[1])
    rng = np.random.default_rng(seed)
    x = rng.uniform(lo, hi, size=(starts, nd))
    social = SocialCostFn(game)
    fx = social(x)
    alive = np.isfinite(fx)
    for _ in range(budget):
        with np.errstate(all="ignore"):
            g = social.grad(x)
            gnorm2 = (g ** 2).sum(axis=1)
            active = alive & np.isfinite(gnorm2) & (np.sqrt(gnorm2) > gtol * (1.0 + np.abs(fx)))
            if not active.any():
                break
            t = np.ones(starts)
            pending = active.copy()
            for _halving in range(60):
                cand = x - (t * pending)[:, None] * g
                fc = social(cand)
                ok = pending & np.isfinite(fc) & (fc <= fx - ARMIJO_C * t * gnorm2)
                x[ok] = cand[ok]
                fx[ok] = fc[ok]
                pending &= ~ok
                if not pending.any():
                    break
                t[pending] *= 0.5
        # A start whose line search never succeeds is stuck; drop it.
        alive &= ~pending
        alive &= np.isfinite(fx)
    if not np.isfinite(fx).any():
        raise OracleError("all descent starts diverged")
    fx = np.where(np.isfinite(fx), fx, np.inf)
    best = int(np.argmin(fx))  # argmin takes the first (lowest start index) on ties
    return OracleResult(
        point=x[best].copy(),
        value=float(fx[best]),
        method="multistart",
        resolution=int(starts),
        provenance={"game": game.name, "box": [lo, hi], "budget": budget, "seed": seed},
    )


def quadratic_nash(game: GameInstance) -> Array:
    """Stationary profile of the two-agent quadratic game's own-cost system.

    Setting each agent's own-cost gradient to zero gives the linear system
    3*x1 + x2 = 4, x1 + 3*x2 = 6, solved here in closed form (Cramer), so
    the result (3/4, 7/4) is exact in floating point.
    """
    if game.name != "example1":
        raise ValueError("quadratic_nash applies to the built-in two-agent quadratic game")
    det = 3.0 * 3.0 - 1.0 * 1.0
    x1 = (3.0 * 4.0 - 1.0 * 6.0) / det
    x2 = (3.0 * 6.0 - 1.0 * 4.0) / det
    return np.array([x1, x2])


@dataclass(frozen=True)
class GibbsDensity:
    """Normalized density exp(-2 G / eps^2) / Z on a regular 1-D grid."""

    zs: Array
    pdf: Array
    z_const: float
    epsilon: float

    def mass_in(self, lo: float, hi: float) -> float:
        mask = (self.zs >= lo) & (self.zs <= hi)
        if mask.sum() < 2:
            return 0.0
        return float(np.trapezoid(self.pdf[mask], self.zs[mask]))


def gibbs_density_1d(objective, epsilon: float, box, resolution: float) -> GibbsDensity:
    """Numerically normalized Gibbs density for a nonnegative 1-D objective.

    The weight exp(-2 G(z) / eps^2) is integrated by the trapezoid rule over
    the box; the normalization constant is reported.  Rejected when the
    weights underflow to an unusable normalization (guidance: rescale eps).
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    lo, hi = float(box[0]), float(box[1])
    count = int(np.floor((hi - lo) / resolution + 1e-9)) + 1
    zs = lo + resolution * np.arange(count)
    G = np.asarray(objective(zs), dtype=float)
    if np.any(G < 0):
        raise ValueError("objective must be nonnegative on the box")
    w = np.exp(-2.0 * G / epsilon ** 2)
    z_const = float(np.trapezoid(w, zs))
    if z_const <= 0.0 or not np.isfinite(z_const):
        raise ValueError(
            "normalization underflow: exp(-2G/eps^2) vanished on the grid; rescale epsilon"
        )
    return GibbsDensity(zs=zs, pdf=w / z_const, z_const=z_const, epsilon=epsilon)


def social_optimum(game: GameInstance, box, resolution: float = 0.01,
                   starts: int = 200, seed: int = 0) -> OracleResult:
    """Dispatch to grid search when feasible, multistart otherwise."""
    if game.n * game.d <= GRID_DIM_LIMIT:
        return grid_search_social_optimum(game, box, resolution)
    return multistart_descent(game, box, starts=starts, seed=seed)
