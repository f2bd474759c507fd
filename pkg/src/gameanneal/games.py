"""Aggregative games: per-agent costs g_i(x, y) and their partial gradients.

Each agent i owns a bivariate cost g_i(x, y) where x is its own decision
(dimension d) and y stands for the network average of all decisions.  The
convention for every callable stored in a :class:`GameInstance` is

    cost:  x, y with shape (..., d)  ->  (...)
    grad:  x, y with shape (..., d)  ->  (..., d)

so costs and gradients broadcast over arbitrary leading batch axes.  All
instances are immutable after construction and evaluation is pure: the same
inputs always produce bitwise-identical outputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

Array = np.ndarray

# Fixed parameter vectors of the built-in 10-agent charging game.
EV_N = 10
EV_D_VEC = np.array([7.0, 7.0, 8.0, 8.0, 9.0, 9.0, 13.0, 19.0, 19.0, 22.0])
EV_B_VEC = np.array([7.0, 7.4, 7.8, 8.2, 8.6, 9.0, 9.4, 9.8, 10.2, 10.6])
EV_D_VEC.setflags(write=False)
EV_B_VEC.setflags(write=False)


@dataclass(frozen=True)
class GameInstance:
    """An n-agent aggregative game.

    Parameters
    ----------
    n, d : int
        Number of agents and dimension of each decision variable.
    costs, grad1, grad2 : sequence of callables, one per agent
        g_i(x, y), its partial gradient in the first slot, and its partial
        gradient in the second slot, following the broadcasting convention
        in the module docstring.
    cost_stackfn, grad1_stackfn, grad2_stackfn : callables, optional
        Vectorized fast paths mapping stacked (n, d) arrays to (n,) costs
        or (n, d) gradients.  When absent a per-agent loop is used.
    """

    n: int
    d: int
    costs: tuple
    grad1: tuple
    grad2: tuple
    name: str = "custom"
    cost_stackfn: Callable | None = None
    grad1_stackfn: Callable | None = None
    grad2_stackfn: Callable | None = None
    joint_gradfn: Callable | None = None  # optional closed form of SocialCostFn.grad

    def __post_init__(self):
        if self.n < 1 or self.d < 1:
            raise ValueError("n and d must be positive")
        for fam, label in ((self.costs, "costs"), (self.grad1, "grad1"), (self.grad2, "grad2")):
            if len(fam) != self.n:
                raise ValueError(f"{label} must have exactly n={self.n} entries, got {len(fam)}")
        object.__setattr__(self, "costs", tuple(self.costs))
        object.__setattr__(self, "grad1", tuple(self.grad1))
        object.__setattr__(self, "grad2", tuple(self.grad2))


def _as_point(value, d, label):
    p = np.asarray(value, dtype=float)
    if p.ndim == 0:
        if d != 1:
            raise ValueError(f"{label} must have dimension {d}")
        p = p.reshape(1)
    if p.shape[-1] != d:
        raise ValueError(f"{label} must have trailing dimension {d}, got shape {p.shape}")
    if not np.all(np.isfinite(p)):
        raise ValueError(f"{label} must be finite")
    return p


def _check_index(game, i):
    if not 0 <= i < game.n:
        raise IndexError(f"agent index {i} out of range for n={game.n}")


def eval_cost(game: GameInstance, i: int, x, y) -> float:
    """Evaluate g_i(x, y)."""
    _check_index(game, i)
    x = _as_point(x, game.d, "x")
    y = _as_point(y, game.d, "y")
    return float(game.costs[i](x, y))


def eval_grad(game: GameInstance, i: int, x, y, which: str) -> Array:
    """Evaluate a partial gradient of g_i; `which` is "first" or "second"."""
    _check_index(game, i)
    if which not in ("first", "second"):
        raise ValueError("which must be 'first' or 'second'")
    x = _as_point(x, game.d, "x")
    y = _as_point(y, game.d, "y")
    fam = game.grad1 if which == "first" else game.grad2
    return np.asarray(fam[i](x, y), dtype=float)


def agent_update_gradient(game: GameInstance, i: int, x, y) -> Array:
    """Agent i's own-cost gradient grad1_i(x, y) + (1/n) grad2_i(x, y).

    This is the total derivative of g_i along agent i's own decision when y
    is the network average (each agent moves the average by 1/n), i.e. the
    per-agent stationarity direction of a Nash equilibrium.  Note that it is
    not the joint social-cost partial, which sums the second-slot gradients
    of all agents.
    """
    g1 = eval_grad(game, i, x, y, "first")
    g2 = eval_grad(game, i, x, y, "second")
    return g1 + g2 / game.n


def social_update_gradient(game: GameInstance, i: int, x, y) -> Array:
    """Agent i's local surrogate of the social-cost partial.

    The joint social-cost partial is grad1_i(x_i, ybar) plus the average of
    all agents' second-slot gradients grad2_j(x_j, ybar).  When those
    second-slot gradients are aligned across agents (the bounded
    gradient-dissimilarity regime), the average taken around ybar is
    approximated to first order by the agent's own grad2 evaluated at the
    aggregate itself, giving the fully local rule

        grad1_i(x, y) + grad2_i(y, y)

    with y standing for the agent's tracked estimate of the average.
    """
    g1 = eval_grad(game, i, x, y, "first")
    g2 = eval_grad(game, i, y, y, "second")
    return g1 + g2


def cost_stack(game: GameInstance, x: Array, y: Array) -> Array:
    """Per-agent costs for stacked decisions: (n, d), (n, d) -> (n,)."""
    if game.cost_stackfn is not None:
        return game.cost_stackfn(x, y)
    return np.array([game.costs[i](x[i], y[i]) for i in range(game.n)])


def grad1_stack(game: GameInstance, x: Array, y: Array) -> Array:
    if game.grad1_stackfn is not None:
        return game.grad1_stackfn(x, y)
    return np.stack([np.asarray(game.grad1[i](x[i], y[i]), float) for i in range(game.n)])


def grad2_stack(game: GameInstance, x: Array, y: Array) -> Array:
    if game.grad2_stackfn is not None:
        return game.grad2_stackfn(x, y)
    return np.stack([np.asarray(game.grad2[i](x[i], y[i]), float) for i in range(game.n)])


@dataclass(frozen=True)
class SocialCostFn:
    """Network objective: joint decision in R^(n*d) -> sum_i g_i(x_i, xbar)."""

    game: GameInstance

    def _split(self, joint):
        joint = np.asarray(joint, dtype=float)
        n, d = self.game.n, self.game.d
        if joint.shape[-1] != n * d:
            raise ValueError(f"joint decision must have trailing dimension {n * d}")
        x = joint.reshape(joint.shape[:-1] + (n, d))
        return x, x.mean(axis=-2)

    def __call__(self, joint) -> Array:
        x, ybar = self._split(joint)
        total = 0.0
        for i in range(self.game.n):
            total = total + self.game.costs[i](x[..., i, :], ybar)
        return total

    def grad(self, joint) -> Array:
        """Full gradient of the social cost over the joint space.

        The partial for agent i is grad1_i(x_i, xbar) plus the average over
        all agents j of grad2_j(x_j, xbar), since each x_i shifts xbar by 1/n.
        """
        if self.game.joint_gradfn is not None:
            return np.asarray(self.game.joint_gradfn(np.asarray(joint, float)), float)
        x, ybar = self._split(joint)
        n, d = self.game.n, self.game.d
        g2s = [np.asarray(self.game.grad2[j](x[..., j, :], ybar), float) for j in range(n)]
        g2_mean = sum(g2s) / n
        parts = [
            np.asarray(self.game.grad1[i](x[..., i, :], ybar), float) + g2_mean
            for i in range(n)
        ]
        out = np.stack(parts, axis=-2)
        return out.reshape(out.shape[:-2] + (n * d,))


# ---------------------------------------------------------------------------
# Built-in instances
# ---------------------------------------------------------------------------

def quadratic_two_agent_game() -> GameInstance:
    """Two-agent quadratic game with known closed forms.

    g_1(x, y) = (x - 2)^2 + 2 y^2 and g_2(x, y) = (x - 3)^2 + 2 y^2, i.e. a
    coupling (x_1 + x_2)^2 / 2 rewritten through the average y = (x_1+x_2)/2.
    The social optimum is (1/3, 4/3) with cost 75/9; the Nash equilibrium is
    (3/4, 7/4) with cost 75/8.
    """
    targets = (2.0, 3.0)

    def make_cost(c):
        return lambda x, y: ((x - c) ** 2).sum(axis=-1) + 2.0 * (y ** 2).sum(axis=-1)

    def make_grad1(c):
        return lambda x, y: 2.0 * (x - c)

    grad2 = lambda x, y: 4.0 * y

    tvec = np.array(targets).reshape(2, 1)
    tvec.setflags(write=False)

    return GameInstance(
        n=2,
        d=1,
        costs=tuple(make_cost(c) for c in targets),
        grad1=tuple(make_grad1(c) for c in targets),
        grad2=(grad2, grad2),
        name="example1",
        cost_stackfn=lambda x, y: ((x - tvec) ** 2).sum(axis=-1) + 2.0 * (y ** 2).sum(axis=-1),
        grad1_stackfn=lambda x, y: 2.0 * (x - tvec),
        grad2_stackfn=lambda x, y: 4.0 * y,
    )


def ev_bill_functions(a: float, b: float, c: float, d: float, lam: float):
    """Cost/gradient triple for one charging agent.

    The electricity bill is a/(1 + exp(-(x - b))) + c*log(1 + (x - d)^2),
    non-convex in the departure hour x, plus a convex deviation penalty
    lam*(x - y)^2 against the public preference y.
    """

    def _sig(u):
        return 1.0 / (1.0 + np.exp(-np.clip(u, -500.0, 500.0)))

    def cost(x, y):
        u, v = x[..., 0], y[..., 0]
        return a * _sig(u - b) + c * np.log1p((u - d) ** 2) + lam * (u - v) ** 2

    def g1(x, y):
        u, v = x[..., 0], y[..., 0]
        s = _sig(u - b)
        val = a * s * (1.0 - s) + 2.0 * c * (u - d) / (1.0 + (u - d) ** 2) + 2.0 * lam * (u - v)
        return val[..., None]

    def g2(x, y):
        u, v = x[..., 0], y[..., 0]
        return (-2.0 * lam * (u - v))[..., None]

    return cost, g1, g2


def ev_charging_game(seed: int = 0, a=None, c=None, lam=None) -> GameInstance:
    """Ten-agent charging-control game with randomized bill coefficients.

    a_i and c_i are drawn once, uniformly on [5, 40]; the deviation
    sensitivity lam_i uniformly on (0, 2).  The draws are frozen at
    construction from `seed` so a given seed always yields the same game.
    Explicit coefficient arrays override the draws.
    """
    rng = np.random.default_rng(seed)
    a = np.asarray(a, float) if a is not None else rng.uniform(5.0, 40.0, EV_N)
    c = np.asarray(c, float) if c is not None else rng.uniform(5.0, 40.0, EV_N)
    lam = np.asarray(lam, float) if lam is not None else rng.uniform(0.0, 2.0, EV_N)
    if a.shape != (EV_N,) or c.shape != (EV_N,) or lam.shape != (EV_N,):
        raise ValueError(f"coefficient arrays must have shape ({EV_N},)")
    for arr in (a, c, lam):
        arr.setflags(write=False)

    triples = [
        ev_bill_functions(a[i], EV_B_VEC[i], c[i], EV_D_VEC[i], lam[i]) for i in range(EV_N)
    ]

    def _stack_parts(x, y):
        u, v = x[..., 0], y[..., 0]
        s = 1.0 / (1.0 + np.exp(-np.clip(u - EV_B_VEC, -500.0, 500.0)))
        return u, v, s

    def cost_stackfn(x, y):
        u, v, s = _stack_parts(x, y)
        return a * s + c * np.log1p((u - EV_D_VEC) ** 2) + lam * (u - v) ** 2

    def grad1_stackfn(x, y):
        u, v, s = _stack_parts(x, y)
        val = a * s * (1.0 - s) + 2.0 * c * (u - EV_D_VEC) / (1.0 + (u - EV_D_VEC) ** 2)
        return (val + 2.0 * lam * (u - v))[..., None]

    def grad2_stackfn(x, y):
        u, v = x[..., 0], y[..., 0]
        return (-2.0 * lam * (u - v))[..., None]

    return GameInstance(
        n=EV_N,
        d=1,
        costs=tuple(t[0] for t in triples),
        grad1=tuple(t[1] for t in triples),
        grad2=tuple(t[2] for t in triples),
        name="ev",
        cost_stackfn=cost_stackfn,
        grad1_stackfn=grad1_stackfn,
        grad2_stackfn=grad2_stackfn,
    )


def double_well(z, tilt: float = 0.25, offset: float = 0.0):
    """Tilted one-dimensional double well (z^2 - 1)^2 + tilt*z + offset."""
    z = np.asarray(z, dtype=float)
    return (z ** 2 - 1.0) ** 2 + tilt * z + offset


def double_well_grad(z, tilt: float = 0.25):
    z = np.asarray(z, dtype=float)
    return 4.0 * z * (z ** 2 - 1.0) + tilt


def double_well_game(tilt: float = 0.25, offset: float = 0.0) -> GameInstance:
    """Single-agent wrapper around the double well, used as a 1-D testbed.

    With n = 1 the network average equals the decision itself, so the social
    cost reduces to the double well and the swarm iterations reduce to their
    centralized counterpart.
    """

    def cost(x, y):
        return double_well(x[..., 0], tilt, offset)

    def g1(x, y):
        return double_well_grad(x[..., 0], tilt)[..., None]

    def g2(x, y):
        return np.zeros_like(x)

    return GameInstance(
        n=1, d=1, costs=(cost,), grad1=(g1,), grad2=(g2,), name="doublewell",
        joint_gradfn=lambda z: double_well_grad(z, tilt),
    )


BUILTIN_GAMES = {
    "example1": lambda seed=0, **kw: quadratic_two_agent_game(),
    "ev": ev_charging_game,
    "doublewell": lambda seed=0, **kw: double_well_game(**kw),
}

DEFAULT_INIT_BOX = {"example1": (-5.0, 5.0), "ev": (0.0, 24.0), "doublewell": (-3.0, 3.0)}


def make_game(name: str, seed: int = 0, **overrides) -> GameInstance:
    if name not in BUILTIN_GAMES:
        raise ValueError(f"unknown game {name!r}; built-ins: {sorted(BUILTIN_GAMES)}")
    return BUILTIN_GAMES[name](seed=seed, **overrides)


# ---------------------------------------------------------------------------
# Numeric sanity checkers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GradientCheckReport:
    """Finite-difference agreement report for the analytic gradients."""

    max_rel_error: float
    tol: float
    failures: tuple  # (agent, point_index, which, rel_error)

    @property
    def passed(self) -> bool:
        return len(self.failures) == 0


def _fd_gradient(fn, x, y, slot, h):
    d = x.shape[-1]
    out = np.empty(d)
    for j in range(d):
        e = np.zeros(d)
        e[j] = h
        if slot == 0:
            out[j] = (fn(x + e, y) - fn(x - e, y)) / (2.0 * h)
        else:
            out[j] = (fn(x, y + e) - fn(x, y - e)) / (2.0 * h)
    return out


def check_gradients(game: GameInstance, probe_grid: Sequence, step: float = 1e-6,
                    tol: float = 1e-5) -> GradientCheckReport:
    """Compare analytic partial gradients with central finite differences.

    The relative error at each probe is |analytic - fd| / (1 + |analytic|),
    componentwise; entries above `tol` are flagged in the report.
    """
    probes = list(probe_grid)
    if not probes:
        raise ValueError("probe grid must be non-empty")
    worst = 0.0
    failures = []
    for p_idx, (x, y) in enumerate(probes):
        x = _as_point(x, game.d, "x")
        y = _as_point(y, game.d, "y")
        for i in range(game.n):
            for which, slot, fam in (("first", 0, game.grad1), ("second", 1, game.grad2)):
                analytic = np.asarray(fam[i](x, y), float)
                fd = _fd_gradient(game.costs[i], x, y, slot, step)
                rel = float(np.max(np.abs(analytic - fd) / (1.0 + np.abs(analytic))))
                worst = max(worst, rel)
                if rel > tol:
                    failures.append((i, p_idx, which, rel))
    return GradientCheckReport(max_rel_error=worst, tol=tol, failures=tuple(failures))


def probe_grid_1d(lo: float, hi: float, m: int):
    """Cartesian (x, y) probe pairs over an m-point 1-D lattice."""
    pts = np.linspace(lo, hi, m)
    return [(float(x), float(y)) for x in pts for y in pts]


@dataclass(frozen=True)
class ReferenceFunction:
    """Gradient pair of a common comparison function G(x, y)."""

    grad1: Callable
    grad2: Callable


def mean_reference(game: GameInstance) -> ReferenceFunction:
    """The average of the per-agent costs as the default common function."""

    def g1(x, y):
        return sum(np.asarray(g(x, y), float) for g in game.grad1) / game.n

    def g2(x, y):
        return sum(np.asarray(g(x, y), float) for g in game.grad2) / game.n

    return ReferenceFunction(grad1=g1, grad2=g2)


@dataclass(frozen=True)
class DissimilarityReport:
    """Empirical gradient-dissimilarity sup per agent against a common G.

    Monte-Carlo estimate of sup ||grad g_i - grad G|| over the sampled
    region.  This is a necessary-condition check only: a finite empirical
    sup never proves boundedness over all of R^d.  `growth` compares the sup
    at the full radius against the sup at half the radius; agents whose sup
    keeps growing with radius are flagged as possibly unbounded.
    """

    radius: float
    sup1: Array
    sup2: Array
    half_sup1: Array
    half_sup2: Array
    suspects: tuple          # agents with non-finite evaluations
    growth_flagged: tuple    # agents whose sup grows materially with radius
    sample_count: int

    @property
    def passed(self) -> bool:
        return len(self.suspects) == 0


def check_dissimilarity_bound(game: GameInstance, reference: ReferenceFunction | None = None,
                              sample_count: int = 2000, radius: float = 10.0,
                              center: float = 0.0, seed: int = 0,
                              growth_tol: float = 1.5) -> DissimilarityReport:
    """Sample ||grad1 g_i - grad1 G|| and ||grad2 g_i - grad2 G|| over a region.

    Points (x, y) are drawn uniformly from the box of half-width `radius`
    (and half-width radius/2 for the growth comparison) centered at `center`.
    """
    if sample_count < 1:
        raise ValueError("sample_count must be >= 1")
    if radius <= 0:
        raise ValueError("radius must be positive")
    ref = reference if reference is not None else mean_reference(game)
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-1.0, 1.0, size=(sample_count, 2, game.d))

    def sups(r):
        xs = center + r * pts[:, 0, :]
        ys = center + r * pts[:, 1, :]
        r1 = np.asarray(ref.grad1(xs, ys), float)
        r2 = np.asarray(ref.grad2(xs, ys), float)
        s1 = np.empty(game.n)
        s2 = np.empty(game.n)
        bad = []
        for i in range(game.n):
            d1 = np.linalg.norm(np.asarray(game.grad1[i](xs, ys), float) - r1, axis=-1)
            d2 = np.linalg.norm(np.asarray(game.grad2[i](xs, ys), float) - r2, axis=-1)
            if not (np.all(np.isfinite(d1)) and np.all(np.isfinite(d2))):
                bad.append(i)
                d1 = np.nan_to_num(d1, nan=np.inf)
                d2 = np.nan_to_num(d2, nan=np.inf)
            s1[i] = d1.max()
            s2[i] = d2.max()
        return s1, s2, bad

    sup1, sup2, bad_full = sups(radius)
    half_sup1, half_sup2, bad_half = sups(radius / 2.0)
    suspects = tuple(sorted(set(bad_full) | set(bad_half)))
    flagged = []
    for i in range(game.n):
        for full, half in ((sup1[i], half_sup1[i]), (sup2[i], half_sup2[i])):
            if half > 0 and np.isfinite(full) and full / half >= growth_tol:
                flagged.append(i)
                break
    return DissimilarityReport(
        radius=radius, sup1=sup1, sup2=sup2, half_sup1=half_sup1, half_sup2=half_sup2,
        suspects=suspects, growth_flagged=tuple(flagged), sample_count=sample_count,
    )


def find_nonconvexity_witness(game: GameInstance, lo: float, hi: float, m: int = 400):
    """Search the diagonal x -> g_i(x, x) for a negative second difference.

    Returns (agent, point, second_difference) for the first agent exhibiting
    local concavity on the scan grid, or None if every sampled second
    difference is nonnegative (no witness found at this resolution).
    """
    if game.d != 1:
        raise ValueError("witness scan supports d = 1 games only")
    ts = np.linspace(lo, hi, m)
    for i in range(game.n):
        vals = game.costs[i](ts[:, None], ts[:, None])
        second = vals[2:] - 2.0 * vals[1:-1] + vals[:-2]
        idx = np.argmin(second)
        if second[idx] < 0:
            return i, float(ts[idx + 1]), float(second[idx])
    return None
