"""Convergence diagnostics computed from run traces.

Covers the rate-weighted consensus error, social-cost trajectories, replicate
ensembles for concentration statistics, and cost comparisons between methods.
All functions are pure over immutable traces.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import games
from .config import ExperimentConfig, build_game
from .engine import DivergenceError, run
from .trace import RunTrace

Array = np.ndarray


@dataclass(frozen=True)
class ConsensusSeries:
    """Weighted tracking deviations e_i^k = (k+1)^tau * ||s_i^k - xbar^k||."""

    ks: Array       # (m,)
    values: Array   # (m, n)
    tau: float

    def max_per_k(self) -> Array:
        return self.values.max(axis=1)

    def first_decade_max(self) -> float:
        """Max over recorded iterations within a factor 10 of the first."""
        mask = self.ks <= 10 * self.ks[0]
        return float(self.values[mask].max())

    def last_decade_max(self) -> float:
        mask = self.ks >= self.ks[-1] / 10
        return float(self.values[mask].max())


def consensus_error(trace: RunTrace, tau: float) -> ConsensusSeries:
    """Weighted consensus-error series for each agent.

    tau must lie in [0, 1/2 - tau_beta) for the trace's consensus decay
    exponent tau_beta; the almost-sure tracking rate only covers that range.
    """
    tau_beta = trace.config["schedule"]["tau_beta"]
    admissible = 0.5 - tau_beta
    if not 0.0 <= tau < admissible:
        raise ValueError(
            f"tau={tau} out of range: must lie in [0, 1/2 - tau_beta) = [0, {admissible})"
        )
    weights = (trace.ks + 1.0) ** tau
    return ConsensusSeries(ks=trace.ks.copy(), values=weights[:, None] * trace.consensus, tau=tau)


def social_cost_series(trace: RunTrace, game: games.GameInstance) -> Array:
    """Sum of g_i(x_i^k, xbar^k) for every recorded iteration."""
    if trace.n != game.n or trace.d != game.d:
        raise ValueError(
            f"trace is ({trace.n}, {trace.d}) but game is ({game.n}, {game.d})"
        )
    total = np.zeros(len(trace.ks))
    for i in range(game.n):
        total += np.asarray(game.costs[i](trace.x[:, i, :], trace.xbar), float)
    return total


@dataclass(frozen=True)
class EnsembleStats:
    """Across-replicate statistics of independently seeded runs.

    Divergent replicates are recorded and excluded from the arrays; all
    statistics cover the `completed` replicates only, with the divergence
    count disclosed alongside.
    """

    replicates: int
    base_seed: int
    tail_fraction: float
    tail_avgs: Array          # (completed, n*d)
    final_xs: Array           # (completed, n*d)
    final_xbars: Array        # (completed, d)
    tail_costs: Array         # (completed,)
    divergences: tuple        # (replicate, iteration, agent)
    test_means: dict = field(default_factory=dict)  # name -> (n,) per-agent means

    @property
    def completed(self) -> int:
        return len(self.tail_costs)

    def fraction_within(self, reference, radius: float, on: str = "tail") -> float:
        """Fraction of completed replicates within L2 `radius` of `reference`."""
        return self.count_within(reference, radius, on) / max(self.completed, 1)

    def count_within(self, reference, radius: float, on: str = "tail") -> int:
        pts = self.tail_avgs if on == "tail" else self.final_xs
        ref = np.asarray(reference, float).reshape(-1)
        return int((np.linalg.norm(pts - ref, axis=1) <= radius).sum())

    def xbar_histogram(self, bins: int = 20):
        return np.histogram(self.final_xbars.reshape(-1), bins=bins)

    def to_dict(self) -> dict:
        return {
            "replicates": self.replicates,
            "completed": self.completed,
            "base_seed": self.base_seed,
            "tail_fraction": self.tail_fraction,
            "divergences": [list(map(int, t)) for t in self.divergences],
            "tail_avgs": self.tail_avgs.tolist(),
            "final_xs": self.final_xs.tolist(),
            "tail_costs": self.tail_costs.tolist(),
            "test_means": {k: v.tolist() for k, v in self.test_means.items()},
        }


def ensemble_run(cfg: ExperimentConfig, replicates: int | None = None,
                 test_functions: dict | None = None) -> EnsembleStats:
    """Run R independently seeded replicates and collect tail statistics.

    Replicate r runs with seed key (cfg.seed, r).  `test_functions` maps a
    name to a (fn, bound) pair; fn(x_i, s_i) is evaluated per agent at the
    final recorded iteration, clamped to [-bound, bound], and averaged over
    completed replicates as the empirical expectation of a bounded test
    function.
    """
    R = cfg.replicates if replicates is None else replicates
    if R < 2:
        raise ValueError("an ensemble needs at least 2 replicates")
    test_functions = test_functions or {}
    tail_avgs, final_xs, final_xbars, tail_costs, failures = [], [], [], [], []
    sums = {name: None for name in test_functions}
    for r in range(R):
        cfg_r = cfg.with_seed((cfg.seed, r))
        try:
            trace = run(cfg_r)
        except DivergenceError as exc:
            failures.append((r, exc.iteration, exc.agent))
            continue
        tail_avgs.append(trace.tail_average_x(cfg.tail_fraction))
        final_xs.append(trace.x[-1].reshape(-1))
        final_xbars.append(trace.xbar[-1])
        tail_costs.append(trace.tail_mean_cost(cfg.tail_fraction))
        for name, (fn, bound) in test_functions.items():
            vals = np.array([
                np.clip(float(fn(trace.x[-1, i], trace.s[-1, i])), -bound, bound)
                for i in range(trace.n)
            ])
            sums[name] = vals if sums[name] is None else sums[name] + vals
    completed = R - len(failures)
    means = {name: total / completed for name, total in sums.items()
             if total is not None and completed > 0}
    return EnsembleStats(
        replicates=R,
        base_seed=cfg.seed,
        tail_fraction=cfg.tail_fraction,
        tail_avgs=np.array(tail_avgs) if tail_avgs else np.empty((0, 0)),
        final_xs=np.array(final_xs) if final_xs else np.empty((0, 0)),
        final_xbars=np.array(final_xbars) if final_xbars else np.empty((0, 0)),
        tail_costs=np.array(tail_costs),
        divergences=tuple(failures),
        test_means=means,
    )


@dataclass(frozen=True)
class CostComparison:
    mean_a: float
    mean_b: float
    window_rows: int

    @property
    def difference(self) -> float:
        return self.mean_a - self.mean_b

    @property
    def smaller(self) -> str:
        if self.mean_a < self.mean_b:
            return "a"
        if self.mean_b < self.mean_a:
            return "b"
        return "tie"


def compare_costs(trace_a: RunTrace, trace_b: RunTrace, game: games.GameInstance,
                  window: int | None = None, tail_fraction: float = 0.1) -> CostComparison:
    """Final-window mean social cost of two traces over the same game."""
    cost_a = social_cost_series(trace_a, game)
    cost_b = social_cost_series(trace_b, game)
    rows = window if window is not None else max(1, int(round(tail_fraction * len(cost_a))))
    if rows > len(cost_a) or rows > len(cost_b):
        raise ValueError(f"window of {rows} rows exceeds trace length")
    return CostComparison(
        mean_a=float(cost_a[-rows:].mean()),
        mean_b=float(cost_b[-rows:].mean()),
        window_rows=rows,
    )


def ball_indicator(center, radius: float):
    """Indicator test function of an L2 ball around `center`, bound 1."""
    c = np.asarray(center, float).reshape(-1)

    def fn(x_i, s_i):
        return 1.0 if np.linalg.norm(np.asarray(x_i, float).reshape(-1) - c) <= radius else 0.0

    return fn, 1.0


# ---------------------------------------------------------------------------
# Plot-data emission: one CSV per diagnostic figure, consumed by the CLI.
# Floats are written with repr so identical runs emit byte-identical files.
# ---------------------------------------------------------------------------

def _write_rows(path, header, rows):
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")


def write_consensus_csv(series: ConsensusSeries, path):
    """Columns: k, agent, weighted_error = (k+1)^tau * ||s_i - xbar||."""
    n = series.values.shape[1]
    _write_rows(path, "k,agent,weighted_error", (
        (str(int(k)), str(i), repr(float(series.values[r, i])))
        for r, k in enumerate(series.ks) for i in range(n)
    ))


def write_tracking_csv(trace: RunTrace, path):
    """Columns: k, agent, s, xbar (first decision coordinate)."""
    _write_rows(path, "k,agent,s,xbar", (
        (str(int(k)), str(i), repr(float(trace.s[r, i, 0])), repr(float(trace.xbar[r, 0])))
        for r, k in enumerate(trace.ks) for i in range(trace.n)
    ))


def write_decisions_csv(trace: RunTrace, path):
    """Columns: k, agent, x (first decision coordinate)."""
    _write_rows(path, "k,agent,x", (
        (str(int(k)), str(i), repr(float(trace.x[r, i, 0])))
        for r, k in enumerate(trace.ks) for i in range(trace.n)
    ))


def write_cost_csv(ks, named_series: dict, path):
    """Columns: k plus one social-cost column per named series."""
    names = list(named_series)
    header = "k," + ",".join(f"cost_{name}" for name in names)
    _write_rows(path, header, (
        (str(int(k)), *(repr(float(named_series[name][r])) for name in names))
        for r, k in enumerate(ks)
    ))
