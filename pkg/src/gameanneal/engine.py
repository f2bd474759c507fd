"""Iteration engines: distributed annealing, its deterministic baseline, and
the centralized annealing recursion.

One distributed iteration at counter k (all agents synchronously reading the
k-snapshot) is

    s_i = v_i - beta_k * sum_j w_ij (v_i - v_j)        consensus mixing
    x_i' = x_i - alpha_k * (drift_i(x_i, s_i) + noise) + gamma_k * excitation
    v_i' = s_i + x_i' - x_i                            tracking update

with v initialized to x, which makes the agent averages of v and x coincide
for all k.  The annealing iteration ("daa") uses the local social-gradient
surrogate grad1_i(x_i, s_i) + grad2_i(s_i, s_i) as its drift, plus both
noise terms; the deterministic baseline ("daag") uses the own-cost gradient
grad1 + (1/n) grad2 and no noise, so its fixed points are per-agent
stationary (Nash) profiles rather than social optima.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import games, topology
from .config import ExperimentConfig, build_game, build_network
from .noise import NoiseModel, NoiseStreams, stream, seed_key
from .schedules import ScheduleSet
from .trace import RunTrace

Array = np.ndarray

MAX_ABS = 1e12  # divergence guard: abort once any state entry passes this

# Engine-owned stream tags (2 and 3 belong to the noise module).
_TAG_INIT = 0
_TAG_GRAPH = 1


class DivergenceError(RuntimeError):
    """A state entry left the finite range; names the agent and iteration."""

    def __init__(self, agent: int, iteration: int):
        self.agent = agent
        self.iteration = iteration
        super().__init__(f"divergence at iteration {iteration}, agent {agent}")


@dataclass(frozen=True)
class SwarmState:
    """Per-agent triples at iteration k.

    `s` carries the mixing output computed during the step that produced
    this state (the s-values of step k-1 for a state at counter k); the
    initial state uses s = v.
    """

    k: int
    x: Array  # (n, d)
    v: Array  # (n, d)
    s: Array  # (n, d)


def initial_swarm(n: int, d: int, box, rng) -> SwarmState:
    """Uniform initial decisions in [lo, hi] per coordinate, with v = x."""
    lo, hi = box
    x0 = rng.uniform(lo, hi, size=(n, d))
    return SwarmState(k=1, x=x0, v=x0.copy(), s=x0.copy())


def _guard(arr: Array, k: int):
    with np.errstate(invalid="ignore"):
        if np.isfinite(arr).all() and np.abs(arr).max() <= MAX_ABS:
            return
    bad = ~np.isfinite(arr) | (np.abs(arr) > MAX_ABS)
    agent = int(np.argwhere(bad)[0][0])
    raise DivergenceError(agent, k)


def _mix(state: SwarmState, graph: topology.GraphSample, sched: ScheduleSet,
         beta_cap: float | None) -> tuple[Array, float]:
    beta = sched.beta(state.k)
    if beta_cap is not None:
        beta = min(beta, beta_cap)
    s = state.v - beta * (graph.laplacian @ state.v)
    return s, beta


def daa_step(state: SwarmState, game: games.GameInstance, graph: topology.GraphSample,
             sched: ScheduleSet, noise: NoiseModel, streams: NoiseStreams,
             beta_cap: float | None = None) -> SwarmState:
    """One annealing iteration; returns the state at k+1 with s recorded."""
    k = state.k
    s, _ = _mix(state, graph, sched, beta_cap)
    alpha = sched.alpha(k)
    with np.errstate(all="ignore"):
        grad = games.grad1_stack(game, state.x, s) + games.grad2_stack(game, s, s)
        if noise.gradient.kind != "none":
            grad = grad + streams.gradient(game.d)
        x_next = state.x - alpha * grad
        if noise.annealing != "none":
            x_next = x_next + sched.gamma(k) * streams.annealing(game.d)
        v_next = s + x_next - state.x
    _guard(x_next, k)
    _guard(v_next, k)
    return SwarmState(k=k + 1, x=x_next, v=v_next, s=s)


def daag_step(state: SwarmState, game: games.GameInstance, graph: topology.GraphSample,
              sched: ScheduleSet, beta_cap: float | None = None) -> SwarmState:
    """One deterministic baseline iteration (own-cost gradient, no noise)."""
    k = state.k
    s, _ = _mix(state, graph, sched, beta_cap)
    alpha = sched.alpha(k)
    with np.errstate(all="ignore"):
        grad = games.grad1_stack(game, state.x, s) + games.grad2_stack(game, state.x, s) / game.n
        x_next = state.x - alpha * grad
        v_next = s + x_next - state.x
    _guard(x_next, k)
    _guard(v_next, k)
    return SwarmState(k=k + 1, x=x_next, v=v_next, s=s)


def centralized_anneal_step(z: Array, k: int, objective_grad, sched: ScheduleSet,
                            noise: NoiseModel, streams: NoiseStreams) -> Array:
    """One centralized recursion step z' = z - alpha*(grad + xi) + gamma*w."""
    z = np.asarray(z, dtype=float)
    with np.errstate(all="ignore"):
        g = np.asarray(objective_grad(z), dtype=float)
        if noise.gradient.kind != "none":
            g = g + streams.gradient(z.shape[-1])[0]
        z_next = z - sched.alpha(k) * g
        if noise.annealing != "none":
            z_next = z_next + sched.gamma(k) * streams.annealing(z.shape[-1])[0]
    _guard(z_next.reshape(-1, 1), k)  # "agent" reports the offending component
    return z_next


def beta_safety_cap(model: topology.NetworkModel) -> float | None:
    """Mixing-weight clamp 0.49/max_degree.

    Keeps I - beta*L a strict contraction on the disagreement subspace for
    every pool graph even at k = 1, where the raw beta schedule can exceed
    the stability range 2/lambda_max.
    """
    md = model.max_degree()
    return 0.49 / md if md > 0 else None


def run(cfg: ExperimentConfig) -> RunTrace:
    """Execute a configured run and return its trace.

    A fresh graph is sampled per iteration.  Rows are recorded at the
    configured stride; the first ten iterations and the last iteration are
    always kept so early-transient diagnostics stay meaningful.  With
    horizon T = 0 the trace holds only the initial state.
    """
    cfg.validate()
    game = build_game(cfg.game)
    model = build_network(cfg.network)
    method = cfg.method
    sched = cfg.schedule
    noise = cfg.noise if method != "daag" else NoiseModel(annealing="none")
    key = seed_key(cfg.seed)
    init_rng = stream(key, _TAG_INIT)
    graph_rng = stream(key, _TAG_GRAPH)
    streams = noise.open_streams(key, game.n if method != "centralized" else 1)
    cap = beta_safety_cap(model)

    state = initial_swarm(game.n, game.d, cfg.init_box, init_rng)

    if method == "centralized":
        return _run_centralized(cfg, game, sched, noise, streams, state.x)

    rows = []
    T = cfg.horizon

    def record(k, x, v, s):
        xbar = x.mean(axis=0)
        rows.append((k, x, v, s, xbar,
                     np.linalg.norm(s - xbar, axis=-1),
                     float(np.sum(games.cost_stack(game, x, np.broadcast_to(xbar, x.shape))))))

    if T == 0:
        record(1, state.x, state.v, state.s)
    for k in range(1, T + 1):
        graph = topology.sample_graph(model, graph_rng)
        if method == "daa":
            new = daa_step(state, game, graph, sched, noise, streams, beta_cap=cap)
        else:
            new = daag_step(state, game, graph, sched, beta_cap=cap)
        if k % cfg.record_stride == 0 or k <= 10 or k == T:
            record(k, state.x, state.v, new.s)
        state = new

    return _assemble(cfg, rows, state)


def _run_centralized(cfg, game, sched, noise, streams, x0):
    social = games.SocialCostFn(game)
    nd = game.n * game.d
    z = x0.reshape(nd)
    rows = []
    T = cfg.horizon

    def record(k, z):
        x = z.reshape(game.n, game.d)
        xbar = x.mean(axis=0)
        rows.append((k, x, x, x, xbar,
                     np.linalg.norm(x - xbar, axis=-1), float(social(z))))

    if T == 0:
        record(1, z)
    for k in range(1, T + 1):
        z_next = centralized_anneal_step(z, k, social.grad, sched, noise, streams)
        if k % cfg.record_stride == 0 or k <= 10 or k == T:
            record(k, z)
        z = z_next

    final = SwarmState(k=T + 1, x=z.reshape(game.n, game.d), v=z.reshape(game.n, game.d), s=None)
    return _assemble(cfg, rows, final)


def _assemble(cfg, rows, final_state) -> RunTrace:
    ks = np.array([r[0] for r in rows], dtype=int)
    return RunTrace(
        ks=ks,
        x=np.stack([r[1] for r in rows]),
        v=np.stack([r[2] for r in rows]),
        s=np.stack([r[3] for r in rows]),
        xbar=np.stack([r[4] for r in rows]),
        consensus=np.stack([r[5] for r in rows]),
        social_cost=np.array([r[6] for r in rows]),
        final_x=final_state.x,
        final_v=final_state.v,
        config=cfg.to_dict(),
        fingerprint=cfg.fingerprint(),
        seeds={"run": cfg.seed, "game": cfg.game.seed, "network": cfg.network.seed},
    )
