import math

import numpy as np
import pytest

from gameanneal import engine, games, topology
from gameanneal.config import ExperimentConfig, GameSpec, NetworkSpec
from gameanneal.engine import (
    DivergenceError,
    SwarmState,
    centralized_anneal_step,
    daa_step,
    daag_step,
    run,
)
from gameanneal.noise import GradientNoise, NoiseModel
from gameanneal.schedules import ScheduleSet

NO_NOISE = NoiseModel(GradientNoise("none"), "none")


def zero_game(n):
    f = (
        lambda x, y: np.zeros(x.shape[:-1]),
        lambda x, y: np.zeros_like(x),
        lambda x, y: np.zeros_like(x),
    )
    return games.GameInstance(n=n, d=1, costs=(f[0],) * n, grad1=(f[1],) * n, grad2=(f[2],) * n)


def state(x, v=None, s=None, k=1):
    x = np.asarray(x, float).reshape(-1, 1)
    v = x.copy() if v is None else np.asarray(v, float).reshape(-1, 1)
    s = v.copy() if s is None else np.asarray(s, float).reshape(-1, 1)
    return SwarmState(k=k, x=x, v=v, s=s)


def cfg_example1(method="daa", **kw):
    base = dict(
        game=GameSpec("example1", 0),
        network=NetworkSpec("complete", 2),
        method=method,
        schedule=ScheduleSet(1.0, 0.4, 0.3, 0.25, 3),
        noise=NoiseModel(),
        horizon=200,
        record_stride=1,
        seed=1,
        init_box=(-5.0, 5.0),
    )
    base.update(kw)
    return ExperimentConfig(**base)


class TestMixing:
    def test_complete_graph_mixing(self):
        # beta = 0.25 at k = 1, zero gradients and noises: s = v - beta*L v
        sched = ScheduleSet(c_alpha=1.0, c_beta=0.25, c_gamma=1.0, tau_beta=0.25)
        st = state([0.0, 0.0], v=[1.0, 3.0])
        streams = NO_NOISE.open_streams(0, 2)
        new = daa_step(st, zero_game(2), topology.complete_graph(2), sched, NO_NOISE, streams)
        assert np.allclose(new.s.reshape(-1), [1.5, 2.5])
        assert np.array_equal(new.x, st.x)
        assert np.array_equal(new.v, new.s)

    def test_edgeless_no_mixing(self):
        sched = ScheduleSet(c_beta=0.3)
        st = state([0.5, -2.0], v=[1.0, 3.0])
        streams = NO_NOISE.open_streams(0, 2)
        new = daa_step(st, zero_game(2), topology.edgeless_graph(2), sched, NO_NOISE, streams)
        assert np.array_equal(new.s, st.v)

    def test_beta_cap_clamps_mixing(self):
        sched = ScheduleSet(c_beta=0.4)
        st = state([0.0, 0.0], v=[1.0, 3.0])
        streams = NO_NOISE.open_streams(0, 2)
        new = daa_step(st, zero_game(2), topology.complete_graph(2), sched, NO_NOISE,
                       streams, beta_cap=0.1)
        # with beta clamped to 0.1: s_0 = 1 - 0.1*(1-3) = 1.2
        assert np.allclose(new.s.reshape(-1), [1.2, 2.8])


class TestWorkedExample:
    def test_one_step_from_origin(self):
        game = games.quadratic_two_agent_game()
        sched = ScheduleSet(c_alpha=0.5, c_beta=0.4, c_gamma=1.0, tau_beta=0.25)
        st = state([0.0, 0.0])
        streams = NO_NOISE.open_streams(0, 2)
        new = daa_step(st, game, topology.complete_graph(2), sched, NO_NOISE, streams)
        assert np.allclose(new.x.reshape(-1), [2.0, 3.0])
        daag = daag_step(st, game, topology.complete_graph(2), sched)
        assert np.allclose(daag.x.reshape(-1), [2.0, 3.0])

    def test_zero_gradient_game_constant(self):
        sched = ScheduleSet()
        st = state([1.0, -4.0])
        streams = NO_NOISE.open_streams(0, 2)
        cur = st
        for _ in range(20):
            cur = daa_step(cur, zero_game(2), topology.complete_graph(2), sched, NO_NOISE, streams)
        assert np.array_equal(cur.x, st.x)

    def test_iteration_index_must_be_positive(self):
        st = state([0.0, 0.0], k=0)
        streams = NO_NOISE.open_streams(0, 2)
        with pytest.raises(ValueError):
            daa_step(st, zero_game(2), topology.complete_graph(2), ScheduleSet(), NO_NOISE, streams)


class TestScalarReference:
    def test_matches_independent_scalar_implementation(self):
        # Pure-python scalar re-implementation of the three update equations
        # for the two-agent quadratic game, noises off.
        game = games.quadratic_two_agent_game()
        sched = ScheduleSet(c_alpha=0.7, c_beta=0.3, c_gamma=1.0, tau_beta=0.25)
        model = topology.erdos_renyi_pool(2, 8, (0.3, 1.0), seed=2)
        rng = np.random.default_rng(5)
        graphs = [topology.sample_graph(model, rng) for _ in range(60)]

        targets = (2.0, 3.0)
        x = [0.8, -1.5]
        v = x[:]
        for k, graph in enumerate(graphs, start=1):
            beta = 0.3 / k ** 0.25
            alpha = 0.7 / k
            W = graph.adjacency
            s = [
                v[i] - beta * sum(W[i][j] * (v[i] - v[j]) for j in range(2))
                for i in range(2)
            ]
            # drift: grad1 at (x_i, s_i) plus grad2 evaluated at the estimate
            g = [2.0 * (x[i] - targets[i]) + 4.0 * s[i] for i in range(2)]
            x_next = [x[i] - alpha * g[i] for i in range(2)]
            v = [s[i] + x_next[i] - x[i] for i in range(2)]
            x = x_next

        st = state([0.8, -1.5])
        streams = NO_NOISE.open_streams(0, 2)
        for graph in graphs:
            st = daa_step(st, game, graph, sched, NO_NOISE, streams)
        assert np.max(np.abs(st.x.reshape(-1) - x)) <= 1e-12
        assert np.max(np.abs(st.v.reshape(-1) - v)) <= 1e-12


class TestTrackingIdentities:
    def test_sbar_equals_vbar_and_vbar_equals_xbar(self):
        cfg = ExperimentConfig(
            game=GameSpec("ev", 0),
            network=NetworkSpec("fixed-pool", 10, pool_size=20, p_range=(0.1, 0.4), seed=3),
            method="daa",
            schedule=ScheduleSet(1.0, 0.4, 1.0, 0.25, 3),
            noise=NoiseModel(GradientNoise("uniform", 5.0)),
            horizon=300,
            record_stride=1,
            seed=4,
            init_box=(0.0, 24.0),
        )
        trace = run(cfg)
        n = trace.n
        sbar = trace.s.mean(axis=1)
        vbar = trace.v.mean(axis=1)
        xbar = trace.x.mean(axis=1)
        assert np.max(np.abs(sbar - vbar)) <= 1e-12 * n
        assert np.max(np.abs(vbar - xbar)) <= 1e-12 * n


class TestBaselineReductions:
    def test_daag_bitwise_deterministic(self):
        cfg = cfg_example1("daag", network=NetworkSpec("fixed-pool", 2, pool_size=6,
                                                       p_range=(0.5, 1.0), seed=9))
        a, b = run(cfg), run(cfg)
        assert np.array_equal(a.x, b.x) and np.array_equal(a.final_x, b.final_x)

    def test_noise_off_daa_coincides_with_daag_when_grad2_zero(self):
        f = (
            lambda x, y: ((x - 1.5) ** 2).sum(-1),
            lambda x, y: 2.0 * (x - 1.5),
            lambda x, y: np.zeros_like(x),
        )
        game = games.GameInstance(n=2, d=1, costs=(f[0],) * 2, grad1=(f[1],) * 2, grad2=(f[2],) * 2)
        sched = ScheduleSet(1.0, 0.4, 1.0, 0.25, 3)
        model = topology.erdos_renyi_pool(2, 5, (0.5, 1.0), seed=1)
        rng = np.random.default_rng(3)
        graphs = [topology.sample_graph(model, rng) for _ in range(40)]
        streams = NO_NOISE.open_streams(0, 2)
        a = state([4.0, -2.0])
        b = state([4.0, -2.0])
        for graph in graphs:
            a = daa_step(a, game, graph, sched, NO_NOISE, streams)
            b = daag_step(b, game, graph, sched)
        assert np.array_equal(a.x, b.x)
        assert np.array_equal(a.v, b.v)
        assert np.array_equal(a.s, b.s)


class TestCentralized:
    def test_zero_gradient_constant(self):
        streams = NO_NOISE.open_streams(0, 1)
        z = np.array([1.23])
        for k in range(1, 10):
            z = centralized_anneal_step(z, k, lambda t: np.zeros_like(t), ScheduleSet(),
                                        NO_NOISE, streams)
        assert z[0] == 1.23

    def test_quadratic_first_step_lands_at_zero(self):
        # G(z) = z^2/2 with c_alpha = 1: z' = z - (1/1)*z = 0 after k=1
        streams = NO_NOISE.open_streams(0, 1)
        z = centralized_anneal_step(np.array([1.0]), 1, lambda t: t, ScheduleSet(c_alpha=1.0),
                                    NO_NOISE, streams)
        assert z[0] == 0.0


class TestDivergenceGuard:
    def test_swarm_divergence_reported_with_agent_and_iteration(self):
        cfg = cfg_example1(
            "daa",
            game=GameSpec("doublewell", 0),
            network=NetworkSpec("complete", 1),
            schedule=ScheduleSet(5.0, 0.4, 1.0, 0.25, 3),
            noise=NO_NOISE,
            init_box=(3.0, 3.0),
            horizon=50,
        )
        with pytest.raises(DivergenceError) as err:
            run(cfg)
        assert err.value.agent == 0
        assert err.value.iteration >= 1

    def test_magnitude_guard(self):
        st = state([1.0])
        streams = NO_NOISE.open_streams(0, 1)
        big = games.GameInstance(
            n=1, d=1,
            costs=(lambda x, y: (x ** 2).sum(-1),),
            grad1=(lambda x, y: np.full_like(x, -1e14),),
            grad2=(lambda x, y: np.zeros_like(x),),
        )
        with pytest.raises(DivergenceError):
            daa_step(st, big, topology.edgeless_graph(1), ScheduleSet(), NO_NOISE, streams)


class TestRun:
    def test_zero_horizon_keeps_initial_state_only(self):
        cfg = cfg_example1(horizon=0)
        trace = run(cfg)
        assert list(trace.ks) == [1]
        assert np.array_equal(trace.x[0], trace.v[0])
        assert np.array_equal(trace.x[0], trace.s[0])
        assert np.array_equal(trace.final_x, trace.x[0])

    def test_identical_config_bitwise_identical_traces(self, tmp_path):
        cfg = cfg_example1(horizon=500, record_stride=7)
        a, b = run(cfg), run(cfg)
        for fld in ("ks", "x", "v", "s", "xbar", "consensus", "social_cost"):
            assert np.array_equal(getattr(a, fld), getattr(b, fld))
        pa, pb = tmp_path / "a.csv", tmp_path / "b.csv"
        a.to_csv(pa)
        b.to_csv(pb)
        assert pa.read_bytes() == pb.read_bytes()

    def test_recording_includes_head_and_tail(self):
        cfg = cfg_example1(horizon=95, record_stride=20)
        trace = run(cfg)
        ks = set(trace.ks.tolist())
        assert set(range(1, 11)) <= ks
        assert 95 in ks and 20 in ks and 40 in ks

    def test_seed_changes_trajectory(self):
        a = run(cfg_example1(seed=1))
        b = run(cfg_example1(seed=2))
        assert not np.array_equal(a.x, b.x)

    def test_centralized_run_records_dispersion(self):
        cfg = cfg_example1(
            "centralized",
            game=GameSpec("doublewell", 0),
            network=NetworkSpec("complete", 1),
            init_box=(1.0, 1.0),
            horizon=50,
        )
        trace = run(cfg)
        assert trace.n == 1
        assert np.all(trace.consensus == 0.0)

    def test_daag_ignores_noise_spec(self):
        noisy = cfg_example1("daag", noise=NoiseModel(GradientNoise("uniform", 5.0)))
        silent = cfg_example1("daag", noise=NO_NOISE)
        a, b = run(noisy), run(silent)
        assert np.array_equal(a.x, b.x)
