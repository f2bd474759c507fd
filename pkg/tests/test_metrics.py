import numpy as np
import pytest

from gameanneal import games, metrics
from gameanneal.config import ExperimentConfig, GameSpec, NetworkSpec
from gameanneal.engine import run
from gameanneal.metrics import (
    ball_indicator,
    compare_costs,
    consensus_error,
    ensemble_run,
    social_cost_series,
)
from gameanneal.noise import GradientNoise, NoiseModel
from gameanneal.schedules import ScheduleSet
from gameanneal.trace import RunTrace

NO_NOISE = NoiseModel(GradientNoise("none"), "none")


def make_trace(xs, tau_beta=0.25, s=None):
    """Trace with explicit per-iteration joint decisions (m, n) and d = 1."""
    xs = np.asarray(xs, float)
    m, n = xs.shape
    x = xs[:, :, None]
    s_arr = x.copy() if s is None else np.asarray(s, float)[:, :, None]
    xbar = x.mean(axis=1)
    return RunTrace(
        ks=np.arange(1, m + 1),
        x=x, v=x.copy(), s=s_arr, xbar=xbar,
        consensus=np.linalg.norm(s_arr - xbar[:, None, :], axis=-1),
        social_cost=np.zeros(m),
        final_x=x[-1], final_v=x[-1],
        config={"schedule": {"tau_beta": tau_beta}},
    )


def quick_cfg(method="daa", game_name="example1", n=2, horizon=150, **kw):
    base = dict(
        game=GameSpec(game_name, 0),
        network=NetworkSpec("complete", n),
        method=method,
        schedule=ScheduleSet(1.0, 0.4, 0.3, 0.25, 3),
        noise=NoiseModel(),
        horizon=horizon,
        record_stride=1,
        replicates=3,
        seed=0,
        init_box=(-5.0, 5.0),
    )
    base.update(kw)
    return ExperimentConfig(**base)


class TestConsensusError:
    def test_all_zero_when_s_equals_average(self):
        tr = make_trace([[1.0, 1.0], [2.5, 2.5]])
        series = consensus_error(tr, 0.2)
        assert np.all(series.values == 0.0)

    def test_tau_zero_is_plain_deviation(self):
        xs = np.array([[0.0, 2.0], [1.0, 3.0]])
        tr = make_trace(xs, s=xs + np.array([0.5, -0.5]))
        series = consensus_error(tr, 0.0)
        assert np.array_equal(series.values, tr.consensus)

    def test_weights_apply(self):
        xs = np.array([[0.0, 2.0]])
        tr = make_trace(xs, s=xs + np.array([1.0, 1.0]))
        series = consensus_error(tr, 0.2)
        assert np.allclose(series.values, tr.consensus * 2 ** 0.2)

    def test_tau_out_of_admissible_range_rejected(self):
        tr = make_trace([[0.0, 1.0]], tau_beta=0.25)
        with pytest.raises(ValueError, match="0.25"):
            consensus_error(tr, 0.25)  # 1/2 - tau_beta == 0.25 exactly
        with pytest.raises(ValueError):
            consensus_error(tr, -0.1)

    def test_decade_maxima(self):
        ks = np.concatenate([np.arange(1, 11), [50, 100, 1000]])
        m = len(ks)
        tr = make_trace(np.zeros((m, 2)))
        vals = np.linspace(10, 1, m)[:, None] * np.ones((m, 2))
        series = metrics.ConsensusSeries(ks=ks, values=vals, tau=0.0)
        assert series.first_decade_max() == vals[: 10].max()
        assert series.last_decade_max() == vals[-2:].max()


class TestSocialCostSeries:
    def test_closed_form_points(self):
        g = games.quadratic_two_agent_game()
        tr = make_trace([[1 / 3, 4 / 3], [3 / 4, 7 / 4]])
        series = social_cost_series(tr, g)
        assert abs(series[0] - 75 / 9) <= 1e-12
        assert abs(series[1] - 75 / 8) <= 1e-12

    def test_single_agent_power_law(self):
        f = (
            lambda x, y: (x ** 2).sum(-1),
            lambda x, y: 2.0 * x,
            lambda x, y: np.zeros_like(x),
        )
        g = games.GameInstance(n=1, d=1, costs=(f[0],), grad1=(f[1],), grad2=(f[2],))
        ks = np.arange(1, 11)
        tr = make_trace((1.0 / ks)[:, None])
        assert np.allclose(social_cost_series(tr, g), 1.0 / ks ** 2)

    def test_dimension_mismatch_rejected(self):
        with pytest.raises(ValueError):
            social_cost_series(make_trace([[0.0, 1.0]]), games.ev_charging_game())

    def test_matches_trace_column_from_engine(self):
        cfg = quick_cfg(horizon=60)
        tr = run(cfg)
        series = social_cost_series(tr, games.quadratic_two_agent_game())
        assert np.allclose(series, tr.social_cost, atol=1e-12)


class TestEnsemble:
    def test_deterministic_runs_have_zero_variance(self):
        # degenerate init box makes every replicate identical under daag
        cfg = quick_cfg("daag", init_box=(2.0, 2.0), replicates=4, noise=NO_NOISE)
        stats = ensemble_run(cfg)
        assert stats.completed == 4
        assert np.all(stats.tail_avgs.std(axis=0) == 0.0)
        assert np.all(stats.tail_costs.std() == 0.0)

    def test_same_base_seed_reproducible(self):
        cfg = quick_cfg(replicates=3, horizon=100)
        a, b = ensemble_run(cfg), ensemble_run(cfg)
        assert np.array_equal(a.tail_avgs, b.tail_avgs)
        assert np.array_equal(a.tail_costs, b.tail_costs)

    def test_requires_two_replicates(self):
        with pytest.raises(ValueError):
            ensemble_run(quick_cfg(replicates=1))

    def test_ball_indicator_mean_equals_fraction(self):
        cfg = quick_cfg(replicates=5, horizon=100)
        ref = np.array([1 / 3, 4 / 3])
        stats = ensemble_run(cfg, test_functions={"near_opt": ball_indicator(ref.mean(), 5.0)})
        # bound-1 indicator of a huge ball is 1 for every agent and replicate
        assert np.allclose(stats.test_means["near_opt"], 1.0)

    def test_divergent_replicates_excluded_and_disclosed(self):
        cfg = quick_cfg(
            "daa",
            game=GameSpec("doublewell", 0),
            network=NetworkSpec("complete", 1),
            schedule=ScheduleSet(5.0, 0.4, 1.0, 0.25, 3),
            noise=NO_NOISE,
            init_box=(3.0, 3.0),
            horizon=30,
            replicates=3,
        )
        stats = ensemble_run(cfg)
        assert stats.completed == 0
        assert len(stats.divergences) == 3

    def test_fraction_within(self):
        cfg = quick_cfg("daag", init_box=(2.0, 2.0), replicates=3, noise=NO_NOISE,
                        horizon=4000, record_stride=10)
        stats = ensemble_run(cfg)
        nash = np.array([0.75, 1.75])
        assert stats.fraction_within(nash, 0.1, on="tail") == 1.0
        assert stats.fraction_within(nash + 10.0, 0.1, on="final") == 0.0

    def test_final_average_histogram(self):
        cfg = quick_cfg("daag", init_box=(2.0, 2.0), replicates=3, noise=NO_NOISE,
                        horizon=200)
        stats = ensemble_run(cfg)
        counts, edges = stats.xbar_histogram(bins=5)
        assert counts.sum() == 3
        assert len(edges) == 6


class TestPlotDataEmission:
    def test_figure_csv_columns(self, tmp_path):
        g = games.quadratic_two_agent_game()
        tr = make_trace([[0.0, 2.0], [1.0, 3.0]])
        series = consensus_error(tr, 0.2)
        cost = social_cost_series(tr, g)
        paths = {
            "consensus": tmp_path / "c.csv",
            "tracking": tmp_path / "t.csv",
            "decisions": tmp_path / "d.csv",
            "cost": tmp_path / "f.csv",
        }
        metrics.write_consensus_csv(series, paths["consensus"])
        metrics.write_tracking_csv(tr, paths["tracking"])
        metrics.write_decisions_csv(tr, paths["decisions"])
        metrics.write_cost_csv(tr.ks, {"daa": cost}, paths["cost"])
        assert paths["consensus"].read_text().splitlines()[0] == "k,agent,weighted_error"
        assert paths["tracking"].read_text().splitlines()[0] == "k,agent,s,xbar"
        assert paths["decisions"].read_text().splitlines()[0] == "k,agent,x"
        lines = paths["cost"].read_text().splitlines()
        assert lines[0] == "k,cost_daa"
        assert len(lines) == 3


class TestCompareCosts:
    def test_identical_traces_tie(self):
        g = games.quadratic_two_agent_game()
        tr = make_trace(np.tile([[0.5, 1.0]], (30, 1)))
        rep = compare_costs(tr, tr, g)
        assert rep.difference == 0.0
        assert rep.smaller == "tie"

    def test_direction(self):
        g = games.quadratic_two_agent_game()
        near = make_trace(np.tile([[1 / 3, 4 / 3]], (20, 1)))
        far = make_trace(np.tile([[3 / 4, 7 / 4]], (20, 1)))
        rep = compare_costs(near, far, g)
        assert rep.smaller == "a"
        assert abs(rep.difference + 75 / 72) <= 1e-12

    def test_window_validation(self):
        g = games.quadratic_two_agent_game()
        tr = make_trace(np.tile([[0.5, 1.0]], (5, 1)))
        with pytest.raises(ValueError):
            compare_costs(tr, tr, g, window=6)
