import numpy as np
import pytest

from gameanneal.noise import GradientNoise, NoiseModel, seed_key, stream


class TestGradientNoise:
    @pytest.mark.parametrize("kind,scale", [("uniform", 5.0), ("gaussian", 2.0)])
    def test_zero_mean(self, kind, scale):
        spec = GradientNoise(kind, scale)
        rng = np.random.default_rng(0)
        N = 40_000
        draws = np.array([spec.sample(rng, 1)[0] for _ in range(N)])
        sigma = draws.std()
        assert abs(draws.mean()) <= 4 * sigma / np.sqrt(N)

    def test_second_moment_below_declared_bound(self):
        n, d, N = 3, 1, 20_000
        model = NoiseModel(GradientNoise("uniform", 5.0))
        streams = model.open_streams(0, n)
        sq = np.array([(streams.gradient(d) ** 2).sum() for _ in range(N)])
        assert sq.mean() <= model.gradient.second_moment_bound(n, d)

    def test_none_kind_draws_nothing(self):
        model = NoiseModel(GradientNoise("none"))
        assert model.open_streams(0, 2).gradient(1) is None

    def test_validation(self):
        with pytest.raises(ValueError):
            GradientNoise("laplace", 1.0)
        with pytest.raises(ValueError):
            GradientNoise("uniform", 0.0)
        with pytest.raises(ValueError):
            NoiseModel(annealing="cauchy")


class TestAnnealingNoise:
    def test_standard_normal_sanity(self):
        streams = NoiseModel().open_streams(1, 2)
        draws = np.array([streams.annealing(1) for _ in range(10_000)])
        var = draws.reshape(-1).var()
        assert 0.9 <= var <= 1.1

    def test_agents_mutually_independent_streams(self):
        streams = NoiseModel().open_streams(7, 3)
        block = np.array([streams.annealing(1) for _ in range(100)])  # (100, 3, 1)
        corr = np.corrcoef(block[:, :, 0].T)
        off = corr[~np.eye(3, dtype=bool)]
        assert np.max(np.abs(off)) < 0.25

    def test_off_switch(self):
        assert NoiseModel(annealing="none").open_streams(0, 2).annealing(1) is None


class TestStreamDiscipline:
    def test_same_seed_same_draws(self):
        a = NoiseModel(GradientNoise("uniform", 5.0)).open_streams((9, 2), 4)
        b = NoiseModel(GradientNoise("uniform", 5.0)).open_streams((9, 2), 4)
        assert np.array_equal(a.gradient(1), b.gradient(1))
        assert np.array_equal(a.annealing(1), b.annealing(1))

    def test_kind_streams_disjoint(self):
        # gradient and annealing streams must not share state
        model = NoiseModel(GradientNoise("gaussian", 1.0))
        s1 = model.open_streams(5, 1)
        s2 = model.open_streams(5, 1)
        g1 = s1.gradient(1)
        a1 = s1.annealing(1)
        a2 = s2.annealing(1)  # drawn without touching the gradient stream
        assert np.array_equal(a1, a2)
        assert not np.array_equal(g1, a1)

    def test_seed_key_normalization(self):
        assert seed_key(5) == (5,)
        assert seed_key((5, 1)) == (5, 1)
        assert seed_key([5, 1]) == (5, 1)

    def test_gradient_noise_decay_weighted_by_iteration(self):
        # max over the second half of (k+1)^-0.6 * |noise| never exceeds the
        # max over the first half, since the noise itself has constant scale
        model = NoiseModel(GradientNoise("uniform", 5.0))
        streams = model.open_streams(3, 4)
        T = 4000
        weighted = np.array([
            (k + 1) ** -0.6 * np.linalg.norm(streams.gradient(1))
            for k in range(1, T + 1)
        ])
        assert weighted[T // 2:].max() <= weighted[: T // 2].max()
