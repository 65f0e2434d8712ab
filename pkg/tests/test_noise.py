import numpy as np
import pytest

from burgulence.noise import (
    DEFAULT_NOISE,
    NoiseSpec,
    RngStream,
    b_sum,
    increment_chisquare,
    path_moments_test,
    sample_increment,
    simulate_paths,
)

UNIT_PAIR = NoiseSpec.from_pairs({1: 1.0, -1: 1.0})


class TestBSum:
    def test_unit_pair(self):
        assert b_sum(UNIT_PAIR, 0) == 2.0
        assert b_sum(UNIT_PAIR, 1) == 2.0

    def test_inverse_square(self):
        spec = NoiseSpec.from_pairs({s: abs(s) ** -2.0 for s in (-3, -2, -1, 1, 2, 3)})
        assert b_sum(spec, 0) == pytest.approx(2 * (1 + 1 / 16 + 1 / 81), rel=1e-15)

    def test_default_profile(self):
        assert b_sum(DEFAULT_NOISE, 0) == pytest.approx(1.0, rel=1e-14)
        assert DEFAULT_NOISE.support == 16
        assert DEFAULT_NOISE.b(3) == pytest.approx(DEFAULT_NOISE.b(1) / 27)
        assert np.isfinite(b_sum(DEFAULT_NOISE, 4))

    def test_pairs_round_trip(self):
        spec = NoiseSpec.from_pairs({2: 0.5, -1: 0.25})
        assert dict(spec.pairs()) == {2: 0.5, -1: 0.25}
        with pytest.raises(ValueError):
            NoiseSpec.from_pairs({0: 1.0})


class TestIncrements:
    def test_zero_spec(self):
        inc = sample_increment(NoiseSpec.zero(), 0.1, RngStream(1), n_modes=8)
        assert np.all(inc.pos == 0) and np.all(inc.neg == 0)

    def test_variance(self):
        spec = NoiseSpec.from_pairs({1: 1.0})
        rng = RngStream(42)
        n = 100_000
        x = np.array([sample_increment(spec, 0.01, rng)[1] for _ in range(n)])
        var = x.var(ddof=1)
        se = 0.01 * np.sqrt(2.0 / (n - 1))
        assert abs(var - 0.01) <= 3 * se

    def test_determinism(self):
        a = [sample_increment(DEFAULT_NOISE, 1e-3, RngStream(9, 4)).pos for _ in range(1)]
        b = [sample_increment(DEFAULT_NOISE, 1e-3, RngStream(9, 4)).pos for _ in range(1)]
        np.testing.assert_array_equal(a, b)
        c = sample_increment(DEFAULT_NOISE, 1e-3, RngStream(9, 5)).pos
        assert not np.array_equal(a[0], c)

    def test_chunking_invariance(self):
        r1, r2 = RngStream(3, 1), RngStream(3, 1)
        whole = r1.normals((4, 6))
        parts = np.vstack([r2.normals((1, 6)) for _ in range(4)])
        np.testing.assert_array_equal(whole, parts)
        assert r1.counter == r2.counter == 24

    def test_support_beyond_truncation(self):
        with pytest.raises(ValueError):
            sample_increment(DEFAULT_NOISE, 0.1, RngStream(0), n_modes=8)

    def test_chisquare(self):
        # R*T/dt >= 1e4 normalised increments per forced mode
        assert increment_chisquare(UNIT_PAIR, 0.01, 10_000, master_seed=5) > 0.01


class TestPathMoments:
    def test_unit_pair(self):
        rep = path_moments_test(UNIT_PAIR, T=1.0, dt=0.01, R=1000, master_seed=11)
        assert rep.exact_final_sq == 2.0
        assert rep.final_ok
        assert rep.doob_bound == 8.0
        assert rep.doob_ok
        # the sup is at least the endpoint value
        assert rep.mean_sup_sq >= rep.mean_final_sq

    def test_zero(self):
        rep = path_moments_test(NoiseSpec.zero(), 1.0, 0.01, 100)
        assert rep.mean_final_sq == rep.mean_sup_sq == rep.se_final_sq == 0.0

    def test_linear_growth_on_grid(self):
        sq = simulate_paths(DEFAULT_NOISE, T=1.0, dt=0.05, R=2000, master_seed=2)
        t = np.arange(sq.shape[1]) * 0.05
        mean = sq.mean(axis=0)
        se = sq.std(axis=0, ddof=1) / np.sqrt(sq.shape[0])
        assert np.all(np.abs(mean[1:] - t[1:]) <= 3 * se[1:] + 1e-12)
