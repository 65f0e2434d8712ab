import math

import numpy as np
import pytest

from burgulence import dynamics as dy
from burgulence import ergodicity as eg
from burgulence import spectral as sp
from burgulence.errors import SampleError, WindowError
from burgulence.noise import DEFAULT_NOISE, NoiseSpec
from burgulence.records import COLUMNS, TrajectoryRecord
from burgulence.spectral import SpectralField


def scalar_measure(x):
    x = np.asarray(x, dtype=float)
    return eg.EmpiricalMeasure(x[:, None], ("x",), (1.0,))


class TestDictionary:
    def test_declared_constants_hold(self):
        assert eg.lipschitz_violations(eg.DEFAULT_DICTIONARY, n_pairs=1000) == {
            f.name: 0 for f in eg.DEFAULT_DICTIONARY}

    def test_catches_false_constant(self):
        liar = eg.DictObservable("scaled", lambda c: 10 * np.sqrt(sp.sobolev_sq(c, 1)), 1.0)
        assert eg.lipschitz_violations([liar], n_pairs=200)["scaled"] > 0

    def test_values(self):
        f = sp.single_mode(1, 4, 2.0)
        vals = {d.name: float(d(f)) for d in eg.DEFAULT_DICTIONARY}
        assert vals["norm0"] == pytest.approx(2.0)
        assert vals["norm1"] == pytest.approx(4 * np.pi)
        assert vals["re_u1"] == pytest.approx(np.sqrt(2)) and vals["im_u1"] == 0


class TestLipDual:
    def test_identical(self):
        m = scalar_measure(np.random.default_rng(0).random(50))
        assert eg.lip_dual_lower_bound(m, m) == 0.0

    def test_translation(self):
        x = np.random.default_rng(1).random(40)
        a, b = scalar_measure(x), scalar_measure(x + 0.3)
        scale = eg.normalisation(a, b)[0]
        assert eg.lip_dual_lower_bound(a, b) == pytest.approx(0.3 * scale, rel=1e-12)

    def test_gaussian_shift(self):
        rng = np.random.default_rng(2)
        a, b = scalar_measure(rng.standard_normal(10_000)), scalar_measure(1 + rng.standard_normal(10_000))
        assert eg.lip_dual_lower_bound(a, b, scales=[1.0]) == pytest.approx(1.0, abs=0.05)

    def test_pseudometric(self):
        rng = np.random.default_rng(3)
        ms = [eg.EmpiricalMeasure(rng.standard_normal((30, 3)) + i, ("a", "b", "c"), (1, 1, 1)) for i in range(3)]
        s = np.ones(3)
        d = lambda p, q: eg.lip_dual_lower_bound(p, q, s)
        assert d(ms[0], ms[1]) == d(ms[1], ms[0])
        assert d(ms[0], ms[2]) <= d(ms[0], ms[1]) + d(ms[1], ms[2]) + 1e-12

    def test_subsamples_larger(self):
        a = scalar_measure(np.arange(10.0))
        b = scalar_measure(np.arange(20.0))
        assert eg.lip_dual_lower_bound(a, b, scales=[1.0]) >= 0

    def test_sample_error(self):
        with pytest.raises(SampleError):
            eg.lip_dual_lower_bound(scalar_measure([1.0]), scalar_measure([1.0, 2.0]))


def ramp_record(values, t_end=10.0, member=0):
    t = np.linspace(0, t_end, len(values))
    cols = {c: np.zeros(len(values)) for c in COLUMNS}
    cols["norm0"] = np.asarray(values, float)
    return TrajectoryRecord(t=t, columns=cols, member_index=member)


class TestBK:
    def test_constant(self):
        assert eg.bk_average(ramp_record(np.full(11, 2.5)), "norm0", 1, 9) == pytest.approx(2.5)

    def test_window(self):
        with pytest.raises(WindowError):
            eg.bk_average(ramp_record(np.ones(11)), "norm0", 5, 4)

    def test_decaying_run_between_endpoints(self):
        c = dy.SimConfig(nu=0.1, n_modes=32, dt=1e-3, t_end=3.0, save_every=10)
        rec = dy.run(sp.single_mode(1, 32, 0.5), c, NoiseSpec.zero())
        avg = eg.bk_average(rec, "norm0_sq", 1.0, 3.0)
        e = rec["norm0_sq"]
        assert e[rec.t >= 3.0 - 1e-9][0] < avg < e[np.argmin(abs(rec.t - 1.0))]

    @pytest.mark.slow
    def test_stationarity_and_initial_condition_independence(self):
        c = dy.SimConfig(nu=0.1, n_modes=64, dt=5e-4, t_end=25.0, save_every=200)
        recs = dy.run_ensemble(SpectralField.zeros(64), c, DEFAULT_NOISE, 0, 16)
        assert eg.agree(eg.bk_ensemble(recs, "norm0_sq", 5, 15), eg.bk_ensemble(recs, "norm0_sq", 15, 25))
        far = dy.run_ensemble(sp.single_mode(1, 64, 1.0), c, DEFAULT_NOISE, 0, range(16, 32))
        assert eg.agree(eg.bk_ensemble(recs, "norm1_sq", 5, 25), eg.bk_ensemble(far, "norm1_sq", 5, 25))


class TestMixing:
    def test_same_start_shared_noise_is_zero(self):
        c = dy.SimConfig(nu=0.1, n_modes=32, dt=1e-3, t_end=1.0, save_every=10)
        u = sp.single_mode(1, 32, 0.5)
        curve = eg.mixing_decay(u, u, c, DEFAULT_NOISE, 8, [0.5, 1.0], shared_noise=True)
        assert np.all(curve.values == 0)

    def test_same_start_within_floor(self):
        c = dy.SimConfig(nu=0.1, n_modes=32, dt=1e-3, t_end=1.0, save_every=10)
        u = sp.single_mode(1, 32, 0.5)
        curve = eg.mixing_decay(u, u, c, DEFAULT_NOISE, 60, [0.5, 1.0, 2.0])
        assert np.all(curve.values <= 3 * curve.floor)

    def test_grid_check(self):
        with pytest.raises(ValueError):
            eg._snapshot_stride([0.5, 0.25005], 1e-3)

    @pytest.mark.slow
    def test_shared_noise_decays_faster(self):
        c = dy.SimConfig(nu=0.1, n_modes=32, dt=1e-3, t_end=1.0, save_every=10)
        a, b = sp.single_mode(1, 32, 1.0), sp.single_mode(1, 32, -1.0)
        ind = eg.mixing_decay(a, b, c, DEFAULT_NOISE, 50, [1.0, 3.0])
        sh = eg.mixing_decay(a, b, c, DEFAULT_NOISE, 50, [1.0, 3.0], shared_noise=True)
        assert sh.value_at(3.0) <= ind.value_at(3.0)


class TestRecurrence:
    def test_large_epsilon(self):
        c = dy.SimConfig(nu=0.1, n_modes=32, dt=1e-3, t_end=1.0, save_every=10)
        rep = eg.hitting_times(c, DEFAULT_NOISE, epsilon=100.0, R=10, T_max=1.0, T_grid=[0.5, 1.0])
        assert np.all(rep.times == 0) and np.all(rep.survival == 0)

    def test_deterministic_gronwall(self):
        nu, eps = 0.1, 0.05
        u0 = sp.single_mode(1, 32, 1.0) + sp.single_mode(-3, 32, 0.5)
        c = dy.SimConfig(nu=nu, n_modes=32, dt=1e-3, t_end=1.0, save_every=10)
        bound = math.log(sp.sobolev_norm(u0, 0) / eps) / nu
        rep = eg.hitting_times(c, NoiseSpec.zero(), eps, R=2, T_max=math.ceil(bound), u0=u0)
        assert np.all(rep.times <= bound)

    def test_survival_monotone_and_bands(self):
        times = np.array([0.1, 0.5, 0.5, 2.0, np.inf, 3.0])
        surv, lo, hi = eg.survival_curve(times, [0, 0.5, 1, 2.5, 5])
        assert np.all(np.diff(surv) <= 0)
        assert np.all(lo <= surv) and np.all(surv <= hi)
        assert surv[0] == 1.0 and surv[-1] == pytest.approx(1 / 6)
