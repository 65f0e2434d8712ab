import math

import numpy as np
import pytest

from burgulence import dynamics as dy
from burgulence import spectral as sp
from burgulence import turbulence as tb
from burgulence.errors import BandError, DomainError, ResolutionError
from burgulence.noise import DEFAULT_NOISE
from burgulence.records import COLUMNS, TrajectoryRecord
from burgulence.spectral import SpectralField


def frozen(coeffs, member=0, t_end=3.0, n=7):
    """A record whose snapshots all equal ``coeffs``."""
    t = np.linspace(0, t_end, n)
    c = np.asarray(coeffs.coeffs if isinstance(coeffs, SpectralField) else coeffs, dtype=complex)
    return TrajectoryRecord(t=t, columns={k: np.zeros(n) for k in COLUMNS}, member_index=member,
                            snap_t=t, snapshots=np.tile(c, (n, 1)))


def band_limited(n, support, seed):
    rng = np.random.default_rng(seed)
    c = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.arange(1, n + 1)
    c[support:] = 0
    return c


class TestStructureFunction:
    def test_e1_closed_form(self):
        recs = [frozen(sp.single_mode(1, 16), i) for i in range(2)]
        l = [1 / 64, 0.1, 0.25, 0.5]
        s = tb.structure_function(recs, 2, l, 1.0, 1.0)
        np.testing.assert_allclose(s.values, 4 * np.sin(np.pi * s.l_used) ** 2, rtol=1e-12)
        assert np.all(s.std_errors == 0)

    def test_zero_shift(self):
        recs = [frozen(band_limited(16, 16, i), i) for i in range(3)]
        assert tb.structure_function(recs, 1.5, [0.0], 1.0, 1.0).values[0] == 0.0

    def test_reports_used_separation(self):
        recs = [frozen(sp.single_mode(1, 16))]
        s = tb.structure_function(recs, 2, [0.1], 1.0, 1.0, grid_size=64)
        assert s.l_used[0] == pytest.approx(6 / 64)
        assert s.l_requested[0] == 0.1

    def test_parseval_side(self):
        c = band_limited(32, 20, 4)
        l = np.arange(1, 60) / 128
        recs = [frozen(c)]
        direct = tb.structure_function(recs, 2, l, 1.0, 1.0, grid_size=128).values
        np.testing.assert_allclose(direct, tb.parseval_s2(c, l), atol=1e-8)

    def test_holder_monotone(self):
        c = band_limited(32, 32, 9)
        u = sp.grid_values(c, 128)
        shifts = np.arange(1, 64)
        prev = None
        for p in (0.5, 1, 2, 3):
            cur = tb.increment_moments(u, shifts, p) ** (1 / p)
            if prev is not None:
                assert np.all(prev <= cur * (1 + 1e-12))
            prev = cur

    def test_resolution_error(self):
        with pytest.raises(ResolutionError):
            tb.structure_function([frozen(sp.single_mode(1, 16))], 2, [1e-3], 1.0, 1.0, grid_size=64)


class TestEnergySpectrum:
    def test_e1_hand_value(self):
        e = tb.energy_spectrum([frozen(sp.single_mode(1, 4))], 2, [1], 1.0, 1.0)
        assert e.values[0] == pytest.approx(1 / 6, rel=1e-14)

    def test_zero(self):
        e = tb.energy_spectrum([frozen(SpectralField.zeros(32))], 4, [1, 2, 4, 8], 1.0, 1.0)
        assert np.all(e.values == 0)

    def test_disjoint_band_bookkeeping(self):
        # M = 2: bands [0.75, 3], [3.5, 14], [15, 60] share no integer n
        rng = np.random.default_rng(2)
        power = rng.random(96)
        M = 2.0
        ks = np.array([1.5, 7.0, 30.0])
        E = tb.spectrum_of(power, M, ks)
        recovered = np.sum(2 * ks * (M - 1 / M) * E)
        n = np.arange(1, 97)
        covered = np.zeros(96, bool)
        for k in ks:
            covered |= (n >= k / M) & (n <= M * k)
        assert recovered == pytest.approx(power[covered].sum(), rel=1e-13)

    def test_basis_invariance(self):
        f = SpectralField(band_limited(32, 32, 6))
        ks = [1, 2, 4, 8]
        from_complex = tb.spectrum_of(tb.mode_power(f), 4, ks)
        from_real = tb.spectrum_of(tb.mode_power(sp.complex_to_real(f)), 4, ks)
        np.testing.assert_allclose(from_complex, from_real, rtol=1e-12)

    def test_band_error(self):
        with pytest.raises(BandError):
            tb.energy_spectrum([frozen(SpectralField.zeros(16))], 4, [5], 1.0, 1.0)
        with pytest.raises(BandError):
            tb.band_weights(1.0, [1], 16)


class TestScalingFit:
    def test_exact(self):
        x = np.array([1.0, 2, 3, 5])
        f = tb.scaling_fit(list(zip(x, 3 * x ** 2)))
        assert f.slope == pytest.approx(2.0, rel=1e-12)
        assert f.r2 == pytest.approx(1.0)

    def test_noisy(self):
        rng = np.random.default_rng(0)
        x = np.geomspace(1, 100, 20)
        y = x ** -1 * (1 + 0.01 * rng.standard_normal(20))
        assert tb.scaling_fit(list(zip(x, y))).within(-1.0, 0.05)

    def test_domain(self):
        with pytest.raises(DomainError):
            tb.scaling_fit([(1.0, 1.0)])
        with pytest.raises(DomainError):
            tb.scaling_fit([(1, 1), (2, 0), (3, 1), (4, 1)])


class TestSpaceScale:
    def test_synthetic(self):
        nu = 0.005
        k = np.arange(1, 4097, dtype=float)
        power = k ** -2.0 * np.exp(-k * nu)
        rep = tb.space_scale_from_power(power, [0.5, 0.8, 1.5], nu, (4, 20))
        assert rep.row(0.5)["class"] == "algebraic"
        assert rep.row(0.8)["class"] == "algebraic"
        assert rep.row(1.5)["class"] == "super-algebraic"

    def test_zero(self):
        rep = tb.space_scale_from_power(np.zeros(64), [0.5, 1.0], 0.1, (2, 4))
        assert all(r["value"] == 0 and r["class"] == "trivial" for r in rep.rows)

    def test_truncation(self):
        with pytest.raises(BandError):
            tb.space_scale_from_power(np.ones(64), [1.5], 0.02, (2, 4))

    def test_inertial_range(self):
        lo, hi = tb.inertial_k_range(0.01)
        assert (lo, hi) == (pytest.approx(1 / tb.C2), pytest.approx(1 / (tb.C1 * 0.01)))

    @pytest.mark.slow
    def test_dissipative_tail_below_k8_line(self):
        # nu = 0.05, gamma = 1.5 -> k = 90: below the k^-8 line anchored at the inertial range
        nu = 0.05
        c = dy.SimConfig(nu=nu, n_modes=128, dt=2e-4, t_end=6.0, save_every=500, snapshot_every=500)
        recs = dy.run_ensemble(SpectralField.zeros(128), c, DEFAULT_NOISE, 0, 8)
        rep = tb.space_scale_assay(recs, [1.5], nu, 1.0, 5.0)
        row = rep.row(1.5)
        k0 = rep.inertial[0]
        k8_line = rep.anchor * k0 ** -2.0 * (row["k"] / k0) ** -8.0
        assert row["k"] == math.ceil(nu ** -1.5)
        assert row["value"] < k8_line
