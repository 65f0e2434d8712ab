"""
Burgulence statistics: structure functions, the band-averaged energy
spectrum, the dissipation-scale assay and log-log scaling fits.

All quantities are bracketed over an ensemble of snapshot-carrying records
with :func:`burgulence.diagnostics.bracket`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import stats

from . import spectral as sp
from .diagnostics import bracket
from .errors import BandError, DomainError, ResolutionError
from .records import TrajectoryRecord
from .spectral import RealCoeffs, SpectralField

# Operational inertial-range constants: l in [C1*nu, C2], k in [1/C2, 1/(C1*nu)].
# C2 sits where S_2(l)/l is flattest at nu = 0.01; beyond it S_2 saturates
# because increments over l and 1 - l coincide on the circle.
C1 = 10.0
C2 = 0.25


def inertial_l_range(nu: float, c1: float = C1, c2: float = C2) -> tuple[float, float]:
    return c1 * nu, c2


def inertial_k_range(nu: float, c1: float = C1, c2: float = C2) -> tuple[float, float]:
    return 1.0 / c2, 1.0 / (c1 * nu)


def _snapshots(r: TrajectoryRecord):
    if r.snapshots is None:
        raise ValueError("structure and spectrum estimators need records with snapshots")
    return r.snap_t, r.snapshots


# --- structure functions -----------------------------------------------------


@dataclass(frozen=True)
class StructureFunction:
    p: float
    l_requested: np.ndarray
    l_used: np.ndarray
    values: np.ndarray
    std_errors: np.ndarray

    def rows(self):
        return list(zip(self.l_requested, self.l_used, self.values, self.std_errors))


def grid_shifts(l_grid, grid_size: int) -> np.ndarray:
    l = np.asarray(l_grid, dtype=float)
    if np.any(l < 0) or np.any(l > 1):
        raise ResolutionError("separations must lie in [0, 1]")
    if np.any((l > 0) & (l < 1.0 / grid_size)):
        raise ResolutionError(f"separation below grid spacing 1/{grid_size}")
    return np.rint(l * grid_size).astype(int)


def increment_moments(values: np.ndarray, shifts: np.ndarray, p: float) -> np.ndarray:
    """∫|u(x+l) - u(x)|^p dx on grid samples (..., G) for each integer shift."""
    out = np.empty(values.shape[:-1] + (len(shifts),))
    for i, j in enumerate(shifts):
        out[..., i] = np.mean(np.abs(np.roll(values, -j, axis=-1) - values) ** p, axis=-1)
    return out


def parseval_s2(coeffs: np.ndarray, l) -> np.ndarray:
    """‖u(·+l) - u‖² = 4 Σ_{n∈Z*} sin²(nπl) |û_n|², along the last axis of coeffs."""
    l = np.atleast_1d(np.asarray(l, dtype=float))
    n = sp.wavenumbers(coeffs.shape[-1])
    w = 8.0 * np.sin(np.pi * np.outer(l, n)) ** 2  # both signs of n
    return np.abs(coeffs) ** 2 @ w.T


def structure_function(records: Sequence[TrajectoryRecord], p: float, l_grid, T: float, sigma: float,
                       grid_size: int | None = None) -> StructureFunction:
    """S_p(l) = ⟨⟨∫|u(x+l) - u(x)|^p dx⟩⟩ with l rounded to whole grid shifts."""
    if p <= 0:
        raise DomainError("structure-function degree must be positive")
    n = next(r for r in records if r.snapshots is not None).snapshots.shape[-1]
    G = grid_size or sp.dealias_grid_size(n)
    shifts = grid_shifts(l_grid, G)

    def obs(r):
        t, c = _snapshots(r)
        return t, increment_moments(sp.grid_values(c, G), shifts, p)

    b = bracket(records, obs, T, sigma)
    return StructureFunction(p, np.asarray(l_grid, dtype=float), shifts / G,
                             np.atleast_1d(b.value), np.atleast_1d(b.std_error))


# --- energy spectrum ---------------------------------------------------------


@dataclass(frozen=True)
class EnergySpectrum:
    M: float
    k: np.ndarray
    values: np.ndarray
    std_errors: np.ndarray

    def rows(self):
        return list(zip(self.k, self.values, self.std_errors))


def mode_power(c: SpectralField | RealCoeffs | np.ndarray) -> np.ndarray:
    """|û_n|² for n = 1..N from either basis."""
    if isinstance(c, RealCoeffs):
        return 0.5 * (c.pos ** 2 + c.neg ** 2)
    if isinstance(c, SpectralField):
        c = c.coeffs
    return np.abs(c) ** 2


def band_weights(M: float, k_grid, n_modes: int) -> np.ndarray:
    """Matrix W with E_k = W @ |û|²: the band M⁻¹k <= |n| <= Mk, both signs of n."""
    if M <= 1:
        raise BandError("band constant M must exceed 1")
    k = np.asarray(k_grid, dtype=float)
    if np.any(k <= 0):
        raise BandError("wavenumbers must be positive")
    if np.any(M * k > n_modes + 1e-9):
        raise BandError(f"band M*k = {M * k.max():g} exceeds truncation N = {n_modes}")
    n = sp.wavenumbers(n_modes)
    inband = (n[None, :] >= k[:, None] / M - 1e-12) & (n[None, :] <= M * k[:, None] + 1e-12)
    # ½ Σ_{n∈Z*} |û_n|² over the band = Σ_{n>=1} |û_n|²
    return inband / (2.0 * k[:, None] * (M - 1.0 / M))


def spectrum_of(power: np.ndarray, M: float, k_grid) -> np.ndarray:
    return power @ band_weights(M, k_grid, power.shape[-1]).T


def energy_spectrum(records: Sequence[TrajectoryRecord], M: float, k_grid, T: float, sigma: float) -> EnergySpectrum:
    n = next(r for r in records if r.snapshots is not None).snapshots.shape[-1]
    W = band_weights(M, k_grid, n)

    def obs(r):
        t, c = _snapshots(r)
        return t, mode_power(c) @ W.T

    b = bracket(records, obs, T, sigma)
    return EnergySpectrum(M, np.asarray(k_grid, dtype=float), np.atleast_1d(b.value), np.atleast_1d(b.std_error))


def mode_spectrum(records: Sequence[TrajectoryRecord], T: float, sigma: float):
    """⟨⟨|û_k|²⟩⟩ for k = 1..N with standard errors."""
    b = bracket(records, lambda r: (r.snap_t, mode_power(r.snapshots)), T, sigma)
    return np.atleast_1d(b.value), np.atleast_1d(b.std_error)


# --- scaling fits ------------------------------------------------------------


@dataclass(frozen=True)
class ScalingFit:
    x: np.ndarray
    y: np.ndarray
    slope: float
    slope_se: float
    intercept: float
    r2: float

    @property
    def n(self) -> int:
        return self.x.size

    def within(self, target: float, tol: float) -> bool:
        return abs(self.slope - target) <= tol


def scaling_fit(points) -> ScalingFit:
    """Least-squares line through (log x, log y)."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise DomainError("expected a list of (x, y) pairs")
    if pts.shape[0] < 4:
        raise DomainError(f"a scaling fit needs at least 4 points, got {pts.shape[0]}")
    x, y = pts[:, 0], pts[:, 1]
    if np.any(x <= 0) or np.any(y <= 0) or not np.all(np.isfinite(pts)):
        raise DomainError("scaling fit requires finite positive data")
    res = stats.linregress(np.log(x), np.log(y))
    return ScalingFit(x, y, float(res.slope), float(res.stderr), float(res.intercept), float(res.rvalue ** 2))


# --- space scale -------------------------------------------------------------


@dataclass
class SpaceScaleReport:
    nu: float
    anchor: float
    inertial: tuple[int, int]
    rows: list[dict] = field(default_factory=list)

    def row(self, gamma: float) -> dict:
        return next(r for r in self.rows if math.isclose(r["gamma"], gamma))


ALGEBRAIC_RATIO = 1e-2
SUPER_RATIO = 1e-3


def classify_ratio(ratio: float) -> str:
    if ratio >= ALGEBRAIC_RATIO:
        return "algebraic"
    if ratio <= SUPER_RATIO:
        return "super-algebraic"
    return "transitional"


def space_scale_from_power(power: np.ndarray, gamma_grid, nu: float, inertial: tuple[int, int]) -> SpaceScaleReport:
    """Compare ⟨⟨|û_k|²⟩⟩ at k = ⌈ν^{-γ}⌉ with the k⁻² line through the inertial range.

    The anchor is the geometric mean of k²⟨⟨|û_k|²⟩⟩ over ``inertial``; the
    ratio value/(anchor·k⁻²) is classified algebraic (>= 1e-2),
    super-algebraic (<= 1e-3) or transitional.
    """
    n = power.size
    k_lo, k_hi = inertial
    if k_hi > n or k_lo < 1 or k_lo > k_hi:
        raise BandError(f"inertial range {inertial} outside 1..{n}")
    ks = np.arange(k_lo, k_hi + 1)
    comp = ks ** 2.0 * power[ks - 1]
    anchor = float(np.exp(np.mean(np.log(comp)))) if np.all(comp > 0) else 0.0
    rep = SpaceScaleReport(nu=nu, anchor=anchor, inertial=(int(k_lo), int(k_hi)))
    for g in gamma_grid:
        k = math.ceil(nu ** (-g) - 1e-9)
        if k > n:
            raise BandError(f"k = {k} for gamma = {g} exceeds truncation {n}")
        v = float(power[k - 1])
        ref = anchor * k ** -2.0
        if ref == 0.0:
            ratio, label = 0.0, "trivial"
        else:
            ratio = v / ref
            label = classify_ratio(ratio)
        rep.rows.append({"gamma": float(g), "k": k, "value": v, "reference": ref, "ratio": ratio, "class": label})
    return rep


def space_scale_assay(records: Sequence[TrajectoryRecord], gamma_grid, nu: float, T: float, sigma: float,
                      inertial: tuple[int, int] | None = None) -> SpaceScaleReport:
    power, _ = mode_spectrum(records, T, sigma)
    if inertial is None:
        lo, hi = inertial_k_range(nu)
        # at large nu the range is empty; anchor on its lower edge alone
        inertial = (math.ceil(lo), max(math.ceil(lo), math.floor(hi)))
    return space_scale_from_power(power, gamma_grid, nu, inertial)
