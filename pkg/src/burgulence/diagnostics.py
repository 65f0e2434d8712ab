"""
Per-snapshot Kruzhkov statistics, the ensemble-time bracket

    ⟨⟨f⟩⟩_{T,σ} = (1/σ) ∫_T^{T+σ} E f(t) dt,

and the Itô energy balance over a window [T, T+σ].
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np

from . import spectral as sp
from .errors import WindowError
from .noise import NoiseSpec, b_sum
from .records import TrajectoryRecord
from .spectral import SpectralField

Observable = Union[str, Callable[[TrajectoryRecord], object]]

_WINDOW_TOL = 1e-9


@dataclass(frozen=True)
class KruzhkovStats:
    t: float
    sup_ux_plus: float
    l1_ux: float
    linf_u: float

    def gradient_chain_holds(self, rtol: float = 1e-2) -> bool:
        """|u|_∞ <= c* and |u_x|_1 <= 2c* with c* = max (u_x)⁺."""
        return gradient_chain_holds(self.linf_u, self.l1_ux, self.sup_ux_plus, rtol)


def gradient_chain_holds(linf_u, l1_ux, sup_ux_plus, rtol: float = 1e-2) -> bool:
    """For mean-free periodic u: |u|_inf <= sup u_x+ and |u_x|_1 <= 2 sup u_x+."""
    c = np.asarray(sup_ux_plus)
    slack = rtol * np.maximum(c, 1e-300)
    ok = (np.asarray(linf_u) <= c + slack) & (np.asarray(l1_ux) <= 2 * c + 2 * slack)
    return bool(np.all(ok))


def kruzhkov_stats(u: SpectralField, grid_size: int | None = None, t: float = 0.0) -> KruzhkovStats:
    G = grid_size or sp.dealias_grid_size(u.n_modes)
    v = sp.grid_values(u.coeffs, G)
    ux = sp.grid_values(sp.derivative(u, 1).coeffs, G)
    return KruzhkovStats(
        t=t,
        sup_ux_plus=float(max(ux.max(), 0.0)),
        l1_ux=float(np.mean(np.abs(ux))),
        linf_u=float(np.abs(v).max()),
    )


# --- bracket -----------------------------------------------------------------


@dataclass(frozen=True)
class BracketEstimate:
    value: float | np.ndarray
    std_error: float | np.ndarray
    T: float
    sigma: float
    R: int

    def band(self, n_se: float = 3.0):
        return self.value - n_se * self.std_error, self.value + n_se * self.std_error


def series(record: TrajectoryRecord, observable: Observable) -> tuple[np.ndarray, np.ndarray]:
    """(times, values) of an observable on one record.

    A string names a record column ("norm1_sq", "energy", "sup_ux_plus", ...);
    a callable returns either values aligned with ``record.t`` or a
    ``(times, values)`` pair.
    """
    if isinstance(observable, str):
        return record.t, np.asarray(record[observable], dtype=float)
    out = observable(record)
    if isinstance(out, tuple):
        t, v = out
        return np.asarray(t, dtype=float), np.asarray(v, dtype=float)
    v = np.asarray(out, dtype=float)
    if v.ndim == 0:
        v = np.full(record.t.shape, float(v))
    return record.t, v


def window_mean(t: np.ndarray, v: np.ndarray, T: float, sigma: float) -> np.ndarray:
    """(1/σ) ∫_T^{T+σ} v dt by the trapezoid rule, endpoints interpolated."""
    if sigma <= 0:
        raise WindowError("window length must be positive")
    lo, hi = T, T + sigma
    if t.size < 2 or lo < t[0] - _WINDOW_TOL or hi > t[-1] + _WINDOW_TOL:
        span = (float(t[0]), float(t[-1])) if t.size else (math.nan, math.nan)
        raise WindowError(f"window [{lo}, {hi}] outside recorded range {span}")
    lo = max(lo, t[0])
    hi = min(hi, t[-1])
    inside = (t > lo) & (t < hi)
    tt = np.concatenate([[lo], t[inside], [hi]])
    if v.ndim == 1:
        vv = np.concatenate([[np.interp(lo, t, v)], v[inside], [np.interp(hi, t, v)]])
    else:
        first = np.array([np.interp(lo, t, col) for col in v.T])
        last = np.array([np.interp(hi, t, col) for col in v.T])
        vv = np.vstack([first, v[inside], last])
    return np.trapezoid(vv, tt, axis=0) / (hi - lo)


def _mean_se(x: np.ndarray) -> tuple:
    R = x.shape[0]
    if x.ndim == 1:
        mean = math.fsum(x) / R
        se = math.sqrt(math.fsum((x - mean) ** 2) / (R - 1) / R) if R > 1 else 0.0
        return mean, se
    mean = np.sum(x, axis=0) / R
    se = np.std(x, axis=0, ddof=1) / np.sqrt(R) if R > 1 else np.zeros_like(mean)
    return mean, se


def member_means(records: Sequence[TrajectoryRecord], observable: Observable, T: float, sigma: float) -> np.ndarray:
    ordered = sorted(records, key=lambda r: r.member_index)
    return np.array([window_mean(*series(r, observable), T, sigma) for r in ordered])


def bracket(records: Sequence[TrajectoryRecord], observable: Observable, T: float, sigma: float) -> BracketEstimate:
    """Ensemble mean of per-member time averages over [T, T+σ] with SE = SD/√R."""
    records = [r for r in records if r.failure is None]
    if not records:
        raise WindowError("no usable records")
    x = member_means(records, observable, T, sigma)
    mean, se = _mean_se(x)
    return BracketEstimate(value=mean, std_error=se, T=T, sigma=sigma, R=len(records))


def default_sigma(records: Sequence[TrajectoryRecord], spec: NoiseSpec, T: float = 1.0) -> float:
    """max(5, 2·C_est/B_0) with C_est the measured plateau of E‖u‖² after T."""
    b0 = b_sum(spec, 0)
    vals = [r["norm0_sq"][r.t >= T] for r in records if r.failure is None]
    c_est = float(np.mean(np.concatenate(vals))) if vals else 0.0
    return max(5.0, 2.0 * c_est / b0) if b0 > 0 else 5.0


# --- energy balance ----------------------------------------------------------


@dataclass(frozen=True)
class EnergyLedger:
    T: float
    sigma: float
    e_start: float
    e_end: float
    dissipation: float
    input: float
    residual: float
    residual_se: float
    R: int

    def tolerance(self, rel: float = 0.05, n_se: float = 3.0) -> float:
        return rel * self.input + n_se * self.residual_se

    def balanced(self, rel: float = 0.05, n_se: float = 3.0) -> bool:
        return abs(self.residual) <= self.tolerance(rel, n_se) + 1e-14

    def as_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d["balanced"] = self.balanced()
        return d


def _endpoint_energy(r: TrajectoryRecord, t0: float, n: int = 3) -> float:
    idx = np.argsort(np.abs(r.t - t0), kind="stable")[:n]
    return float(np.mean(0.5 * r["norm0"][idx] ** 2))


def energy_ledger(records: Sequence[TrajectoryRecord], nu: float, spec: NoiseSpec, T: float, sigma: float) -> EnergyLedger:
    """½E‖u(T+σ)‖² - ½E‖u(T)‖² + ν∫E‖u‖₁² - σB_0/2, assembled per member.

    Endpoint energies average the three saved samples nearest each endpoint.
    """
    records = sorted((r for r in records if r.failure is None), key=lambda r: r.member_index)
    if not records:
        raise WindowError("no usable records")
    inp = 0.5 * sigma * b_sum(spec, 0)
    es, ee, dis = [], [], []
    for r in records:
        diss = nu * sigma * window_mean(r.t, r["norm1_sq"], T, sigma)
        es.append(_endpoint_energy(r, T))
        ee.append(_endpoint_energy(r, T + sigma))
        dis.append(float(diss))
    es, ee, dis = map(np.array, (es, ee, dis))
    res = ee - es + dis - inp
    mean_res, se = _mean_se(res)
    return EnergyLedger(
        T=T, sigma=sigma,
        e_start=float(es.mean()), e_end=float(ee.mean()), dissipation=float(dis.mean()),
        input=inp, residual=float(mean_res), residual_se=float(se), R=len(records),
    )
