"""
Stationary measures by time averaging, recurrence to small balls, and
mixing measured through a dictionary lower bound on the Lipschitz-dual
(Kantorovich) distance between laws of u(t).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import stats

from . import spectral as sp
from .diagnostics import BracketEstimate, Observable, bracket, series, window_mean
from .dynamics import SimConfig, run_ensemble
from .errors import SampleError, WindowError
from .noise import NoiseSpec
from .records import TrajectoryRecord
from .spectral import SpectralField


# --- observables -------------------------------------------------------------


@dataclass(frozen=True)
class DictObservable:
    """A functional u -> R acting on amplitude arrays (..., N), with its
    declared Lipschitz constant with respect to ‖·‖₁."""

    name: str
    fn: Callable[[np.ndarray], np.ndarray]
    lipschitz: float = 1.0

    def __call__(self, coeffs) -> np.ndarray:
        if isinstance(coeffs, SpectralField):
            coeffs = coeffs.coeffs
        return self.fn(np.asarray(coeffs))


def _norm(m: int):
    return lambda c: np.sqrt(sp.sobolev_sq(c, m))


DEFAULT_DICTIONARY: tuple[DictObservable, ...] = (
    DictObservable("norm0", _norm(0)),
    DictObservable("norm1", _norm(1)),
    DictObservable("re_u1", lambda c: c[..., 0].real),
    DictObservable("im_u1", lambda c: c[..., 0].imag),
    DictObservable("re_u2", lambda c: c[..., 1].real),
)


def lipschitz_violations(dictionary: Sequence[DictObservable], n_pairs: int = 1000, n_modes: int = 16,
                         seed: int = 0) -> dict[str, int]:
    """Count pairs with |f(u) - f(v)| > L‖u - v‖₁ over random smooth pairs."""
    rng = np.random.default_rng(seed)
    k = sp.wavenumbers(n_modes)
    scale = 1.0 / k ** 1.5
    u = (rng.standard_normal((n_pairs, n_modes)) + 1j * rng.standard_normal((n_pairs, n_modes))) * scale
    v = (rng.standard_normal((n_pairs, n_modes)) + 1j * rng.standard_normal((n_pairs, n_modes))) * scale
    d1 = np.sqrt(sp.sobolev_sq(u - v, 1))
    return {f.name: int(np.sum(np.abs(f(u) - f(v)) > f.lipschitz * d1 * (1 + 1e-12))) for f in dictionary}


# --- empirical measures and the Lip-dual lower bound ------------------------


@dataclass(frozen=True)
class EmpiricalMeasure:
    """Dictionary values of u(t) across an ensemble: ``samples`` is (n, n_obs)."""

    samples: np.ndarray
    names: tuple[str, ...]
    lipschitz: tuple[float, ...]
    t: float = math.nan

    @property
    def size(self) -> int:
        return self.samples.shape[0]


def empirical_measure(states: np.ndarray, dictionary: Sequence[DictObservable] = DEFAULT_DICTIONARY,
                      t: float = math.nan) -> EmpiricalMeasure:
    states = np.asarray(states)
    samples = np.column_stack([f(states) for f in dictionary])
    return EmpiricalMeasure(samples, tuple(f.name for f in dictionary), tuple(f.lipschitz for f in dictionary), t)


def measure_at(records: Sequence[TrajectoryRecord], t: float, dictionary=DEFAULT_DICTIONARY) -> EmpiricalMeasure:
    states = []
    for r in records:
        if r.failure is not None:
            continue
        i = int(np.argmin(np.abs(r.snap_t - t)))
        if abs(r.snap_t[i] - t) > 1e-9 * max(1.0, t):
            raise WindowError(f"no snapshot at t = {t}")
        states.append(r.snapshots[i])
    return empirical_measure(np.array(states), dictionary, t)


def normalisation(*measures: EmpiricalMeasure) -> np.ndarray:
    """1 / (L + half range) per observable over the pooled samples."""
    pooled = np.vstack([m.samples for m in measures])
    half = 0.5 * (pooled.max(axis=0) - pooled.min(axis=0))
    return 1.0 / (np.asarray(measures[0].lipschitz) + half)


def _equalise(a: np.ndarray, b: np.ndarray):
    n = min(a.shape[0], b.shape[0])
    if n < 2:
        raise SampleError("need at least two samples in each measure")
    pick = lambda x: x if x.shape[0] == n else x[np.linspace(0, x.shape[0] - 1, n).round().astype(int)]
    a, b = pick(a), pick(b)
    if a.shape != b.shape:
        raise SampleError("sample counts differ after subsampling")
    return a, b


def sorted_w1(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """1-D Kantorovich distance (1/n)Σ|x_(i) - y_(i)| per column."""
    return np.mean(np.abs(np.sort(x, axis=0) - np.sort(y, axis=0)), axis=0)


def lip_dual_lower_bound(a: EmpiricalMeasure, b: EmpiricalMeasure, scales: np.ndarray | None = None,
                         per_observable: bool = False):
    """max_f W1(f#a, f#b)·scale_f, a lower bound on the Lip-dual distance.

    Each dictionary functional is rescaled so that ‖f‖_L <= 1 on the visited
    set; the default scale is 1/(L + half pooled range).
    """
    if a.names != b.names:
        raise SampleError("measures use different dictionaries")
    x, y = _equalise(a.samples, b.samples)
    if scales is None:
        scales = normalisation(a, b)
    w = sorted_w1(x, y) * np.asarray(scales)
    return (float(w.max()), w) if per_observable else float(w.max())


# --- Bogoliubov-Krylov time averages -----------------------------------------


def bk_average(record: TrajectoryRecord, observable: Observable, t_burn: float, t_end: float) -> float:
    """(1/(t_end - t_burn)) ∫ f(u(s)) ds along one trajectory."""
    if t_end <= t_burn:
        raise WindowError("t_end must exceed t_burn")
    t, v = series(record, observable)
    return float(window_mean(t, v, t_burn, t_end - t_burn))


def bk_ensemble(records: Sequence[TrajectoryRecord], observable: Observable, t_burn: float,
                t_end: float) -> BracketEstimate:
    """Time averages across members, with SE from their spread."""
    return bracket(records, observable, t_burn, t_end - t_burn)


def agree(a: BracketEstimate, b: BracketEstimate, n_se: float = 3.0) -> bool:
    return abs(a.value - b.value) <= n_se * math.hypot(a.std_error, b.std_error)


# --- mixing ------------------------------------------------------------------


@dataclass
class MixingCurve:
    t: np.ndarray
    values: np.ndarray
    per_observable: np.ndarray
    names: tuple[str, ...]
    scales: np.ndarray
    floor: float
    shared_noise: bool
    R: int

    def value_at(self, t: float) -> float:
        i = int(np.argmin(np.abs(self.t - t)))
        return float(self.values[i])

    def decay_ratio(self, t_early: float, t_late: float) -> float:
        return self.value_at(t_late) / self.value_at(t_early)

    def rows(self):
        return list(zip(self.t, self.values, *self.per_observable.T))


def _snapshot_stride(t_grid, dt: float) -> int:
    steps = [int(round(t / dt)) for t in t_grid]
    for t, s in zip(t_grid, steps):
        if abs(s * dt - t) > 1e-9 * max(1.0, t):
            raise ValueError(f"t = {t} is not on the time grid")
    return math.gcd(*steps) if len(steps) > 1 else steps[0]


def mixing_curve(first: Sequence[TrajectoryRecord], second: Sequence[TrajectoryRecord], t_grid,
                 dictionary: Sequence[DictObservable] = DEFAULT_DICTIONARY, shared_noise: bool = False) -> MixingCurve:
    """Lip-dual lower bound between two ensembles at each t in ``t_grid``."""
    t_grid = np.asarray(sorted(t_grid), dtype=float)
    a_meas = [measure_at(first, t, dictionary) for t in t_grid]
    b_meas = [measure_at(second, t, dictionary) for t in t_grid]
    scales = normalisation(*a_meas, *b_meas)
    per = np.array([lip_dual_lower_bound(a, b, scales, per_observable=True)[1] for a, b in zip(a_meas, b_meas)])
    # resolution floor: even vs odd members of one ensemble at the final time
    last = a_meas[-1].samples
    m = last.shape[0] // 2
    floor = float((sorted_w1(last[0:2 * m:2], last[1:2 * m:2]) * scales).max()) if m >= 2 else math.nan
    return MixingCurve(t=t_grid, values=per.max(axis=1), per_observable=per,
                       names=tuple(f.name for f in dictionary), scales=scales, floor=floor,
                       shared_noise=shared_noise, R=min(len(first), len(second)))


def mixing_config(cfg: SimConfig, t_grid) -> SimConfig:
    """``cfg`` extended to the last time in ``t_grid`` with snapshots on it."""
    stride = _snapshot_stride(t_grid, cfg.dt)
    return cfg.replace(t_end=float(max(t_grid)), snapshot_every=stride, save_every=math.gcd(cfg.save_every, stride))


def mixing_decay(u1_0: SpectralField, u2_0: SpectralField, cfg: SimConfig, spec: NoiseSpec, R: int, t_grid,
                 master_seed: int = 0, shared_noise: bool = False,
                 dictionary: Sequence[DictObservable] = DEFAULT_DICTIONARY) -> MixingCurve:
    """Lip-dual lower bound between the laws of u(t; u1_0) and u(t; u2_0).

    By default the second ensemble uses members R..2R-1 (independent noise);
    with ``shared_noise`` member i of both ensembles shares one noise path.
    """
    run_cfg = mixing_config(cfg, t_grid)
    first = run_ensemble(u1_0, run_cfg, spec, master_seed, range(R), on_error="record")
    second_members = range(R) if shared_noise else range(R, 2 * R)
    second = run_ensemble(u2_0, run_cfg, spec, master_seed, second_members, on_error="record")
    return mixing_curve(first, second, t_grid, dictionary, shared_noise)


# --- recurrence --------------------------------------------------------------


@dataclass
class HittingTimeReport:
    epsilon: float
    times: np.ndarray  # inf where censored
    T_grid: np.ndarray
    survival: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    t_max: float
    meta: dict = field(default_factory=dict)

    @property
    def R(self) -> int:
        return self.times.size

    def survival_at(self, T: float) -> float:
        return float(np.mean(self.times >= T))

    def strictly_decreasing(self, Ts) -> bool:
        vals = [self.survival_at(T) for T in Ts]
        return all(b < a for a, b in zip(vals, vals[1:]))

    @property
    def improves(self) -> bool:
        return self.survival_at(self.t_max) < self.survival_at(1.0)

    def rows(self):
        return list(zip(self.T_grid, self.survival, self.lower, self.upper))


def first_hits(records: Sequence[TrajectoryRecord], epsilon: float) -> np.ndarray:
    out = []
    for r in records:
        below = np.nonzero(r["norm0"] < epsilon)[0]
        out.append(float(r.t[below[0]]) if below.size else math.inf)
    return np.array(out)


def survival_curve(times: np.ndarray, T_grid, confidence: float = 0.95):
    """π̂(T) = P(no hit in [0, T)) with Clopper-Pearson bands."""
    T_grid = np.asarray(T_grid, dtype=float)
    n = times.size
    k = np.array([np.sum(times >= T) for T in T_grid])
    a = 1 - confidence
    lo = np.where(k > 0, stats.beta.ppf(a / 2, np.maximum(k, 1), n - k + 1), 0.0)
    hi = np.where(k < n, stats.beta.ppf(1 - a / 2, k + 1, np.maximum(n - k, 1)), 1.0)
    return k / n, lo, hi


def hitting_times(cfg: SimConfig, spec: NoiseSpec, epsilon: float, R: int, T_max: float, master_seed: int = 0,
                  u0: SpectralField | None = None, T_grid=None) -> HittingTimeReport:
    """First time ‖u(t)‖ < ε on the saved grid, for R members started at u0."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    u0 = u0 if u0 is not None else SpectralField.zeros(cfg.n_modes)
    run_cfg = cfg.replace(t_end=T_max, snapshot_every=None)
    recs = run_ensemble(u0, run_cfg, spec, master_seed, R, on_error="record")
    return hitting_report(recs, epsilon, T_max, T_grid)


def hitting_report(records: Sequence[TrajectoryRecord], epsilon: float, T_max: float,
                   T_grid=None) -> HittingTimeReport:
    """Survival curve of first entry into {‖u‖ < ε} from existing records.

    Failed members are dropped; the count is kept in ``meta``.
    """
    ok = [r for r in records if r.failure is None]
    times = first_hits(ok, epsilon)
    T_grid = np.linspace(0, T_max, 101) if T_grid is None else np.asarray(T_grid, dtype=float)
    surv, lo, hi = survival_curve(times, T_grid)
    return HittingTimeReport(epsilon, times, T_grid, surv, lo, hi, T_max,
                             meta={"failed": len(records) - len(ok)})
