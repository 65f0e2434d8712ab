"""
Time stepping for the stochastically forced Burgers equation

    u_t + u u_x - ν u_xx = ∂_t ξ

plus two exact oracles: the forced heat equation and deterministic Burgers
via Cole-Hopf.

The scheme is drift-implicit Euler-Maruyama in Fourier space,

    û_k⁺ = (û_k + dt·F_k(u) + Δξ̂_k) / (1 + ν(2πk)² dt),

with F = -½∂_x(u²) evaluated pseudospectrally on a dealiased grid.
Ensembles are advanced as one (R, N) array; every member draws from its own
RngStream, so a member's path does not depend on which batch it runs in.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from . import spectral as sp
from .errors import BlowUp, OracleRangeError, StepRejected
from .noise import NoiseSpec, RngStream, complex_increments, member_seed
from .records import COLUMNS, CoupledTrajectoryRecord, TrajectoryRecord
from .spectral import RealCoeffs, SpectralField

NOISE_BLOCK = 256  # steps of normals drawn per member at once


class SimConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    nu: float = Field(gt=0.0, le=1.0)
    n_modes: int = Field(256, gt=0)
    dt: float = Field(2e-4, gt=0.0)
    t_end: float = Field(30.0, gt=0.0)
    save_every: int = Field(50, ge=1)
    snapshot_every: int | None = Field(None, ge=1)
    dealias: bool = True
    grid_size: int | None = None
    cfl_safety: float = Field(0.4, gt=0.0)
    linear: bool = False

    @model_validator(mode="after")
    def _check(self):
        n = self.t_end / self.dt
        if abs(n - round(n)) > 1e-6 * max(1.0, n):
            raise ValueError(f"t_end/dt = {n} is not an integer number of steps")
        g = self.grid
        if g % 2 or g < 2 * self.n_modes + 2:
            raise ValueError(f"grid_size {g} too small or odd for {self.n_modes} modes")
        if self.dealias and g <= 3 * self.n_modes:
            raise ValueError(f"dealiasing needs grid_size > 3N = {3 * self.n_modes}")
        return self

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))

    @property
    def grid(self) -> int:
        if self.grid_size is not None:
            return self.grid_size
        if self.dealias:
            return sp.dealias_grid_size(self.n_modes)
        g = 2 * self.n_modes + 2
        return g + (g % 2)

    def replace(self, **changes) -> "SimConfig":
        """Copy with ``changes`` applied, re-running validation."""
        return SimConfig(**{**self.model_dump(), **changes})

    def denominator(self) -> np.ndarray:
        k = sp.TWO_PI * sp.wavenumbers(self.n_modes)
        return 1.0 + self.nu * k * k * self.dt


# --- initial conditions ------------------------------------------------------


def random_smooth_field(n_modes: int, h1_norm: float, rng: np.random.Generator | int = 0,
                        n_active: int = 8) -> SpectralField:
    """Random field on modes 1..n_active with |û_s| ~ s^-2, scaled to ‖u‖₁ = h1_norm."""
    rng = np.random.default_rng(rng)
    k = np.arange(1, n_active + 1, dtype=float)
    c = np.zeros(n_modes, dtype=complex)
    c[:n_active] = (rng.standard_normal(n_active) + 1j * rng.standard_normal(n_active)) / k ** 2
    norm = np.sqrt(sp.sobolev_sq(c, 1))
    return SpectralField(c * (h1_norm / norm))


# --- single step -------------------------------------------------------------


def _drift(c: np.ndarray, cfg: SimConfig) -> np.ndarray:
    if cfg.linear:
        return 0.0
    if cfg.dealias:
        return sp.flux(c, cfg.grid)
    u = sp.grid_values(c, cfg.grid)
    return -1j * np.pi * sp.wavenumbers(c.shape[-1]) * sp.grid_coeffs(u * u, c.shape[-1])


def _advance(c: np.ndarray, dxi_hat: np.ndarray | None, cfg: SimConfig, denom: np.ndarray) -> np.ndarray:
    rhs = c + cfg.dt * _drift(c, cfg) if not cfg.linear else c.copy()
    if dxi_hat is not None:
        S = min(dxi_hat.shape[-1], cfg.n_modes)
        rhs[..., :S] += dxi_hat[..., :S]
    return rhs / denom


def step(u: SpectralField, cfg: SimConfig, dxi: RealCoeffs | None = None) -> SpectralField:
    """One drift-implicit Euler-Maruyama step; ``dxi`` is the real increment Δξ."""
    dxi_hat = None
    if dxi is not None:
        if dxi.n_modes > cfg.n_modes and np.any(dxi.pos[cfg.n_modes:]) | np.any(dxi.neg[cfg.n_modes:]):
            raise ValueError("noise increment exceeds truncation")
        dxi_hat = sp.real_to_complex(dxi).coeffs
    out = _advance(u.coeffs, dxi_hat, cfg, cfg.denominator())
    if not np.all(np.isfinite(out)):
        raise BlowUp("non-finite amplitude after step")
    return SpectralField(out)


# --- diagnostics at save points ----------------------------------------------


def snapshot_columns(c: np.ndarray, grid_size: int) -> dict[str, np.ndarray]:
    """Norm and Kruzhkov columns for a batch of amplitude vectors (..., N)."""
    k = sp.TWO_PI * sp.wavenumbers(c.shape[-1])
    p = 2.0 * np.abs(c) ** 2
    out = {f"norm{m}": np.sqrt(np.sum(k ** (2 * m) * p, axis=-1)) for m in range(4)}
    u = sp.grid_values(c, grid_size)
    ux = sp.grid_values(1j * k * c, grid_size)
    out["linf_u"] = np.max(np.abs(u), axis=-1)
    out["l1_ux"] = np.mean(np.abs(ux), axis=-1)
    out["sup_ux_plus"] = np.maximum(np.max(ux, axis=-1), 0.0)
    return out


# --- ensemble driver ---------------------------------------------------------


def _as_batch(u0, R: int, n_modes: int) -> np.ndarray:
    if isinstance(u0, SpectralField):
        arr = np.broadcast_to(u0.coeffs, (R, u0.n_modes))
    elif isinstance(u0, (list, tuple)):
        arr = np.stack([f.coeffs if isinstance(f, SpectralField) else np.asarray(f) for f in u0])
    else:
        arr = np.asarray(u0, dtype=complex)
        if arr.ndim == 1:
            arr = np.broadcast_to(arr, (R, arr.size))
    if arr.shape != (R, n_modes):
        raise ValueError(f"initial data has shape {arr.shape}, expected {(R, n_modes)}")
    return np.array(arr, dtype=complex)


def _integrate(
    c: np.ndarray,
    cfg: SimConfig,
    spec: NoiseSpec,
    streams: list[RngStream],
    noise_groups: np.ndarray,
    on_error: str,
    observer=None,
):
    """Advance a batch; row i uses the stream ``streams[noise_groups[i]]``.

    Returns (times, list of per-row column dicts, snapshot times, snapshots,
    failures), failures mapping row -> message.
    """
    R = c.shape[0]
    denom = cfg.denominator()
    G = cfg.grid
    dt = cfg.dt
    S = min(spec.pos.size, cfg.n_modes)
    if spec.support > cfg.n_modes:
        raise ValueError(f"noise support {spec.support} exceeds truncation {cfg.n_modes}")
    noisy = not spec.is_zero
    active = np.arange(R)
    failures: dict[int, str] = {}
    save_t = []
    cols = {name: [] for name in COLUMNS}
    snap_t = []
    snaps = []
    n_steps = cfg.n_steps
    block = None

    def record(n: int):
        nonlocal active, c
        t = n * dt
        vals = snapshot_columns(c, G)
        bad = ~np.all(np.isfinite(c), axis=-1)
        # advective limit only; the linear equation has no transport term
        cfl = (dt * vals["linf_u"] * G > cfg.cfl_safety) & (not cfg.linear)
        for i in np.nonzero(bad | cfl)[0]:
            row = active[i]
            if bad[i]:
                msg = f"BlowUp at t={t:.6g}"
                exc = BlowUp(msg, t)
            else:
                msg = f"StepRejected at t={t:.6g}: dt*|u|_inf*G = {dt * vals['linf_u'][i] * G:.3g} > {cfg.cfl_safety}"
                exc = StepRejected(msg, t)
            if on_error == "raise":
                raise exc
            failures[int(row)] = msg
        save_t.append(t)
        for name in COLUMNS:
            full = np.full(R, np.nan)
            full[active] = vals[name]
            cols[name].append(full)
        if cfg.snapshot_every and n % cfg.snapshot_every == 0:
            full = np.full((R, cfg.n_modes), np.nan + 0j)
            full[active] = c
            snap_t.append(t)
            snaps.append(full)
        if observer is not None:
            observer(t, active, c)
        keep = ~(bad | cfl)
        if not np.all(keep):
            active = active[keep]
            c = c[keep]

    record(0)
    groups = noise_groups
    for n in range(1, n_steps + 1):
        if active.size == 0:
            break
        dxi = None
        if noisy:
            j = (n - 1) % NOISE_BLOCK
            if j == 0:
                nb = min(NOISE_BLOCK, n_steps - n + 1)
                block = np.stack([s.normals((nb, 2 * spec.pos.size)) for s in streams])
            z = block[groups[active], j]
            dxi = complex_increments(spec, z, dt)[..., :S]
        c = _advance(c, dxi, cfg, denom)
        if n % cfg.save_every == 0 or (cfg.snapshot_every and n % cfg.snapshot_every == 0):
            record(n)
    t = np.array(save_t)
    per_row = [{name: np.array([v[i] for v in cols[name]]) for name in COLUMNS} for i in range(R)]
    st = np.array(snap_t) if snaps else None
    sn = np.stack(snaps, axis=1) if snaps else None
    return t, per_row, st, sn, failures


def _trim(t, col, snap_t, snaps):
    ok = np.isfinite(col["norm0"])
    n = int(np.argmin(ok)) if not ok.all() else ok.size
    col = {k: v[:n] for k, v in col.items()}
    if snaps is not None:
        m = int(np.searchsorted(snap_t, t[n - 1], side="right")) if n else 0
        return t[:n], col, snap_t[:m], snaps[:m]
    return t[:n], col, None, None


def run_ensemble(
    u0,
    cfg: SimConfig,
    spec: NoiseSpec,
    master_seed: int = 0,
    members: Sequence[int] | int = 1,
    on_error: str = "raise",
) -> list[TrajectoryRecord]:
    """Integrate independent members ``members`` (indices into the seed tree).

    ``u0`` is one SpectralField shared by all members, a list of fields, or an
    array of shape (R, N). With ``on_error="record"`` a failing member is kept
    with its ``failure`` set and its series truncated at the failure time.
    """
    members = list(range(members)) if isinstance(members, int) else list(members)
    R = len(members)
    c = _as_batch(u0, R, cfg.n_modes)
    streams = [RngStream(master_seed, m) for m in members]
    t, per_row, st, sn, failures = _integrate(c, cfg, spec, streams, np.arange(R), on_error)
    out = []
    for i, m in enumerate(members):
        tt, col, snt, sns = _trim(t, per_row[i], st, None if sn is None else sn[i])
        out.append(TrajectoryRecord(
            t=tt, columns=col, member_index=m, seed=member_seed(master_seed, m),
            snap_t=snt, snapshots=sns, failure=failures.get(i),
            meta={"nu": cfg.nu, "n_modes": cfg.n_modes, "dt": cfg.dt},
        ))
    return out


def run(u0: SpectralField, cfg: SimConfig, spec: NoiseSpec, rng: RngStream | int = 0) -> TrajectoryRecord:
    """Single trajectory; ``rng`` is an RngStream or a master seed (member 0)."""
    if isinstance(rng, RngStream):
        seed, member = rng.master_seed, rng.member_index
    else:
        seed, member = int(rng), 0
    return run_ensemble(u0, cfg, spec, seed, [member])[0]


def final_state(u0: SpectralField, cfg: SimConfig, spec: NoiseSpec, rng: RngStream | int = 0) -> SpectralField:
    """Integrate to t_end and return u(t_end) itself."""
    cfg2 = cfg.replace(snapshot_every=cfg.n_steps, save_every=cfg.n_steps)
    rec = run(u0, cfg2, spec, rng)
    return SpectralField(rec.snapshots[-1])


def l1_distance(c1: np.ndarray, c2: np.ndarray, grid_size: int) -> np.ndarray:
    return np.mean(np.abs(sp.grid_values(c1 - c2, grid_size)), axis=-1)


def run_coupled_ensemble(
    pairs: Sequence[tuple[SpectralField, SpectralField]],
    cfg: SimConfig,
    spec: NoiseSpec,
    master_seed: int = 0,
    members: Sequence[int] | None = None,
    on_error: str = "raise",
) -> list[CoupledTrajectoryRecord]:
    """Pairs (u1_0, u2_0) each driven by one shared noise path per member."""
    R = len(pairs)
    members = list(range(R)) if members is None else list(members)
    c = np.stack([p[i].coeffs for p in pairs for i in (0, 1)])
    streams = [RngStream(master_seed, m) for m in members]
    groups = np.repeat(np.arange(R), 2)
    G = cfg.grid
    diffs: list[list[float]] = [[] for _ in range(R)]

    def observer(t, active, cur):
        pos = {int(row): i for i, row in enumerate(active)}
        for r in range(R):
            a, b = pos.get(2 * r), pos.get(2 * r + 1)
            if a is None or b is None:
                diffs[r].append(np.nan)
            else:
                diffs[r].append(float(l1_distance(cur[a], cur[b], G)))

    if cfg.snapshot_every:
        raise ValueError("coupled runs record diagnostics only; unset snapshot_every")
    t, per_row, _, _, failures = _integrate(c, cfg, spec, streams, groups, on_error, observer)
    out = []
    for r, m in enumerate(members):
        recs = []
        for i in (2 * r, 2 * r + 1):
            tt, col, _, _ = _trim(t, per_row[i], None, None)
            recs.append(TrajectoryRecord(t=tt, columns=col, member_index=m, seed=member_seed(master_seed, m),
                                         failure=failures.get(i)))
        n = min(recs[0].t.size, recs[1].t.size)
        out.append(CoupledTrajectoryRecord(recs[0], recs[1], np.array(diffs[r][:n])))
    return out


def run_coupled(u1_0: SpectralField, u2_0: SpectralField, cfg: SimConfig, spec: NoiseSpec,
                rng: RngStream | int = 0) -> CoupledTrajectoryRecord:
    if isinstance(rng, RngStream):
        seed, member = rng.master_seed, rng.member_index
    else:
        seed, member = int(rng), 0
    return run_coupled_ensemble([(u1_0, u2_0)], cfg, spec, seed, [member])[0]


# --- exact oracles -----------------------------------------------------------


def heat_exact(u0: SpectralField, xi_path: Sequence[RealCoeffs], nu: float, dt: float,
               n_steps: int | None = None) -> SpectralField:
    """Forced heat equation v_t - ν v_xx = ξ_t with each increment absorbed at
    the end of its step: v̂(t+dt) = e^{-ν(2πk)²dt} v̂(t) + Δξ̂.

    Without increments, ``n_steps`` steps of exact heat decay are taken.
    """
    k = sp.TWO_PI * sp.wavenumbers(u0.n_modes)
    decay = np.exp(-nu * k * k * dt)
    v = u0.coeffs.copy()
    if not xi_path:
        return SpectralField(decay ** (n_steps or 0) * v)
    for dxi in xi_path:
        d = sp.real_to_complex(dxi).coeffs
        v = decay * v
        S = min(d.size, v.size)
        v[:S] += d[:S]
    return SpectralField(v)


def cole_hopf(u0: SpectralField, nu: float, t: float, grid_size: int | None = None,
              max_log_range: float = 36.0) -> SpectralField:
    """Deterministic Burgers solution u(t) via the Cole-Hopf transform.

    φ0 = exp(-Φ/(2ν)) with Φ the zero-mean antiderivative of u0 is evolved by
    the exact heat semigroup; u = -2ν ∂_x log φ is projected back to N modes.
    """
    n = u0.n_modes
    G = grid_size or max(2048, 16 * n)
    k = sp.TWO_PI * sp.wavenumbers(n)
    phi_hat = u0.coeffs / (1j * k)
    theta = -sp.grid_values(phi_hat, G) / (2.0 * nu)
    rng = theta.max() - theta.min()
    if rng > max_log_range:
        raise OracleRangeError(f"Cole-Hopf potential spans e^{rng:.1f}; viscosity {nu} too small for this u0")
    phi = np.exp(theta - theta.max())
    ph = np.fft.rfft(phi)
    kk = sp.TWO_PI * np.arange(ph.size)
    if np.max(np.abs(ph[3 * ph.size // 4:])) > 1e-13 * abs(ph[0]):
        raise OracleRangeError("Cole-Hopf potential not resolved on the oracle grid")
    ph = ph * np.exp(-nu * kk * kk * t)
    phi_t = np.fft.irfft(ph, n=G)
    dphi = np.fft.irfft(1j * kk * ph, n=G)
    u = -2.0 * nu * dphi / phi_t
    return sp.from_grid(u, n)
