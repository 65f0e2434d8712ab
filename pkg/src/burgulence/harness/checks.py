"""
The twelve acceptance checks.

Each check takes a plan (for its knobs) and an EnsembleCache (so checks that
need the same ensemble run it once) and returns a CheckResult holding the
verdict, the measured numbers and the tables the runner writes to disk.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .. import diagnostics as dg
from .. import dynamics as dy
from .. import ergodicity as eg
from .. import spectral as sp
from .. import turbulence as tb
from ..noise import NoiseSpec, b_sum, path_moments_test
from ..spectral import SpectralField
from .ensembles import EnsembleCache
from .plan import ExperimentPlan, build_plan


@dataclass
class Table:
    header: tuple[str, ...]
    rows: list[tuple]


@dataclass
class CheckResult:
    criterion: int
    name: str
    passed: bool
    measured: dict
    tables: dict[str, Table] = field(default_factory=dict)

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        shown = ", ".join(f"{k}={_fmt(v)}" for k, v in self.measured.items())
        return f"{verdict} [{self.criterion:2d}] {self.name}: {shown}"

    def summary(self) -> dict:
        return {"criterion": self.criterion, "name": self.name, "passed": self.passed,
                "measured": _jsonable(self.measured)}


def _fmt(v) -> str:
    if isinstance(v, bool):
        return str(v)
    if isinstance(v, float):
        return f"{v:.4g}"
    if isinstance(v, (list, tuple)):
        return "[" + " ".join(_fmt(x) for x in v) + "]"
    return str(v)


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.floating, float)):
        return float(v)
    if isinstance(v, (np.integer, int)) and not isinstance(v, bool):
        return int(v)
    return v


def criterion(number: int, name: str):
    """Tag a check with the criterion it decides, for reporting when it cannot run."""
    def tag(fn):
        fn.criterion, fn.title = number, name
        return fn
    return tag


def unevaluable(check, exc: Exception) -> CheckResult:
    return CheckResult(check.criterion, check.title, False, {"error": f"{type(exc).__name__}: {exc}"})


# --- shared ensembles ---------------------------------------------------------


def _zero(plan: ExperimentPlan, n_modes: int | None = None) -> SpectralField:
    return SpectralField.zeros(n_modes or plan.n_modes)


def stationary_ensemble(plan: ExperimentPlan, ens: EnsembleCache, nu: float):
    """Members 0..R-1 started from rest at viscosity ``nu``."""
    cfg = plan.sim_config(nu)
    return ens.get(_zero(plan), cfg, plan.noise_spec(), plan.seed, range(plan.R)), cfg


def scaling_companion(plan: ExperimentPlan) -> ExperimentPlan:
    """The scaling plan with this plan's seed and noise; its ν = 0.02 ensemble
    is reused by the space-scale check."""
    return build_plan({"kind": "scaling", "seed": plan.seed, "noise": plan.noise.model_dump()})


def _window(plan: ExperimentPlan) -> tuple[float, float]:
    T = plan.window_start
    return T, plan.sigma if plan.sigma is not None else plan.t_end - T


# --- 1-4: oracle checks ---------------------------------------------------------


@criterion(1, "heat oracle")
def heat_oracle(plan: ExperimentPlan, ens: EnsembleCache | None = None) -> CheckResult:
    """Linear mode against the exact heat propagator, zero forcing.

    Backward Euler's relative error per unit time on mode k is about
    (νλ_k)²dt/2, so the 5·dt bound is meaningful for νλ_k <= √10; the initial
    field lives on modes 1..8 at ν = 1e-3 (νλ_8 ≈ 2.5).
    """
    n, nu, t = 128, 1e-3, 1.0
    rng = np.random.default_rng(plan.seed)
    k = np.arange(1, 9)
    c = np.zeros(n, dtype=complex)
    c[:8] = (rng.standard_normal(8) + 1j * rng.standard_normal(8)) / k
    u0 = SpectralField(c)
    dts = [1e-2, 5e-3, 2.5e-3, 1.25e-3]
    rows, worst, ratio = [], [], []
    for dt in dts:
        cfg = dy.SimConfig(nu=nu, n_modes=n, dt=dt, t_end=t, save_every=int(round(t / dt)), linear=True)
        got = dy.final_state(u0, cfg, NoiseSpec.zero())
        ref = dy.heat_exact(u0, [], nu, dt, n_steps=cfg.n_steps)
        rel = np.abs(got.coeffs[:8] - ref.coeffs[:8]) / np.abs(ref.coeffs[:8])
        worst.append(float(np.max(np.abs(got.coeffs - ref.coeffs))))
        ratio.append(float(rel.max() / t / dt))
        rows.append((dt, float(rel.max() / t), worst[-1]))
    fit = tb.scaling_fit(list(zip(dts, worst)))
    passed = max(ratio) <= 5.0 and abs(fit.slope - 1.0) <= 0.15
    return CheckResult(1, "heat oracle", passed,
                       {"max_rel_err_per_time_over_dt": max(ratio), "slope": fit.slope},
                       {"heat_oracle": Table(("dt", "max_rel_err_per_unit_time", "max_abs_err"), rows)})


@criterion(2, "Cole-Hopf cross-check")
def cole_hopf_oracle(plan: ExperimentPlan, ens: EnsembleCache | None = None) -> CheckResult:
    u0 = sp.single_mode(1, 128)
    cfg = dy.SimConfig(nu=0.1, n_modes=128, dt=1e-4, t_end=0.5, save_every=5000)
    got = dy.final_state(u0, cfg, NoiseSpec.zero())
    ref = dy.cole_hopf(u0, 0.1, 0.5)
    err = float(np.max(np.abs(sp.grid_values(got.coeffs - ref.coeffs, 1024))))
    return CheckResult(2, "Cole-Hopf cross-check", err <= 1e-4, {"linf_err": err},
                       {"cole_hopf": Table(("t", "linf_err"), [(0.5, err)])})


@criterion(3, "noise moments")
def noise_moments(plan: ExperimentPlan, ens: EnsembleCache | None = None) -> CheckResult:
    spec = plan.noise_spec()
    rep = path_moments_test(spec, T=1.0, dt=1e-3, R=plan.moment_paths, master_seed=plan.seed)
    d = rep.as_dict()
    return CheckResult(3, "noise moments", rep.final_ok and rep.doob_ok,
                       {"mean_final_sq": rep.mean_final_sq, "exact": rep.exact_final_sq,
                        "se": rep.se_final_sq, "mean_sup_sq": rep.mean_sup_sq, "doob_bound": rep.doob_bound},
                       {"noise_moments": Table(tuple(d), [tuple(d.values())])})


@criterion(4, "L1 contraction")
def l1_contraction(plan: ExperimentPlan, ens: EnsembleCache | None = None) -> CheckResult:
    """Pairs of random smooth fields sharing one noise path per pair."""
    nu, n, dt = 0.05, 256, 2e-4
    cfg = dy.SimConfig(nu=nu, n_modes=n, dt=dt, t_end=5.0, save_every=50)
    rng = np.random.default_rng(plan.seed)
    pairs = [(dy.random_smooth_field(n, 4.0, rng), dy.random_smooth_field(n, 4.0, rng))
             for _ in range(plan.contraction_pairs)]
    recs = dy.run_coupled_ensemble(pairs, cfg, plan.noise_spec(), plan.seed, on_error="record")
    excess = np.array([r.max_excess() for r in recs])
    failed = sum(r.first.failure is not None or r.second.failure is not None for r in recs)
    worst = float(np.nanmax(excess))
    rows = [(r.first.member_index, float(r.l1_diff[0]), float(r.l1_diff[-1]), float(e))
            for r, e in zip(recs, excess)]
    return CheckResult(4, "L1 contraction", worst <= 10 * dt and failed == 0,
                       {"max_excess_per_time": worst, "bound": 10 * dt, "failed_pairs": failed},
                       {"l1_contraction": Table(("pair", "l1_initial", "l1_final", "max_excess_per_time"), rows)})


# --- 5-7, 11: brackets ------------------------------------------------------------


@criterion(5, "energy balance")
def energy_balance(plan: ExperimentPlan, ens: EnsembleCache) -> CheckResult:
    nu = plan.nus[0]
    recs, cfg = stationary_ensemble(plan, ens, nu)
    spec = plan.noise_spec()
    T = plan.window_start
    sigma = plan.sigma if plan.sigma is not None else dg.default_sigma(recs, spec, T)
    sigma = min(sigma, plan.t_end - T)
    led = dg.energy_ledger(recs, nu, spec, T, sigma)
    d = led.as_dict()
    return CheckResult(5, "energy balance", led.balanced(),
                       {"nu": nu, "T": T, "sigma": sigma, "residual": led.residual, "tolerance": led.tolerance(),
                        "input": led.input},
                       {"energy_ledger": Table(tuple(d), [tuple(d.values())])})


@criterion(6, "dissipation bracket")
def dissipation_bracket(plan: ExperimentPlan, ens: EnsembleCache) -> CheckResult:
    b0 = b_sum(plan.noise_spec(), 0)
    T, sigma = _window(plan)
    rows, ok = [], True
    for nu in plan.bracket_nus:
        recs, _ = stationary_ensemble(plan, ens, nu)
        b = dg.bracket(recs, "norm1_sq", T, sigma)
        v, se = nu * b.value, nu * b.std_error
        inside = 0.25 * b0 - 3 * se <= v <= 0.75 * b0 + 3 * se
        ok &= inside
        rows.append((nu, v, se, inside))
    return CheckResult(6, "dissipation bracket", ok,
                       {"nu*<<|u|_1^2>>": [r[1] for r in rows], "band": [0.25 * b0, 0.75 * b0]},
                       {"dissipation": Table(("nu", "nu_bracket_norm1_sq", "se", "inside"), rows)})


@criterion(7, "Sobolev scaling")
def sobolev_scaling(plan: ExperimentPlan, ens: EnsembleCache) -> CheckResult:
    T, sigma = _window(plan)
    rows, fits, ok = [], [], True
    slopes = {}
    for m in plan.orders:
        pts = []
        for nu in plan.nus:
            recs, _ = stationary_ensemble(plan, ens, nu)
            b = dg.bracket(recs, f"norm{m}_sq", T, sigma)
            pts.append((1.0 / nu, b.value))
            rows.append((m, nu, b.value, b.std_error))
        fit = tb.scaling_fit(pts)
        target, tol = 2 * m - 1, 0.3 * m
        ok &= fit.within(target, tol)
        slopes[f"slope_m{m}"] = fit.slope
        fits.append((m, fit.slope, fit.slope_se, fit.r2, target, tol))
    return CheckResult(7, "Sobolev scaling", ok, slopes,
                       {"scaling": Table(("m", "nu", "bracket_norm_m_sq", "se"), rows),
                        "scaling_fits": Table(("m", "slope", "slope_se", "r2", "target", "tol"), fits)})


@criterion(11, "Kruzhkov uniformity")
def kruzhkov_uniformity(plan: ExperimentPlan, ens: EnsembleCache) -> CheckResult:
    t0, t1 = plan.kruzhkov_window
    rows, chain = [], True
    for nu in plan.nus:
        recs, _ = stationary_ensemble(plan, ens, nu)
        b = dg.bracket(recs, "sup_ux_plus", t0, t1 - t0)
        holds = all(dg.gradient_chain_holds(r["linf_u"], r["l1_ux"], r["sup_ux_plus"]) for r in recs)
        chain &= holds
        rows.append((nu, b.value, b.std_error, holds))
    vals = [v for nu, v, _, _ in rows if any(math.isclose(nu, k) for k in plan.kruzhkov_nus)]
    ratio = max(vals) / min(vals) if vals and min(vals) > 0 else math.inf
    full = max(r[1] for r in rows) / min(r[1] for r in rows)
    return CheckResult(11, "Kruzhkov uniformity", ratio <= 3 and chain,
                       {"ratio": ratio, "ratio_full_grid": full, "gradient_chain_all_snapshots": chain},
                       {"kruzhkov": Table(("nu", "bracket_sup_ux_plus", "se", "gradient_chain_holds"), rows)})


# --- 8-10: turbulence -------------------------------------------------------------


def _k_range(plan: ExperimentPlan, nu: float) -> np.ndarray:
    lo, hi = tb.inertial_k_range(nu, plan.c1, plan.c2)
    return np.arange(math.ceil(lo - 1e-9), math.floor(hi + 1e-9) + 1)


@criterion(8, "energy spectrum")
def spectrum_slope(plan: ExperimentPlan, ens: EnsembleCache) -> CheckResult:
    nu = plan.nus[0]
    recs, _ = stationary_ensemble(plan, ens, nu)
    T, sigma = _window(plan)
    ks = _k_range(plan, nu)
    E = tb.energy_spectrum(recs, plan.band_M, ks, T, sigma)
    fit = tb.scaling_fit(list(zip(ks, E.values)))
    comp = ks ** 2 * E.values
    spread = float(comp.max() / comp.min())
    passed = fit.within(-2.0, 0.35) and spread <= 10
    return CheckResult(8, "energy spectrum", passed,
                       {"nu": nu, "k_range": [int(ks[0]), int(ks[-1])], "slope": fit.slope, "k2E_spread": spread},
                       {"spectrum": Table(("k", "E_k", "se", "k2_E_k"),
                                          [(int(k), v, s, k * k * v) for k, v, s in E.rows()])})


@criterion(9, "structure functions")
def structure_slopes(plan: ExperimentPlan, ens: EnsembleCache) -> CheckResult:
    nu = plan.nus[0]
    recs, cfg = stationary_ensemble(plan, ens, nu)
    T, sigma = _window(plan)
    lo, hi = tb.inertial_l_range(nu, plan.c1, plan.c2)
    l_grid = np.unique(np.rint(np.geomspace(lo, hi, plan.l_points) * cfg.grid)) / cfg.grid
    targets = {2.0: (1.0, 0.25), 0.5: (0.5, 0.2)}
    measured, tables, ok = {"nu": nu, "l_range": [lo, hi]}, {}, True
    for p in plan.degrees:
        s = tb.structure_function(recs, p, l_grid, T, sigma, cfg.grid)
        fit = tb.scaling_fit(list(zip(s.l_used, s.values)))
        target, tol = targets.get(float(p), (min(p, 1.0), 0.25))
        ok &= fit.within(target, tol)
        measured[f"slope_p{p:g}"] = fit.slope
        tables[f"structure_p{p:g}"] = Table(("l_requested", "l_used", "S_p", "se"), s.rows())
    return CheckResult(9, "structure functions", ok, measured, tables)


@criterion(10, "space scale")
def space_scale(plan: ExperimentPlan, ens: EnsembleCache) -> CheckResult:
    nu = plan.space_scale_nu if plan.space_scale_nu is not None else plan.nus[0]
    comp = scaling_companion(plan)
    recs, _ = stationary_ensemble(comp, ens, nu)
    T, sigma = _window(comp)
    ks = _k_range(plan, nu)
    rep = tb.space_scale_assay(recs, plan.gammas, nu, T, sigma, inertial=(int(ks[0]), int(max(ks[-1], ks[0]))))
    lo_g, hi_g = min(plan.gammas), max(plan.gammas)
    r_hi, r_lo = rep.row(hi_g)["ratio"], rep.row(lo_g)["ratio"]
    passed = r_hi <= 1e-3 and r_lo >= 1e-2
    rows = [(r["gamma"], r["k"], r["value"], r["reference"], r["ratio"], r["class"]) for r in rep.rows]
    return CheckResult(10, "space scale", passed,
                       {"nu": nu, f"ratio_gamma{hi_g:g}": r_hi, f"ratio_gamma{lo_g:g}": r_lo, "anchor": rep.anchor},
                       {"space_scale": Table(("gamma", "k", "power", "k-2_reference", "ratio", "class"), rows)})


# --- 12: mixing and recurrence ---------------------------------------------------


def mixing_ensembles(plan: ExperimentPlan, ens: EnsembleCache):
    """Ensembles from +A·e_1 (members 0..R-1) and -A·e_1 (members R..2R-1, or
    0..R-1 with shared noise)."""
    nu = plan.nus[0]
    cfg = eg.mixing_config(plan.sim_config(nu, snapshots=False), plan.t_grid)
    spec = plan.noise_spec()
    u1 = sp.single_mode(1, plan.n_modes, plan.u0_amplitude)
    u2 = sp.single_mode(1, plan.n_modes, -plan.u0_amplitude)
    second = range(plan.R) if plan.shared_noise else range(plan.R, 2 * plan.R)
    return ens.get(u1, cfg, spec, plan.seed, range(plan.R)), ens.get(u2, cfg, spec, plan.seed, second)


@criterion(12, "mixing decay")
def mixing(plan: ExperimentPlan, ens: EnsembleCache) -> CheckResult:
    a, b = mixing_ensembles(plan, ens)
    curve = eg.mixing_curve(a, b, plan.t_grid, shared_noise=plan.shared_noise)
    t0, t1 = min(plan.t_grid), max(plan.t_grid)
    ratio = curve.decay_ratio(t0, t1)
    rows = [(float(t), float(v), *map(float, per)) for t, v, *per in curve.rows()]
    return CheckResult(12, "mixing decay", ratio <= 0.25,
                       {"value_t_first": curve.value_at(t0), "value_t_last": curve.value_at(t1), "ratio": ratio,
                        "floor": curve.floor},
                       {"mixing": Table(("t", "lip_dual_lower_bound", *curve.names), rows),
                        "mixing_normalisation": Table(("observable", "scale"),
                                                      list(zip(curve.names, map(float, curve.scales))))})


@criterion(12, "recurrence survival")
def recurrence(plan: ExperimentPlan, ens: EnsembleCache) -> CheckResult:
    a, b = mixing_ensembles(plan, ens)
    steady = dg.bracket(list(a) + list(b), "norm0", 5.0, plan.t_end - 5.0).value
    eps = plan.epsilon_factor * steady
    rep = eg.hitting_report(a, eps, plan.t_end, plan.T_grid)
    dec = rep.strictly_decreasing(plan.T_grid)
    return CheckResult(12, "recurrence survival", dec,
                       {"epsilon": eps, "survival": [float(x) for x in rep.survival], "strictly_decreasing": dec},
                       {"survival": Table(("T", "survival", "lower95", "upper95"), rep.rows()),
                        "hitting_times": Table(("member", "first_hit"),
                                               [(r.member_index, float(t)) for r, t in
                                                zip([r for r in a if r.failure is None], rep.times)])})


@criterion(12, "mixing and recurrence")
def mixing_and_recurrence(plan: ExperimentPlan, ens: EnsembleCache) -> CheckResult:
    m, r = mixing(plan, ens), recurrence(plan, ens)
    return CheckResult(12, "mixing and recurrence", m.passed and r.passed,
                       {**m.measured, **{k: v for k, v in r.measured.items()}}, {**m.tables, **r.tables})


# --- registry ---------------------------------------------------------------------

# kind -> checks run by that experiment
KIND_CHECKS = {
    "validate": (heat_oracle, cole_hopf_oracle, noise_moments, l1_contraction),
    "simulate": (energy_balance,),
    "scaling": (dissipation_bracket, sobolev_scaling, kruzhkov_uniformity),
    "spectrum": (spectrum_slope, space_scale),
    "structure": (structure_slopes,),
    "mixing": (mixing,),
    "recurrence": (recurrence,),
}


def acceptance_plans(seed: int = 0) -> dict[str, ExperimentPlan]:
    return {k: build_plan({"kind": k, "seed": seed}) for k in KIND_CHECKS}
