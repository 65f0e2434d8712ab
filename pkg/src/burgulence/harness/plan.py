"""
Experiment plans: a YAML file naming the experiment kind and its knobs.

Every field has a default, and each kind fills in its own defaults for the
fields the file leaves out (for instance ``scaling`` runs four viscosities
with R = 30 up to t = 15). The filled-in plan is echoed into the manifest.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Any, Literal

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from ..dynamics import SimConfig
from ..errors import PlanError
from ..noise import NoiseSpec, member_seed

Kind = Literal["validate", "simulate", "scaling", "spectrum", "structure", "mixing", "recurrence"]
KINDS: tuple[str, ...] = Kind.__args__


class NoisePlan(BaseModel):
    """Either a power law b_s ∝ |s|^-exponent normalised to B_0, or explicit pairs."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    exponent: float = 3.0
    cutoff: int = Field(16, ge=1)
    b0: float = Field(1.0, ge=0.0)
    pairs: dict[int, float] | None = None

    def build(self) -> NoiseSpec:
        if self.pairs is not None:
            return NoiseSpec.from_pairs(self.pairs)
        return NoiseSpec.powerlaw(self.exponent, self.cutoff, self.b0)


# Per-kind defaults, applied only to keys the plan file leaves out.
KIND_DEFAULTS: dict[str, dict[str, Any]] = {
    "validate": {},
    "simulate": {"nu": 0.05, "window_start": 5.0},
    "scaling": {"nu_grid": [0.1, 0.05, 0.02, 0.01], "t_end": 15.0, "R": 30,
                "dt_by_nu": {0.02: 1e-4, 0.01: 1e-4}, "snapshot_interval": 0.5},
    "spectrum": {"nu": 0.01, "n_modes": 512, "dt": 8e-5, "t_end": 11.0, "R": 20, "sigma": 10.0,
                 "space_scale_nu": 0.02},
    "structure": {"nu": 0.01, "n_modes": 512, "dt": 8e-5, "t_end": 11.0, "R": 20, "sigma": 10.0},
    "mixing": {"nu": 0.05, "n_modes": 128, "t_end": 20.0, "R": 100},
    "recurrence": {"nu": 0.05, "n_modes": 128, "t_end": 20.0, "R": 100},
}


class ExperimentPlan(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: Kind
    seed: int = Field(0, ge=0, lt=2 ** 64)
    nu: float | None = None
    nu_grid: list[float] | None = None
    n_modes: int = Field(256, ge=8)
    dt: float = Field(2e-4, gt=0)
    dt_by_nu: dict[float, float] = Field(default_factory=dict)
    t_end: float = Field(30.0, gt=0)
    save_every: int = Field(50, ge=1)
    snapshot_interval: float = Field(0.1, gt=0)
    R: int = Field(50, ge=1)
    noise: NoisePlan = NoisePlan()
    out: str | None = None

    # brackets
    window_start: float = Field(1.0, ge=0)
    sigma: float | None = Field(None, gt=0)
    kruzhkov_window: tuple[float, float] = (1.0, 10.0)
    kruzhkov_nus: list[float] = [0.1, 0.02]
    bracket_nus: list[float] = [0.05, 0.02, 0.01]
    # turbulence
    orders: list[int] = [1, 2]
    degrees: list[float] = [2.0, 0.5]
    band_M: float = Field(4.0, gt=1)
    l_points: int = Field(12, ge=4)
    c1: float = Field(10.0, gt=0)
    c2: float = Field(0.25, gt=0, le=0.5)
    gammas: list[float] = [0.8, 1.4]
    space_scale_nu: float | None = None
    # ergodicity
    u0_amplitude: float = 1.0
    t_grid: list[float] = [1.0, 2.0, 5.0, 10.0, 20.0]
    shared_noise: bool = False
    epsilon_factor: float = Field(0.3, gt=0)
    T_grid: list[float] = [2.0, 5.0, 10.0, 20.0]
    # validation oracles
    contraction_pairs: int = Field(50, ge=1)
    moment_paths: int = Field(1000, ge=2)

    @model_validator(mode="before")
    @classmethod
    def _kind_defaults(cls, data):
        if isinstance(data, dict) and data.get("kind") in KIND_DEFAULTS:
            data = {**KIND_DEFAULTS[data["kind"]], **data}
        return data

    @field_validator("nu", "space_scale_nu")
    @classmethod
    def _nu_range(cls, v):
        if v is not None and not 0 < v <= 1:
            raise ValueError("nu out of (0,1]")
        return v

    @field_validator("nu_grid", "kruzhkov_nus", "bracket_nus")
    @classmethod
    def _grid_range(cls, v):
        if v is not None and any(not 0 < x <= 1 for x in v):
            raise ValueError("nu out of (0,1]")
        return v

    @model_validator(mode="after")
    def _windows(self):
        if self.kind != "validate" and not self.nus:
            raise ValueError("plan needs nu or nu_grid")
        if self.sigma is not None and self.window_start + self.sigma > self.t_end + 1e-9:
            raise ValueError(f"window [{self.window_start}, {self.window_start + self.sigma}] exceeds t_end = {self.t_end}")
        if self.kind == "mixing" and max(self.t_grid) > self.t_end + 1e-9:
            raise ValueError("t_grid extends beyond t_end")
        if self.kind == "recurrence" and max(self.T_grid) > self.t_end + 1e-9:
            raise ValueError("T_grid extends beyond t_end")
        return self

    # --- derived ---------------------------------------------------------

    @property
    def nus(self) -> list[float]:
        if self.nu_grid:
            return list(self.nu_grid)
        return [self.nu] if self.nu is not None else []

    def dt_for(self, nu: float) -> float:
        for k, v in self.dt_by_nu.items():
            if math.isclose(k, nu):
                return v
        return self.dt

    def noise_spec(self) -> NoiseSpec:
        return self.noise.build()

    def sim_config(self, nu: float, t_end: float | None = None, n_modes: int | None = None,
                   dt: float | None = None, snapshots: bool = True) -> SimConfig:
        dt = dt if dt is not None else self.dt_for(nu)
        t_end = t_end if t_end is not None else self.t_end
        snap = max(1, int(round(self.snapshot_interval / dt))) if snapshots else None
        return SimConfig(nu=nu, n_modes=n_modes or self.n_modes, dt=dt, t_end=t_end,
                         save_every=self.save_every, snapshot_every=snap)

    def schedule(self) -> list[dict]:
        """One entry per (ν, member); members reuse their noise across ν."""
        return [{"nu": nu, "member": m, "seed": member_seed(self.seed, m)}
                for nu in self.nus for m in range(self.R)]


def _set_dotted(d: dict, key: str, value) -> None:
    parts = key.split(".")
    for p in parts[:-1]:
        d = d.setdefault(p, {})
        if not isinstance(d, dict):
            raise PlanError(f"override {key!r}: {p!r} is not a mapping")
    d[parts[-1]] = value


def parse_override(item: str) -> tuple[str, Any]:
    if "=" not in item:
        raise PlanError(f"override {item!r} is not key=value")
    key, raw = item.split("=", 1)
    try:
        value = yaml.safe_load(raw) if raw else None
    except yaml.YAMLError as exc:
        raise PlanError(f"override {key}: cannot parse {raw!r}: {exc}") from exc
    return key.strip(), value


def _validation_message(exc: ValidationError, source: str) -> str:
    lines = []
    for err in exc.errors():
        loc = ".".join(str(p) for p in err["loc"]) or "plan"
        msg = err["msg"].removeprefix("Value error, ")
        lines.append(f"{source}: {loc}: {msg}")
    return "\n".join(lines)


def build_plan(data: dict, overrides: list[str] = (), source: str = "<plan>") -> ExperimentPlan:
    data = dict(data or {})
    for item in overrides:
        _set_dotted(data, *parse_override(item))
    try:
        return ExperimentPlan(**data)
    except ValidationError as exc:
        raise PlanError(_validation_message(exc, source)) from None


def read_plan_data(path: str | Path) -> dict:
    """Parse a plan file into a plain mapping, with line numbers on errors."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise PlanError(f"{path}: {exc.strerror}") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark
        where = f"line {mark.line + 1}, column {mark.column + 1}" if mark else "unknown position"
        raise PlanError(f"{path}: parse error at {where}: {exc.problem}") from None
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise PlanError(f"{path}: top level must be a mapping of keys to values")
    return data


def load_plan(path: str | Path, overrides: list[str] = ()) -> ExperimentPlan:
    return build_plan(read_plan_data(path), overrides, source=str(path))
