"""Time series produced by one noise realisation."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

COLUMNS = ("norm0", "norm1", "norm2", "norm3", "linf_u", "l1_ux", "sup_ux_plus")


@dataclass
class TrajectoryRecord:
    """Diagnostics of u(t) every ``save_every`` steps, plus optional snapshots.

    ``snapshots`` holds the complex amplitudes û_1..û_N at times ``snap_t``.
    """

    t: np.ndarray
    columns: dict[str, np.ndarray]
    member_index: int = 0
    seed: int = 0
    snap_t: np.ndarray | None = None
    snapshots: np.ndarray | None = None
    failure: str | None = None
    meta: dict = field(default_factory=dict)

    def __getitem__(self, name: str) -> np.ndarray:
        if name == "t":
            return self.t
        if name == "energy":
            return 0.5 * self.columns["norm0"] ** 2
        if name.startswith("norm") and name.endswith("_sq"):
            return self.columns[name[:-3]] ** 2
        return self.columns[name]

    @property
    def t_end(self) -> float:
        return float(self.t[-1])

    def to_csv(self, path: str | Path) -> None:
        names = ("t",) + COLUMNS
        data = np.column_stack([self.t] + [self.columns[c] for c in COLUMNS])
        lines = [",".join(names)]
        lines += [",".join(repr(float(v)) for v in row) for row in data]
        Path(path).write_text("\n".join(lines) + "\n")

    def spectrum_csv(self, path: str | Path) -> None:
        """Rows (t, k, |û_k|²) for every stored snapshot."""
        if self.snapshots is None:
            raise ValueError("record holds no snapshots")
        lines = ["t,k,power"]
        for t, c in zip(self.snap_t, self.snapshots):
            lines += [f"{float(t)!r},{k},{float(abs(a) ** 2)!r}" for k, a in enumerate(c, start=1)]
        Path(path).write_text("\n".join(lines) + "\n")

    @classmethod
    def from_csv(cls, path: str | Path, **kw) -> "TrajectoryRecord":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(t=data[:, 0], columns={c: data[:, i + 1] for i, c in enumerate(COLUMNS)}, **kw)


@dataclass
class CoupledTrajectoryRecord:
    """Two solutions driven by one noise path and their L1 distance."""

    first: TrajectoryRecord
    second: TrajectoryRecord
    l1_diff: np.ndarray

    @property
    def t(self) -> np.ndarray:
        return self.first.t

    def max_excess(self) -> float:
        """max_t [|Δu(t)|₁ - |Δu(0)|₁] normalised per unit time (t > 0 only)."""
        t = self.t[1:]
        return float(np.max((self.l1_diff[1:] - self.l1_diff[0]) / t, initial=-np.inf))

    def to_csv(self, path: str | Path) -> None:
        lines = ["t,l1_diff,norm0_first,norm0_second"]
        for row in zip(self.t, self.l1_diff, self.first["norm0"], self.second["norm0"]):
            lines.append(",".join(repr(float(v)) for v in row))
        Path(path).write_text("\n".join(lines) + "\n")
