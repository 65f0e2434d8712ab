"""Run one experiment: its ensembles, its checks, its files and its manifest."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from importlib import metadata
from pathlib import Path

from .. import turbulence as tb
from ..records import TrajectoryRecord
from ..errors import BurgulenceError
from .checks import KIND_CHECKS, CheckResult, Table, unevaluable
from .ensembles import EnsembleCache
from .plan import ExperimentPlan

MANIFEST = "manifest.json"


def _version() -> str:
    try:
        return metadata.version("burgulence")
    except metadata.PackageNotFoundError:
        return "0+unknown"


def _cell(v) -> str:
    if isinstance(v, bool) or v is None:
        return str(v).lower()
    if isinstance(v, float):
        return repr(v)
    if hasattr(v, "dtype"):
        return repr(v.item())
    return str(v)


def write_table(path: Path, table: Table) -> None:
    lines = [",".join(table.header)]
    lines += [",".join(_cell(v) for v in row) for row in table.rows]
    path.write_text("\n".join(lines) + "\n")


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


@dataclass
class Outcome:
    manifest: dict
    results: list[CheckResult]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    @property
    def exit_code(self) -> int:
        return 0 if self.passed else 1


def _member_files(out: Path, records: list[TrajectoryRecord]) -> None:
    d = out / "members"
    d.mkdir(exist_ok=True)
    for r in records:
        nu = r.meta.get("nu")
        r.to_csv(d / f"nu{nu:g}_member{r.member_index:04d}.csv")


def _failures(records: list[TrajectoryRecord]) -> list[dict]:
    return [{"nu": r.meta.get("nu"), "member": r.member_index, "seed": r.seed, "failure": r.failure}
            for r in records if r.failure is not None]


def run_experiment(plan: ExperimentPlan, out_dir: str | Path, workers: int = 1,
                   ens: EnsembleCache | None = None, keep_members: bool | None = None) -> Outcome:
    """Execute ``plan`` and write its tables plus ``manifest.json`` under ``out_dir``.

    Data files depend only on the plan, so reruns are byte-identical.
    Per-member time series are written for ``simulate`` (or when
    ``keep_members`` is set).
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ens = ens or EnsembleCache(workers)
    results = []
    for check in KIND_CHECKS[plan.kind]:
        try:
            results.append(check(plan, ens))
        except BurgulenceError as exc:  # e.g. every member failed
            results.append(unevaluable(check, exc))

    for res in results:
        for name, table in res.tables.items():
            write_table(out / f"{name}.csv", table)
    records = ens.all_records()
    if keep_members if keep_members is not None else plan.kind == "simulate":
        _member_files(out, records)

    failures = _failures(records)
    files = sorted(p for p in out.rglob("*") if p.is_file() and p.name != MANIFEST)
    manifest = {
        "plan": plan.model_dump(mode="json"),
        "code_version": _version(),
        "schedule": plan.schedule(),
        "inertial_range_constants": {"c1": plan.c1, "c2": plan.c2, "library_c1": tb.C1, "library_c2": tb.C2},
        "files": [{"path": str(p.relative_to(out)), "sha256": _sha256(p), "bytes": p.stat().st_size} for p in files],
        "acceptance": [r.summary() for r in results],
        "passed": all(r.passed for r in results),
        "degraded": bool(failures),
        "failures": failures,
    }
    (out / MANIFEST).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return Outcome(manifest, results)
