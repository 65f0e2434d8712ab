"""Member scheduling across worker processes, with an in-memory cache."""

from __future__ import annotations

import hashlib
import os
from concurrent.futures import ProcessPoolExecutor
from typing import Sequence

import numpy as np

from ..dynamics import SimConfig, run_ensemble
from ..noise import NoiseSpec
from ..records import TrajectoryRecord
from ..spectral import SpectralField

WORKERS_ENV = "BURGULENCE_WORKERS"


def default_workers() -> int:
    raw = os.environ.get(WORKERS_ENV)
    if raw is None:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"{WORKERS_ENV}={raw!r} is not an integer") from None
    return max(1, n)


def _chunk(xs: list, n: int) -> list[list]:
    n = max(1, min(n, len(xs)))
    size, extra = divmod(len(xs), n)
    out, i = [], 0
    for j in range(n):
        k = size + (j < extra)
        out.append(xs[i:i + k])
        i += k
    return out


def _run_chunk(args):
    u0, cfg, spec, seed, members = args
    return run_ensemble(u0, cfg, spec, seed, members, on_error="record")


def run_members(u0, cfg: SimConfig, spec: NoiseSpec, seed: int, members: Sequence[int],
                workers: int = 1) -> list[TrajectoryRecord]:
    """Run ``members`` split over ``workers`` processes, results in member order.

    Each member owns its noise stream, so the split does not change any result.
    """
    members = list(members)
    if isinstance(u0, (list, tuple)) or (isinstance(u0, np.ndarray) and u0.ndim == 2):
        raise TypeError("run_members takes one initial field shared by all members")
    if workers <= 1 or len(members) < 2:
        return _run_chunk((u0, cfg, spec, seed, members))
    jobs = [(u0, cfg, spec, seed, part) for part in _chunk(members, workers)]
    with ProcessPoolExecutor(max_workers=len(jobs)) as pool:
        parts = list(pool.map(_run_chunk, jobs))
    return [r for part in parts for r in part]


def _key(u0: SpectralField, cfg: SimConfig, spec: NoiseSpec, seed: int, members: Sequence[int]) -> str:
    h = hashlib.sha256()
    h.update(cfg.model_dump_json().encode())
    h.update(spec.pos.tobytes() + spec.neg.tobytes())
    h.update(np.ascontiguousarray(u0.coeffs).tobytes())
    h.update(f"{seed}:{tuple(members)}".encode())
    return h.hexdigest()


class EnsembleCache:
    """Reuses ensembles requested more than once with identical inputs."""

    def __init__(self, workers: int = 1):
        self.workers = workers
        self._store: dict[str, list[TrajectoryRecord]] = {}

    def get(self, u0: SpectralField, cfg: SimConfig, spec: NoiseSpec, seed: int,
            members: Sequence[int]) -> list[TrajectoryRecord]:
        key = _key(u0, cfg, spec, seed, members)
        if key not in self._store:
            self._store[key] = run_members(u0, cfg, spec, seed, members, self.workers)
        return self._store[key]

    def all_records(self) -> list[TrajectoryRecord]:
        return [r for recs in self._store.values() for r in recs]
