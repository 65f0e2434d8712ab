"""
The Wiener process ξ(t) = Σ_s b_s β_s(t) e_s in H, its increments, and
Monte-Carlo checks of its second moments.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .spectral import SQRT2, RealCoeffs


@dataclass(frozen=True)
class NoiseSpec:
    """Amplitudes b_s on a finite support 1 <= |s| <= support.

    ``pos[s-1]`` is b_s and ``neg[s-1]`` is b_{-s}.
    """

    pos: np.ndarray
    neg: np.ndarray

    def __post_init__(self):
        p = np.atleast_1d(np.array(self.pos, dtype=float))
        n = np.atleast_1d(np.array(self.neg, dtype=float))
        if p.shape != n.shape or p.ndim != 1:
            raise ValueError("pos and neg must be 1-D arrays of equal length")
        if not (np.all(np.isfinite(p)) and np.all(np.isfinite(n))):
            raise ValueError("non-finite noise amplitude")
        object.__setattr__(self, "pos", p)
        object.__setattr__(self, "neg", n)

    @property
    def support(self) -> int:
        nz = np.nonzero((self.pos != 0) | (self.neg != 0))[0]
        return int(nz[-1] + 1) if nz.size else 0

    @property
    def is_zero(self) -> bool:
        return self.support == 0

    def b(self, s: int) -> float:
        if s == 0 or abs(s) > self.pos.size:
            return 0.0
        return float(self.pos[s - 1] if s > 0 else self.neg[-s - 1])

    def pairs(self) -> list[tuple[int, float]]:
        out = []
        for s in range(1, self.pos.size + 1):
            for sign, arr in ((1, self.pos), (-1, self.neg)):
                if arr[s - 1] != 0:
                    out.append((sign * s, float(arr[s - 1])))
        return sorted(out, key=lambda p: (abs(p[0]), -p[0]))

    @classmethod
    def from_pairs(cls, pairs) -> "NoiseSpec":
        pairs = dict(pairs)
        if 0 in pairs:
            raise ValueError("mode 0 cannot be forced (zero-mean space)")
        size = max((abs(s) for s in pairs), default=1)
        pos = np.zeros(size)
        neg = np.zeros(size)
        for s, b in pairs.items():
            if s > 0:
                pos[s - 1] = b
            else:
                neg[-s - 1] = b
        return cls(pos, neg)

    @classmethod
    def zero(cls) -> "NoiseSpec":
        return cls(np.zeros(1), np.zeros(1))

    @classmethod
    def powerlaw(cls, exponent: float = 3.0, cutoff: int = 16, target_b0: float = 1.0) -> "NoiseSpec":
        """b_s = c|s|^(-exponent) for 1 <= |s| <= cutoff, with c set so B_0 = target_b0."""
        s = np.arange(1, cutoff + 1, dtype=float)
        b = s ** (-exponent)
        c = np.sqrt(target_b0 / (2.0 * np.sum(b * b))) if target_b0 > 0 else 0.0
        return cls(c * b, c * b)


DEFAULT_NOISE = NoiseSpec.powerlaw()


def b_sum(spec: NoiseSpec, m: float) -> float:
    """B_m = Σ |s|^{2m} b_s²."""
    s = np.arange(1, spec.pos.size + 1, dtype=float)
    return float(np.sum(s ** (2 * m) * (spec.pos ** 2 + spec.neg ** 2)))


def _mix_seed(master_seed: int, member_index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(master_seed) & (2**64 - 1), int(member_index)])


@dataclass
class RngStream:
    """Per-member counter-based Gaussian stream (Philox keyed by seed and index).

    Draws are consumed sequentially, so drawing k blocks of n normals gives
    the same numbers as one block of k*n, whatever the chunking.
    """

    master_seed: int
    member_index: int = 0
    counter: int = 0
    _gen: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        self._gen = np.random.Generator(np.random.Philox(_mix_seed(self.master_seed, self.member_index)))

    def normals(self, shape) -> np.ndarray:
        z = self._gen.standard_normal(shape)
        self.counter += z.size
        return z

    def uniforms(self, shape) -> np.ndarray:
        u = self._gen.random(shape)
        self.counter += u.size
        return u


def member_seed(master_seed: int, member_index: int) -> int:
    """A 64-bit integer summarising the stream of one member (for manifests)."""
    return int(_mix_seed(master_seed, member_index).generate_state(1, dtype=np.uint64)[0])


def increments_from_normals(spec: NoiseSpec, z: np.ndarray, dt: float) -> tuple[np.ndarray, np.ndarray]:
    """Real increments (pos, neg) over the support from standard normals.

    ``z`` has trailing axis 2*S laid out as [g_1..g_S, g_-1..g_-S].
    """
    S = spec.pos.size
    scale = np.sqrt(dt)
    return spec.pos * z[..., :S] * scale, spec.neg * z[..., S:] * scale


def complex_increments(spec: NoiseSpec, z: np.ndarray, dt: float) -> np.ndarray:
    dp, dn = increments_from_normals(spec, z, dt)
    return (dp - 1j * dn) / SQRT2


def sample_increment(spec: NoiseSpec, dt: float, rng: RngStream, n_modes: int | None = None) -> RealCoeffs:
    """Δξ_s = b_s g_s with g_s ~ N(0, dt) independent."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    S = spec.pos.size
    n = S if n_modes is None else n_modes
    if n < spec.support:
        raise ValueError(f"noise support {spec.support} exceeds truncation {n}")
    dp, dn = increments_from_normals(spec, rng.normals(2 * S), dt)
    pos = np.zeros(n)
    neg = np.zeros(n)
    k = min(S, n)
    pos[:k] = dp[:k]
    neg[:k] = dn[:k]
    return RealCoeffs(pos, neg)


@dataclass(frozen=True)
class MomentReport:
    T: float
    dt: float
    R: int
    b0: float
    mean_final_sq: float
    se_final_sq: float
    exact_final_sq: float
    mean_sup_sq: float
    se_sup_sq: float
    doob_bound: float

    @property
    def final_ok(self) -> bool:
        return abs(self.mean_final_sq - self.exact_final_sq) <= 3 * self.se_final_sq + 1e-15

    @property
    def doob_ok(self) -> bool:
        return self.mean_sup_sq <= self.doob_bound + 3 * self.se_sup_sq

    def as_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d.update(final_ok=self.final_ok, doob_ok=self.doob_ok)
        return d


def _se(x: np.ndarray) -> float:
    return float(np.std(x, ddof=1) / np.sqrt(x.size)) if x.size > 1 else 0.0


def simulate_paths(spec: NoiseSpec, T: float, dt: float, R: int, master_seed: int = 0) -> np.ndarray:
    """‖ξ(t_k)‖² for R independent paths, shape (R, n_steps + 1)."""
    n_steps = int(round(T / dt))
    S = spec.pos.size
    out = np.zeros((R, n_steps + 1))
    for r in range(R):
        rng = RngStream(master_seed, r)
        dp, dn = increments_from_normals(spec, rng.normals((n_steps, 2 * S)), dt)
        xp = np.cumsum(dp, axis=0)
        xn = np.cumsum(dn, axis=0)
        out[r, 1:] = np.sum(xp ** 2, axis=1) + np.sum(xn ** 2, axis=1)
    return out


def path_moments_test(spec: NoiseSpec, T: float, dt: float, R: int, master_seed: int = 0) -> MomentReport:
    """Compare E‖ξ(T)‖² with T·B_0 and E sup_t ‖ξ(t)‖² with the Doob bound 4·T·B_0."""
    sq = simulate_paths(spec, T, dt, R, master_seed)
    final = sq[:, -1]
    sup = sq.max(axis=1)
    b0 = b_sum(spec, 0)
    return MomentReport(
        T=T, dt=dt, R=R, b0=b0,
        mean_final_sq=float(final.mean()), se_final_sq=_se(final), exact_final_sq=T * b0,
        mean_sup_sq=float(sup.mean()), se_sup_sq=_se(sup), doob_bound=4.0 * T * b0,
    )


def increment_chisquare(spec: NoiseSpec, dt: float, n_samples: int, master_seed: int = 0, bins: int = 20) -> float:
    """p-value of a chi-square goodness-of-fit of normalised increments to N(0,1)."""
    from scipy import stats

    rng = RngStream(master_seed, 0)
    dp, dn = increments_from_normals(spec, rng.normals((n_samples, 2 * spec.pos.size)), dt)
    b = np.concatenate([spec.pos, spec.neg])
    inc = np.concatenate([dp, dn], axis=1)[:, b != 0] / (b[b != 0] * np.sqrt(dt))
    z = inc.ravel()
    edges = stats.norm.ppf(np.linspace(0, 1, bins + 1))
    observed, _ = np.histogram(z, bins=edges)
    expected = np.full(bins, z.size / bins)
    return float(stats.chisquare(observed, expected).pvalue)
