"""
Zero-mean periodic fields on the unit circle S^1 = R/Z.

A real field u(x) = sum_{s != 0} û_s exp(2πisx) is stored through its
positive-frequency amplitudes û_1..û_N only; û_{-s} = conj(û_s) is implied,
so Hermitian symmetry cannot be broken by construction and û_0 = 0 always.

The real trigonometric basis is e_s = √2 cos(2πsx), e_{-s} = √2 sin(2πsx)
for s ≥ 1, with û_s = (u_s - i u_{-s}) / √2.

Array-level helpers (``grid_values``, ``grid_coeffs``, ``flux``,
``sobolev_sq``) act on the last axis so that ensembles of shape (R, N) go
through one batched FFT.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import AliasError, HermitianViolation

SQRT2 = np.sqrt(2.0)
TWO_PI = 2.0 * np.pi


def dealias_grid_size(n_modes: int) -> int:
    """Smallest power of two strictly above 3N (2/3-rule headroom)."""
    g = 1
    while g <= 3 * n_modes:
        g *= 2
    return g


def wavenumbers(n_modes: int) -> np.ndarray:
    return np.arange(1, n_modes + 1, dtype=float)


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Complex amplitudes û_s for s = 1..N of a real zero-mean field."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex)
        if c.ndim != 1 or c.size == 0:
            raise ValueError("coeffs must be a non-empty 1-D array")
        if not np.all(np.isfinite(c)):
            raise ValueError("non-finite amplitude")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def n_modes(self) -> int:
        return self.coeffs.size

    def amplitude(self, s: int) -> complex:
        if s == 0:
            return 0j
        if abs(s) > self.n_modes:
            return 0j
        a = self.coeffs[abs(s) - 1]
        return a if s > 0 else np.conj(a)

    def two_sided(self) -> np.ndarray:
        """Amplitudes indexed s = -N..N (index s + N), û_0 = 0."""
        return np.concatenate([np.conj(self.coeffs[::-1]), [0j], self.coeffs])

    @classmethod
    def zeros(cls, n_modes: int) -> "SpectralField":
        return cls(np.zeros(n_modes, dtype=complex))

    @classmethod
    def from_two_sided(cls, values, rtol: float = 1e-10) -> "SpectralField":
        v = np.asarray(values, dtype=complex)
        if v.ndim != 1 or v.size % 2 != 1:
            raise ValueError("two-sided array must have odd length 2N+1")
        n = v.size // 2
        pos, neg = v[n + 1:], v[:n][::-1]
        scale = max(np.max(np.abs(v)), 1e-300)
        if np.max(np.abs(neg - np.conj(pos)), initial=0.0) > rtol * scale:
            raise HermitianViolation("amplitudes are not Hermitian-symmetric")
        if abs(v[n]) > rtol * scale:
            raise HermitianViolation("nonzero mean mode")
        return cls(pos)

    def __eq__(self, other) -> bool:
        return isinstance(other, SpectralField) and np.array_equal(self.coeffs, other.coeffs)

    __hash__ = None

    def __add__(self, other: "SpectralField") -> "SpectralField":
        return SpectralField(self.coeffs + other.coeffs)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        return SpectralField(self.coeffs - other.coeffs)

    def __mul__(self, a: float) -> "SpectralField":
        return SpectralField(a * self.coeffs)

    __rmul__ = __mul__


@dataclass(frozen=True)
class RealCoeffs:
    """Coefficients u_s against e_s: ``pos[s-1]`` = u_s, ``neg[s-1]`` = u_{-s}."""

    pos: np.ndarray
    neg: np.ndarray

    def __post_init__(self):
        p = np.array(self.pos, dtype=float)
        n = np.array(self.neg, dtype=float)
        if p.shape != n.shape:
            raise ValueError("pos and neg must have the same shape")
        if not (np.all(np.isfinite(p)) and np.all(np.isfinite(n))):
            raise ValueError("non-finite coefficient")
        object.__setattr__(self, "pos", p)
        object.__setattr__(self, "neg", n)

    @property
    def n_modes(self) -> int:
        return self.pos.shape[-1]

    def __getitem__(self, s: int) -> float:
        if s == 0 or abs(s) > self.n_modes:
            return 0.0
        return float(self.pos[s - 1] if s > 0 else self.neg[-s - 1])

    @classmethod
    def from_dict(cls, coeffs: dict[int, float], n_modes: int) -> "RealCoeffs":
        pos = np.zeros(n_modes)
        neg = np.zeros(n_modes)
        for s, v in coeffs.items():
            if s == 0 or abs(s) > n_modes:
                raise ValueError(f"mode {s} outside 1 <= |s| <= {n_modes}")
            if s > 0:
                pos[s - 1] = v
            else:
                neg[-s - 1] = v
        return cls(pos, neg)


@dataclass(frozen=True)
class GridField:
    """Samples u(x_j) at x_j = j/G."""

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def grid_size(self) -> int:
        return self.values.shape[-1]

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.grid_size) / self.grid_size


# --- basis maps -------------------------------------------------------------


def real_to_complex(c: RealCoeffs) -> SpectralField:
    return SpectralField((c.pos - 1j * c.neg) / SQRT2)


def complex_to_real(f: SpectralField | np.ndarray) -> RealCoeffs:
    """Inverse of :func:`real_to_complex`.

    Accepts a SpectralField or a two-sided amplitude array (s = -N..N), the
    latter checked for Hermitian symmetry.
    """
    if not isinstance(f, SpectralField):
        f = SpectralField.from_two_sided(f)
    c = f.coeffs
    return RealCoeffs(SQRT2 * c.real, -SQRT2 * c.imag)


# --- array-level kernels ----------------------------------------------------


def sobolev_sq(coeffs: np.ndarray, m: float) -> np.ndarray:
    """‖u‖_m² = Σ_{s∈Z*} (2π|s|)^{2m} |û_s|² along the last axis."""
    k = TWO_PI * wavenumbers(coeffs.shape[-1])
    return 2.0 * np.sum(k ** (2 * m) * np.abs(coeffs) ** 2, axis=-1)


def grid_values(coeffs: np.ndarray, grid_size: int) -> np.ndarray:
    n = coeffs.shape[-1]
    if grid_size < 2 * n + 2:
        raise AliasError(f"grid of {grid_size} points cannot represent {n} modes")
    full = np.zeros(coeffs.shape[:-1] + (grid_size // 2 + 1,), dtype=complex)
    full[..., 1:n + 1] = coeffs
    return np.fft.irfft(full, n=grid_size, axis=-1) * grid_size


def grid_coeffs(values: np.ndarray, n_modes: int) -> np.ndarray:
    g = values.shape[-1]
    if g < 2 * n_modes + 2:
        raise AliasError(f"grid of {g} points cannot resolve {n_modes} modes")
    return np.fft.rfft(values, axis=-1)[..., 1:n_modes + 1] / g


def flux(coeffs: np.ndarray, grid_size: int | None = None) -> np.ndarray:
    """Amplitudes of -½∂_x(u²), dealiased, along the last axis."""
    n = coeffs.shape[-1]
    g = dealias_grid_size(n) if grid_size is None else grid_size
    if g <= 3 * n:
        raise AliasError(f"dealiased product needs more than 3N = {3 * n} points, got {g}")
    u = grid_values(coeffs, g)
    sq = grid_coeffs(u * u, n)
    return -1j * np.pi * wavenumbers(n) * sq


# --- field-level operations -------------------------------------------------


def sobolev_norm(f: SpectralField, m: float) -> float:
    return float(np.sqrt(sobolev_sq(f.coeffs, m)))


def derivative(f: SpectralField, k: int = 1) -> SpectralField:
    if k < 0:
        raise ValueError("derivative order must be non-negative")
    return SpectralField((1j * TWO_PI * wavenumbers(f.n_modes)) ** k * f.coeffs)


def to_grid(f: SpectralField, grid_size: int) -> GridField:
    return GridField(grid_values(f.coeffs, grid_size))


def from_grid(g: GridField | np.ndarray, n_modes: int) -> SpectralField:
    values = g.values if isinstance(g, GridField) else np.asarray(g, dtype=float)
    return SpectralField(grid_coeffs(values, n_modes))


def lebesgue_norm(g: GridField | np.ndarray, p: float) -> float:
    v = np.abs(g.values if isinstance(g, GridField) else np.asarray(g, dtype=float))
    if np.isinf(p):
        return float(v.max(initial=0.0))
    if p < 1:
        raise ValueError("Lebesgue exponent must be >= 1")
    return float(np.mean(v ** p) ** (1.0 / p))


def quadratic_flux(f: SpectralField, grid_size: int | None = None) -> SpectralField:
    return SpectralField(flux(f.coeffs, grid_size))


def single_mode(s: int, n_modes: int, amplitude: float = 1.0) -> SpectralField:
    """The basis function amplitude·e_s as a SpectralField."""
    return real_to_complex(RealCoeffs.from_dict({s: amplitude}, n_modes))


# --- snapshot I/O -----------------------------------------------------------

_MAGIC = b"BGF1"


def save_field(f: SpectralField, path: str | Path) -> None:
    """Write a snapshot; ``.txt``/``.csv`` gives "s,re,im" lines, anything else
    little-endian binary (magic, uint32 N, N complex128)."""
    path = Path(path)
    if path.suffix in (".txt", ".csv"):
        lines = [f"# n_modes={f.n_modes}"]
        lines += [f"{s},{float(c.real)!r},{float(c.imag)!r}" for s, c in enumerate(f.coeffs, start=1)]
        path.write_text("\n".join(lines) + "\n")
    else:
        path.write_bytes(_MAGIC + struct.pack("<I", f.n_modes) + f.coeffs.astype("<c16").tobytes())


def load_field(path: str | Path) -> SpectralField:
    path = Path(path)
    if path.suffix in (".txt", ".csv"):
        n = None
        rows = []
        for line in path.read_text().splitlines():
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                if "n_modes=" in line:
                    n = int(line.split("n_modes=")[1])
                continue
            s, re, im = line.split(",")
            rows.append((int(s), float(re) + 1j * float(im)))
        n = n if n is not None else max(s for s, _ in rows)
        c = np.zeros(n, dtype=complex)
        for s, v in rows:
            c[s - 1] = v
        return SpectralField(c)
    raw = path.read_bytes()
    if raw[:4] != _MAGIC:
        raise ValueError(f"{path} is not a field snapshot")
    (n,) = struct.unpack("<I", raw[4:8])
    return SpectralField(np.frombuffer(raw[8:], dtype="<c16", count=n))
