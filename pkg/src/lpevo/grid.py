"""Discrete space-time grids, lattice Fourier transforms, and Lebesgue norms.

The spatial domain is the periodic box [-L, L)^d sampled on n points per
axis; the frequency lattice is xi_k = pi*k/L for k in [-n/2, n/2).  With
the symmetric (2*pi)^(-d/2) transform normalization the forward/inverse
lattice transforms below are exact inverses of each other and satisfy
Parseval's identity on the lattice.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

__all__ = [
    "SpectralGrid",
    "SpatialField",
    "SpaceTimeField",
    "make_grid",
    "forward_transform",
    "inverse_transform",
    "apply_multiplier",
    "lebesgue_norm",
    "vector_norm",
    "time_weights",
    "field_to_bytes",
    "field_from_bytes",
    "field_to_csv",
]

_MAGIC = b"LPEV"
_FORMAT_VERSION = 1


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class SpectralGrid:
    """Space-time lattice with its frequency lattice.

    Attributes
    ----------
    d : spatial dimension (1 or 2).
    n : points per spatial axis (power of two).
    half_length : box half-width L; the box is [-L, L)^d.
    t_grid : strictly increasing time nodes, t_grid[0] = a, t_grid[-1] = b.
    """

    d: int
    n: int
    half_length: float
    t_grid: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "t_grid", np.asarray(self.t_grid, dtype=float))

    @property
    def dx(self) -> float:
        return 2.0 * self.half_length / self.n

    @property
    def a(self) -> float:
        return float(self.t_grid[0])

    @property
    def b(self) -> float:
        return float(self.t_grid[-1])

    @property
    def x(self) -> np.ndarray:
        """Spatial nodes along one axis: x_j = -L + j*dx."""
        return -self.half_length + self.dx * np.arange(self.n)

    @property
    def freq(self) -> np.ndarray:
        """Frequency lattice along one axis: pi*k/L, k in [-n/2, n/2)."""
        k = np.arange(self.n) - self.n // 2
        return np.pi * k / self.half_length

    @property
    def dxi(self) -> float:
        return np.pi / self.half_length

    @property
    def nyquist(self) -> float:
        return np.pi * (self.n // 2) / self.half_length

    def freq_mesh(self) -> list[np.ndarray]:
        """Per-axis frequency meshes with shape n^d."""
        return list(np.meshgrid(*([self.freq] * self.d), indexing="ij"))

    def freq_vectors(self) -> np.ndarray:
        """All lattice frequencies stacked as an (n^d..., d) array."""
        return np.stack(self.freq_mesh(), axis=-1)

    def freq_norm(self) -> np.ndarray:
        """|xi| on the frequency lattice, shape n^d."""
        mesh = self.freq_mesh()
        return np.sqrt(sum(m**2 for m in mesh))

    def spatial_shape(self) -> tuple[int, ...]:
        return (self.n,) * self.d

    def cell_volume(self) -> float:
        return self.dx**self.d


def make_grid(d: int, n: int, half_length: float, t_nodes: Sequence[float]) -> SpectralGrid:
    """Build a grid, validating the lattice conventions."""
    if d not in (1, 2):
        raise ValueError(f"spatial dimension must be 1 or 2, got {d}")
    if not _is_power_of_two(n) or n < 8:
        raise ValueError(f"n must be a power of two >= 8, got {n}")
    if half_length <= 0:
        raise ValueError("half_length must be positive")
    t = np.asarray(t_nodes, dtype=float)
    if t.ndim != 1 or t.size < 2:
        raise ValueError("t_nodes must contain at least two nodes")
    if not np.all(np.diff(t) > 0):
        raise ValueError("t_nodes must be strictly increasing")
    if not np.all(np.isfinite(t)):
        raise ValueError("t_nodes must be finite")
    return SpectralGrid(d=d, n=n, half_length=half_length, t_grid=t)


def _check_values(values: np.ndarray) -> np.ndarray:
    values = np.asarray(values, dtype=complex)
    if not np.all(np.isfinite(values)):
        raise ValueError("field values must be finite (no NaN/Inf)")
    return values


@dataclass(frozen=True)
class SpatialField:
    """V-valued samples f(x_j) with V = C^m; last axis indexes V.

    ``side`` records whether the samples live on the spatial lattice
    ("space") or the frequency lattice ("freq").
    """

    grid: SpectralGrid
    m: int
    values: np.ndarray
    side: str = "space"

    def __post_init__(self):
        values = _check_values(self.values)
        expected = self.grid.spatial_shape() + (self.m,)
        if values.shape != expected:
            raise ValueError(f"values shape {values.shape} != expected {expected}")
        if self.side not in ("space", "freq"):
            raise ValueError(f"unknown side {self.side!r}")
        object.__setattr__(self, "values", values)

    def with_values(self, values: np.ndarray, side: str | None = None) -> "SpatialField":
        return SpatialField(self.grid, self.m, values, side or self.side)


@dataclass(frozen=True)
class SpaceTimeField:
    """V-valued samples f(t_i, x_j); axis 0 is time, last axis indexes V."""

    grid: SpectralGrid
    m: int
    values: np.ndarray

    def __post_init__(self):
        values = _check_values(self.values)
        expected = (len(self.grid.t_grid),) + self.grid.spatial_shape() + (self.m,)
        if values.shape != expected:
            raise ValueError(f"values shape {values.shape} != expected {expected}")
        object.__setattr__(self, "values", values)

    def at_time(self, i: int) -> SpatialField:
        return SpatialField(self.grid, self.m, self.values[i])


def _axis_sign(n: int) -> np.ndarray:
    # (-1)^k for k = c - n/2, c = 0..n-1
    k = np.arange(n) - n // 2
    return np.where(k % 2 == 0, 1.0, -1.0)


def _sign_mesh(grid: SpectralGrid, offset: int = 0) -> np.ndarray:
    s = _axis_sign(grid.n)
    if grid.d == 1:
        out = s
    else:
        out = np.multiply.outer(s, s)
    return out


def _spatial_axes(ndim_extra: int, d: int) -> tuple[int, ...]:
    return tuple(range(d))


def _transform_axes(values: np.ndarray, grid: SpectralGrid) -> tuple[int, ...]:
    """Spatial axes by convention: values are (..., *spatial, m)."""
    if values.ndim < grid.d + 1:
        raise ValueError("values must carry the spatial axes and a component axis")
    return tuple(range(values.ndim - 1 - grid.d, values.ndim - 1))


def _broadcast_sign(values: np.ndarray, grid: SpectralGrid) -> np.ndarray:
    sign = _sign_mesh(grid)
    lead = values.ndim - 1 - grid.d
    return sign.reshape((1,) * lead + sign.shape + (1,))


def lattice_forward(values: np.ndarray, grid: SpectralGrid) -> np.ndarray:
    """Riemann-sum Fourier transform of lattice samples onto the centered
    frequency lattice: (2*pi)^(-d/2) * dx^d * sum_j exp(-i x_j . xi_k) f(x_j).

    ``values`` follow the (..., *spatial, component) axis convention; leading
    axes (e.g. time) pass through untouched.
    """
    axes = _transform_axes(values, grid)
    out = np.fft.fftn(values, axes=axes)
    out = np.fft.fftshift(out, axes=axes)
    sign = _broadcast_sign(values, grid)
    return (2.0 * np.pi) ** (-grid.d / 2.0) * grid.dx**grid.d * sign * out


def lattice_inverse(values: np.ndarray, grid: SpectralGrid) -> np.ndarray:
    """Inverse of :func:`lattice_forward`; exact roundtrip on the lattice."""
    axes = _transform_axes(values, grid)
    sign = _broadcast_sign(values, grid)
    work = np.fft.ifftshift(sign * values, axes=axes)
    out = np.fft.ifftn(work, axes=axes) * grid.n**grid.d
    return (2.0 * np.pi) ** (-grid.d / 2.0) * grid.dxi**grid.d * out


def forward_transform(f: SpatialField) -> SpatialField:
    if f.side != "space":
        raise ValueError("forward_transform expects a space-side field")
    return f.with_values(lattice_forward(f.values, f.grid), side="freq")


def inverse_transform(g: SpatialField) -> SpatialField:
    if g.side != "freq":
        raise ValueError("inverse_transform expects a frequency-side field")
    return g.with_values(lattice_inverse(g.values, g.grid), side="space")


def apply_multiplier(f: SpatialField, multiplier: np.ndarray) -> SpatialField:
    """Apply a Fourier multiplier m(xi) to a space-side field."""
    multiplier = np.asarray(multiplier)
    if multiplier.shape != f.grid.spatial_shape():
        raise ValueError("multiplier shape does not match the frequency lattice")
    spec = lattice_forward(f.values, f.grid)
    spec *= multiplier[..., None]
    return f.with_values(lattice_inverse(spec, f.grid), side="space")


def vector_norm(values: np.ndarray) -> np.ndarray:
    """Pointwise V-norm (Euclidean over the trailing component axis)."""
    return np.sqrt(np.sum(np.abs(values) ** 2, axis=-1))


def time_weights(t_grid: np.ndarray) -> np.ndarray:
    """Trapezoid quadrature weights for the (possibly graded) time nodes."""
    t = np.asarray(t_grid, dtype=float)
    w = np.zeros_like(t)
    dt = np.diff(t)
    w[:-1] += dt / 2.0
    w[1:] += dt / 2.0
    return w


def lebesgue_norm(f: SpatialField | SpaceTimeField, p: float) -> float:
    """Discrete L^p norm: trapezoid weights in time, cell weights in space."""
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    vn = vector_norm(f.values)
    cell = f.grid.cell_volume()
    if isinstance(f, SpaceTimeField):
        w = time_weights(f.grid.t_grid)
        w = w.reshape((-1,) + (1,) * f.grid.d)
        total = np.sum(vn**p * w) * cell
    else:
        total = np.sum(vn**p) * cell
    return float(total ** (1.0 / p))


# -- serialization ----------------------------------------------------------

def field_to_bytes(f: SpatialField | SpaceTimeField) -> bytes:
    """Flat little-endian binary layout: header then float64 (re, im) pairs."""
    is_st = isinstance(f, SpaceTimeField)
    t = f.grid.t_grid
    header = struct.pack(
        "<4sIIIIIdI",
        _MAGIC,
        _FORMAT_VERSION,
        f.grid.d,
        f.grid.n,
        f.m,
        1 if is_st else 0,
        f.grid.half_length,
        len(t),
    )
    body = t.astype("<f8").tobytes()
    flat = np.ascontiguousarray(f.values, dtype=complex)
    pairs = np.empty(flat.shape + (2,), dtype="<f8")
    pairs[..., 0] = flat.real
    pairs[..., 1] = flat.imag
    return header + body + pairs.tobytes()


def field_from_bytes(data: bytes) -> SpatialField | SpaceTimeField:
    head_size = struct.calcsize("<4sIIIIIdI")
    magic, version, d, n, m, is_st, half_length, nt = struct.unpack(
        "<4sIIIIIdI", data[:head_size]
    )
    if magic != _MAGIC:
        raise ValueError("bad magic in field data")
    if version != _FORMAT_VERSION:
        raise ValueError(f"unsupported format version {version}")
    off = head_size
    t = np.frombuffer(data[off : off + 8 * nt], dtype="<f8").copy()
    off += 8 * nt
    grid = make_grid(d, n, half_length, t)
    shape = ((nt,) if is_st else ()) + (n,) * d + (m,)
    count = int(np.prod(shape)) * 2
    raw = np.frombuffer(data[off : off + 8 * count], dtype="<f8").reshape(shape + (2,))
    values = raw[..., 0] + 1j * raw[..., 1]
    if is_st:
        return SpaceTimeField(grid, m, values)
    return SpatialField(grid, m, values)


def field_to_csv(f: SpatialField) -> str:
    """CSV dump for small 1-d grids: x, then re/im per component."""
    if f.grid.d != 1:
        raise ValueError("CSV export supports d=1 only")
    cols = ["x"]
    for c in range(f.m):
        cols += [f"re{c}", f"im{c}"]
    lines = [",".join(cols)]
    for j, xj in enumerate(f.grid.x):
        row = [repr(float(xj))]
        for c in range(f.m):
            v = f.values[j, c]
            row += [repr(float(v.real)), repr(float(v.imag))]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"
