"""Maximal functions, the sharp function over parabolic cubes, and the
nested space-time dyadic filtration.

Conventions shared by every operator here:

- fields are cell samples; a node owns the cell around it (half-open), so
  sups over radii reduce to the finite set of window positions where a
  window edge crosses a cell edge.  In one dimension the computed maximal
  function is therefore the exact supremum over all radii of the
  periodized (space) or zero-extended (time) averages.
- space extends periodically (radii capped at the box half-period, where
  the window covers the whole circle); time extends by zero, matching
  compactly supported test functions on the real line.
- parabolic cubes are (t-R, t+R) x B(R^(1/gamma))(x); on the lattice a cube
  is the set of cells whose centers fall inside, so each ladder radius
  yields an integer window shape.

The filtration uses the nested variant of the anisotropic dyadic partition:
level n has time side 2^-n and space side 2^-floor(n/gamma), so each cube
sits inside exactly one parent cube with measure ratio at most 2^(1+d).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import maximum_filter

from lpevo.grid import SpaceTimeField, SpatialField, SpectralGrid, vector_norm

__all__ = [
    "ParabolicCube",
    "FiltrationLevel",
    "maximal",
    "maximal_values",
    "sharp_parabolic",
    "filtration_sharp",
    "build_filtration_levels",
    "locate_cube",
    "parent_cube",
    "box_lp_norm",
    "nested_n0",
    "nested_n1",
    "default_radius_ladder",
]


@dataclass(frozen=True)
class ParabolicCube:
    """Anisotropic cube (t-R, t+R) x B(R^(1/gamma))(x) around a center."""

    t: float
    x: tuple[float, ...]
    radius: float
    gamma: float

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("cube radius must be positive")

    @property
    def space_radius(self) -> float:
        return self.radius ** (1.0 / self.gamma)

    def measure(self, d: int) -> float:
        ball = {1: 2.0 * self.space_radius, 2: np.pi * self.space_radius**2}[d]
        return 2.0 * self.radius * ball

    def contains(self, t: float, x) -> bool:
        x = np.atleast_1d(x)
        return abs(t - self.t) < self.radius and (
            np.sqrt(np.sum((x - np.asarray(self.x)) ** 2)) < self.space_radius
        )


# -- exact one-dimensional maximal averages ---------------------------------

def _uniform_maximal_1d(
    batch: np.ndarray, width: float, mode: str, r_floor: float
) -> np.ndarray:
    """Exact sup over radii r > r_floor of window averages along the last
    axis of ``batch`` (nonnegative cell values on a uniform cell layout).

    mode "wrap": periodic extension, radii capped at half the period.
    mode "zero": zero extension beyond the cells.
    """
    b_shape = batch.shape
    n = b_shape[-1]
    flat = batch.reshape(-1, n)
    prefix = np.concatenate([np.zeros((flat.shape[0], 1)), np.cumsum(flat, axis=1)], axis=1)
    total = prefix[:, -1]

    ks = np.arange(n if mode == "zero" else (n + 1) // 2)
    radii = (ks + 0.5) * width
    keep = radii > r_floor
    ks, radii = ks[keep], radii[keep]

    i = np.arange(n)[:, None]
    lo = i - ks[None, :]
    hi = i + ks[None, :] + 1
    lo_c = np.clip(lo, 0, n)
    hi_c = np.clip(hi, 0, n)
    if mode == "zero":
        mass = prefix[:, hi_c] - prefix[:, lo_c]
    elif mode == "wrap":
        # window never exceeds one period, so at most one edge wraps
        lo_m = np.clip(np.where(lo < 0, lo + n, lo), 0, n)
        hi_m = np.clip(np.where(hi > n, hi - n, hi), 0, n)
        plain = prefix[:, hi_c] - prefix[:, lo_c]
        wrap_lo = prefix[:, hi_c] - prefix[:, 0:1] + (prefix[:, n:] - prefix[:, lo_m])
        wrap_hi = (prefix[:, n:] - prefix[:, lo_c]) + prefix[:, hi_m]
        mass = np.where(lo < 0, wrap_lo, np.where(hi > n, wrap_hi, plain))
    else:
        raise ValueError(f"unknown extension mode {mode!r}")
    if mass.shape[-1]:
        avg = mass * width / (2.0 * radii[None, :])
        best = np.max(avg, axis=-1)
    else:
        best = np.zeros((flat.shape[0], n))

    if mode == "wrap" and (n * width / 2.0) > r_floor:
        # window equal to the full period: the global mean
        best = np.maximum(best, (total / n)[:, None])
    if r_floor > 0:
        # the value just above the floor bounds the sup on (r_floor, next bp)
        r = r_floor * (1 + 1e-9)
        pos = (np.arange(n) + 0.5) * width
        grid_edges = np.arange(n + 1) * width
        lo_p, hi_p = pos - r, pos + r
        if mode == "zero":
            m = np.stack(
                [np.interp(hi_p, grid_edges, row) - np.interp(lo_p, grid_edges, row) for row in prefix]
            )
        else:
            period = n * width

            def s_of(y, row):
                kper = np.floor(y / period)
                return kper * row[-1] + np.interp(y - kper * period, grid_edges, row)

            m = np.stack([s_of(hi_p, row) - s_of(lo_p, row) for row in prefix])
        best = np.maximum(best, m * width / (2.0 * r))
    return best.reshape(b_shape)


def _graded_maximal_time(
    batch: np.ndarray, edges: np.ndarray, r_floor: float
) -> np.ndarray:
    """Zero-extension maximal along the last axis for nonuniform cells."""
    b_shape = batch.shape
    n = b_shape[-1]
    widths = np.diff(edges)
    centers = (edges[:-1] + edges[1:]) / 2.0
    flat = batch.reshape(-1, n)
    out = np.zeros_like(flat)
    for b, row in enumerate(flat):
        prefix = np.concatenate([[0.0], np.cumsum(row * widths)])
        best = np.zeros(n)
        for i, c in enumerate(centers):
            radii = np.abs(edges - c)
            radii = radii[radii > r_floor]
            if r_floor > 0:
                radii = np.append(radii, r_floor * (1 + 1e-9))
            if radii.size == 0:
                continue
            mass = np.interp(c + radii, edges, prefix) - np.interp(c - radii, edges, prefix)
            best[i] = np.max(mass / (2.0 * radii))
        out[b] = best
    return out.reshape(b_shape)


def _ball_maximal_2d(batch: np.ndarray, grid: SpectralGrid, r_floor: float) -> np.ndarray:
    """Cell-center-inclusion ball averages on the periodic 2-d lattice,
    sup over a geometric radius ladder (factor 2^(1/4))."""
    dx = grid.dx
    n = grid.n
    radii = []
    r = dx
    while r <= grid.half_length * np.sqrt(2):
        if r > r_floor:
            radii.append(r)
        r *= 2.0 ** 0.25
    flat = batch.reshape(-1, n, n)
    spec = np.fft.fft2(flat, axes=(-2, -1))
    offs = np.fft.fftfreq(n, d=1.0 / n)  # integer offsets 0..n/2, -n/2..-1
    oi, oj = np.meshgrid(offs, offs, indexing="ij")
    dist2 = (oi * dx) ** 2 + (oj * dx) ** 2
    best = np.zeros_like(flat)
    for r in radii:
        mask = (dist2 < r * r).astype(float)
        count = mask.sum()
        avg = np.fft.ifft2(spec * np.fft.fft2(mask), axes=(-2, -1)).real / count
        best = np.maximum(best, avg)
    return best.reshape(batch.shape)


def maximal_values(
    values: np.ndarray,
    grid: SpectralGrid,
    axis: str,
    r_floor: float = 0.0,
    time_leading: bool = True,
) -> np.ndarray:
    """Maximal averages of nonnegative cell values; see :func:`maximal`."""
    values = np.asarray(values, dtype=float)
    if np.any(values < 0):
        raise ValueError("maximal_values expects nonnegative values")
    if axis == "space":
        if grid.d == 1:
            return _uniform_maximal_1d(values, grid.dx, "wrap", r_floor)
        if grid.d == 2:
            return _ball_maximal_2d(values, grid, r_floor)
        raise ValueError("spatial maximal supports d in (1, 2)")
    if axis == "time":
        if not time_leading:
            raise ValueError("time maximal expects the time axis leading")
        t = grid.t_grid
        dt = np.diff(t)
        moved = np.moveaxis(values, 0, -1)
        if np.allclose(dt, dt[0]):
            out = _uniform_maximal_1d(moved, float(dt[0]), "zero", r_floor)
        else:
            edges = np.concatenate([[t[0] - dt[0] / 2], (t[:-1] + t[1:]) / 2, [t[-1] + dt[-1] / 2]])
            out = _graded_maximal_time(moved, edges, r_floor)
        return np.moveaxis(out, -1, 0)
    raise ValueError(f"axis must be 'space' or 'time', got {axis!r}")


def maximal(
    h: SpaceTimeField | SpatialField, axis: str, r_floor: float = 0.0
) -> SpaceTimeField | SpatialField:
    """Pointwise supremum over radii r > r_floor of window averages of
    the V-norm of h, along space (periodic) or time (zero extension)."""
    vn = vector_norm(h.values)
    out = maximal_values(vn, h.grid, axis, r_floor)
    if isinstance(h, SpaceTimeField):
        return SpaceTimeField(h.grid, 1, out[..., None].astype(complex))
    return SpatialField(h.grid, 1, out[..., None].astype(complex))


# -- parabolic sharp function -------------------------------------------------

def _uniform_dt(grid: SpectralGrid) -> float:
    dt = np.diff(grid.t_grid)
    if not np.allclose(dt, dt[0], rtol=1e-12, atol=0.0):
        raise ValueError("sharp/filtration operators require uniform time cells")
    return float(dt[0])


def default_radius_ladder(grid: SpectralGrid, gamma: float) -> np.ndarray:
    """Geometric ladder of cube radii from one-cell cubes up to the box."""
    dt = _uniform_dt(grid)
    r_lo = 0.5 * min(dt, grid.dx**gamma)
    span = grid.b - grid.a
    r_hi = max(span, (2 * grid.half_length) ** gamma)
    count = max(2, int(np.ceil(np.log(r_hi / r_lo) / np.log(2.0 ** 0.5))) + 1)
    return r_lo * (2.0 ** 0.5) ** np.arange(count)


def _window_halfwidths(radius: float, gamma: float, dt: float, dx: float) -> tuple[int, int]:
    # cells whose center lies strictly within the open window
    mt = max(int(np.ceil(radius / dt - 1e-12)) - 1, 0)
    mx = max(int(np.ceil(radius ** (1.0 / gamma) / dx - 1e-12)) - 1, 0)
    return mt, mx


def _box_mean(padded: np.ndarray, mt: int, mx: int, d: int) -> np.ndarray:
    """Mean over the (2mt+1) x (2mx+1)^d window centered at each cell of the
    (already padded) array, via prefix sums along each axis."""
    out = padded
    for ax, half in [(0, mt)] + [(1 + k, mx) for k in range(d)]:
        out = np.moveaxis(out, ax, -1)
        n = out.shape[-1]
        prefix = np.concatenate(
            [np.zeros(out.shape[:-1] + (1,)), np.cumsum(out, axis=-1)], axis=-1
        )
        i = np.arange(n)
        lo = np.clip(i - half, 0, n)
        hi = np.clip(i + half + 1, 0, n)
        out = prefix[..., hi] - prefix[..., lo]
        out = np.moveaxis(out, -1, ax)
    cells = (2 * mt + 1) * (2 * mx + 1) ** d
    return out / cells


def sharp_parabolic(
    values: np.ndarray,
    grid: SpectralGrid,
    gamma: float,
    ladder: np.ndarray | None = None,
    offsets: bool = True,
) -> np.ndarray:
    """Mean-oscillation supremum over parabolic cubes containing each point.

    ``values`` is a real scalar space-time array (time leading).  Cubes are
    the lattice windows of the radius ladder; with ``offsets`` the supremum
    also ranges over every window position containing the point (via a
    maximum filter), matching the definition's arbitrary cube centers.
    Time extends by zero outside the box; space wraps periodically.
    """
    values = np.asarray(values, dtype=float)
    if values.shape != (len(grid.t_grid),) + grid.spatial_shape():
        raise ValueError("values must be a scalar space-time array on the grid")
    dt = _uniform_dt(grid)
    if ladder is None:
        ladder = default_radius_ladder(grid, gamma)

    shapes = sorted({_window_halfwidths(r, gamma, dt, grid.dx) for r in np.asarray(ladder)})
    T = values.shape[0]
    sharp = np.zeros_like(values)
    d = grid.d
    for mt, mx in shapes:
        cells = (2 * mt + 1) * (2 * mx + 1) ** d
        # pad time by 2*mt: osc is needed at every center whose window can
        # reach an in-box point, and those centers sit up to mt outside
        padded = np.pad(values, [(2 * mt, 2 * mt)] + [(0, 0)] * d, mode="constant")
        if mx > 0:
            padded = np.pad(padded, [(0, 0)] + [(mx, mx)] * d, mode="wrap")
        mu = _box_mean(padded, mt, mx, d)
        acc = np.zeros_like(padded)
        for dt_off in range(-mt, mt + 1):
            rolled_t = np.roll(padded, -dt_off, axis=0)
            if d == 1:
                for dx_off in range(-mx, mx + 1):
                    acc += np.abs(np.roll(rolled_t, -dx_off, axis=1) - mu)
            else:
                for dx1 in range(-mx, mx + 1):
                    r1 = np.roll(rolled_t, -dx1, axis=1)
                    for dx2 in range(-mx, mx + 1):
                        acc += np.abs(np.roll(r1, -dx2, axis=2) - mu)
        # rolls wrap the time padding too; windows that cross the pad edge
        # are invalid there, but those centers lie > mt outside the box and
        # are never selected below
        osc = acc / cells
        if offsets:
            size = (2 * mt + 1,) + (2 * mx + 1,) * d
            mode = ["constant"] + ["wrap"] * d
            osc = maximum_filter(osc, size=size, mode=mode, cval=0.0)
        if mx > 0:
            sl = (slice(2 * mt, 2 * mt + T),) + (slice(mx, mx + grid.n),) * d
        else:
            sl = (slice(2 * mt, 2 * mt + T),)
        sharp = np.maximum(sharp, osc[sl])
    return sharp


# -- nested anisotropic dyadic filtration ------------------------------------

def nested_n0(d: int) -> float:
    """Parent/child measure-ratio bound of the nested filtration."""
    return 2.0 ** (1 + d)


@dataclass(frozen=True)
class FiltrationLevel:
    """Level n of the nested filtration: time side 2^-n, space side
    2^-floor(n/gamma), anchored at the box corner."""

    n: int
    gamma: float
    origin_t: float
    origin_x: float
    time_side: float
    space_side: float

    def cube_measure(self, d: int) -> float:
        return self.time_side * self.space_side**d


def _dyadic_exponent(value: float, name: str) -> int:
    e = round(math.log2(value))
    if not np.isclose(value, 2.0**e, rtol=1e-9):
        raise ValueError(f"{name} must be a power of two, got {value}")
    return int(e)


def build_filtration_levels(
    grid: SpectralGrid, gamma: float, coarse_levels: int = 3
) -> list[FiltrationLevel]:
    """Levels from a few cubes coarser than the box down to single cells.

    Requires dyadic cell sides (dt = 2^-a, dx = 2^-b with b = floor(a/gamma))
    so the finest level is exactly one cell per cube.
    """
    dt = _uniform_dt(grid)
    a_exp = _dyadic_exponent(1.0 / dt, "1/dt")
    b_exp = _dyadic_exponent(1.0 / grid.dx, "1/dx")
    if math.floor(a_exp / gamma) != b_exp:
        raise ValueError(
            "grid cells do not close the filtration: need floor(log2(1/dt)/gamma) "
            f"== log2(1/dx), got {a_exp}/{gamma} vs {b_exp}"
        )
    levels = []
    for n in range(-coarse_levels, a_exp + 1):
        levels.append(
            FiltrationLevel(
                n=n,
                gamma=gamma,
                origin_t=grid.a,
                origin_x=-grid.half_length,
                time_side=2.0**-n,
                space_side=2.0 ** -math.floor(n / gamma),
            )
        )
    return levels


def locate_cube(level: FiltrationLevel, point: tuple[float, ...]) -> tuple[int, ...]:
    """Indices (i0, i1, ..., id) of the unique level cube containing a point."""
    t, *xs = point
    i0 = math.floor((t - level.origin_t) / level.time_side)
    idx = [i0]
    for x in xs:
        idx.append(math.floor((x - level.origin_x) / level.space_side))
    return tuple(idx)


def parent_cube(level: FiltrationLevel, parent: FiltrationLevel, indices: tuple[int, ...]) -> tuple[int, ...]:
    """Indices of the parent (coarser by one level) cube containing a cube."""
    if parent.n != level.n - 1:
        raise ValueError("parent must be exactly one level coarser")
    t_ratio = round(parent.time_side / level.time_side)
    x_ratio = round(parent.space_side / level.space_side)
    out = [math.floor(indices[0] / t_ratio)]
    for i in indices[1:]:
        out.append(math.floor(i / x_ratio))
    return tuple(out)


def filtration_sharp(
    values: np.ndarray,
    grid: SpectralGrid,
    gamma: float,
    coarse_levels: int = 3,
) -> tuple[np.ndarray, list[FiltrationLevel]]:
    """Sharp function over the nested filtration: sup over levels of the mean
    oscillation on the unique cube containing each cell (zero extension for
    the cube volume outside the box)."""
    values = np.asarray(values, dtype=float)
    if values.shape != (len(grid.t_grid),) + grid.spatial_shape():
        raise ValueError("values must be a scalar space-time array on the grid")
    dt = _uniform_dt(grid)
    levels = build_filtration_levels(grid, gamma, coarse_levels)
    cell_meas = dt * grid.dx**grid.d
    T = values.shape[0]
    d = grid.d
    sharp = np.zeros_like(values)
    it_cells = np.arange(T)
    ix_cells = np.arange(grid.n)
    for level in levels:
        cpt = int(round(level.time_side / dt))
        cpx = int(round(level.space_side / grid.dx))
        ti = it_cells // cpt
        xi = ix_cells // cpx
        nt, nx = ti[-1] + 1, xi[-1] + 1
        if d == 1:
            flat = (ti[:, None] * nx + xi[None, :]).ravel()
        else:
            flat = (
                ti[:, None, None] * nx * nx + xi[None, :, None] * nx + xi[None, None, :]
            ).ravel()
        counts = np.bincount(flat)
        sums = np.bincount(flat, weights=values.ravel())
        cube_meas = level.cube_measure(d)
        mu = sums * cell_meas / cube_meas
        dev = np.abs(values.ravel() - mu[flat])
        osc_in = np.bincount(flat, weights=dev) * cell_meas
        outside = cube_meas - counts * cell_meas
        osc = (osc_in + outside * np.abs(mu)) / cube_meas
        sharp = np.maximum(sharp, osc[flat].reshape(values.shape))
    return sharp, levels


def nested_n1(grid: SpectralGrid, gamma: float, coarse_levels: int = 3) -> float:
    """Measure ratio |Q(R0)|/|P| of the smallest ladder cube containing a
    filtration cube, maximized over levels (the implemented analogue of the
    containment constant)."""
    dt = _uniform_dt(grid)
    best = 0.0
    for level in build_filtration_levels(grid, gamma, coarse_levels):
        cpt = int(round(level.time_side / dt))
        cpx = int(round(level.space_side / grid.dx))
        r0 = containment_radius(level, grid)
        mt, mx = _window_halfwidths(r0, gamma, dt, grid.dx)
        if mt < cpt - 1 or mx < cpx - 1:
            raise AssertionError("containment radius failed to cover the cube")
        q_meas = (2 * mt + 1) * dt * ((2 * mx + 1) * grid.dx) ** grid.d
        best = max(best, q_meas / level.cube_measure(grid.d))
    return best


def containment_radius(level: FiltrationLevel, grid: SpectralGrid) -> float:
    """Smallest parabolic-cube radius whose lattice window contains the
    level cube from any of the cube's own cells."""
    dt = _uniform_dt(grid)
    cpt = int(round(level.time_side / dt))
    cpx = int(round(level.space_side / grid.dx))
    r_time = (cpt - 1) * dt if cpt > 1 else 0.0
    r_space = ((cpx - 1) * grid.dx) ** level.gamma if cpx > 1 else 0.0
    base = max(r_time, r_space, 0.25 * min(dt, grid.dx**level.gamma))
    return base * (1 + 1e-9)


def box_lp_norm(values: np.ndarray, grid: SpectralGrid, p: float) -> float:
    """L^p norm with the plain cell-counting measure (the discrete measure of
    the filtration's measure space)."""
    if p <= 0:
        raise ValueError("p must be positive")
    dt = _uniform_dt(grid)
    cell = dt * grid.dx**grid.d
    return float((np.sum(np.abs(values) ** p) * cell) ** (1.0 / p))
