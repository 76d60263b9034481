import numpy as np
import pytest

from lpevo.grid import SpaceTimeField, SpatialField, make_grid
from lpevo.maximal import (
    FiltrationLevel,
    ParabolicCube,
    box_lp_norm,
    build_filtration_levels,
    containment_radius,
    filtration_sharp,
    locate_cube,
    maximal,
    maximal_values,
    nested_n0,
    nested_n1,
    parent_cube,
    sharp_parabolic,
)


def _grid(n=1024, L=16.0, nt=2):
    return make_grid(1, n, L, np.linspace(0.0, 1.0, nt))


def _cells_grid(n=16, L=1.0, T=64, span=1.0):
    # time nodes at cell centers of a dyadic box [0, span)
    t = (np.arange(T) + 0.5) * (span / T)
    return make_grid(1, n, L, t)


class TestMaximalSpace:
    def test_constant(self):
        g = _grid(n=64, L=2.0)
        f = SpatialField(g, 1, np.full((64, 1), -3.0 + 0j))
        out = maximal(f, "space")
        assert np.allclose(out.values[:, 0].real, 3.0)

    def test_indicator_analytic_oracle(self):
        # h = 1 on [-1, 1]: maximal = min(1, 1/(1+dist)) away from the wrap
        g = _grid(n=1024, L=16.0)
        vals = (np.abs(g.x) <= 1.0).astype(complex)[:, None]
        f = SpatialField(g, 1, vals)
        out = maximal(f, "space").values[:, 0].real
        window = np.abs(g.x) <= g.half_length / 2
        x = g.x[window]
        exact = np.minimum(1.0, 1.0 / (1.0 + np.maximum(np.abs(x) - 1.0, 0.0)))
        # the lattice indicator has cell-resolution edges; allow O(dx) slack
        assert np.max(np.abs(out[window] - exact)) < 2 * g.dx

    def test_indicator_point_value(self):
        # optimal radius r = 4 at x = 3 gives 1/4
        g = _grid(n=2048, L=16.0)
        vals = (np.abs(g.x) <= 1.0).astype(complex)[:, None]
        out = maximal(SpatialField(g, 1, vals), "space").values[:, 0].real
        j = np.argmin(np.abs(g.x - 3.0))
        assert out[j] == pytest.approx(0.25, abs=2 * g.dx)

    def test_monotone_in_r_floor(self):
        g = _grid(n=256, L=4.0)
        rng = np.random.default_rng(0)
        f = SpatialField(g, 1, np.abs(rng.normal(size=(256, 1))) + 0j)
        m_small = maximal(f, "space", r_floor=0.1).values.real
        m_big = maximal(f, "space", r_floor=0.5).values.real
        assert np.all(m_big <= m_small + 1e-12)

    def test_dominates_pointwise_value(self):
        g = _grid(n=128, L=4.0)
        rng = np.random.default_rng(1)
        f = SpatialField(g, 1, np.abs(rng.normal(size=(128, 1))) + 0j)
        out = maximal(f, "space").values.real
        assert np.all(out >= np.abs(f.values.real) - 1e-12)

    def test_brute_force_oracle_small_grid(self):
        g = _grid(n=16, L=2.0)
        rng = np.random.default_rng(2)
        h = np.abs(rng.normal(size=16))
        out = maximal_values(h[None, :], g, "space")[0]
        # brute force: all windows (k+1/2)dx plus the full period
        best = np.zeros(16)
        for i in range(16):
            for k in range(8):
                window = [(i + d) % 16 for d in range(-k, k + 1)]
                best[i] = max(best[i], np.mean(h[window]))
            best[i] = max(best[i], np.mean(h))
        assert np.allclose(out, best, atol=1e-12)

    def test_2d_constant(self):
        g = make_grid(2, 16, 2.0, [0.0, 1.0])
        f = SpatialField(g, 1, np.full((16, 16, 1), 2.0 + 0j))
        out = maximal(f, "space")
        assert np.allclose(out.values[..., 0].real, 2.0)


class TestMaximalTime:
    def test_constant(self):
        g = _cells_grid(T=32)
        f = SpaceTimeField(g, 1, np.full((32, 16, 1), 1.5 + 0j))
        out = maximal(f, "time").values[..., 0].real
        # zero extension: averages over windows reaching past the box shrink
        assert np.max(out) == pytest.approx(1.5, rel=1e-12)
        assert np.all(out <= 1.5 + 1e-12)

    def test_brute_force_oracle(self):
        g = _cells_grid(n=16, T=16)
        rng = np.random.default_rng(3)
        h = np.abs(rng.normal(size=(16, 16)))
        out = maximal_values(h, g, "time")
        dt = np.diff(g.t_grid)[0]
        for j in (0, 7):
            col = h[:, j]
            for i in range(16):
                best = 0.0
                for k in range(16):
                    r = (k + 0.5) * dt
                    lo, hi = max(i - k, 0), min(i + k + 1, 16)
                    best = max(best, np.sum(col[lo:hi]) * dt / (2 * r))
                assert out[i, j] == pytest.approx(best, rel=1e-12)

    def test_graded_time_grid(self):
        t = np.array([0.0, 0.1, 0.3, 0.7, 1.5])
        g = make_grid(1, 16, 1.0, t)
        rng = np.random.default_rng(4)
        h = np.abs(rng.normal(size=(5, 16)))
        out = maximal_values(h, g, "time")
        assert out.shape == (5, 16)
        assert np.all(out >= 0)


class TestSharpParabolic:
    def test_constant_is_zero(self):
        g = _cells_grid()
        h = np.full((64, 16), 4.2)
        out = sharp_parabolic(h, g, gamma=2.0)
        # zero extension: cubes sticking outside the box see the jump to 0
        interior = out[16:48, :]
        assert np.all(out >= 0)
        small = sharp_parabolic(h, g, gamma=2.0, ladder=np.array([np.diff(g.t_grid)[0] * 0.6]))
        assert np.allclose(small[16:48], 0.0, atol=1e-14)

    def test_halfspace_indicator_brute_force(self):
        g = _cells_grid(n=16, T=16, span=1.0)
        h = (g.x >= 0).astype(float)[None, :].repeat(16, axis=0)
        dt = np.diff(g.t_grid)[0]
        ladder = np.array([2 * dt])
        out = sharp_parabolic(h, g, gamma=2.0, ladder=ladder, offsets=False)
        mt = int(np.ceil(2 * dt / dt - 1e-12)) - 1
        mx = int(np.ceil(np.sqrt(2 * dt) / g.dx - 1e-12)) - 1
        # direct summation over the centered window at one interface point
        i, j = 8, 8
        cells = []
        for a in range(i - mt, i + mt + 1):
            for b in range(j - mx, j + mx + 1):
                inside = 0 <= a < 16
                cells.append(h[a, b % 16] if inside else 0.0)
        cells = np.asarray(cells)
        mu = cells.mean()
        assert out[i, j] == pytest.approx(np.mean(np.abs(cells - mu)), rel=1e-12)

    def test_shift_invariance(self):
        g = _cells_grid(n=16, T=32)
        rng = np.random.default_rng(5)
        h = rng.normal(size=(32, 16))
        out = sharp_parabolic(h, g, gamma=2.0)
        shifted = np.roll(h, 3, axis=1)  # spatial lattice shift
        out2 = sharp_parabolic(shifted, g, gamma=2.0)
        assert np.allclose(out2, np.roll(out, 3, axis=1), atol=1e-12)

    def test_offsets_enlarge(self):
        g = _cells_grid(n=16, T=32)
        rng = np.random.default_rng(6)
        h = rng.normal(size=(32, 16))
        centered = sharp_parabolic(h, g, gamma=2.0, offsets=False)
        full = sharp_parabolic(h, g, gamma=2.0, offsets=True)
        assert np.all(full >= centered - 1e-12)

    def test_bounded_by_twice_local_average(self):
        # |h - mu| <= |h| + |mu| gives osc <= 2 sup of windowed |h| averages
        g = _cells_grid(n=16, T=32)
        rng = np.random.default_rng(7)
        h = rng.normal(size=(32, 16))
        sharp = sharp_parabolic(h, g, gamma=2.0, offsets=False)
        mx = maximal_values(
            maximal_values(np.abs(h), g, "space"), g, "time"
        )
        assert np.all(sharp <= 2 * mx + 1e-10)


class TestFiltration:
    def test_levels_and_cells(self):
        g = _cells_grid(n=16, L=1.0, T=64)
        levels = build_filtration_levels(g, gamma=2.0)
        finest = levels[-1]
        assert finest.time_side == pytest.approx(np.diff(g.t_grid)[0])
        assert finest.space_side == pytest.approx(g.dx)

    def test_locate_unit_cells(self):
        lvl = FiltrationLevel(0, 2.0, 0.0, 0.0, 1.0, 1.0)
        assert locate_cube(lvl, (0.3, 0.7)) == (0, 0)
        assert locate_cube(lvl, (1.3, -0.2)) == (1, -1)

    def test_parent_contains_child_random_points(self):
        g = _cells_grid(n=16, L=1.0, T=64)
        levels = build_filtration_levels(g, gamma=2.0, coarse_levels=3)
        rng = np.random.default_rng(8)
        pts = np.stack(
            [rng.uniform(0, 1, 500), rng.uniform(-1, 1, 500)], axis=1
        )
        for fine, coarse in zip(levels[1:], levels[:-1]):
            ratio_t = fine.time_side and coarse.time_side / fine.time_side
            for p in pts[:100]:
                child = locate_cube(fine, tuple(p))
                parent = locate_cube(coarse, tuple(p))
                assert parent_cube(fine, coarse, child) == parent
            # measure ratio bound
            assert coarse.cube_measure(1) / fine.cube_measure(1) <= nested_n0(1) + 1e-12

    def test_two_value_oracle(self):
        # h = alpha on one level-n cube, beta elsewhere: parent-level
        # oscillation is 2|alpha-beta| rho (1-rho), rho = child/parent ratio
        g = _cells_grid(n=16, L=1.0, T=64)
        levels = build_filtration_levels(g, gamma=2.0)
        # choose the level one step above cells with a time-only split
        fine = levels[-1]
        coarse = levels[-2]
        alpha, beta = 3.0, 1.0
        h = np.full((64, 16), beta)
        # first child cube of the first parent cube: cells [0:cpt, 0:cpx]
        dt = np.diff(g.t_grid)[0]
        cpt_f = int(fine.time_side / dt)
        cpx_f = int(fine.space_side / g.dx)
        h[:cpt_f, :cpx_f] = alpha
        sharp, _ = filtration_sharp(h, g, gamma=2.0)
        rho = fine.cube_measure(1) / coarse.cube_measure(1)
        expected = 2 * abs(alpha - beta) * rho * (1 - rho)
        # the point inside the alpha-cube sees at least the parent oscillation
        assert sharp[0, 0] >= expected - 1e-12

    def test_constant_zero_inside(self):
        g = _cells_grid(n=16, L=1.0, T=64)
        h = np.full((64, 16), 2.0)
        sharp, levels = filtration_sharp(h, g, gamma=2.0, coarse_levels=0)
        # in-box levels see no oscillation for constants
        assert np.allclose(sharp, 0.0, atol=1e-13)

    def test_pointwise_domination_by_cube_sharp(self):
        g = _cells_grid(n=16, L=1.0, T=64)
        rng = np.random.default_rng(9)
        h = rng.normal(size=(64, 16))
        fsharp, levels = filtration_sharp(h, g, gamma=2.0)
        n1 = nested_n1(g, gamma=2.0)
        ladder = np.array([containment_radius(lvl, g) for lvl in levels])
        qsharp = sharp_parabolic(h, g, gamma=2.0, ladder=ladder, offsets=False)
        assert np.all(fsharp <= 2 * n1**2 * qsharp + 1e-10)

    def test_misaligned_grid_rejected(self):
        g = make_grid(1, 16, 1.0, np.linspace(0.0, 1.0, 10))  # dt not dyadic
        with pytest.raises(ValueError):
            build_filtration_levels(g, gamma=2.0)


class TestParabolicCube:
    def test_measure_and_membership(self):
        q = ParabolicCube(0.5, (0.0,), 0.25, 2.0)
        assert q.space_radius == pytest.approx(0.5)
        assert q.measure(1) == pytest.approx(2 * 0.25 * 2 * 0.5)
        assert q.contains(0.6, 0.3)
        assert not q.contains(0.8, 0.0)


def test_box_lp_norm_constant():
    g = _cells_grid(n=16, L=1.0, T=64)
    h = np.full((64, 16), 2.0)
    # measure of the box [0,1) x [-1,1) is 2
    assert box_lp_norm(h, g, 2.0) == pytest.approx(2.0 * np.sqrt(2.0), rel=1e-12)
