import numpy as np
import pytest

from smoothcb.kernels import BandwidthGrid, RectKernel, snap_bandwidth
from smoothcb.losses import PiecewiseConstantLoss, PiecewiseLinearLoss
from smoothcb.spaces import ActionSpace


def _random_pw_constant(rng, n_pieces=8):
    breaks = np.unique(np.concatenate([[0.0, 1.0],
                                       rng.uniform(0, 1, n_pieces - 1)]))
    return PiecewiseConstantLoss(breaks, rng.uniform(0, 1, len(breaks) - 1))


class TestDensity:
    def test_ring_inside_support(self):
        k = RectKernel(ActionSpace.ring(), 0.1)
        assert k.density(0.5, 0.55) == pytest.approx(5.0, abs=1e-12)

    def test_ring_outside_support(self):
        k = RectKernel(ActionSpace.ring(), 0.1)
        assert k.density(0.5, 0.7) == 0.0

    def test_cube_boundary_ball(self):
        k = RectKernel(ActionSpace.cube(1), 0.1)
        assert k.density(0.0, 0.05) == pytest.approx(10.0, abs=1e-12)

    def test_dirac_density_rejected(self):
        k = RectKernel(ActionSpace.ring(), 0.0)
        with pytest.raises(ValueError):
            k.density(0.5, 0.5)

    def test_normalization(self):
        # integral of the density against the base measure is 1 everywhere
        rng = np.random.default_rng(0)
        flat = PiecewiseConstantLoss.constant(1.0)
        for space in (ActionSpace.ring(), ActionSpace.cube(1)):
            for _ in range(500):
                h = float(rng.uniform(0.01, 0.6))
                c = float(rng.random())
                k = RectKernel(space, h)
                total = flat.integrate_intervals(space.ball_intervals(c, h))
                assert total * k.density(c, c) == pytest.approx(1.0, abs=1e-9)
        space = ActionSpace.grid(16)
        for _ in range(500):
            h = float(rng.uniform(0.05, 0.6))
            c = space.sample_uniform(rng)
            k = RectKernel(space, h)
            pts = space.grid_points()
            mass = np.sum(np.abs(pts - c) <= h + 1e-12) / space.M
            assert mass * k.density(c, c) == pytest.approx(1.0, abs=1e-9)


class TestKappa:
    def test_ring(self):
        assert RectKernel(ActionSpace.ring(), 0.1).kappa() == pytest.approx(5.0)

    def test_cube_2d(self):
        assert RectKernel(ActionSpace.cube(2), 0.5).kappa() == pytest.approx(4.0)

    def test_ring_whole_space(self):
        assert RectKernel(ActionSpace.ring(), 0.5).kappa() == pytest.approx(1.0)


class TestSmoothedLoss:
    def test_v_shape_with_point_dip(self):
        mean = PiecewiseLinearLoss([0.0, 0.5, 1.0], [1.0, 0.25, 1.0],
                                   special_points={0.7: 0.1})
        k = RectKernel(ActionSpace.ring(), 0.1)
        assert k.smoothed_loss(0.5, mean) == pytest.approx(0.325, abs=1e-9)

    def test_constant_loss(self):
        k = RectKernel(ActionSpace.cube(1), 0.2)
        assert k.smoothed_loss(0.5, PiecewiseConstantLoss.constant(0.3)) \
            == pytest.approx(0.3, abs=1e-12)

    def test_symmetric_linear(self):
        mean = PiecewiseLinearLoss([0.0, 1.0], [0.0, 1.0])
        k = RectKernel(ActionSpace.ring(), 0.1)
        assert k.smoothed_loss(0.5, mean) == pytest.approx(0.5, abs=1e-9)

    def test_dirac_returns_point_value(self):
        mean = PiecewiseLinearLoss([0.0, 1.0], [0.0, 1.0])
        k = RectKernel(ActionSpace.ring(), 0.0)
        assert k.smoothed_loss(0.3, mean) == pytest.approx(0.3, abs=1e-12)

    def test_lipschitz_gap(self):
        # |smoothed value - point value| <= L * h
        rng = np.random.default_rng(1)
        space = ActionSpace.cube(1)
        for _ in range(300):
            breaks = np.unique(np.concatenate([[0.0, 1.0],
                                               rng.uniform(0, 1, 4)]))
            vals = rng.uniform(0, 1, len(breaks))
            loss = PiecewiseLinearLoss(breaks, vals)
            L = loss.lipschitz_constant()
            h = float(rng.uniform(0.01, 0.5))
            c = float(rng.random())
            gap = abs(RectKernel(space, h).smoothed_loss(c, loss)
                      - float(loss(c)))
            assert gap <= L * h + 1e-9

    def test_snapped_bandwidth_gap(self):
        # moving to the snapped grid bandwidth costs at most 1/T in value
        rng = np.random.default_rng(2)
        space = ActionSpace.cube(1)
        for T in (16, 256):
            grid = BandwidthGrid(1, T)
            for _ in range(200):
                loss = _random_pw_constant(rng)
                a = float(rng.random())
                h = float(rng.uniform(T ** -1.0, 1.0))
                h_hat = grid.snap(h)
                v = RectKernel(space, h).smoothed_loss(a, loss)
                v_hat = RectKernel(space, h_hat).smoothed_loss(a, loss)
                assert v_hat <= v + 1.0 / T + 1e-9

    def test_interval_swap_bound(self):
        # swapping the averaging set S1 -> S2 moves the mean of a [0,1]
        # loss by at most 2 nu(S1 xor S2) / max(nu(S1), nu(S2))
        rng = np.random.default_rng(3)
        for _ in range(500):
            loss = _random_pw_constant(rng)
            l1, r1 = np.sort(rng.uniform(0, 1, 2))
            l2, r2 = np.sort(rng.uniform(0, 1, 2))
            v1, v2 = r1 - l1, r2 - l2
            if min(v1, v2) < 1e-3:
                continue
            m1 = loss.integrate(l1, r1) / v1
            m2 = loss.integrate(l2, r2) / v2
            inter = max(0.0, min(r1, r2) - max(l1, l2))
            sym = v1 + v2 - 2 * inter
            assert abs(m1 - m2) <= 2 * sym / max(v1, v2) + 1e-9


class TestBandwidthGrid:
    def test_resolution_value(self):
        grid = BandwidthGrid(1, 4)
        assert grid.D == 128

    def test_snap_floors_to_grid(self):
        grid = BandwidthGrid(1, 4)
        assert grid.snap(0.30) == pytest.approx(38.0 / 128.0, abs=1e-15)

    def test_snap_idempotent_on_members(self):
        grid = BandwidthGrid(1, 4)
        assert grid.snap(0.25) == 0.25
        assert grid.snap(grid.snap(0.3)) == grid.snap(0.3)

    def test_members_are_grid_multiples(self):
        grid = BandwidthGrid(1, 4)
        for h in grid.H:
            assert abs(h * grid.D - round(h * grid.D)) < 1e-9

    def test_nonempty_for_small_T(self):
        for T in (2, 3, 4, 100):
            assert len(BandwidthGrid(1, T)) > 0

    def test_lazy_membership_large_T(self):
        grid = BandwidthGrid(1, 2 ** 14)
        assert len(grid) > 10 ** 6
        assert grid.contains(grid.min_h)
        assert grid.contains(1.0)
        assert not grid.contains(grid.min_h - 1.0 / grid.D)
        assert not grid.contains(0.3 + 0.5 / grid.D)

    def test_snap_function_alias(self):
        grid = BandwidthGrid(1, 4)
        assert snap_bandwidth(grid, 0.3) == grid.snap(0.3)
