import numpy as np
import pytest

from peakopt.timegrid import (
    SGrid,
    SplitGridValues,
    TauParameter,
    clock_speed,
    clock_speed_dtau,
    physical_time,
    physical_times,
)


class TestPhysicalTime:
    def test_interface_maps_to_tau(self):
        tp = TauParameter(10.0, 30.0)
        assert physical_time(1.0, tp) == 10.0

    def test_endpoints(self):
        tp = TauParameter(10.0, 30.0)
        assert physical_time(0.0, tp) == 0.0
        assert physical_time(2.0, tp) == 30.0

    def test_linear_on_lower_half(self):
        tp = TauParameter(10.0, 30.0)
        assert physical_time(0.5, tp) == pytest.approx(5.0)

    def test_out_of_range_raises(self):
        tp = TauParameter(10.0, 30.0)
        with pytest.raises(ValueError):
            physical_time(-0.1, tp)
        with pytest.raises(ValueError):
            physical_time(2.0001, tp)

    def test_strictly_increasing_piecewise_affine(self):
        tp = TauParameter(7.3, 30.0)
        s = np.linspace(0, 2, 101)
        t = np.array([physical_time(si, tp) for si in s])
        assert np.all(np.diff(t) > 0)

    def test_tau_derivative_matches_affine_dependence(self):
        # pi is affine in tau at fixed s, so a finite difference in tau is
        # exact: s on the lower half, 2 - s on the upper half
        tp = TauParameter(9.0, 30.0)
        eps = 1e-3
        for s in (0.0, 0.25, 0.75, 1.25, 1.9, 2.0):
            up = physical_time(s, TauParameter(tp.tau + eps, 30.0))
            dn = physical_time(s, TauParameter(tp.tau - eps, 30.0))
            fd = (up - dn) / (2 * eps)
            expected = s if s <= 1.0 else 2.0 - s
            assert fd == pytest.approx(expected, abs=1e-10)


class TestClockSpeed:
    def test_lower_half(self):
        tp = TauParameter(10.0, 30.0)
        assert clock_speed(0.3, tp) == 10.0

    def test_upper_half(self):
        tp = TauParameter(10.0, 30.0)
        assert clock_speed(1.7, tp) == 20.0

    def test_symmetric_tau_equal_sides(self):
        tp = TauParameter(15.0, 30.0)
        assert clock_speed(1.0, tp, side="left") == clock_speed(1.0, tp, side="right")

    def test_interface_requires_side(self):
        tp = TauParameter(10.0, 30.0)
        with pytest.raises(ValueError):
            clock_speed(1.0, tp)
        assert clock_speed(1.0, tp, side="left") == 10.0
        assert clock_speed(1.0, tp, side="right") == 20.0

    def test_dtau_signs(self):
        assert clock_speed_dtau(0.2) == 1.0
        assert clock_speed_dtau(1.9) == -1.0

    def test_dtau_antisymmetric_at_mirror_nodes(self):
        for s in (0.1, 0.4, 0.9):
            assert clock_speed_dtau(s) + clock_speed_dtau(2.0 - s) == 0.0


class TestTauParameter:
    def test_clamps_into_open_interval(self):
        tp = TauParameter(-5.0, 30.0)
        assert tp.tau == pytest.approx(30.0 * 1e-6)
        tp = TauParameter(31.0, 30.0)
        assert tp.tau == pytest.approx(30.0 * (1 - 1e-6))

    def test_speeds(self):
        tp = TauParameter(10.0, 30.0)
        assert tp.speed_lower == 10.0
        assert tp.speed_upper == 20.0

    def test_invalid_horizon(self):
        with pytest.raises(ValueError):
            TauParameter(1.0, -1.0)


class TestSGrid:
    def test_rejects_odd(self):
        with pytest.raises(ValueError):
            SGrid(11)

    def test_interface_node_exact(self):
        for n in (2, 30, 3000):
            grid = SGrid(n)
            assert grid.nodes[grid.mid] == 1.0
            assert grid.nodes[0] == 0.0
            assert grid.nodes[-1] == 2.0
            assert np.all(np.diff(grid.nodes) > 0)

    def test_interval_speeds(self):
        grid = SGrid(4)
        tp = TauParameter(10.0, 30.0)
        np.testing.assert_allclose(grid.interval_speeds(tp), [10, 10, 20, 20])

    def test_integrate_half_constant(self):
        grid = SGrid(10)
        ones = np.ones(grid.mid + 1)
        assert grid.integrate_half(ones) == pytest.approx(1.0, rel=1e-14)


class TestPhysicalTimes:
    def test_small_grids(self):
        tp = TauParameter(10.0, 30.0)
        np.testing.assert_allclose(physical_times(SGrid(2), tp), [0, 10, 30])
        np.testing.assert_allclose(physical_times(SGrid(4), tp), [0, 5, 10, 20, 30])

    @pytest.mark.parametrize("n,tau,horizon", [(10, 3.3, 12.0), (64, 11.7, 25.0)])
    def test_interface_hits_tau_exactly(self, n, tau, horizon):
        grid = SGrid(n)
        tp = TauParameter(tau, horizon)
        t = physical_times(grid, tp)
        assert t[grid.mid] == tp.tau
        assert t[0] == 0.0 and t[-1] == horizon
        assert np.all(np.diff(t) > 0)


class TestSplitGridValues:
    def test_from_nodal_duplicates_interface(self):
        grid = SGrid(4)
        vals = np.arange(5.0)[:, None]
        split = SplitGridValues.from_nodal(grid, vals)
        assert split.lower.shape == (3, 1)
        assert split.upper.shape == (3, 1)
        assert split.left_at_interface[0] == 2.0
        assert split.right_at_interface[0] == 2.0
        assert split.values.shape == (6, 1)

    def test_arithmetic(self):
        grid = SGrid(4)
        a = SplitGridValues.from_nodal(grid, np.ones((5, 2)))
        b = 2.0 * a
        c = b - a
        np.testing.assert_allclose(c.lower, a.lower)
        np.testing.assert_allclose((a + a).upper, b.upper)

    def test_shape_validation(self):
        grid = SGrid(4)
        with pytest.raises(ValueError):
            SplitGridValues(grid, np.ones((2, 1)), np.ones((3, 1)))
