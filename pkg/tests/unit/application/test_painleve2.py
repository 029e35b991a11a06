import math

import numpy as np
import pytest  # type: ignore
from scipy import integrate, special

from quarticlab.application import painleve2
from quarticlab.exceptions import DomainError, ExtrapolationError
from tests.config import override_settings

HM_U_AT_ZERO = 0.3670615515


class TestAiry:
    def test_value_at_zero(self):
        ai, aip = painleve2.airy(0.0)

        assert ai == pytest.approx(3 ** (-2 / 3) / special.gamma(2 / 3), rel=1e-12)
        assert aip == pytest.approx(-(3 ** (-1 / 3)) / special.gamma(1 / 3), rel=1e-12)

    def test_satisfies_the_airy_equation(self):
        z, h = 1.3, 1e-3
        values = [painleve2.airy(z + k * h)[0] for k in (-1, 0, 1)]

        second = (values[0] - 2 * values[1] + values[2]) / h**2

        assert second == pytest.approx(z * values[1], abs=1e-8)

    def test_complex_argument(self):
        ai, _ = painleve2.airy(np.array([1.0 + 0.5j]))

        assert ai[0].imag != 0

    def test_decaying_asymptotics(self):
        ai, aip = painleve2.airy_asymptotic_decaying(12.0)
        exact_ai, exact_aip = painleve2.airy(12.0)

        assert ai == pytest.approx(exact_ai, rel=1e-10)
        assert aip == pytest.approx(exact_aip, rel=1e-10)
        assert isinstance(ai, float)

    def test_cosine_asymptotics(self):
        ai, aip = painleve2.airy_asymptotic_oscillatory(10.0)
        exact_ai, exact_aip = painleve2.airy(-10.0)

        assert ai == pytest.approx(exact_ai, rel=1e-3)
        assert aip == pytest.approx(exact_aip, rel=1e-3)

    @pytest.mark.parametrize("y", (-2.0, 0.0, 1.5))
    def test_kernel_tail_is_the_integral_of_Ai_squared(self, y):
        expected, _ = integrate.quad(lambda x: special.airy(x)[0] ** 2, y, np.inf)

        assert painleve2.airy_kernel_tail(y) == pytest.approx(expected, rel=1e-9)


class TestSolveHastingsMcLeod:
    def test_value_at_zero(self, hm):
        assert hm.u_at(0.0) == pytest.approx(HM_U_AT_ZERO, abs=1e-7)

    def test_residual(self, hm):
        assert hm.residual <= 1e-10
        assert hm.iterations >= 1

    def test_stable_under_mesh_doubling(self, hm):
        fine = painleve2.solve_hastings_mcleod(mesh=4000)

        assert abs(fine.u_at(0.0) - hm.u_at(0.0)) <= 1e-7

    def test_richardson_agrees(self, hm):
        with override_settings(HM_RICHARDSON=True):
            extrapolated = painleve2.solve_hastings_mcleod()

        assert abs(extrapolated.u_at(0.0) - hm.u_at(0.0)) <= 1e-8

    def test_follows_Ai_on_the_right(self, hm):
        assert hm.u_at(5.0) / painleve2.airy(5.0)[0] == pytest.approx(1.0, abs=1e-4)

    def test_follows_the_square_root_on_the_left(self, hm):
        ratio = hm.u_at(-6.0) / math.sqrt(3)

        assert 1 - 3e-3 <= ratio <= 1
        assert ratio == pytest.approx(1 - 1 / 864, abs=2e-3)

    def test_left_boundary_value(self):
        assert painleve2.left_boundary_value(-2.0) == pytest.approx(1 - 1 / 64)

    def test_boundary_error_is_recorded(self, hm):
        assert 0 < hm.boundary_error < 1e-5

    def test_grid_shape(self, hm):
        assert hm.y_min == -12.0
        assert hm.y_max == 8.0
        assert hm.mesh == 2000
        assert len(hm.u) == len(hm.up) == len(hm.v) == len(hm.D) == len(hm.q) == 2001

    @pytest.mark.parametrize(
        "kwargs, message",
        (
            ({"y_min": -6.0}, r"The grid must cover \[-8, 6\]"),
            ({"y_max": 5.0}, r"The grid must cover \[-8, 6\]"),
            ({"mesh": 100}, "mesh must be at least 400, got 100."),
        ),
    )
    def test_invalid_grid(self, kwargs, message):
        with pytest.raises(DomainError, match=message):
            painleve2.solve_hastings_mcleod(**kwargs)


class TestHMGrid:
    def test_D_is_positive(self, hm):
        assert np.all(hm.D > 0)

    def test_D_identity(self, hm):
        inside = hm.y >= -8
        identity = hm.up**2 - hm.u**4 - hm.y * hm.u**2

        assert np.max(np.abs(hm.D[inside] - identity[inside])) <= 1e-7

    @pytest.mark.parametrize("y", (-5.0, 0.0, 3.0))
    def test_derivatives_of_D_and_q(self, hm, y):
        delta = 1e-3

        dD = (hm.D_at(y + delta) - hm.D_at(y - delta)) / (2 * delta)
        dq = (hm.q_at(y + delta) - hm.q_at(y - delta)) / (2 * delta)

        assert dD == pytest.approx(-hm.u_at(y) ** 2, abs=1e-6)
        assert dq == pytest.approx(hm.v_at(y) / 8, abs=1e-6)

    def test_v_changes_sign_once(self, hm):
        assert np.count_nonzero(np.sign(hm.v[:-1]) != np.sign(hm.v[1:])) == 1

    def test_interpolation_reproduces_the_nodes(self, hm):
        assert hm.u_at(hm.y[700]) == pytest.approx(hm.u[700], rel=1e-14)

    def test_array_arguments(self, hm):
        values = hm.v_at(np.array([-1.0, 1.0]))

        assert values.shape == (2,)

    @pytest.mark.parametrize("y", (-12.5, 8.01))
    def test_outside_the_grid_raises(self, hm, y):
        with pytest.raises(ExtrapolationError, match="outside the Hastings-McLeod grid"):
            hm.u_at(y)


class TestTurningPoints:
    def test_far_left(self, hm):
        points = painleve2.turning_points(hm, -10.0)

        assert points.s2_sq == pytest.approx(5.0, rel=0.02)
        assert points.s1_sq == pytest.approx(-1 / 1600, rel=0.2)

    def test_far_right(self, hm):
        points = painleve2.turning_points(hm, 6.0)

        assert points.s1_sq < points.s2_sq < 0
        assert points.s1_sq == pytest.approx(-1.5, rel=1e-3)
        assert points.s2_sq == pytest.approx(-1.5, rel=1e-3)

    @pytest.mark.parametrize("y", (-7.0, -1.0, 0.0, 2.5))
    def test_discriminant_is_D(self, hm, y):
        points = painleve2.turning_points(hm, y)
        identity = (y**2 - hm.v_at(y) ** 2) / 4 + hm.up_at(y) ** 2

        assert points.discriminant == pytest.approx(identity, abs=1e-8)
        assert points.discriminant == pytest.approx(hm.D_at(y), abs=1e-7)
        assert points.s1_sq < 0
        assert points.s1_sq < points.s2_sq


class TestFindY0:
    def test_positive_and_unique(self, hm):
        y_0 = painleve2.find_y0(hm)
        positive = hm.y > 0

        assert y_0 > 0
        assert abs(hm.q_at(y_0)) < 1e-12
        signs = np.sign(hm.q[positive])
        assert np.count_nonzero(signs[:-1] != signs[1:]) == 1

    def test_s2_sq_changes_sign_at_y0(self, hm):
        y_0 = painleve2.find_y0(hm)

        assert painleve2.turning_points(hm, y_0 - 0.1).s2_sq > 0
        assert painleve2.turning_points(hm, y_0 + 0.1).s2_sq < 0

    def test_stable_under_mesh_doubling(self, hm):
        fine = painleve2.solve_hastings_mcleod(mesh=4000)

        assert painleve2.find_y0(fine) == pytest.approx(painleve2.find_y0(hm), abs=1e-6)

    def test_q_asymptotics_on_the_left(self):
        wide = painleve2.solve_hastings_mcleod(y_min=-25.0, mesh=3000)

        assert wide.q_at(-20.0) == pytest.approx(1 / (32 * -20.0), rel=0.05)
