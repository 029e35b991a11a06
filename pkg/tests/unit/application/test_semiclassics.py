import math

import numpy as np
import pytest  # type: ignore
from scipy import integrate

from quarticlab.application import orthopoly, psi_cp, semiclassics
from quarticlab.domain.model import derive_constants
from quarticlab.domain.valueobjects import ModelParams
from quarticlab.exceptions import DomainError, RegionError

PARAMS = ModelParams(t=-1.0, g=1.0, N=200)
# n = lambda_c N, so the frame sits at y = 0.
N_CENTRE = 50


@pytest.fixture(scope="module")
def wkb(hm) -> semiclassics.WKBData:
    return semiclassics.build_wkb(semiclassics.build_frame(PARAMS, N_CENTRE, hm))


@pytest.fixture(scope="module")
def zeta() -> semiclassics.ZetaMaps:
    return semiclassics.zeta_maps(PARAMS, 0.7, PARAMS.N)


class TestBuildFrame:
    def test_centre_frame(self, wkb, hm):
        frame = wkb.frame

        assert frame.y == pytest.approx(0.0, abs=1e-12)
        assert frame.sign == 1
        assert frame.u == pytest.approx(hm.u_at(0.0))
        assert frame.theta_n0 == pytest.approx(-1.0 + frame.R_n0 + frame.R_next0)

    def test_theta_approaches_its_leading_term(self, hm):
        def error(N):
            frame = semiclassics.build_frame(PARAMS.with_N(N), N // 4, hm)
            return abs(frame.theta_n0 - N ** (-2 / 3) * frame.c_5)

        assert error(3200) < error(400) / 4

    @pytest.mark.parametrize(
        "params, n, message",
        (
            (ModelParams(t=0.5, g=1.0, N=200), 50, "needs t < 0, got t=0.5."),
            (PARAMS, 0, "The index n must be at least 1, got 0."),
        ),
    )
    def test_invalid_frames(self, hm, params, n, message):
        with pytest.raises(DomainError, match=message):
            semiclassics.build_frame(params, n, hm)


class TestWKBData:
    def test_U0_is_minus_d_up_to_order_one_over_N(self, wkb):
        z = np.linspace(0.2, 2.0, 30)

        gap = wkb.U0(z) + semiclassics.d_function(PARAMS, N_CENTRE, z)

        assert np.max(np.abs(gap)) <= 5 / PARAMS.N

    def test_derivatives(self, wkb):
        z, h = 1.1, 1e-5

        first = (wkb.U0(z + h) - wkb.U0(z - h)) / (2 * h)
        second = (wkb.U0_prime(z + h) - wkb.U0_prime(z - h)) / (2 * h)

        assert wkb.U0_prime(z) == pytest.approx(first, rel=1e-8)
        assert wkb.U0_second(z) == pytest.approx(second, rel=1e-8)

    def test_turning_point(self, wkb):
        z_0 = wkb.constants.z_0

        assert abs(wkb.z0N - z_0) < 0.1
        assert wkb.U0(wkb.z0N) == pytest.approx(0.0, abs=1e-12)
        assert wkb.U0_prime(wkb.z0N) > 0

    def test_region_sizes_follow_the_settings(self, wkb):
        assert wkb.d_1 == pytest.approx(0.25 * math.sqrt(2))
        assert wkb.d_2 == pytest.approx(0.05 * math.sqrt(2))

    def test_remainder_matches_the_direct_difference(self, wkb):
        z = 4.0
        m = wkb.mu_m1_effective

        direct = math.sqrt(wkb.U0(z)) - (wkb.mu_3 * z**3 + wkb.mu_1 * z + m / z)

        assert wkb.remainder(z) == pytest.approx(direct, abs=1e-12)

    def test_one_over_z_coefficient_is_the_effective_one(self, wkb):
        z = 200.0

        coefficient = z * (math.sqrt(wkb.U0(z)) - wkb.mu_3 * z**3 - wkb.mu_1 * z)

        assert coefficient == pytest.approx(wkb.mu_m1_effective, abs=1e-4)
        assert wkb.mu_m1_effective - wkb.mu_m1 == pytest.approx(-0.5 / PARAMS.N)

    def test_lax_entries(self, wkb):
        a11, a12 = wkb.lax_entries(0.0)

        assert a11 == 0.0
        assert a12 == pytest.approx(math.sqrt(wkb.frame.R_n0) * wkb.frame.theta_n0)


class TestPhaseIntegrals:
    def test_real_exterior_is_the_straight_integral(self, wkb):
        expected, _ = integrate.quad(
            lambda x: math.sqrt(max(wkb.U0(x), 0.0)), wkb.z0N, 2.0, epsrel=1e-11, limit=200
        )

        assert semiclassics.xi_c(wkb, 2.0) == pytest.approx(expected, rel=1e-9)

    def test_contour_from_above_continues_into_the_bulk(self, wkb):
        x = 0.8
        bulk, _ = integrate.quad(
            lambda s: math.sqrt(max(-wkb.U0(s), 0.0)), x, wkb.z0N, epsrel=1e-11, limit=200
        )

        assert semiclassics.xi_c(wkb, x) == pytest.approx(-1j * bulk, abs=1e-8)

    def test_contour_off_the_axis_is_analytic(self, wkb):
        z, h = 1.0 + 0.3j, 1e-5

        derivative = (semiclassics.xi_c(wkb, z + h) - semiclassics.xi_c(wkb, z - h)) / (2 * h)

        assert abs(derivative**2 - wkb.U0(z)) < 1e-6 * abs(wkb.U0(z))

    def test_log_hn_is_close_to_the_exact_value(self, wkb):
        recurrence = orthopoly.stieltjes_recurrence(PARAMS, N_CENTRE + 1)

        asymptotic = semiclassics.hn_asymptotic(wkb)

        assert abs(asymptotic - recurrence.log_h[N_CENTRE]) < 1.0
        assert semiclassics.hn_asymptotic(wkb, normalized=False) == pytest.approx(
            asymptotic - math.log(2 * math.pi)
        )


class TestApproximants:
    def test_gauges_are_unimodular(self, wkb):
        z_0, d_1 = wkb.constants.z_0, wkb.d_1
        exterior = semiclassics.exterior_gauge(wkb, np.array([z_0 + d_1, z_0 + 0.8]))
        bulk = semiclassics.bulk_gauge(wkb, np.array([d_1, z_0 - d_1]))
        airy = semiclassics.turning_point_gauge(wkb, np.array([z_0 - d_1, z_0 + d_1]))

        for gauge in (exterior, bulk, airy):
            determinant = gauge[0, 0] * gauge[1, 1] - gauge[0, 1] * gauge[1, 0]
            assert np.allclose(determinant, 1.0)

    def test_exterior_scaled_form(self, wkb):
        z = np.array([1.8, 2.0])

        first, second, log_scale = semiclassics.psi_wkb_exterior_scaled(wkb, z)
        psi_n, psi_prev = semiclassics.psi_wkb_exterior(wkb, z)

        assert np.allclose(psi_n, first * np.exp(log_scale))
        assert np.allclose(psi_prev, second * np.exp(log_scale))
        assert np.all(log_scale < 0)

    def test_bulk_reflection(self, wkb):
        first, second = semiclassics.psi_wkb_bulk(wkb, 0.6)
        reflected_first, reflected_second = semiclassics.psi_wkb_bulk(wkb, -0.6)

        # n = 50 is even.
        assert reflected_first == pytest.approx(first)
        assert reflected_second == pytest.approx(-second)

    @pytest.mark.parametrize(
        "approximant, z",
        (
            (semiclassics.psi_wkb_exterior, 1.0),
            (semiclassics.psi_wkb_bulk, 0.1),
            (semiclassics.psi_wkb_bulk, 1.3),
            (semiclassics.psi_airy_tp, 0.5),
            (semiclassics.psi_airy_tp, 2.5),
        ),
    )
    def test_outside_the_region(self, wkb, approximant, z):
        with pytest.raises(RegionError, match="form applies for"):
            approximant(wkb, z)

    @pytest.mark.parametrize(
        "region, bound",
        (
            (semiclassics.Region.EXTERIOR, 0.1),
            (semiclassics.Region.BULK, 0.1),
            (semiclassics.Region.TURNING_POINT, 0.1),
            (semiclassics.Region.CRITICAL, 0.5),
        ),
    )
    def test_close_to_the_exact_psi(self, wkb, hm, region, bound):
        recurrence = orthopoly.stieltjes_recurrence(PARAMS, N_CENTRE + 1)
        evaluator = orthopoly.PsiEvaluator.from_recurrence(recurrence)

        assert semiclassics.region_error(wkb, evaluator, region, hm) < bound

    def test_critical_form_needs_the_matching_phi(self, wkb, hm):
        phi = psi_cp.solve_phi(hm, 0.0, 1)
        zeta = semiclassics.zeta_maps(PARAMS, 0.0, PARAMS.N)

        with pytest.raises(DomainError, match="Phi was solved at y=0.0, n=1"):
            semiclassics.psi_critical(wkb, phi, zeta, 0.1)


class TestTurningPointMap:
    def test_vanishes_at_the_turning_point(self, wkb):
        assert semiclassics.tp_map(wkb, wkb.z0N) == pytest.approx(0.0, abs=1e-14)

    def test_is_increasing(self, wkb):
        z_0, d_1 = wkb.constants.z_0, wkb.d_1

        values = semiclassics.tp_map(wkb, np.linspace(z_0 - d_1, z_0 + d_1, 21))

        assert np.all(np.diff(values) > 0)

    @pytest.mark.parametrize(
        "offset, h", ((-0.2, 1e-5), (-3e-6, 1e-7), (3e-6, 1e-7), (0.2, 1e-5))
    )
    def test_derivative(self, wkb, offset, h):
        z = wkb.z0N + offset

        expected = (semiclassics.tp_map(wkb, z + h) - semiclassics.tp_map(wkb, z - h)) / (2 * h)

        assert semiclassics.tp_map_derivative(wkb, z) == pytest.approx(expected, rel=1e-5)

    def test_series_joins_the_closed_form(self, wkb):
        edge = 1e-5 * wkb.constants.z_0

        inside = semiclassics.tp_map(wkb, wkb.z0N + 0.999 * edge)
        outside = semiclassics.tp_map(wkb, wkb.z0N + 1.001 * edge)

        assert outside / inside == pytest.approx(1.001 / 0.999, rel=1e-6)


class TestZetaMaps:
    def test_inf_map_cubes_to_three_quarters_of_D_inf(self, zeta):
        z = np.array([0.05, 0.3, 0.9])

        assert np.allclose(zeta.zeta_inf(z) ** 3, 0.75 * zeta.D_inf(z), rtol=1e-12)

    def test_D_inf_is_the_integral(self, zeta):
        z_0 = zeta.constants.z_0
        expected, _ = integrate.quad(
            lambda u: u**2 / 2 * math.sqrt(z_0**2 - u**2), 0, 1.0, epsrel=1e-13
        )

        assert zeta.D_inf(1.0) == pytest.approx(expected, rel=1e-12)

    def test_D_1(self, zeta):
        assert zeta.D_1(0.5) == pytest.approx(0.5 ** (1 / 3) * math.asin(0.5 / math.sqrt(2)))

    @pytest.mark.parametrize("name", ("zeta_inf", "zeta_1"))
    def test_series_joins_the_closed_form(self, zeta, name):
        edge = 0.25 * zeta.constants.z_0
        function = getattr(zeta, name)

        assert function(edge * (1 - 1e-9)) == pytest.approx(function(edge * (1 + 1e-9)), rel=1e-7)

    def test_derivatives_at_zero(self, zeta):
        h = 1e-6
        C, z_0 = zeta.constants.C, zeta.constants.z_0

        assert zeta.zeta_inf(h) / h == pytest.approx(1 / C, rel=1e-9)
        assert zeta.zeta_1(h) / h == pytest.approx(C / (15 * z_0**2), rel=1e-9)
        assert zeta.zeta_0(h) / h == pytest.approx(zeta.zeta_0_derivative_at_zero, rel=1e-9)

    def test_critical_scale_in_terms_of_c_0(self, zeta):
        C, c_0 = zeta.constants.C, zeta.constants.c_0
        # alpha = 0, so the shifted y is y itself.
        expected = 1 / C + PARAMS.N ** (-2 / 3) * 0.7 / (15 * C * c_0**2)

        assert zeta.zeta_1_derivative_at_zero == pytest.approx(1 / (15 * C * c_0**2), rel=1e-12)
        assert zeta.zeta_0_derivative_at_zero == pytest.approx(expected, rel=1e-12)

    def test_maps_are_odd(self, zeta):
        z = np.array([0.1, 0.6, 1.0])

        assert np.allclose(zeta.zeta_0(-z), -zeta.zeta_0(z))

    def test_real_and_complex_points(self, zeta):
        assert isinstance(zeta.zeta_0(0.4), float)
        assert np.iscomplexobj(zeta.zeta_0(0.4 + 0.02j))
        assert zeta.zeta_0(0.4 + 0j) == pytest.approx(zeta.zeta_0(0.4))

    @pytest.mark.parametrize("z", (1.1, 0.5 + 0.1j))
    def test_outside_the_rectangle(self, zeta, z):
        with pytest.raises(RegionError, match="The zeta maps are defined for"):
            zeta.zeta_0(z)

    def test_alpha_shifts_y(self):
        maps = semiclassics.zeta_maps(PARAMS, 0.7, 1000, alpha=-2.0)

        assert maps.shifted_y == pytest.approx(0.7 - 2.0 / 100)


class TestEquationOfPeriods:
    def test_value_at_the_origin(self):
        assert semiclassics.period_integral(0.0, 0.0) == pytest.approx(1 / 3, rel=1e-13)

    @pytest.mark.parametrize("x1", (-0.3, 0.1, 0.45))
    def test_closed_form_without_x2(self, x1):
        assert semiclassics.period_integral(x1, 0.0) == pytest.approx(
            (1 - x1) ** 1.5 / 3, rel=1e-12
        )

    @pytest.mark.parametrize("x1, x2", ((0.0, 0.0), (0.2, 0.0), (-0.1, 0.03), (0.15, -0.04)))
    def test_agrees_with_the_loop_integral(self, x1, x2):
        # Half the integral round |s - 1| = 1 of the branch that is positive below the cut.
        if x2 == 0:
            r_hat = 1 - x1
        else:
            r_hat = (-1 + math.sqrt(1 + 4 * x2 * (1 - x1))) / (2 * x2)
        s_hat = math.sqrt(r_hat)

        def integrand(theta: float) -> complex:
            s = 1 + np.exp(1j * theta)
            branch = 1j * np.sqrt(s - s_hat) * np.sqrt(s + s_hat)
            h = s * branch * np.sqrt(1 + x2 * (s**2 + r_hat))
            return 0.5 * h * 1j * np.exp(1j * theta)

        options = {"limit": 200, "epsabs": 1e-14, "epsrel": 1e-12}
        real, _ = integrate.quad(lambda theta: integrand(theta).real, np.pi, 3 * np.pi, **options)
        imag, _ = integrate.quad(lambda theta: integrand(theta).imag, np.pi, 3 * np.pi, **options)

        assert semiclassics.period_integral(x1, x2) == pytest.approx(real, rel=1e-10)
        assert abs(imag) <= 1e-10

    def test_alpha_vanishes_at_zero(self):
        assert semiclassics.period_alpha(PARAMS, 0.0, 200) == 0.0

    def test_alpha_for_small_y(self):
        y, N = 0.1, 10_000
        c_9 = derive_constants(PARAMS).c_9

        assert semiclassics.period_alpha(PARAMS, y, N) == pytest.approx(
            -4 * c_9 * y**2 / 15, rel=0.02
        )

    @pytest.mark.parametrize("x1, x2", ((0.5, 0.0), (0.0, 0.2)))
    def test_outside_the_chart(self, x1, x2):
        with pytest.raises(DomainError, match="outside the local chart"):
            semiclassics.period_integral(x1, x2)

    def test_alpha_outside_the_chart(self):
        with pytest.raises(DomainError, match="outside the local chart"):
            semiclassics.period_alpha(PARAMS, 50.0, 100)


class TestComparisonTable:
    def test_fitted_rate(self):
        assert semiclassics.fitted_rate([(100, 1e-2), (200, 5e-3), (400, 2.5e-3)]) == (
            pytest.approx(1.0)
        )

    def test_fitted_rate_needs_two_points(self):
        assert math.isnan(semiclassics.fitted_rate([(100, 1e-2), (200, 0.0)]))

    def test_assemble_table_orders_rows(self):
        Region = semiclassics.Region
        rows = [
            semiclassics.ComparisonRow(N=200, region=Region.BULK, sup_error=0.01, n=50),
            semiclassics.ComparisonRow(N=100, region=Region.BULK, sup_error=0.02, n=25),
            semiclassics.ComparisonRow(N=100, region=Region.EXTERIOR, sup_error=0.04, n=24),
            semiclassics.ComparisonRow(N=200, region=Region.EXTERIOR, sup_error=0.02, n=51),
        ]

        table = semiclassics.assemble_table(rows, (Region.EXTERIOR, Region.BULK))

        assert [(row.N, row.region) for row in table.rows] == [
            (100, Region.EXTERIOR),
            (100, Region.BULK),
            (200, Region.EXTERIOR),
            (200, Region.BULK),
        ]
        assert table.errors(Region.BULK) == [(100, 0.02), (200, 0.01)]
        assert table.rates[Region.EXTERIOR] == pytest.approx(1.0)
