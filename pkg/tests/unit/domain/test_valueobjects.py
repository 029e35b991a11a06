import math

import numpy as np
import pytest  # type: ignore

from quarticlab.domain.valueobjects import (
    CheckResult,
    DerivedConstants,
    FixedPoints,
    ModelParams,
    RecurrenceData,
    Trajectory,
    TrajectoryMethod,
)
from quarticlab.exceptions import DomainError


class TestModelParams:
    def test_str(self):
        assert str(ModelParams(t=-1.0, g=1.0, N=400)) == "t=-1.0, g=1.0, N=400"

    @pytest.mark.parametrize(
        "t, g, N, message",
        (
            (-1.0, 0.0, 10, "The quartic coefficient g must be positive, got 0.0."),
            (-1.0, -2.0, 10, "The quartic coefficient g must be positive, got -2.0."),
            (-1.0, 1.0, 0, "The weight scale N must be at least 1, got 0."),
        ),
    )
    def test_invalid_values_raise_domain_error(self, t, g, N, message):
        with pytest.raises(DomainError, match=message):
            ModelParams(t=t, g=g, N=N)

    def test_with_N_keeps_the_potential(self):
        params = ModelParams(t=-1.5, g=2.0, N=100)

        assert params.with_N(800) == ModelParams(t=-1.5, g=2.0, N=800)

    def test_is_hashable(self):
        assert len({ModelParams(-1.0, 1.0, 10), ModelParams(-1.0, 1.0, 10)}) == 1


class TestDerivedConstants:
    def test_values_at_t_minus_one(self):
        constants = DerivedConstants(t=-1.0, g=1.0)

        assert constants.t_c == -2.0
        assert constants.lambda_c == 0.25
        assert constants.z_0 == pytest.approx(math.sqrt(2))
        assert constants.c_0 == pytest.approx(0.5 ** (1 / 3))
        assert constants.c_1 == pytest.approx(2 ** (1 / 3))
        assert constants.c_2 == pytest.approx(0.5 * 0.5 ** (1 / 3))
        assert constants.C == pytest.approx(2 ** (5 / 6))
        assert constants.c_9 == pytest.approx(2 ** (14 / 3))

    def test_c_1_and_c_2_are_reciprocal_up_to_a_factor_of_two(self):
        constants = DerivedConstants(t=-1.7, g=0.6)

        assert constants.c_1 * constants.c_2 == pytest.approx(0.5 / 0.6)

    @pytest.mark.parametrize("name", ("z_0", "c_0", "c_1", "C", "c_9"))
    @pytest.mark.parametrize("t", (0.0, 0.5))
    def test_constants_built_on_z_0_need_negative_t(self, name, t):
        with pytest.raises(DomainError, match=f"{name} is only defined for t < 0"):
            getattr(DerivedConstants(t=t, g=1.0), name)

    def test_c_2_is_undefined_at_zero(self):
        with pytest.raises(DomainError, match="c_2 is not defined at t = 0."):
            DerivedConstants(t=0.0, g=1.0).c_2


class TestFixedPoints:
    @pytest.mark.parametrize(
        "branch_R, branch_L, expected",
        ((0.5, 0.5, False), (0.8, 0.2, True)),
    )
    def test_is_split(self, branch_R, branch_L, expected):
        assert FixedPoints(lambda_=0.1, branch_R=branch_R, branch_L=branch_L).is_split is expected


class TestTrajectory:
    def test_n_max_counts_from_zero(self):
        trajectory = Trajectory(
            params=ModelParams(t=-1.0, g=1.0, N=10),
            R=np.zeros(6),
            method=TrajectoryMethod.FORWARD,
        )

        assert trajectory.n_max == 5
        assert math.isnan(trajectory.R_next)
        assert trajectory.blowup_index is None


class TestRecurrenceData:
    def test_n_max(self):
        data = RecurrenceData(
            R=np.zeros(4), log_h=np.zeros(4), params=ModelParams(t=-1.0, g=1.0, N=10)
        )

        assert data.n_max == 3
        assert data.rule is None


class TestCheckResult:
    @pytest.mark.parametrize(
        "observed, bound, passed, text",
        (
            (1e-9, 1e-8, True, "PASS orthonormality: observed 1.000e-09, bound 1.000e-08"),
            (1e-8, 1e-8, True, "PASS orthonormality: observed 1.000e-08, bound 1.000e-08"),
            (2e-3, 1e-8, False, "FAIL orthonormality: observed 2.000e-03, bound 1.000e-08"),
            (math.inf, 1e-8, False, "FAIL orthonormality: observed inf, bound 1.000e-08"),
        ),
    )
    def test_passed_and_str(self, observed, bound, passed, text):
        result = CheckResult(name="orthonormality", observed=observed, bound=bound)

        assert result.passed is passed
        assert str(result) == text

    def test_nan_fails(self):
        assert not CheckResult(name="x", observed=math.nan, bound=1.0).passed
