import numpy as np
import pytest  # type: ignore

from quarticlab import ModelParams, variational_solve
from quarticlab.application import freud, orthopoly, semiclassics
from quarticlab.domain.model import derive_constants


def test_variational_trajectory_matches_the_quadrature_oracle():
    params = ModelParams(t=-1.0, g=1.0, N=40)

    trajectory = variational_solve(params, 60)
    recurrence = orthopoly.stieltjes_recurrence(params, 60)

    assert np.max(np.abs(trajectory.R - recurrence.R[:61])) <= 1e-8


@pytest.mark.slow
def test_branches_merge_at_the_critical_index():
    params = ModelParams(t=-1.0, g=1.0, N=400)

    R = variational_solve(params, 200).R
    alternation = np.abs(np.diff(R))

    assert derive_constants(params).lambda_c * params.N == 100
    # Two interleaved branches below the merge, one branch above it.
    assert np.all(alternation[1:86] > 0.1)
    assert np.all(alternation[115:200] < 0.02)


@pytest.mark.slow
def test_ansatz_error_decays_like_one_over_N(hm):
    base = ModelParams(t=-1.0, g=1.0, N=100)
    errors = []
    for N in (100, 200, 400, 800):
        params = base.with_N(N)
        constants = derive_constants(params)
        half_width = 2 * constants.c_0 * N ** (1 / 3)
        indices = range(
            int(np.ceil(constants.lambda_c * N - half_width)),
            int(np.floor(constants.lambda_c * N + half_width)) + 1,
        )
        R = variational_solve(params, max(indices) + 1).R
        gap = max(abs(R[n] - freud.ansatz_R(params, n, hm)) for n in indices)
        errors.append((N, gap))

    assert semiclassics.fitted_rate(errors) >= 0.9
