"""
The discrete string equation

    R_n (t + g R_{n-1} + g R_n + g R_{n+1}) = n / N,    R_0 = 0,

solved for the trajectory of recurrence coefficients.
"""

from __future__ import annotations

import dataclasses
import logging
import math
from typing import TYPE_CHECKING

import numpy as np
from numpy.typing import NDArray
from scipy import integrate, linalg

from quarticlab.application.config import settings
from quarticlab.domain.model import derive_constants, potential
from quarticlab.domain.valueobjects import (
    FixedPoints,
    ModelParams,
    Trajectory,
    TrajectoryMethod,
)
from quarticlab.exceptions import DomainError, QuadratureError

if TYPE_CHECKING:
    from quarticlab.application.painleve2 import HMGrid


logger = logging.getLogger(__name__)

# Below this, 1/R_n is treated as a blow-up of the forward recursion.
_R_FLOOR = 1e-300
_LINE_SEARCH_MIN_STEP = 1e-12


def upper_bound(params: ModelParams, n) -> NDArray[np.float64]:
    """
    The a priori bound R_n < (-t + sqrt(t^2 + 4 g n / N)) / (2g).
    """
    lam = np.asarray(n, dtype=float) / params.N
    return (-params.t + np.sqrt(params.t**2 + 4 * params.g * lam)) / (2 * params.g)


def initial_R1(params: ModelParams) -> float:
    """
    R_1 = int z^2 e^{-NV} dz / int e^{-NV} dz.

    The weight is shifted by its minimum so that it peaks at 1, and both integrals are
    taken over the half line using evenness.
    """
    t, g, N = params.t, params.g, params.N
    v_min = -(t**2) / (4 * g) if t < 0 else 0.0
    # Beyond L the shifted weight is below e^{-750}.
    excess = v_min + 750 / N
    L = math.sqrt((-t + math.sqrt(t**2 + 4 * g * excess)) / g)
    points = [math.sqrt(-t / g)] if t < 0 else None

    def weight(z: float) -> float:
        return math.exp(-N * (potential(params, z) - v_min))

    tol = settings.QUADRATURE_TOL
    moment_0, error_0 = integrate.quad(
        weight, 0, L, points=points, epsabs=0, epsrel=tol, limit=200
    )
    moment_2, error_2 = integrate.quad(
        lambda z: z**2 * weight(z), 0, L, points=points, epsabs=0, epsrel=tol, limit=200
    )
    relative_error = error_0 / moment_0 + error_2 / moment_2
    if relative_error > 1e-12:
        raise QuadratureError(f"Moments of e^(-NV) for {params}", relative_error)
    return moment_2 / moment_0


def forward_recursion(params: ModelParams, n_max: int) -> Trajectory:
    """
    Iterate the string equation upwards from R_0 = 0 and R_1 = initial_R1(params).

    The recursion is numerically unstable near n/N = lambda_c. The first index at which
    the bound on R_n fails is recorded as blowup_index and the trajectory stops before it.
    """
    if n_max < 1:
        raise DomainError(f"n_max must be at least 1, got {n_max}.")
    t, g, N = params.t, params.g, params.N
    R = np.zeros(n_max + 2)
    R[1] = initial_R1(params)
    blowup_index = None
    for n in range(1, n_max + 1):
        if R[n] <= _R_FLOOR:
            blowup_index = n
            break
        R[n + 1] = ((n / N) / R[n] - t - g * R[n - 1] - g * R[n]) / g
        if not 0 < R[n + 1] < upper_bound(params, n + 1):
            blowup_index = n + 1
            break

    if blowup_index is None:
        return Trajectory(
            params=params,
            R=R[: n_max + 1],
            R_next=float(R[n_max + 1]),
            method=TrajectoryMethod.FORWARD,
        )

    logger.warning(
        f"Forward recursion for {params} left the admissible range at n={blowup_index}."
    )
    last = blowup_index - 1
    return Trajectory(
        params=params,
        R=R[: last + 1].copy(),
        R_next=float("nan"),
        method=TrajectoryMethod.FORWARD,
        converged=False,
        blowup_index=blowup_index,
    )


def fixed_points(params: ModelParams, lambda_: float) -> FixedPoints:
    """
    Constant solutions of the string equation with n/N frozen at lambda_.

    Below lambda_c (t < 0) the trajectory alternates between two branches R and L with
    R + L = -t/g and R L = lambda_/g. Otherwise it settles on the positive root of
    3 g R^2 + t R = lambda_.
    """
    t, g = params.t, params.g
    if lambda_ < 0:
        raise DomainError(f"lambda must be non-negative, got {lambda_}.")
    lambda_c = derive_constants(params).lambda_c
    if t < 0 and lambda_ < lambda_c:
        root = math.sqrt(t**2 - 4 * g * lambda_)
        return FixedPoints(
            lambda_=lambda_,
            branch_R=(-t + root) / (2 * g),
            branch_L=(-t - root) / (2 * g),
        )
    value = (-t + math.sqrt(t**2 + 12 * g * lambda_)) / (6 * g)
    return FixedPoints(lambda_=lambda_, branch_R=value, branch_L=value)


def ansatz_R(params: ModelParams, n: int, hm: HMGrid) -> float:
    """
    The double scaling ansatz

        R_n^0 = |t|/(2g) + N^{-1/3} c_1 (-1)^{n+1} u(y) + N^{-2/3} c_2 v(y),

    with y = c_0^{-1} N^{2/3} (n/N - lambda_c).

    Raises:
        ExtrapolationError, if y lies outside the grid.
    """
    constants = derive_constants(params)
    N = params.N
    y = scaling_variable(params, n)
    sign = 1 if n % 2 else -1
    return (
        abs(params.t) / (2 * params.g)
        + N ** (-1 / 3) * constants.c_1 * sign * hm.u_at(y)
        + N ** (-2 / 3) * constants.c_2 * hm.v_at(y)
    )


def scaling_variable(params: ModelParams, n: float) -> float:
    constants = derive_constants(params)
    return (n / params.N - constants.lambda_c) * params.N ** (2 / 3) / constants.c_0


def string_residuals(trajectory: Trajectory) -> NDArray[np.float64]:
    """
    Pointwise residuals R_n (t + g R_{n-1} + g R_n + g R_{n+1}) - n/N for n = 0..n_max.

    Entry 0 is zero by convention. The last entry uses trajectory.R_next and is NaN when
    that is unknown.
    """
    params = trajectory.params
    R = np.append(trajectory.R, trajectory.R_next)
    n = np.arange(1, len(trajectory.R))
    residuals = np.zeros(len(trajectory.R))
    residuals[1:] = (
        R[n] * (params.t + params.g * (R[n - 1] + R[n] + R[n + 1])) - n / params.N
    )
    return residuals


def string_residual(trajectory: Trajectory) -> float:
    """
    Max-norm of the string equation residual over the indices where it can be evaluated.
    """
    residuals = string_residuals(trajectory)
    finite = residuals[np.isfinite(residuals)]
    return float(np.max(np.abs(finite))) if len(finite) else 0.0


def variational_functional(params: ModelParams, R: NDArray[np.float64], R_next: float) -> float:
    """
    F = sum_{n=1}^{M} [t R_n + g/2 R_n^2 + g R_n R_{n+1} - (n/N) ln R_n].

    R holds R_0..R_M (R_0 = 0); R_next is the fixed value R_{M+1}.
    """
    t, g, N = params.t, params.g, params.N
    extended = np.append(R, R_next)
    n = np.arange(1, len(R))
    Rn = extended[n]
    return float(
        np.sum(t * Rn + g / 2 * Rn**2 + g * Rn * extended[n + 1] - (n / N) * np.log(Rn))
    )


def variational_gradient(
    params: ModelParams, R: NDArray[np.float64], R_next: float
) -> NDArray[np.float64]:
    """
    Partial derivatives of variational_functional with respect to R_1..R_M.

    A zero gradient, multiplied by R_n, is the string equation.
    """
    t, g, N = params.t, params.g, params.N
    extended = np.append(R, R_next)
    n = np.arange(1, len(R))
    return t + g * (extended[n - 1] + extended[n] + extended[n + 1]) - (n / N) / extended[n]


def variational_solve(
    params: ModelParams,
    n_max: int,
    init: Trajectory | None = None,
    tol: float = 1e-12,
) -> Trajectory:
    """
    Find the trajectory as a stationary point of the variational functional.

    The unknowns are R_1..R_M with M = n_max + VARIATIONAL_PADDING, closed by fixing R_{M+1}
    to boundary_closure(params, M + 1). The closure error decays back from M, so the padding
    keeps it away from the returned R_0..R_n_max; with zero padding the closure sits at
    n_max + 1. Damped Newton steps on the (tridiagonal) gradient system keep every R_n
    inside the admissible range; if the line search stalls, a steepest descent step on
    |gradient|^2 / 2 is taken instead.

    Returns the best iterate with converged=False if max_n |string residual| > tol after
    MAX_NEWTON_ITERATIONS.
    """
    if n_max < 1:
        raise DomainError(f"n_max must be at least 1, got {n_max}.")
    if tol <= 0:
        raise DomainError(f"tol must be positive, got {tol}.")

    M = n_max + settings.VARIATIONAL_PADDING
    guess = _branch_guess(params, M + 1)
    if init is not None:
        _check_admissible(init)
        count = min(init.n_max, M)
        guess[1 : count + 1] = init.R[1 : count + 1]
    R = guess[: M + 1].copy()
    R_next = boundary_closure(params, M + 1, guess)
    bound = upper_bound(params, np.arange(1, M + 1))

    with settings.TIMER as timer:
        R, iterations, residual = _damped_newton(params, R, R_next, bound, tol)

    converged = residual <= tol
    if converged:
        logger.info(
            f"Variational solve for {params} converged in {iterations} iterations "
            f"(residual {residual:.2e}, {timer.duration_in_s:.2f}s)."
        )
    else:
        logger.warning(
            f"Variational solve for {params} stopped after {iterations} iterations "
            f"with residual {residual:.2e}; returning best iterate."
        )
    return Trajectory(
        params=params,
        R=R[: n_max + 1].copy(),
        R_next=float(R[n_max + 1]) if n_max < M else R_next,
        method=TrajectoryMethod.VARIATIONAL,
        converged=converged,
        residual=residual,
        iterations=iterations,
    )


def quadrature_oracle_trajectory(params: ModelParams, n_max: int) -> Trajectory:
    """
    The trajectory computed independently of the string equation, from the discretized
    Stieltjes procedure.
    """
    from quarticlab.application import orthopoly

    recurrence = orthopoly.stieltjes_recurrence(params, n_max + 1)
    trajectory = Trajectory(
        params=params,
        R=recurrence.R[: n_max + 1].copy(),
        R_next=float(recurrence.R[n_max + 1]),
        method=TrajectoryMethod.QUADRATURE_ORACLE,
    )
    return dataclasses.replace(trajectory, residual=string_residual(trajectory))


def boundary_closure(
    params: ModelParams, index: int, guess: NDArray[np.float64] | None = None
) -> float:
    """
    The value R_index is fixed to when the variational problem is closed at index.

    At or above lambda_c (and for t >= 0) this is the one-cut fixed point at index/N. Below
    lambda_c there is no single fixed point to relax to, and the value is the one of the two
    interleaved branches that the parity of index takes. guess, when given, must be the
    branch interleaving of _branch_guess up to at least index.
    """
    if index < 1:
        raise DomainError(f"The closure index must be at least 1, got {index}.")
    lambda_ = index / params.N
    points = fixed_points(params, lambda_)
    if not points.is_split:
        return points.branch_R
    if guess is None:
        guess = _branch_guess(params, index)
    return float(guess[index])


def _branch_guess(params: ModelParams, size: int) -> NDArray[np.float64]:
    """
    Fixed point values for n = 0..size, interleaving the two branches below lambda_c.

    The parity that takes the upper branch is the one that puts R_1 closest to initial_R1.
    """
    N = params.N
    R = np.zeros(size + 1)
    upper = np.zeros(size + 1)
    lower = np.zeros(size + 1)
    for n in range(1, size + 1):
        points = fixed_points(params, n / N)
        upper[n], lower[n] = points.branch_R, points.branch_L

    R_1 = initial_R1(params)
    odd_takes_upper = abs(R_1 - upper[1]) <= abs(R_1 - lower[1])
    for n in range(1, size + 1):
        takes_upper = (n % 2 == 1) == odd_takes_upper
        R[n] = upper[n] if takes_upper else lower[n]

    bound = upper_bound(params, np.arange(size + 1))
    R[1:] = np.minimum(R[1:], (1 - 1e-6) * bound[1:])
    return R


def _check_admissible(trajectory: Trajectory) -> None:
    n = np.arange(1, trajectory.n_max + 1)
    values = trajectory.R[1:]
    if np.any(values <= 0) or np.any(values >= upper_bound(trajectory.params, n)):
        raise DomainError("Initial trajectory does not satisfy 0 < R_n < bound strictly.")


def _damped_newton(
    params: ModelParams,
    R: NDArray[np.float64],
    R_next: float,
    bound: NDArray[np.float64],
    tol: float,
) -> tuple[NDArray[np.float64], int, float]:
    g, N = params.g, params.N
    n = np.arange(1, len(R))

    def scaled_residual(values: NDArray[np.float64]) -> float:
        gradient = variational_gradient(params, values, R_next)
        return float(np.max(np.abs(values[1:] * gradient)))

    def merit(values: NDArray[np.float64]) -> float:
        gradient = variational_gradient(params, values, R_next)
        return 0.5 * float(gradient @ gradient)

    def feasible(values: NDArray[np.float64]) -> bool:
        return bool(np.all(values[1:] > 0) and np.all(values[1:] < bound))

    best_R, best_residual = R.copy(), scaled_residual(R)
    iterations = 0
    for iterations in range(1, settings.MAX_NEWTON_ITERATIONS + 1):
        gradient = variational_gradient(params, R, R_next)
        banded = np.zeros((3, len(n)))
        banded[0, 1:] = g
        banded[1, :] = g + (n / N) / R[1:] ** 2
        banded[2, :-1] = g

        try:
            step = linalg.solve_banded((1, 1), banded, -gradient)
        except (linalg.LinAlgError, ValueError):
            step = None

        current = merit(R)
        accepted = step is not None and _line_search(R, step, current, merit, feasible)
        if not accepted:
            # Descent direction for |gradient|^2 / 2; the Jacobian is symmetric.
            descent = -_tridiagonal_product(banded, gradient)
            logger.debug(f"Newton step rejected at iteration {iterations}; descending.")
            if not _line_search(R, descent, current, merit, feasible):
                break

        residual = scaled_residual(R)
        logger.debug(f"Iteration {iterations}: string residual {residual:.3e}.")
        if residual < best_residual:
            best_R, best_residual = R.copy(), residual
        if residual <= tol:
            break

    return best_R, iterations, best_residual


def _line_search(R, direction, current, merit, feasible) -> bool:
    """
    Backtrack along direction until the point is admissible and the merit decreases.

    R is updated in place when a step is accepted.
    """
    step_length = 1.0
    while step_length >= _LINE_SEARCH_MIN_STEP:
        candidate = R.copy()
        candidate[1:] += step_length * direction
        if feasible(candidate) and merit(candidate) < current:
            R[:] = candidate
            return True
        step_length /= 2
    return False


def _tridiagonal_product(banded: NDArray[np.float64], vector: NDArray[np.float64]):
    product = banded[1] * vector
    product[:-1] += banded[0, 1:] * vector[1:]
    product[1:] += banded[2, :-1] * vector[:-1]
    return product
