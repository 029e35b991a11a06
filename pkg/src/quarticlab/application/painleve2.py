"""
Airy functions and the Hastings-McLeod solution of Painleve II,

    u''(y) = y u(y) + 2 u(y)^3,    u ~ Ai(y) as y -> +inf,    u ~ sqrt(-y/2) as y -> -inf,

with the quantities built from it:

    v = y + 2 u^2,    D = int_y^inf u^2 = u'^2 - u^4 - y u^2,    q = (v^2 - 4 u'^2) / 16.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import interpolate, linalg, optimize, special

from quarticlab.application.config import settings
from quarticlab.domain.valueobjects import TurningPoints
from quarticlab.exceptions import (
    ConvergenceError,
    DomainError,
    ExtrapolationError,
    NoSignChangeError,
)

logger = logging.getLogger(__name__)

_MAX_ITERATIONS = 50
_CONTINUATION_STEPS = 10


# Airy functions
# --------------


def airy(z):
    """
    (Ai(z), Ai'(z)) for real or complex (array) z.
    """
    ai, aip, _, _ = special.airy(z)
    return ai, aip


def _airy_coefficients(terms: int) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """
    The coefficients u_k, v_k of the large-argument Airy expansions.
    """
    k = np.arange(terms)
    log_u = (
        special.gammaln(3 * k + 0.5)
        - k * math.log(54)
        - special.gammaln(k + 1)
        - special.gammaln(k + 0.5)
    )
    u = np.exp(log_u)
    v = -(6 * k + 1) / (6 * k - 1) * u
    return u, v


def airy_asymptotic_decaying(z, terms: int = 8):
    """
    (Ai(z), Ai'(z)) from the exponentially decaying expansion, valid for |arg z| < pi.

        Ai(z)  ~  e^{-zeta} / (2 sqrt(pi) z^{1/4}) sum_k (-1)^k u_k / zeta^k,
        Ai'(z) ~ -z^{1/4} e^{-zeta} / (2 sqrt(pi)) sum_k (-1)^k v_k / zeta^k,

    with zeta = (2/3) z^{3/2}.
    """
    z = np.asarray(z, dtype=complex)
    zeta = 2 / 3 * z**1.5
    u, v = _airy_coefficients(terms)
    powers = (-1.0 / zeta[..., None]) ** np.arange(terms)
    series_u = np.sum(u * powers, axis=-1)
    series_v = np.sum(v * powers, axis=-1)
    prefactor = np.exp(-zeta) / (2 * math.sqrt(math.pi))
    return _real_if_real(z, prefactor / z**0.25 * series_u), _real_if_real(
        z, -prefactor * z**0.25 * series_v
    )


def airy_asymptotic_oscillatory(x, terms: int = 8):
    """
    (Ai(-x), Ai'(-x)) for large positive x, from the cosine form of the expansion.

        Ai(-x) ~ (cos(zeta - pi/4) S_even + sin(zeta - pi/4) S_odd) / (sqrt(pi) x^{1/4})
    """
    x = np.asarray(x, dtype=float)
    zeta = 2 / 3 * x**1.5
    u, v = _airy_coefficients(2 * terms)
    k = np.arange(terms)
    even_powers = (-1.0) ** k / zeta[..., None] ** (2 * k)
    odd_powers = (-1.0) ** k / zeta[..., None] ** (2 * k + 1)
    phase = zeta - math.pi / 4
    ai = (
        np.cos(phase) * np.sum(u[0::2] * even_powers, axis=-1)
        + np.sin(phase) * np.sum(u[1::2] * odd_powers, axis=-1)
    ) / (math.sqrt(math.pi) * x**0.25)
    aip = (
        np.sin(phase) * np.sum(v[0::2] * even_powers, axis=-1)
        - np.cos(phase) * np.sum(v[1::2] * odd_powers, axis=-1)
    ) * x**0.25 / math.sqrt(math.pi)
    return ai, aip


def _real_if_real(z: NDArray[np.complex128], values: NDArray[np.complex128]):
    if np.all(z.imag == 0) and np.all(z.real > 0):
        values = values.real
    return values[()] if np.ndim(values) == 0 else values


def airy_kernel_tail(y: float) -> float:
    """
    int_y^inf Ai(x)^2 dx = Ai'(y)^2 - y Ai(y)^2.
    """
    ai, aip = airy(y)
    return float(aip**2 - y * ai**2)


# Hastings-McLeod grid
# --------------------


@dataclass(frozen=True, eq=False)
class HMGrid:
    """
    The Hastings-McLeod solution tabulated on a uniform grid.

    Values between nodes come from cubic Hermite interpolation with exact derivatives:
    u'' from the equation, v' = 1 + 4 u u', D' = -u^2 and q' = v/8.
    """

    y: NDArray[np.float64]
    u: NDArray[np.float64]
    up: NDArray[np.float64]
    v: NDArray[np.float64]
    D: NDArray[np.float64]
    q: NDArray[np.float64]
    # Size of the neglected term of the left boundary expansion.
    boundary_error: float = 0.0
    residual: float = 0.0
    iterations: int = 0

    @property
    def y_min(self) -> float:
        return float(self.y[0])

    @property
    def y_max(self) -> float:
        return float(self.y[-1])

    @property
    def mesh(self) -> int:
        return len(self.y) - 1

    def covers(self, y: ArrayLike) -> bool:
        values = np.asarray(y, dtype=float)
        slack = 1e-12 * max(1.0, abs(self.y_min), abs(self.y_max))
        return bool(np.all(values >= self.y_min - slack) and np.all(values <= self.y_max + slack))

    def u_at(self, y: ArrayLike):
        return self._evaluate(self._u_spline, y)

    def up_at(self, y: ArrayLike):
        return self._evaluate(self._up_spline, y)

    def v_at(self, y: ArrayLike):
        return self._evaluate(self._v_spline, y)

    def D_at(self, y: ArrayLike):
        return self._evaluate(self._D_spline, y)

    def q_at(self, y: ArrayLike):
        return self._evaluate(self._q_spline, y)

    def _evaluate(self, spline: interpolate.CubicHermiteSpline, y: ArrayLike):
        if not self.covers(y):
            raise ExtrapolationError(
                f"y={y} lies outside the Hastings-McLeod grid [{self.y_min}, {self.y_max}]."
            )
        values = spline(np.clip(np.asarray(y, dtype=float), self.y_min, self.y_max))
        return float(values) if np.ndim(values) == 0 else values

    @cached_property
    def _u_spline(self) -> interpolate.CubicHermiteSpline:
        return interpolate.CubicHermiteSpline(self.y, self.u, self.up)

    @cached_property
    def _up_spline(self) -> interpolate.CubicHermiteSpline:
        return interpolate.CubicHermiteSpline(self.y, self.up, self.y * self.u + 2 * self.u**3)

    @cached_property
    def _v_spline(self) -> interpolate.CubicHermiteSpline:
        return interpolate.CubicHermiteSpline(self.y, self.v, 1 + 4 * self.u * self.up)

    @cached_property
    def _D_spline(self) -> interpolate.CubicHermiteSpline:
        return interpolate.CubicHermiteSpline(self.y, self.D, -self.u**2)

    @cached_property
    def _q_spline(self) -> interpolate.CubicHermiteSpline:
        return interpolate.CubicHermiteSpline(self.y, self.q, self.v / 8)


def left_boundary_value(y: float) -> float:
    """
    Two terms of the expansion u(y) = sqrt(-y/2) (1 + 1/(8 y^3) + O(y^-6)) as y -> -inf.
    """
    return math.sqrt(-y / 2) * (1 + 1 / (8 * y**3))


def solve_hastings_mcleod(
    y_min: float = -12.0,
    y_max: float = 8.0,
    mesh: int = 2000,
    tol: float = 1e-12,
    richardson: bool | None = None,
) -> HMGrid:
    """
    Solve the Hastings-McLeod boundary value problem on [y_min, y_max].

    The equation is discretized with the fourth order Numerov scheme on a uniform mesh,
    with u(y_max) = Ai(y_max) and the two-term expansion at y_min, and solved by Newton's
    method until the step is at most tol. If Newton fails from the default initial guess,
    it is retried by continuation in the left boundary value, starting from the nearly
    linear (Airy) problem.

    Args:
        richardson: also solve on the doubled mesh and combine the two by Richardson
                    extrapolation. Defaults to settings.HM_RICHARDSON.

    Raises:
        DomainError, if the interval or mesh is too small.
        ConvergenceError, if Newton fails even with continuation.
    """
    if y_min > -8 or y_max < 6:
        raise DomainError(f"The grid must cover [-8, 6], got [{y_min}, {y_max}].")
    if mesh < 400:
        raise DomainError(f"mesh must be at least 400, got {mesh}.")
    if richardson is None:
        richardson = settings.HM_RICHARDSON

    with settings.TIMER as timer:
        y, u, iterations, residual = _solve_numerov(y_min, y_max, mesh, tol)
        up = _numerov_derivative(y, u)
        if richardson:
            y_fine, u_fine, _, _ = _solve_numerov(y_min, y_max, 2 * mesh, tol)
            up_fine = _numerov_derivative(y_fine, u_fine)
            u = u_fine[::2] + (u_fine[::2] - u) / 15
            up = up_fine[::2] + (up_fine[::2] - up) / 15

    logger.info(
        f"Hastings-McLeod solve on [{y_min}, {y_max}] with mesh {mesh}: {iterations} Newton "
        f"iterations, residual {residual:.2e} ({timer.duration_in_s:.2f}s)."
    )
    boundary_error = math.sqrt(-y_min / 2) * 73 / (128 * y_min**6)
    return _assemble_grid(y, u, up, boundary_error, residual, iterations)


def _assemble_grid(y, u, up, boundary_error, residual, iterations) -> HMGrid:
    v = y + 2 * u**2
    D = _tail_integral(y, u, up)
    q = (v**2 - 4 * up**2) / 16
    return HMGrid(
        y=y,
        u=u,
        up=up,
        v=v,
        D=D,
        q=q,
        boundary_error=boundary_error,
        residual=residual,
        iterations=iterations,
    )


def _nonlinearity(y, u, strength: float = 1.0):
    return y * u + 2 * strength * u**3


def _solve_numerov(
    y_min: float, y_max: float, mesh: int, tol: float
) -> tuple[NDArray[np.float64], NDArray[np.float64], int, float]:
    y = np.linspace(y_min, y_max, mesh + 1)
    left = left_boundary_value(y_min)
    right = float(airy(y_max)[0])
    guess = np.sqrt(np.maximum(-y / 2, 0) + airy(y)[0] ** 2)
    guess[0], guess[-1] = left, right

    try:
        u, iterations = _newton(y, guess, tol)
    except ConvergenceError as e:
        logger.warning(f"{e} Retrying by continuation in the boundary value.")
        u = guess * 0.1
        iterations = 0
        for scale in np.linspace(0.1, 1.0, _CONTINUATION_STEPS):
            u[0] = scale * left
            u[-1] = right
            u, steps = _newton(y, u, tol)
            iterations += steps
    return y, u, iterations, _numerov_residual(y, u)


def _numerov_defect(y: NDArray[np.float64], u: NDArray[np.float64]) -> NDArray[np.float64]:
    h = y[1] - y[0]
    f = _nonlinearity(y, u)
    return (u[2:] - 2 * u[1:-1] + u[:-2]) - h**2 / 12 * (f[2:] + 10 * f[1:-1] + f[:-2])


def _numerov_residual(y: NDArray[np.float64], u: NDArray[np.float64]) -> float:
    """
    max |u'' - y u - 2 u^3| over interior nodes, with u'' in the Numerov representation.
    """
    h = y[1] - y[0]
    return float(np.max(np.abs(_numerov_defect(y, u)))) / h**2


def _newton(
    y: NDArray[np.float64], u: NDArray[np.float64], tol: float
) -> tuple[NDArray[np.float64], int]:
    h = y[1] - y[0]
    u = u.copy()
    step_size = math.inf
    for iteration in range(1, _MAX_ITERATIONS + 1):
        defect = _numerov_defect(y, u)
        off = 1 - h**2 / 12 * (y + 6 * u**2)
        diagonal = -2 - 10 * h**2 / 12 * (y + 6 * u**2)
        banded = np.zeros((3, len(y) - 2))
        banded[0, 1:] = off[2:-1]
        banded[1, :] = diagonal[1:-1]
        banded[2, :-1] = off[1:-2]
        step = linalg.solve_banded((1, 1), banded, -defect)
        if not np.all(np.isfinite(step)):
            break
        u[1:-1] += step
        step_size = float(np.max(np.abs(step)))
        logger.debug(f"Newton iteration {iteration}: step {step_size:.3e}.")
        if step_size <= tol:
            return u, iteration
        if step_size > 1e3:
            break
    raise ConvergenceError("Hastings-McLeod Newton", iteration, step_size)


def _numerov_derivative(y: NDArray[np.float64], u: NDArray[np.float64]) -> NDArray[np.float64]:
    """
    u' at the nodes, fourth order inside and third order at the two ends.
    """
    h = y[1] - y[0]
    f = _nonlinearity(y, u)
    up = np.empty_like(u)
    up[1:-1] = (u[2:] - u[:-2]) / (2 * h) - h / 12 * (f[2:] - f[:-2])
    up[0] = (u[1] - u[0]) / h - h * (f[0] / 3 + f[1] / 6)
    up[-1] = (u[-1] - u[-2]) / h + h * (f[-1] / 3 + f[-2] / 6)
    return up


def _tail_integral(
    y: NDArray[np.float64], u: NDArray[np.float64], up: NDArray[np.float64]
) -> NDArray[np.float64]:
    """
    D(y) = int_y^inf u^2, accumulated backwards from the exact Airy tail beyond the grid.
    """
    h = y[1] - y[0]
    g = u**2
    dg = 2 * u * up
    # Trapezoid plus end correction, exact for cubics.
    pieces = h / 2 * (g[:-1] + g[1:]) + h**2 / 12 * (dg[:-1] - dg[1:])
    D = np.empty_like(y)
    D[-1] = airy_kernel_tail(float(y[-1]))
    D[:-1] = D[-1] + np.cumsum(pieces[::-1])[::-1]
    return D


# Turning points
# --------------


def turning_points(hm: HMGrid, y: float) -> TurningPoints:
    """
    The roots in s^2 of s^4 + (y/2) s^2 + q(y) = 0.

    The discriminant (y/2)^2 - 4q equals D(y), which is positive.
    """
    p = y / 2
    discriminant = p**2 - 4 * hm.q_at(y)
    root = math.sqrt(max(discriminant, 0.0))
    return TurningPoints(
        s1_sq=(-p - root) / 2,
        s2_sq=(-p + root) / 2,
        discriminant=discriminant,
    )


def find_y0(hm: HMGrid) -> float:
    """
    The positive zero y_0 of q.

    Raises:
        NoSignChangeError, if q does not change sign on the positive part of the grid.
    """
    positive = hm.y > 0
    y = hm.y[positive]
    q = hm.q[positive]
    changes = np.nonzero(np.sign(q[:-1]) * np.sign(q[1:]) < 0)[0]
    if len(changes) == 0:
        raise NoSignChangeError("q has no sign change on the positive part of the grid.")
    if len(changes) > 1:
        logger.warning(f"q changes sign {len(changes)} times for y > 0; using the first.")
    index = changes[0]
    return float(optimize.brentq(hm.q_at, y[index], y[index + 1], xtol=1e-13, rtol=1e-14))
