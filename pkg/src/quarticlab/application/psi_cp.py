"""
The critical-point solution Phi(z; y) of the model linear system

    dPhi/dz = A(z) Phi,    dPhi/dy = B(z) Phi,

    A(z) = [[ e 4uz,               4z^2 + e 2w + v],
            [-4z^2 + e 2w - v,    -e 4uz          ]],
    B(z) = [[ e u,  z  ],
            [-z,   -e u]],

where e = (-1)^n, u is the Hastings-McLeod solution at y, w = u'(y) and v = y + 2u^2.
Phi is the real solution with

    Phi^1(z) = cos(4z^3/3 + yz - pi n/2) + O(1/z),    Phi^2(z) = -sin(...) + O(1/z)

as z -> +-inf on the real axis. It is found by integrating inward from z = +-Z_far, where
the asymptotic series is imposed, and the critical kernel is built from it.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import integrate, interpolate

from quarticlab.application.config import settings
from quarticlab.application.painleve2 import HMGrid
from quarticlab.exceptions import ConvergenceError, DomainError

logger = logging.getLogger(__name__)

_MISMATCH_FLAG = 0.05
_CONFLUENT_THRESHOLD = 1e-6
_MAX_SERIES_TERMS = 8
_RTOL = 1e-12
_ATOL = 1e-12
_G = np.array([[1, -1j], [-1j, 1]])


@dataclass(frozen=True, eq=False)
class PhiSolution:
    """
    Phi^1, Phi^2 and their z-derivatives on a grid symmetric about 0.

    Values for z < 0 come from the integration started at -Z_far, values for z > 0 from the
    one started at +Z_far; mismatch is the max-norm gap between the two at z = 0.
    """

    y: float
    n_parity: int
    z_grid: NDArray[np.float64]
    phi1: NDArray[np.float64]
    phi2: NDArray[np.float64]
    dphi1: NDArray[np.float64]
    dphi2: NDArray[np.float64]
    mismatch: float
    u: float
    up: float
    v: float
    phase_offset: float = 0.0
    flagged: bool = False

    @property
    def Z_far(self) -> float:
        return float(self.z_grid[-1])

    @property
    def parity_sign(self) -> int:
        return 1 if self.n_parity % 2 == 0 else -1

    def coefficients(self, z: ArrayLike):
        """
        The entries (a11, a12, a21) of A(z); a22 = -a11.
        """
        return _coefficients(self.u, self.up, self.v, self.parity_sign, np.asarray(z))

    def evaluate(self, z: ArrayLike) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
        """
        (Phi^1(z), Phi^2(z)) by cubic Hermite interpolation on the grid.

        Raises:
            DomainError, if z lies outside the grid.
        """
        z_arr = self._check_inside(z)
        return self._phi1_spline(z_arr), self._phi2_spline(z_arr)

    def derivative(self, z: ArrayLike) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
        phi1, phi2 = self.evaluate(z)
        a11, a12, a21 = self.coefficients(z)
        return a11 * phi1 + a12 * phi2, a21 * phi1 - a11 * phi2

    def _check_inside(self, z: ArrayLike) -> NDArray[np.float64]:
        z_arr = np.asarray(z, dtype=float)
        if np.any(np.abs(z_arr) > self.Z_far):
            raise DomainError(f"z={z} lies outside the grid [-{self.Z_far}, {self.Z_far}].")
        return z_arr

    @cached_property
    def _phi1_spline(self) -> interpolate.CubicHermiteSpline:
        return interpolate.CubicHermiteSpline(self.z_grid, self.phi1, self.dphi1)

    @cached_property
    def _phi2_spline(self) -> interpolate.CubicHermiteSpline:
        return interpolate.CubicHermiteSpline(self.z_grid, self.phi2, self.dphi2)


def _coefficients(u: float, up: float, v: float, sign: int, z):
    a11 = 4 * sign * u * z
    a12 = 4 * z**2 + 2 * sign * up + v
    a21 = -4 * z**2 + 2 * sign * up - v
    return a11, a12, a21


def system_matrix(hm: HMGrid, y: float, n_parity: int, z: float) -> NDArray[np.float64]:
    """
    A(z) at (y, n).
    """
    sign = _parity_sign(n_parity)
    a11, a12, a21 = _coefficients(hm.u_at(y), hm.up_at(y), hm.v_at(y), sign, z)
    return np.array([[a11, a12], [a21, -a11]])


def deformation_matrix(hm: HMGrid, y: float, n_parity: int, z: float) -> NDArray[np.float64]:
    """
    B(z) at (y, n), the generator of the y-evolution.
    """
    sign = _parity_sign(n_parity)
    u = hm.u_at(y)
    return np.array([[sign * u, z], [-z, -sign * u]])


def _parity_sign(n_parity: int) -> int:
    if n_parity not in (0, 1, 2, 3):
        raise DomainError(f"n_parity must be one of 0, 1, 2, 3, got {n_parity}.")
    return 1 if n_parity % 2 == 0 else -1


# Asymptotic initial data
# -----------------------


def asymptotic_series(
    u: float, up: float, v: float, y: float, sign: int, terms: int
) -> NDArray[np.complex128]:
    """
    Coefficients c_0..c_{terms-1} of the formal solution

        Phi(z) = G (sum_k c_k z^{-k}) e^{-i(4z^3/3 + yz)},    G = [[1, -i], [-i, 1]],

    with c_0 = (1, 0). Writing c_k = (a_k, b_k), the coefficients follow from

        b_k = i (4 i e u a_{k-1} + 2 e w a_{k-2} + i (v + y) b_{k-2} + (k - 3) b_{k-3}) / 8,
        k a_k = -(i w^2 / 2) a_{k-1} + (e w (v + y) / 4) b_{k-1} - (i e w (k - 2) / 4) b_{k-2}
                - (i e u (v + y) / 2) b_k - ((k - 1) e u / 2) b_{k-1}.
    """
    w = up
    s = v + y
    a = np.zeros(terms + 1, dtype=complex)
    b = np.zeros(terms + 1, dtype=complex)
    a[0] = 1.0

    def at(values, k):
        return values[k] if k >= 0 else 0.0

    for k in range(1, terms):
        b[k] = (
            1j
            * (
                4j * sign * u * at(a, k - 1)
                + 2 * sign * w * at(a, k - 2)
                + 1j * s * at(b, k - 2)
                + (k - 3) * at(b, k - 3)
            )
            / 8
        )
        a[k] = (
            -(1j * w**2 / 2) * at(a, k - 1)
            + (sign * w * s / 4) * at(b, k - 1)
            - (1j * sign * w * (k - 2) / 4) * at(b, k - 2)
            - (1j * sign * u * s / 2) * b[k]
            - ((k - 1) * sign * u / 2) * at(b, k - 1)
        ) / k
    return np.stack([a[:terms], b[:terms]], axis=1)


def asymptotic_value(
    u: float,
    up: float,
    v: float,
    y: float,
    n_parity: int,
    z: float,
    phase_offset: float = 0.0,
    higher_order: bool = True,
) -> NDArray[np.float64]:
    """
    The real-axis asymptotics of Phi at a point z of large modulus.

    With higher_order, the series is summed up to its smallest term; otherwise only the
    leading (cos, -sin) pair is returned.
    """
    sign = _parity_sign(n_parity)
    phase = 4 * z**3 / 3 + y * z - math.pi * n_parity / 2 + phase_offset
    if not higher_order:
        return np.array([math.cos(phase), -math.sin(phase)])

    coefficients = asymptotic_series(u, up, v, y, sign, _MAX_SERIES_TERMS)
    total = np.zeros(2, dtype=complex)
    smallest = math.inf
    for k, coefficient in enumerate(coefficients):
        term = coefficient / z**k
        size = float(np.max(np.abs(term)))
        if k > 1 and size > smallest:
            break
        total += term
        smallest = min(smallest, size)
    return (_G @ total * np.exp(-1j * phase)).real


# Solver
# ------


def minimum_steps(y: float, Z_far: float) -> int:
    """
    The number of grid intervals per half line that resolves the fastest oscillation,
    with spacing at most 2 pi / (40 (4 Z_far^2 + |y|)).
    """
    spacing = 2 * math.pi / (40 * (4 * Z_far**2 + abs(y)))
    return math.ceil(Z_far / spacing)


def solve_phi(
    hm: HMGrid,
    y: float,
    n_parity: int,
    Z_far: float = 12.0,
    steps: int | None = None,
    phase_offset: float = 0.0,
    higher_order: bool | None = None,
) -> PhiSolution:
    """
    Integrate the z-equation inward from z = +Z_far and z = -Z_far to 0.

    Args:
        steps:         grid intervals per half line; defaults to the minimum_steps value.
        phase_offset:  shifts the phase of the asymptotics, phase_offset = pi/2 gives a
                       second, independent real solution of the same system.
        higher_order:  impose the asymptotic series rather than its leading term.
                       Defaults to settings.PHI_HIGHER_ORDER_INIT.

    Raises:
        DomainError, if Z_far < 8, steps does not resolve the oscillation or n_parity is
                     not in 0..3.
        ExtrapolationError, if y lies outside the Hastings-McLeod grid.
        ConvergenceError, if the integrator fails.
    """
    sign = _parity_sign(n_parity)
    if Z_far < 8:
        raise DomainError(f"Z_far must be at least 8, got {Z_far}.")
    required = minimum_steps(y, Z_far)
    if steps is None:
        steps = required
    elif steps < required:
        raise DomainError(f"{steps} steps do not resolve the oscillation; need {required}.")
    if higher_order is None:
        higher_order = settings.PHI_HIGHER_ORDER_INIT

    u, up, v = hm.u_at(y), hm.up_at(y), hm.v_at(y)

    def rhs(z, phi):
        a11, a12, a21 = _coefficients(u, up, v, sign, z)
        return np.array([a11 * phi[0] + a12 * phi[1], a21 * phi[0] - a11 * phi[1]])

    z_half = np.linspace(0.0, Z_far, steps + 1)
    with settings.TIMER as timer:
        halves = []
        for end in (Z_far, -Z_far):
            start = asymptotic_value(u, up, v, y, n_parity, end, phase_offset, higher_order)
            points = np.sign(end) * z_half[::-1]
            solution = integrate.solve_ivp(
                rhs,
                (end, 0.0),
                start,
                method="DOP853",
                t_eval=points,
                rtol=_RTOL,
                atol=_ATOL,
            )
            if not solution.success:
                raise ConvergenceError(f"Phi integration from z={end}", solution.nfev, math.nan)
            halves.append(solution.y)

    right = halves[0][:, ::-1]
    left = halves[1]
    mismatch = float(np.max(np.abs(right[:, 0] - left[:, -1])))
    z_grid = np.concatenate([-z_half[::-1], z_half[1:]])
    phi = np.concatenate([left, right[:, 1:]], axis=1)
    a11, a12, a21 = _coefficients(u, up, v, sign, z_grid)
    dphi1 = a11 * phi[0] + a12 * phi[1]
    dphi2 = a21 * phi[0] - a11 * phi[1]

    flagged = mismatch > _MISMATCH_FLAG
    if flagged:
        logger.warning(
            f"Phi at y={y}, n={n_parity}: mismatch {mismatch:.2e} at z=0; increase Z_far "
            "or steps."
        )
    logger.info(
        f"Phi at y={y}, n={n_parity} on [-{Z_far}, {Z_far}] with {steps} steps per side: "
        f"mismatch {mismatch:.2e} ({timer.duration_in_s:.2f}s)."
    )
    return PhiSolution(
        y=y,
        n_parity=n_parity,
        z_grid=z_grid,
        phi1=phi[0],
        phi2=phi[1],
        dphi1=dphi1,
        dphi2=dphi2,
        mismatch=mismatch,
        u=u,
        up=up,
        v=v,
        phase_offset=phase_offset,
        flagged=flagged,
    )


# Checks on a solution
# --------------------


def parity_defect(phi: PhiSolution) -> float:
    """
    max_z |Phi(-z) - (-1)^n sigma_3 Phi(z)| over the grid.
    """
    sign = phi.parity_sign
    reflected1 = phi.phi1[::-1]
    reflected2 = phi.phi2[::-1]
    return float(
        max(
            np.max(np.abs(reflected1 - sign * phi.phi1)),
            np.max(np.abs(reflected2 + sign * phi.phi2)),
        )
    )


def wronskian(first: PhiSolution, second: PhiSolution) -> NDArray[np.float64]:
    """
    first^1 second^2 - first^2 second^1 on the common grid.
    """
    if len(first.z_grid) != len(second.z_grid) or first.Z_far != second.Z_far:
        raise DomainError("Wronskians need two solutions on the same grid.")
    return first.phi1 * second.phi2 - first.phi2 * second.phi1


def deformation_defect(
    hm: HMGrid,
    y: float,
    n_parity: int,
    z: ArrayLike,
    h: float = 1e-3,
    Z_far: float = 12.0,
) -> float:
    """
    max |(Phi(z; y + h) - Phi(z; y - h)) / 2h - B(z) Phi(z; y)| over the points z.
    """
    steps = minimum_steps(abs(y) + h, Z_far)
    above = solve_phi(hm, y + h, n_parity, Z_far, steps)
    below = solve_phi(hm, y - h, n_parity, Z_far, steps)
    middle = solve_phi(hm, y, n_parity, Z_far, steps)
    z_arr = np.atleast_1d(np.asarray(z, dtype=float))
    upper1, upper2 = above.evaluate(z_arr)
    lower1, lower2 = below.evaluate(z_arr)
    phi1, phi2 = middle.evaluate(z_arr)
    sign = middle.parity_sign
    b_phi1 = sign * middle.u * phi1 + z_arr * phi2
    b_phi2 = -z_arr * phi1 - sign * middle.u * phi2
    return float(
        max(
            np.max(np.abs((upper1 - lower1) / (2 * h) - b_phi1)),
            np.max(np.abs((upper2 - lower2) / (2 * h) - b_phi2)),
        )
    )


# Critical kernel
# ---------------


def critical_kernel(phi: PhiSolution, u: ArrayLike, v: ArrayLike):
    """
    Q_c(u, v; y) = (Phi^1(u) Phi^2(v) - Phi^1(v) Phi^2(u)) / (pi (u - v)).

    For |u - v| < 1e-6 the diagonal limit (Phi^1' Phi^2 - Phi^2' Phi^1) / pi is used, with
    the derivatives taken from the equation. Broadcasts over u and v.
    """
    u_arr, v_arr = np.broadcast_arrays(np.asarray(u, dtype=float), np.asarray(v, dtype=float))
    phi1_u, phi2_u = phi.evaluate(u_arr)
    phi1_v, phi2_v = phi.evaluate(v_arr)
    difference = u_arr - v_arr
    confluent = np.abs(difference) < _CONFLUENT_THRESHOLD
    safe_difference = np.where(confluent, 1.0, difference)
    off_diagonal = (phi1_u * phi2_v - phi1_v * phi2_u) / (math.pi * safe_difference)
    a11, a12, a21 = phi.coefficients(u_arr)
    diagonal = (a12 * phi2_u**2 - a21 * phi1_u**2 + 2 * a11 * phi1_u * phi2_u) / math.pi
    values = np.where(confluent, diagonal, off_diagonal)
    return float(values) if values.ndim == 0 else values


# Asymptotic defect
# -----------------


def phi_asymptotic_defect(phi: PhiSolution, z: ArrayLike):
    """
    |Phi^1 - cos(4z^3/3 + yz - pi n/2)| + |Phi^2 + sin(...)|, for |z| >= 3.
    """
    z_arr = np.asarray(z, dtype=float)
    if np.any(np.abs(z_arr) < 3):
        raise DomainError(f"The asymptotic defect is only defined for |z| >= 3, got {z}.")
    phi1, phi2 = phi.evaluate(z_arr)
    phase = 4 * z_arr**3 / 3 + phi.y * z_arr - math.pi * phi.n_parity / 2 + phi.phase_offset
    values = np.abs(phi1 - np.cos(phase)) + np.abs(phi2 + np.sin(phase))
    return float(values) if values.ndim == 0 else values


def defect_decay_fit(
    phi: PhiSolution, z_min: float = 4.0, z_max: float | None = None, windows: int = 8
) -> tuple[float, float]:
    """
    Fit the envelope of the asymptotic defect on [z_min, z_max] by c z^slope.

    The envelope is the maximum of the defect over each of `windows` logarithmically spaced
    windows, which removes the oscillation.

    Returns:
        (slope, c).
    """
    if z_max is None:
        z_max = 0.75 * phi.Z_far
    edges = np.geomspace(z_min, z_max, windows + 1)
    centres = []
    envelope = []
    for low, high in zip(edges[:-1], edges[1:]):
        samples = np.linspace(low, high, 2000)
        centres.append(math.sqrt(low * high))
        envelope.append(float(np.max(phi_asymptotic_defect(phi, samples))))
    slope, intercept = np.polyfit(np.log(centres), np.log(envelope), 1)
    return float(slope), float(math.exp(intercept))
