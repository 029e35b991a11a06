"""
Explicit asymptotic forms of psi_vec_n = (psi_n, psi_{n-1}) for n near lambda_c N.

All of them are built on the ansatz recurrence coefficients R_n^0 and on the function

    U^0(z) = g^2 z^4 (z^2 - z_0^2) / 4 - g (n/N - lambda_c) z^2
             + c_3 N^{-4/3} + c_4 N^{-5/3} + U^1(z) / N,

whose root z0N near z_0 is the turning point. Away from it psi_vec_n is of exponential
type outside the support and of cosine type inside, with an Airy function in between. Near
z = 0 it is given by the critical solution Phi, composed with the map zeta_0.
"""

from __future__ import annotations

import dataclasses
import enum
import logging
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from functools import cache, cached_property

import numpy as np
from numpy.polynomial import polynomial
from numpy.typing import ArrayLike, NDArray
from scipy import integrate, optimize, special

from quarticlab.application import orthopoly, psi_cp
from quarticlab.application.config import settings
from quarticlab.application.freud import ansatz_R, scaling_variable
from quarticlab.application.painleve2 import HMGrid, airy, solve_hastings_mcleod
from quarticlab.domain.model import derive_constants
from quarticlab.domain.valueobjects import DerivedConstants, ModelParams
from quarticlab.exceptions import ConvergenceError, DomainError, NoSignChangeError, RegionError

logger = logging.getLogger(__name__)

_NEWTON_ITERATIONS = 50
_QUAD_RTOL = 1e-12
_QUAD_LIMIT = 200
# Below this distance from z0N (in units of z_0) the turning point map uses its Taylor series.
_TP_SERIES_RADIUS = 1e-5
_CONTOUR_PANELS = 8
_CONTOUR_DOUBLINGS = 6
# Below this |z| / z_0 the zeta maps are summed as power series.
_MAP_SERIES_RADIUS = 0.25
_MAP_SERIES_TERMS = 40
_CHART_LIMIT = 0.1


# Ansatz
# ------


@dataclass(frozen=True)
class AnsatzFrame:
    """
    The double scaling ansatz around index n.

    R_prev0, R_n0 and R_next0 are R^0 at n - 1, n and n + 1, and
    theta_n0 = t + g R_n0 + g R_next0.
    """

    params: ModelParams
    n: int
    y: float
    R_prev0: float
    R_n0: float
    R_next0: float
    theta_n0: float
    u: float
    up: float
    v: float

    @property
    def sign(self) -> int:
        """
        (-1)^n.
        """
        return 1 if self.n % 2 == 0 else -1

    @property
    def c_5(self) -> float:
        """
        The leading coefficient of theta_n0 = N^{-2/3} c_5 + O(N^{-1}).
        """
        t, g = self.params.t, self.params.g
        return (g**2 / (2 * abs(t))) ** (1 / 3) * (self.v + 2 * self.sign * self.up)


def build_frame(params: ModelParams, n: int, hm: HMGrid) -> AnsatzFrame:
    """
    Raises:
        DomainError, if t >= 0, n < 1 or an ansatz value is not positive.
        ExtrapolationError, if y at n - 1, n or n + 1 lies outside the grid.
    """
    if not params.t < 0:
        raise DomainError(f"The double scaling ansatz needs t < 0, got t={params.t}.")
    if n < 1:
        raise DomainError(f"The index n must be at least 1, got {n}.")
    R_prev0, R_n0, R_next0 = (ansatz_R(params, k, hm) for k in (n - 1, n, n + 1))
    if min(R_prev0, R_n0, R_next0) <= 0:
        raise DomainError(f"The ansatz gives a non-positive R near n={n} at {params}.")
    y = scaling_variable(params, n)
    return AnsatzFrame(
        params=params,
        n=n,
        y=y,
        R_prev0=R_prev0,
        R_n0=R_n0,
        R_next0=R_next0,
        theta_n0=params.t + params.g * (R_n0 + R_next0),
        u=float(hm.u_at(y)),
        up=float(hm.up_at(y)),
        v=float(hm.v_at(y)),
    )


def d_function(params: ModelParams, n: int, z: ArrayLike):
    """
    d(z) = g^2 z^4 (z_0^2 - z^2) / 4 + g (n/N - lambda_c) z^2, the limit of -U^0.
    """
    constants = derive_constants(params)
    z_arr = np.asarray(z)
    g = params.g
    return g**2 * z_arr**4 * (constants.z_0**2 - z_arr**2) / 4 + g * (
        n / params.N - constants.lambda_c
    ) * z_arr**2


# WKB data
# --------


@dataclass(frozen=True, eq=False)
class WKBData:
    """
    U^0 and the entries of A_n^0 for one frame, with the turning point z0N.

    U^0 is stored in the expanded form

        U^0(z) = g^2 z^6 / 4 + g t z^4 / 2 + A z^2 + B + K / (g z^2 + theta_n0),

    which is the same function, and lets sqrt(U^0) - (mu_3 z^3 + mu_1 z + mu_m1 / z) be
    evaluated without cancellation for large z.
    """

    frame: AnsatzFrame
    z0N: float
    c_3: float
    c_4: float
    A: float
    B: float
    K: float
    d_1: float
    d_2: float

    @property
    def params(self) -> ModelParams:
        return self.frame.params

    @property
    def constants(self) -> DerivedConstants:
        return derive_constants(self.params)

    @property
    def mu_3(self) -> float:
        return self.params.g / 2

    @property
    def mu_1(self) -> float:
        return self.params.t / 2

    @property
    def mu_m1(self) -> float:
        """
        -n/N, the coefficient of 1/z in the leading part of sqrt(U^0).
        """
        return -self.frame.n / self.params.N

    @property
    def mu_m1_effective(self) -> float:
        """
        The exact coefficient of 1/z in sqrt(U^0) at infinity, shifted from mu_m1 by the
        N^{-1} part of U^0.
        """
        return -(self.frame.n + 0.5) / self.params.N

    def U0(self, z: ArrayLike):
        g, t = self.params.g, self.params.t
        z2 = np.asarray(z) ** 2
        return (
            g**2 * z2**3 / 4
            + g * t * z2**2 / 2
            + self.A * z2
            + self.B
            + self.K / (g * z2 + self.frame.theta_n0)
        )

    def U0_prime(self, z: ArrayLike):
        g, t = self.params.g, self.params.t
        z_arr = np.asarray(z)
        pole = g * z_arr**2 + self.frame.theta_n0
        return (
            3 * g**2 * z_arr**5 / 2
            + 2 * g * t * z_arr**3
            + 2 * self.A * z_arr
            - 2 * g * self.K * z_arr / pole**2
        )

    def U0_second(self, z: ArrayLike):
        g, t = self.params.g, self.params.t
        z_arr = np.asarray(z)
        pole = g * z_arr**2 + self.frame.theta_n0
        return (
            15 * g**2 * z_arr**4 / 2
            + 6 * g * t * z_arr**2
            + 2 * self.A
            - 2 * g * self.K / pole**2
            + 8 * g**2 * self.K * z_arr**2 / pole**3
        )

    def U1(self, z: ArrayLike):
        """
        U^1 = a11' - a11 a12' / a12.
        """
        g, t = self.params.g, self.params.t
        R = self.frame.R_n0
        z2 = np.asarray(z) ** 2
        return -(t / 2 + 3 * g * z2 / 2 + g * R) + g * (t * z2 + g * z2**2 + 2 * g * R * z2) / (
            g * z2 + self.frame.theta_n0
        )

    def lax_entries(self, z: ArrayLike):
        """
        (a11, a12) of A_n^0(z).
        """
        g, t = self.params.g, self.params.t
        z_arr = np.asarray(z)
        R = self.frame.R_n0
        a11 = -(t * z_arr / 2 + g * z_arr**3 / 2 + g * z_arr * R)
        a12 = math.sqrt(R) * (g * z_arr**2 + self.frame.theta_n0)
        return a11, a12

    def remainder(self, z: ArrayLike):
        """
        sqrt(U^0) - (mu_3 z^3 + mu_1 z + mu_m1_effective / z), for real z > z0N.
        """
        z_arr = np.asarray(z, dtype=float)
        g, t = self.params.g, self.params.t
        m = self.mu_m1_effective
        leading = self.mu_3 * z_arr**3 + self.mu_1 * z_arr + m / z_arr
        excess = (
            self.B - t * m + self.K / (g * z_arr**2 + self.frame.theta_n0) - m**2 / z_arr**2
        )
        return excess / (np.sqrt(self.U0(z_arr)) + leading)


def build_wkb(frame: AnsatzFrame) -> WKBData:
    """
    Raises:
        ConvergenceError, if no simple root of U^0 is found near z_0.
    """
    params = frame.params
    t, g, N = params.t, params.g, params.N
    constants = derive_constants(params)
    c_3 = -(g ** (1 / 3) * abs(t) ** (1 / 3) / 2 ** (5 / 3)) * (frame.v**2 - 4 * frame.up**2)
    c_4 = frame.sign * (g ** (2 / 3) / (2 ** (1 / 3) * abs(t) ** (1 / 3))) * frame.up
    theta = frame.theta_n0
    R = frame.R_n0
    A = -g * (frame.n / N - constants.lambda_c) - g / (2 * N)
    B = c_3 * N ** (-4 / 3) + c_4 * N ** (-5 / 3) + (t / 2 + g * R - theta) / N
    K = -theta * (t + 2 * g * R - theta) / N
    z_0 = constants.z_0
    partial = WKBData(
        frame=frame,
        z0N=z_0,
        c_3=c_3,
        c_4=c_4,
        A=A,
        B=B,
        K=K,
        d_1=settings.D1_FRACTION * z_0,
        d_2=settings.D2_FRACTION * z_0,
    )
    z0N = _turning_point(partial)
    logger.debug(f"Turning point at n={frame.n}, {params}: z0N={z0N:.12f} (z_0={z_0:.12f}).")
    return dataclasses.replace(partial, z0N=z0N)


def _turning_point(wkb: WKBData) -> float:
    """
    The simple root of U^0 near z_0: Newton from z_0, with a bracketing fallback.
    """
    z_0 = wkb.constants.z_0
    window = wkb.d_1 / 2
    z = z_0
    for _ in range(_NEWTON_ITERATIONS):
        step = float(wkb.U0(z) / wkb.U0_prime(z))
        z -= step
        if abs(step) <= 1e-15 * z_0:
            break
    if abs(z - z_0) < window and wkb.U0_prime(z) > 0:
        return z
    try:
        return float(optimize.brentq(wkb.U0, z_0 - window, z_0 + window, xtol=1e-15 * z_0))
    except ValueError:
        raise ConvergenceError("turning point search", _NEWTON_ITERATIONS, float(wkb.U0(z)))


# Phase integrals
# ---------------


def _quad(function, low: float, high: float) -> float:
    value, _ = integrate.quad(
        function, low, high, epsabs=0.0, epsrel=_QUAD_RTOL, limit=_QUAD_LIMIT
    )
    return value


def _xi_exterior(wkb: WKBData, x: float) -> float:
    """
    int_{z0N}^x sqrt(U^0) for real x >= z0N, with u = z0N + s^2.
    """
    z0N = wkb.z0N

    def integrand(s):
        return 2 * s * math.sqrt(max(float(wkb.U0(z0N + s * s)), 0.0))

    return _quad(integrand, 0.0, math.sqrt(x - z0N))


def _xi_bulk(wkb: WKBData, x: float) -> float:
    """
    xi_1(x) = int_{z0N}^x sqrt(-U^0) for real x <= z0N, with u = z0N - s^2. Negative.
    """
    z0N = wkb.z0N

    def integrand(s):
        return 2 * s * math.sqrt(max(-float(wkb.U0(z0N - s * s)), 0.0))

    return -_quad(integrand, 0.0, math.sqrt(z0N - x))


def _contour(wkb: WKBData, z: complex) -> list[complex]:
    """
    Waypoints from z0 + d1 to z, around the support counterclockwise.
    """
    right = wkb.constants.z_0 + wkb.d_1
    if z.imag >= 0:
        height = max(wkb.d_2, z.imag)
        points = [right, right + 1j * height, z.real + 1j * height, z]
    else:
        depth = max(wkb.d_2, -z.imag)
        points = [
            right,
            right + 1j * wkb.d_2,
            -right + 1j * wkb.d_2,
            -right - 1j * depth,
            z.real - 1j * depth,
            z,
        ]
    path = [complex(points[0])]
    for point in points[1:]:
        if abs(point - path[-1]) > 0:
            path.append(complex(point))
    return path


def _segment_sum(wkb: WKBData, path: list[complex], panels: int) -> complex:
    """
    Composite Gauss-Legendre sum of sqrt(U^0) dz along the path, continuing the square root
    from its positive value at the start.

    Raises:
        RegionError, if the root jumps sign between neighbouring nodes.
    """
    rule = orthopoly.composite_gauss_legendre(0.5, panels, settings.GL_NODES_PER_PANEL)
    tau = rule.nodes + 0.5
    previous = complex(math.sqrt(float(wkb.U0(path[0].real))))
    total = 0j
    for start, end in zip(path[:-1], path[1:]):
        points = start + (end - start) * tau
        roots = np.sqrt(wkb.U0(points).astype(complex))
        for index, root in enumerate(roots):
            if abs(root - previous) > abs(root + previous):
                root = -root
            if abs(root - previous) > 0.5 * max(abs(root), abs(previous)):
                raise RegionError(f"Branch of sqrt(U^0) lost near z={points[index]:.6g}.")
            roots[index] = root
            previous = root
        total += (end - start) * np.sum(rule.weights * roots)
    return total


def _xi_contour(wkb: WKBData, z: complex) -> complex:
    path = _contour(wkb, z)
    head = _xi_exterior(wkb, path[0].real)
    estimate = None
    panels = _CONTOUR_PANELS
    for _ in range(_CONTOUR_DOUBLINGS):
        try:
            refined = _segment_sum(wkb, path, panels)
        except RegionError:
            panels *= 2
            continue
        if estimate is not None and abs(refined - estimate) <= 1e-12 * max(1.0, abs(refined)):
            return head + refined
        estimate = refined
        panels *= 2
    raise ConvergenceError("contour integral of sqrt(U^0)", _CONTOUR_DOUBLINGS, math.nan)


def xi_c(wkb: WKBData, z: complex) -> complex:
    """
    xi^c(z) = int_{z0N}^z sqrt(U^0).

    For real z >= z0N the path is the straight segment. Otherwise it leaves the real axis
    at z_0 + d_1 and goes around the support counterclockwise, staying at distance d_2
    from the real axis; on the cut the value from above is returned.

    Raises:
        ConvergenceError, if the contour sum does not settle.
    """
    z = complex(z)
    if z.imag == 0 and z.real >= wkb.z0N:
        return complex(_xi_exterior(wkb, z.real))
    return _xi_contour(wkb, z)


def regularized_tail(wkb: WKBData) -> float:
    """
    lim_{Z -> inf} [xi^c(Z) - (mu_3 Z^4/4 + mu_1 Z^2/2 + mu_m1_effective ln Z)].
    """
    joint = wkb.z0N + 1.0
    head = _xi_exterior(wkb, joint)
    tail, _ = integrate.quad(wkb.remainder, joint, np.inf, epsabs=0.0, epsrel=_QUAD_RTOL)
    return (
        head
        + tail
        - (
            wkb.mu_3 * joint**4 / 4
            + wkb.mu_1 * joint**2 / 2
            + wkb.mu_m1_effective * math.log(joint)
        )
    )


def hn_asymptotic(wkb: WKBData, normalized: bool = True) -> float:
    """
    log h_n = 2N (regularized int_{z0N}^inf sqrt(U^0)) + ln(2 pi).

    Args:
        normalized: include the ln(2 pi) that makes psi_n orthonormal.
    """
    value = 2 * wkb.params.N * regularized_tail(wkb)
    return value + math.log(2 * math.pi) if normalized else value


# Approximants
# ------------


def _region_points(z: ArrayLike, low: float, high: float, name: str) -> NDArray[np.float64]:
    z_arr = np.atleast_1d(np.asarray(z, dtype=float))
    magnitude = np.abs(z_arr)
    slack = 1e-12 * max(1.0, low)
    if np.any(magnitude < low - slack) or np.any(magnitude > high + slack):
        raise RegionError(f"The {name} form applies for {low:.6g} <= |z| <= {high:.6g}.")
    return z_arr


def _reflect(wkb: WKBData, z_arr, first, second, scalar: bool):
    """
    Extend values computed at |z| to z by psi_vec_n(-z) = (-1)^n sigma_3 psi_vec_n(z).
    """
    negative = z_arr < 0
    first = np.where(negative, wkb.frame.sign * first, first)
    second = np.where(negative, -wkb.frame.sign * second, second)
    if scalar:
        return float(first[0]), float(second[0])
    return first, second


def exterior_gauge(wkb: WKBData, z: ArrayLike) -> NDArray[np.float64]:
    """
    T^c(z) = (a12 / mu)^{1/2} [[1, 0], [-a11/a12, mu/a12]], mu = sqrt(U^0), as (2, 2, ...).
    """
    x = np.asarray(z, dtype=float)
    mu = np.sqrt(wkb.U0(x))
    return _gauge(wkb, x, mu)


def bulk_gauge(wkb: WKBData, z: ArrayLike) -> NDArray[np.float64]:
    """
    T_1(z), as T^c with mu_1 = sqrt(-U^0) in place of mu.
    """
    x = np.asarray(z, dtype=float)
    mu = np.sqrt(-wkb.U0(x))
    return _gauge(wkb, x, mu)


def turning_point_gauge(wkb: WKBData, z: ArrayLike) -> NDArray[np.float64]:
    """
    W(z), as T^c with the derivative of the turning point map in place of mu.
    """
    x = np.asarray(z, dtype=float)
    return _gauge(wkb, x, tp_map_derivative(wkb, x))


def _gauge(wkb: WKBData, x, mu) -> NDArray[np.float64]:
    a11, a12 = wkb.lax_entries(x)
    scale = np.sqrt(a12 / mu)
    zero = np.zeros_like(scale)
    return np.array([[scale, zero], [-a11 / a12 * scale, mu / a12 * scale]])


def psi_wkb_exterior_scaled(wkb: WKBData, z: ArrayLike):
    """
    The exterior form as (mantissa_n, mantissa_{n-1}, log_scale), with
    psi = mantissa * exp(log_scale).

    Raises:
        RegionError, unless z_0 + d_1 <= |z|.
    """
    z_arr = _region_points(z, wkb.constants.z_0 + wkb.d_1, np.inf, "exterior")
    x = np.abs(z_arr)
    xi = np.array([_xi_exterior(wkb, value) for value in x])
    gauge = exterior_gauge(wkb, x)
    prefactor = 1 / (2 * math.sqrt(math.pi) * wkb.frame.R_n0**0.25)
    first = prefactor * (gauge[0, 0] - gauge[0, 1])
    second = prefactor * (gauge[1, 0] - gauge[1, 1])
    first, second = _reflect(wkb, z_arr, first, second, scalar=False)
    log_scale = -wkb.params.N * xi
    if np.ndim(z) == 0:
        return float(first[0]), float(second[0]), float(log_scale[0])
    return first, second, log_scale


def psi_wkb_exterior(wkb: WKBData, z: ArrayLike):
    """
    (2 sqrt(pi))^{-1} (R_n^0)^{-1/4} T^c(z) (e^{-N xi^c}, -e^{-N xi^c}) for |z| >= z_0 + d_1.

    Values that underflow come back as 0; use psi_wkb_exterior_scaled for those.
    """
    first, second, log_scale = psi_wkb_exterior_scaled(wkb, z)
    factor = np.exp(log_scale)
    return first * factor, second * factor


def psi_wkb_bulk(wkb: WKBData, z: ArrayLike):
    """
    pi^{-1/2} (R_n^0)^{-1/4} T_1(z) (cos(N xi_1 + pi/4), -sin(N xi_1 + pi/4)) for
    d_1 <= |z| <= z_0 - d_1.

    Raises:
        RegionError, outside the bulk.
    """
    z_0 = wkb.constants.z_0
    z_arr = _region_points(z, wkb.d_1, z_0 - wkb.d_1, "bulk")
    x = np.abs(z_arr)
    xi = np.array([_xi_bulk(wkb, value) for value in x])
    phase = wkb.params.N * xi + math.pi / 4
    gauge = bulk_gauge(wkb, x)
    prefactor = 1 / (math.sqrt(math.pi) * wkb.frame.R_n0**0.25)
    first = prefactor * gauge[0, 0] * np.cos(phase)
    second = prefactor * (gauge[1, 0] * np.cos(phase) - gauge[1, 1] * np.sin(phase))
    return _reflect(wkb, z_arr, first, second, scalar=np.ndim(z) == 0)


def tp_map(wkb: WKBData, z: ArrayLike):
    """
    The turning point map, ((3/2) xi^c(z))^{2/3} for z >= z0N and -(-(3/2) xi_1(z))^{2/3}
    below, continued through z0N by its Taylor series.
    """
    x = np.atleast_1d(np.asarray(z, dtype=float))
    values = np.empty_like(x)
    for index, point in enumerate(x):
        delta = point - wkb.z0N
        if abs(delta) < _TP_SERIES_RADIUS * wkb.constants.z_0:
            slope, curvature = _tp_series(wkb)
            values[index] = slope * delta * (1 + curvature * delta / 10)
        elif delta > 0:
            values[index] = (1.5 * _xi_exterior(wkb, point)) ** (2 / 3)
        else:
            values[index] = -((-1.5 * _xi_bulk(wkb, point)) ** (2 / 3))
    return float(values[0]) if np.ndim(z) == 0 else values


def tp_map_derivative(wkb: WKBData, z: ArrayLike):
    """
    The derivative of tp_map, from sqrt(tp) tp' = sqrt(U^0).
    """
    x = np.atleast_1d(np.asarray(z, dtype=float))
    values = np.empty_like(x)
    mapped = np.atleast_1d(tp_map(wkb, x))
    for index, point in enumerate(x):
        delta = point - wkb.z0N
        if abs(delta) < _TP_SERIES_RADIUS * wkb.constants.z_0:
            slope, curvature = _tp_series(wkb)
            values[index] = slope * (1 + curvature * delta / 5)
        elif delta > 0:
            values[index] = math.sqrt(float(wkb.U0(point))) / math.sqrt(mapped[index])
        else:
            values[index] = math.sqrt(-float(wkb.U0(point))) / math.sqrt(-mapped[index])
    return float(values[0]) if np.ndim(z) == 0 else values


def _tp_series(wkb: WKBData) -> tuple[float, float]:
    """
    (U^0'(z0N)^{1/3}, U^0''(z0N) / U^0'(z0N)), the data of

        tp(z0N + delta) = U^0'(z0N)^{1/3} delta (1 + U^0'' delta / (10 U^0') + O(delta^2)).
    """
    first = float(wkb.U0_prime(wkb.z0N))
    second = float(wkb.U0_second(wkb.z0N))
    return first ** (1 / 3), second / first


def psi_airy_tp(wkb: WKBData, z: ArrayLike):
    """
    (R_n^0)^{-1/4} W(z) (N^{1/6} Ai(N^{2/3} tp(z)), N^{-1/6} Ai'(N^{2/3} tp(z))) for
    z_0 - d_1 <= |z| <= z_0 + d_1.

    Raises:
        RegionError, outside the turning point region.
    """
    z_0 = wkb.constants.z_0
    z_arr = _region_points(z, z_0 - wkb.d_1, z_0 + wkb.d_1, "turning point")
    x = np.abs(z_arr)
    N = wkb.params.N
    ai, aip = airy(N ** (2 / 3) * np.atleast_1d(tp_map(wkb, x)))
    gauge = turning_point_gauge(wkb, x)
    prefactor = wkb.frame.R_n0 ** (-0.25)
    top = N ** (1 / 6) * np.real(ai)
    bottom = N ** (-1 / 6) * np.real(aip)
    first = prefactor * gauge[0, 0] * top
    second = prefactor * (gauge[1, 0] * top + gauge[1, 1] * bottom)
    return _reflect(wkb, z_arr, first, second, scalar=np.ndim(z) == 0)


def psi_critical(wkb: WKBData, phi: psi_cp.PhiSolution, zeta: ZetaMaps, z: ArrayLike):
    """
    pi^{-1/2} (R_n^0)^{-1/4} Phi(N^{1/3} zeta_0(z)), the zeroth order form near z = 0.

    Raises:
        DomainError, if phi is not the solution for this frame's y and parity of n, or
                     N^{1/3} zeta_0(z) leaves its grid.
        RegionError, outside the rectangle of the zeta maps.
    """
    frame = wkb.frame
    if phi.n_parity != frame.n % 4 or not math.isclose(phi.y, frame.y, abs_tol=1e-12):
        raise DomainError(
            f"Phi was solved at y={phi.y}, n={phi.n_parity} (mod 4); the frame has "
            f"y={frame.y}, n={frame.n}."
        )
    z_arr = np.asarray(z, dtype=float)
    s = wkb.params.N ** (1 / 3) * np.real(zeta.zeta_0(z_arr))
    phi1, phi2 = phi.evaluate(s)
    prefactor = 1 / (math.sqrt(math.pi) * frame.R_n0**0.25)
    first, second = prefactor * phi1, prefactor * phi2
    if np.ndim(z) == 0:
        return float(first), float(second)
    return first, second


# Conformal maps near the origin
# ------------------------------


@cache
def _map_series(terms: int) -> tuple[NDArray[np.float64], NDArray[np.float64], NDArray]:
    """
    Coefficients in X = (z/z_0)^2 of F, G and (G^3 - F) / X, where

        zeta_inf = C^{-1} z F^{1/3},    D_1 = C^{-1} z G.
    """
    k = np.arange(terms)
    F = 3 * special.binom(0.5, k) * (-1.0) ** k / (2 * k + 3)
    G = special.binom(2 * k, k) / (4.0**k * (2 * k + 1))
    difference = polynomial.polypow(G, 3)[:terms] - F
    return F, G, difference[1:]


@dataclass(frozen=True, eq=False)
class ZetaMaps:
    """
    The odd maps on the rectangle |Re z| <= z_0 - d_1, |Im z| <= d_2:

        D_inf(z) = int_0^z (g u^2 / 2) sqrt(z_0^2 - u^2) du,    D_1(z) = c_0 arcsin(z / z_0),
        zeta_inf = (3 D_inf / 4)^{1/3},    zeta_1 = (D_1 - zeta_inf) / (4 zeta_inf^2),
        zeta_0 = zeta_inf + N^{-2/3} (y + alpha N^{-2/3}) zeta_1.

    alpha is 0 unless a root of the period equation is supplied.
    """

    params: ModelParams
    y: float
    N: int
    d_1: float
    d_2: float
    alpha: float = 0.0

    @cached_property
    def constants(self) -> DerivedConstants:
        return derive_constants(self.params)

    @property
    def shifted_y(self) -> float:
        return self.y + self.alpha * self.N ** (-2 / 3)

    @property
    def zeta_1_derivative_at_zero(self) -> float:
        return self.constants.C / (15 * self.constants.z_0**2)

    @property
    def zeta_0_derivative_at_zero(self) -> float:
        """
        The local scale of the critical kernel, C^{-1} + N^{-2/3} y zeta_1'(0).
        """
        return 1 / self.constants.C + self.N ** (-2 / 3) * self.shifted_y * (
            self.zeta_1_derivative_at_zero
        )

    def D_inf(self, z: ArrayLike):
        z_arr, small = self._prepare(z)
        F, _, _ = self._series(z_arr)
        series = self.params.g * self.constants.z_0 * z_arr**3 * F / 6
        return self._finish(np.where(small, series, self._D_inf_closed(z_arr)), z)

    def _D_inf_closed(self, z_arr):
        z_0, g = self.constants.z_0, self.params.g
        root = np.sqrt(z_0**2 - z_arr**2)
        return (g / 2) * (
            z_arr * (2 * z_arr**2 - z_0**2) * root / 8 + z_0**4 * np.arcsin(z_arr / z_0) / 8
        )

    def D_1(self, z: ArrayLike):
        z_arr, _ = self._prepare(z)
        return self._finish(self.constants.c_0 * np.arcsin(z_arr / self.constants.z_0), z)

    def zeta_inf(self, z: ArrayLike):
        return self._finish(self._zeta_parts(z)[0], z)

    def zeta_1(self, z: ArrayLike):
        return self._finish(self._zeta_parts(z)[1], z)

    def zeta_0(self, z: ArrayLike):
        zeta_inf, zeta_1 = self._zeta_parts(z)
        return self._finish(zeta_inf + self.N ** (-2 / 3) * self.shifted_y * zeta_1, z)

    def _zeta_parts(self, z: ArrayLike):
        z_arr, small = self._prepare(z)
        C, z_0 = self.constants.C, self.constants.z_0
        F, G, difference = self._series(z_arr)
        cube_root_F = F ** (1 / 3)
        series_inf = z_arr * cube_root_F / C
        # (G - F^{1/3}) / X = ((G^3 - F) / X) / (G^2 + G F^{1/3} + F^{2/3}).
        series_1 = (
            C
            * z_arr
            * difference
            / (4 * z_0**2 * cube_root_F**2 * (G**2 + G * cube_root_F + cube_root_F**2))
        )

        safe_z = np.where(small, z_0 / 2, z_arr)
        closed_inf = safe_z * (3 * self._D_inf_closed(safe_z) / (4 * safe_z**3)) ** (1 / 3)
        D_1 = self.constants.c_0 * np.arcsin(safe_z / z_0)
        closed_1 = (D_1 - closed_inf) / (4 * closed_inf**2)
        return (
            np.where(small, series_inf, closed_inf),
            np.where(small, series_1, closed_1),
        )

    def _series(self, z_arr):
        F_coefficients, G_coefficients, difference_coefficients = _map_series(_MAP_SERIES_TERMS)
        X = (z_arr / self.constants.z_0) ** 2
        return (
            polynomial.polyval(X, F_coefficients),
            polynomial.polyval(X, G_coefficients),
            polynomial.polyval(X, difference_coefficients),
        )

    def _prepare(self, z: ArrayLike):
        z_arr = np.asarray(z, dtype=complex)
        z_0 = self.constants.z_0
        slack = 1e-12 * z_0
        if np.any(np.abs(z_arr.real) > z_0 - self.d_1 + slack) or np.any(
            np.abs(z_arr.imag) > self.d_2 + slack
        ):
            raise RegionError(
                f"The zeta maps are defined for |Re z| <= {z_0 - self.d_1:.6g}, "
                f"|Im z| <= {self.d_2:.6g}."
            )
        return z_arr, np.abs(z_arr) < _MAP_SERIES_RADIUS * z_0

    @staticmethod
    def _finish(values, z: ArrayLike):
        values = np.asarray(values, dtype=complex)
        if not np.iscomplexobj(z) and np.all(np.isreal(np.asarray(z))):
            values = values.real
        return values[()] if values.ndim == 0 else values


def zeta_maps(params: ModelParams, y: float, N: int, alpha: float = 0.0) -> ZetaMaps:
    """
    Raises:
        DomainError, if t >= 0.
    """
    constants = derive_constants(params)
    z_0 = constants.z_0
    return ZetaMaps(
        params=params,
        y=y,
        N=N,
        d_1=settings.D1_FRACTION * z_0,
        d_2=settings.D2_FRACTION * z_0,
        alpha=alpha,
    )


# Equation of periods
# -------------------


def period_integral(x1: float, x2: float) -> float:
    """
    I(x1, x2) = int_0^s sqrt(-s^4 + (1 - x1) s^2 - x2 s^6) ds, up to the root s near 1.

    With r = s^2 the integrand is sqrt((r_hat - r)(1 + x2 (r + r_hat))) / 2, and the square
    root singularity at r_hat goes into the quadrature weight.

    Raises:
        DomainError, if (x1, x2) is outside the chart where the root near 1 exists.
    """
    if abs(x1) >= 0.5 or abs(x2) > _CHART_LIMIT:
        raise DomainError(f"(x1, x2) = ({x1}, {x2}) is outside the local chart.")
    if x2 == 0:
        r_hat = 1 - x1
    else:
        r_hat = (-1 + math.sqrt(1 + 4 * x2 * (1 - x1))) / (2 * x2)
    value, _ = integrate.quad(
        lambda r: math.sqrt(1 + x2 * (r + r_hat)),
        0.0,
        r_hat,
        weight="alg",
        wvar=(0.0, 0.5),
        epsabs=0.0,
        epsrel=1e-13,
    )
    return value / 2


def period_alpha(params: ModelParams, y: float, N: int) -> float:
    """
    The shift alpha of y that keeps the period integral at its y = 0 value.

    Solves I(x1, x2) = I(0, 0) for x1 = alpha_hat N^{-2/3}, with x2 = N^{-2/3} c_9 y / 2,
    and returns alpha = y alpha_hat. For small y, alpha ~ -4 c_9 y^2 / 15.

    Raises:
        DomainError, if t >= 0 or x2 is outside the local chart.
        NoSignChangeError, if the root is not bracketed.
    """
    if y == 0:
        return 0.0
    constants = derive_constants(params)
    x2 = N ** (-2 / 3) * constants.c_9 * y / 2
    target = period_integral(0.0, 0.0)
    if abs(x2) > _CHART_LIMIT:
        raise DomainError(f"x2 = {x2} is outside the local chart; take a smaller |y| or larger N.")

    def defect(x1: float) -> float:
        return period_integral(x1, x2) - target

    low, high = -0.4, 0.4
    if defect(low) * defect(high) > 0:
        raise NoSignChangeError(f"The equation of periods has no root in [{low}, {high}].")
    x1 = optimize.brentq(defect, low, high, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    return y * x1 * N ** (2 / 3)


# Comparison with the exact psi-functions
# ---------------------------------------


class Region(enum.Enum):
    EXTERIOR = "exterior"
    BULK = "bulk"
    TURNING_POINT = "turning-point"
    CRITICAL = "critical"


@dataclass(frozen=True)
class ComparisonRow:
    N: int
    region: Region
    sup_error: float
    # The index with the largest error over the offsets.
    n: int


@dataclass(frozen=True, eq=False)
class ComparisonTable:
    rows: tuple[ComparisonRow, ...]
    rates: dict[Region, float]

    def errors(self, region: Region) -> list[tuple[int, float]]:
        return [(row.N, row.sup_error) for row in self.rows if row.region is region]


def fitted_rate(points: Iterable[tuple[int, float]]) -> float:
    """
    The exponent p of a fit sup_error ~ c N^{-p}.
    """
    pairs = [(N, error) for N, error in points if error > 0]
    if len(pairs) < 2:
        return math.nan
    N_values, errors = zip(*pairs)
    slope, _ = np.polyfit(np.log(N_values), np.log(errors), 1)
    return float(-slope)


def compare_harness(
    params: ModelParams,
    N_list: Sequence[int],
    offsets: Sequence[int] = (-2, -1, 0, 1, 2),
    regions: Sequence[Region] = tuple(Region),
    hm: HMGrid | None = None,
    points: int = 50,
) -> ComparisonTable:
    """
    Sup errors of the approximants against psi_vec_n from the Stieltjes recurrence, for
    n = round(lambda_c N) + k over the offsets k.

    The exterior error is relative pointwise; the others are sup-norm errors relative to the
    sup of the exact psi over the region. The rate of each region is fitted over N_list.
    """
    if hm is None:
        hm = solve_hastings_mcleod()
    rows = []
    with settings.TIMER as timer:
        for N in N_list:
            rows.extend(compare_at(params.with_N(N), offsets, regions, hm, points))
    logger.info(
        f"Compared {len(regions)} regions at N={list(N_list)} for t={params.t}, g={params.g} "
        f"({timer.duration_in_s:.2f}s)."
    )
    return assemble_table(rows, regions)


def assemble_table(rows: Iterable[ComparisonRow], regions: Sequence[Region]) -> ComparisonTable:
    ordered = tuple(sorted(rows, key=lambda row: (row.N, list(regions).index(row.region))))
    rates = {
        region: fitted_rate((row.N, row.sup_error) for row in ordered if row.region is region)
        for region in regions
    }
    return ComparisonTable(rows=ordered, rates=rates)


def compare_at(
    params: ModelParams,
    offsets: Sequence[int],
    regions: Sequence[Region],
    hm: HMGrid,
    points: int = 50,
) -> list[ComparisonRow]:
    """
    The rows of the comparison at the single N of params.
    """
    N = params.N
    centre = round(derive_constants(params).lambda_c * N)
    indices = [centre + k for k in offsets]
    recurrence = orthopoly.stieltjes_recurrence(params, max(indices) + 1)
    evaluator = orthopoly.PsiEvaluator.from_recurrence(recurrence)

    worst: dict[Region, tuple[float, int]] = {}
    for n in indices:
        wkb = build_wkb(build_frame(params, n, hm))
        for region in regions:
            error = region_error(wkb, evaluator, region, hm, points)
            logger.debug(f"N={N}, n={n}, {region.value}: sup error {error:.3e}.")
            if region not in worst or error > worst[region][0]:
                worst[region] = (error, n)
    return [
        ComparisonRow(N=N, region=region, sup_error=worst[region][0], n=worst[region][1])
        for region in regions
    ]


def region_error(
    wkb: WKBData,
    evaluator: orthopoly.PsiEvaluator,
    region: Region,
    hm: HMGrid,
    points: int = 50,
) -> float:
    """
    The error of one approximant against the exact psi_vec_n on its region grid.
    """
    n = wkb.frame.n
    z_0, d_1 = wkb.constants.z_0, wkb.d_1

    if region is Region.EXTERIOR:
        grid = np.linspace(z_0 + d_1, z_0 + 1, points)
        approximate = psi_wkb_exterior_scaled(wkb, grid)
        errors = []
        for index, component in enumerate((n, n - 1)):
            mantissa, scale = orthopoly.psi_scaled(evaluator, component, grid)
            ratio = mantissa.real / approximate[index] * np.exp(scale - approximate[2])
            errors.append(np.max(np.abs(ratio - 1)))
        return float(max(errors))

    if region is Region.BULK:
        grid = np.linspace(d_1, z_0 - d_1, points)
        approximate = psi_wkb_bulk(wkb, grid)
    elif region is Region.TURNING_POINT:
        grid = np.linspace(z_0 - d_1, z_0 + d_1, points)
        approximate = psi_airy_tp(wkb, grid)
    else:
        s_max = settings.CRITICAL_REGION_S_MAX
        grid = np.linspace(-s_max, s_max, points) * wkb.constants.C * wkb.params.N ** (-1 / 3)
        phi = psi_cp.solve_phi(hm, wkb.frame.y, n % 4)
        zeta = zeta_maps(wkb.params, wkb.frame.y, wkb.params.N)
        approximate = psi_critical(wkb, phi, zeta, grid)

    errors = []
    for index, component in enumerate((n, n - 1)):
        exact = np.real(orthopoly.psi(evaluator, component, grid))
        errors.append(np.max(np.abs(exact - approximate[index])) / np.max(np.abs(exact)))
    return float(max(errors))
