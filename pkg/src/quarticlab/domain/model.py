"""
Closed-form formulas of the quartic model: the potential, its critical constants and the
equilibrium densities of the three regimes.
"""

from __future__ import annotations

import math

import numpy as np
from numpy.typing import ArrayLike
from scipy import integrate

from quarticlab.exceptions import QuadratureError

from .valueobjects import DerivedConstants, EquilibriumDensity, ModelParams, Regime


def potential(params: ModelParams, z):
    """
    V(z) = t/2 z^2 + g/4 z^4, for real or complex (array) z.
    """
    z2 = np.asarray(z) ** 2
    return params.t / 2 * z2 + params.g / 4 * z2**2


def potential_derivative(params: ModelParams, z):
    z = np.asarray(z)
    return params.t * z + params.g * z**3


def derive_constants(params: ModelParams) -> DerivedConstants:
    return DerivedConstants(t=params.t, g=params.g)


def classify_regime(params: ModelParams) -> Regime:
    t_c = -2 * math.sqrt(params.g)
    if abs(params.t - t_c) <= 1e-12 * max(1.0, abs(params.t)):
        return Regime.CRITICAL
    if params.t > t_c:
        return Regime.ONE_CUT
    return Regime.TWO_CUT


def equilibrium_density(params: ModelParams) -> EquilibriumDensity:
    t, g = params.t, params.g
    regime = classify_regime(params)
    if regime is Regime.ONE_CUT:
        a = math.sqrt((-2 * t + math.sqrt(4 * t**2 + 48 * g)) / (3 * g))
        b_0 = (t + math.sqrt(t**2 / 4 + 3 * g)) / 3
        return EquilibriumDensity(regime=regime, endpoints=(-a, a), b_0=b_0, b_2=g / 2)
    if regime is Regime.CRITICAL:
        a = math.sqrt(4 / math.sqrt(g))
        return EquilibriumDensity(regime=regime, endpoints=(-a, a), b_0=0.0, b_2=g / 2)
    a = math.sqrt((2 * math.sqrt(g) - t) / g)
    b = math.sqrt((-2 * math.sqrt(g) - t) / g)
    return EquilibriumDensity(regime=regime, endpoints=(-a, -b, b, a), b_0=0.0, b_2=g / 2)


def density(params: ModelParams, x: ArrayLike):
    """
    The equilibrium density p(x), zero outside its support.

    Accepts scalars or arrays; a scalar argument gives a float.
    """
    eq = equilibrium_density(params)
    x_arr = np.asarray(x, dtype=float)
    a2 = eq.a**2
    x2 = x_arr**2
    if eq.regime is Regime.TWO_CUT:
        b2 = eq.b**2
        radicand = (a2 - x2) * (x2 - b2)
        inside = (x2 <= a2) & (x2 >= b2)
        values = eq.b_2 / math.pi * np.abs(x_arr) * np.sqrt(np.where(inside, radicand, 0.0))
    else:
        inside = x2 <= a2
        values = (
            (eq.b_0 + eq.b_2 * x2) / math.pi * np.sqrt(np.where(inside, a2 - x2, 0.0))
        )
    values = np.where(inside, np.maximum(values, 0.0), 0.0)
    if np.ndim(values) == 0:
        return float(values)
    return values


def density_normalization(params: ModelParams, quad_tol: float = 1e-12) -> float:
    """
    Integrate the equilibrium density over its support.

    The square-root endpoint behaviour is absorbed into an algebraic quadrature weight, so
    the remaining integrand is a polynomial (one interval) or smooth (two intervals).

    Raises:
        QuadratureError, if the error estimate exceeds quad_tol.
    """
    eq = equilibrium_density(params)
    a = eq.a
    if eq.regime is Regime.TWO_CUT:
        b = eq.b
        value, error = integrate.quad(
            lambda x: eq.b_2 / math.pi * x * math.sqrt((a + x) * (x + b)),
            b,
            a,
            weight="alg",
            wvar=(0.5, 0.5),
            epsabs=quad_tol,
            epsrel=quad_tol,
        )
        value, error = 2 * value, 2 * error
    else:
        value, error = integrate.quad(
            lambda x: (eq.b_0 + eq.b_2 * x**2) / math.pi,
            -a,
            a,
            weight="alg",
            wvar=(0.5, 0.5),
            epsabs=quad_tol,
            epsrel=quad_tol,
        )
    if error > quad_tol:
        raise QuadratureError(f"Density normalization for {params} did not converge", error)
    return value


def outer_support_edge(params: ModelParams, lambda_: float = 1.0) -> float:
    """
    The outer endpoint of the equilibrium measure of V / lambda_.

    Used to size quadrature intervals for the weight e^{-NV} at level n = lambda_ N. The
    larger of the one-interval and two-interval formulas is returned, which bounds the
    support in either regime.
    """
    t, g = params.t, params.g
    one_cut = (-2 * t + math.sqrt(4 * t**2 + 48 * g * lambda_)) / (3 * g)
    two_cut = (2 * math.sqrt(g * lambda_) - t) / g
    return math.sqrt(max(one_cut, two_cut))
