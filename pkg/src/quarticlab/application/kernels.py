"""
The universal limit kernels and the finite-N scaling checks that approach them.
"""

from __future__ import annotations

import enum
import itertools
import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import optimize

from quarticlab.application import orthopoly, psi_cp, semiclassics
from quarticlab.application.config import settings
from quarticlab.application.freud import scaling_variable
from quarticlab.application.painleve2 import HMGrid, airy, solve_hastings_mcleod
from quarticlab.domain.model import density, derive_constants
from quarticlab.domain.valueobjects import ModelParams
from quarticlab.exceptions import DomainError, NoSignChangeError

logger = logging.getLogger(__name__)

_CONFLUENT_THRESHOLD = 1e-6
_DEFAULT_OFFSETS = tuple(np.linspace(-2.0, 2.0, 9))


def _pairs(u: ArrayLike, v: ArrayLike):
    u_arr, v_arr = np.broadcast_arrays(np.asarray(u, dtype=float), np.asarray(v, dtype=float))
    difference = u_arr - v_arr
    confluent = np.abs(difference) < _CONFLUENT_THRESHOLD
    return u_arr, v_arr, confluent, np.where(confluent, 1.0, difference)


def _finish(values):
    return float(values) if np.ndim(values) == 0 else values


def sine_kernel(u: ArrayLike, v: ArrayLike):
    """
    sin(pi (u - v)) / (pi (u - v)), equal to 1 on the diagonal.
    """
    difference = np.asarray(u, dtype=float) - np.asarray(v, dtype=float)
    return _finish(np.sinc(difference))


def airy_kernel(u: ArrayLike, v: ArrayLike):
    """
    (Ai(u) Ai'(v) - Ai(v) Ai'(u)) / (u - v), with diagonal Ai'(u)^2 - u Ai(u)^2.
    """
    u_arr, v_arr, confluent, safe_difference = _pairs(u, v)
    ai_u, aip_u = airy(u_arr)
    ai_v, aip_v = airy(v_arr)
    off_diagonal = (ai_u * aip_v - ai_v * aip_u) / safe_difference
    diagonal = aip_u**2 - u_arr * ai_u**2
    return _finish(np.where(confluent, diagonal, off_diagonal))


class KernelKind(enum.Enum):
    SINE = "sine"
    AIRY = "airy"
    CRITICAL = "critical"
    FINITE_N = "finite-n"


@dataclass(frozen=True, eq=False)
class KernelEval:
    """
    A kernel K(u, v) in local coordinates.

    For FINITE_N this is (1/scale) Q_N(center + u/scale, center + v/scale), the rescaled
    Christoffel-Darboux kernel at level N_level; the limit kernels ignore center and scale.
    """

    kind: KernelKind
    scale: float = 1.0
    center: float = 0.0
    phi: psi_cp.PhiSolution | None = None
    evaluator: orthopoly.PsiEvaluator | None = None
    N_level: int = 0

    @classmethod
    def sine(cls) -> KernelEval:
        return cls(kind=KernelKind.SINE)

    @classmethod
    def airy(cls) -> KernelEval:
        return cls(kind=KernelKind.AIRY)

    @classmethod
    def critical(cls, phi: psi_cp.PhiSolution) -> KernelEval:
        return cls(kind=KernelKind.CRITICAL, phi=phi)

    @classmethod
    def finite_n(
        cls, evaluator: orthopoly.PsiEvaluator, N_level: int, center: float, scale: float
    ) -> KernelEval:
        if not scale > 0:
            raise DomainError(f"The local scale must be positive, got {scale}.")
        return cls(
            kind=KernelKind.FINITE_N,
            scale=scale,
            center=center,
            evaluator=evaluator,
            N_level=N_level,
        )

    def __call__(self, u: ArrayLike, v: ArrayLike):
        if self.kind is KernelKind.SINE:
            return sine_kernel(u, v)
        if self.kind is KernelKind.AIRY:
            return airy_kernel(u, v)
        if self.kind is KernelKind.CRITICAL:
            assert self.phi is not None
            return psi_cp.critical_kernel(self.phi, u, v)
        assert self.evaluator is not None
        z = self.center + np.asarray(u, dtype=float) / self.scale
        w = self.center + np.asarray(v, dtype=float) / self.scale
        values = orthopoly.cd_kernel(self.evaluator, self.N_level, z, w)
        return _finish(np.asarray(values) / self.scale)


def pair_determinants(kernel: KernelEval, points: ArrayLike) -> NDArray[np.float64]:
    """
    det [[K(a, a), K(a, b)], [K(b, a), K(b, b)]] over all pairs of distinct points.
    """
    points_arr = np.asarray(points, dtype=float)
    pairs = np.array(list(itertools.combinations(points_arr, 2)))
    a, b = pairs[:, 0], pairs[:, 1]
    return np.asarray(kernel(a, a) * kernel(b, b) - kernel(a, b) * kernel(b, a))


# Scaling limits
# --------------


class ScalingRegime(enum.Enum):
    BULK = "bulk"
    EDGE = "edge"
    CRITICAL = "critical"


@dataclass(frozen=True, eq=False)
class ScalingReport:
    regime: ScalingRegime
    params: ModelParams
    y: float
    center: float
    scale: float
    offsets: NDArray[np.float64]
    sup_error: float


def critical_params(g: float, N: int, y: float) -> ModelParams:
    """
    The parameters with t near t_c for which n = N sits at scaling variable y.

    Raises:
        NoSignChangeError, if no such t is found within a factor 2 of t_c.
    """
    t_c = -2 * math.sqrt(g)
    if y == 0:
        return ModelParams(t=t_c, g=g, N=N)

    def defect(t: float) -> float:
        return scaling_variable(ModelParams(t=t, g=g, N=N), N) - y

    low, high = 2 * t_c, t_c / 2
    if defect(low) * defect(high) > 0:
        raise NoSignChangeError(f"No t in [{low}, {high}] puts n=N at y={y}.")
    return ModelParams(t=optimize.brentq(defect, low, high, xtol=1e-15), g=g, N=N)


def scaling_limit_check(
    regime: ScalingRegime,
    g: float,
    N: int,
    y: float = 0.0,
    offsets: Sequence[float] = _DEFAULT_OFFSETS,
    hm: HMGrid | None = None,
    center: float | None = None,
) -> ScalingReport:
    """
    Compare the rescaled finite-N kernel with its limit on the grid of offsets.

    The parameters are those of critical_params(g, N, y). The local coordinates are

        bulk:      center (default z_0 / 2), scale p(center) N, limit the sine kernel;
        edge:      center z0N, scale tp'(z0N) N^{2/3}, limit the Airy kernel;
        critical:  center 0, scale zeta_0'(0) N^{1/3}, limit Q_c at y.

    Raises:
        DomainError, if the bulk center is outside the support.
    """
    params = critical_params(g, N, y)
    constants = derive_constants(params)
    if hm is None and regime is not ScalingRegime.BULK:
        hm = solve_hastings_mcleod()

    if regime is ScalingRegime.BULK:
        if center is None:
            center = constants.z_0 / 2
        local_density = density(params, center)
        if not local_density > 0:
            raise DomainError(f"The bulk center {center} is outside the support at {params}.")
        scale = local_density * N
        limit = KernelEval.sine()
    elif regime is ScalingRegime.EDGE:
        assert hm is not None
        wkb = semiclassics.build_wkb(semiclassics.build_frame(params, N, hm))
        center = wkb.z0N
        scale = semiclassics.tp_map_derivative(wkb, wkb.z0N) * N ** (2 / 3)
        limit = KernelEval.airy()
    else:
        assert hm is not None
        center = 0.0
        zeta = semiclassics.zeta_maps(params, y, N)
        scale = zeta.zeta_0_derivative_at_zero * N ** (1 / 3)
        # Q_c is the same for every parity of n, so the n = 0 solution serves.
        limit = KernelEval.critical(psi_cp.solve_phi(hm, y, 0))

    with settings.TIMER as timer:
        evaluator = orthopoly.PsiEvaluator.from_recurrence(
            orthopoly.stieltjes_recurrence(params, N)
        )
        finite = KernelEval.finite_n(evaluator, N, center, scale)
        grid = np.asarray(offsets, dtype=float)
        u, v = grid[:, None], grid[None, :]
        sup_error = float(np.max(np.abs(finite(u, v) - limit(u, v))))
    logger.info(
        f"{regime.value} scaling at {params}, y={y}: center {center:.6f}, scale "
        f"{scale:.6f}, sup error {sup_error:.3e} ({timer.duration_in_s:.2f}s)."
    )
    return ScalingReport(
        regime=regime,
        params=params,
        y=y,
        center=center,
        scale=scale,
        offsets=grid,
        sup_error=sup_error,
    )


def density_from_kernel(
    params: ModelParams,
    N: int,
    z: ArrayLike,
    evaluator: orthopoly.PsiEvaluator | None = None,
):
    """
    Q_N(z, z) / N, which tends to the equilibrium density p(z).
    """
    if evaluator is None:
        evaluator = orthopoly.PsiEvaluator.from_recurrence(
            orthopoly.stieltjes_recurrence(params.with_N(N), N)
        )
    z_arr = np.asarray(z, dtype=float)
    return _finish(np.asarray(orthopoly.cd_kernel(evaluator, N, z_arr, z_arr)) / N)


def first_zero(kernel: KernelEval, upper: float = 3.0, samples: int = 600) -> float:
    """
    The smallest u > 0 with K(0, u) = 0.

    Raises:
        NoSignChangeError, if K(0, .) keeps its sign on (0, upper].
    """
    grid = np.linspace(upper / samples, upper, samples)
    values = np.asarray(kernel(np.zeros_like(grid), grid))
    changes = np.nonzero(np.sign(values[:-1]) != np.sign(values[1:]))[0]
    if not len(changes):
        raise NoSignChangeError(f"K(0, u) does not vanish on (0, {upper}].")
    index = changes[0]
    return float(
        optimize.brentq(
            lambda x: float(kernel(0.0, x)), grid[index], grid[index + 1], xtol=1e-12
        )
    )
