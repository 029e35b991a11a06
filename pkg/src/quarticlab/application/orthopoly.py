"""
Orthogonal polynomials for the weight e^{-NV(z)} on the real line.

Everything is computed from a composite Gauss-Legendre rule: the recurrence coefficients by
the discretized Stieltjes (Lanczos) procedure, and the psi-functions

    psi_n(z) = h_n^{-1/2} P_n(z) e^{-NV(z)/2}

by their three-term recurrence. Neither h_n nor P_n is ever formed on its own; psi carries
the exponential factor from the start and log h_n is accumulated from log R_n.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.typing import ArrayLike, NDArray

from quarticlab.application.config import settings
from quarticlab.domain.model import outer_support_edge, potential, potential_derivative
from quarticlab.domain.valueobjects import ModelParams, QuadratureRule, RecurrenceData
from quarticlab.exceptions import (
    CoincidentPointsError,
    DomainError,
    OrthogonalityLossError,
    QuadratureError,
)

logger = logging.getLogger(__name__)

_RESCALE_THRESHOLD = 1e150
_TAIL_TOLERANCE = 1e-20
_MAX_NODES = 400_000
_MAX_DOUBLINGS = 6
_MAX_WIDENINGS = 20
_CONFLUENT_THRESHOLD = 1e-6
_COINCIDENT_THRESHOLD = 1e-9


@dataclass(frozen=True, eq=False)
class PsiEvaluator:
    """
    Evaluates psi_n(z), for complex z, from recurrence data.
    """

    recurrence: RecurrenceData
    params: ModelParams

    @classmethod
    def from_recurrence(cls, recurrence: RecurrenceData) -> PsiEvaluator:
        return cls(recurrence=recurrence, params=recurrence.params)

    @property
    def n_max(self) -> int:
        return self.recurrence.n_max


# Quadrature
# ----------


@lru_cache(maxsize=8)
def _legendre(nodes_per_panel: int) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    return np.polynomial.legendre.leggauss(nodes_per_panel)


def composite_gauss_legendre(
    half_width: float, panels: int, nodes_per_panel: int, target_tol: float = 0.0
) -> QuadratureRule:
    """
    Composite Gauss-Legendre rule on [-half_width, half_width] with equal panels.
    """
    reference_nodes, reference_weights = _legendre(nodes_per_panel)
    edges = np.linspace(-half_width, half_width, panels + 1)
    centers = (edges[:-1] + edges[1:]) / 2
    half_lengths = (edges[1:] - edges[:-1]) / 2
    nodes = (centers[:, None] + half_lengths[:, None] * reference_nodes[None, :]).ravel()
    weights = (half_lengths[:, None] * reference_weights[None, :]).ravel()
    return QuadratureRule(nodes=nodes, weights=weights, target_tol=target_tol)


def _minimum_potential(params: ModelParams) -> float:
    return -(params.t**2) / (4 * params.g) if params.t < 0 else 0.0


def _initial_half_width(params: ModelParams, n_max: int) -> float:
    edge = outer_support_edge(params, (n_max + 1) / params.N)
    return edge + 3 / math.sqrt(params.N) + 0.5


def _initial_panels(params: ModelParams, n_max: int, half_width: float) -> int:
    return max(8, math.ceil((n_max + 1) / 10 + half_width * math.sqrt(params.N) / 4))


# Stieltjes procedure
# -------------------


def stieltjes_recurrence(
    params: ModelParams,
    n_max: int,
    tol: float = 1e-11,
    reduced_nodes: bool = False,
) -> RecurrenceData:
    """
    Recurrence coefficients R_1..R_{n_max} and log h_0..log h_{n_max}.

    The rule is widened until every psi_n is below 1e-20 (relative) at its ends, then its
    panel count is doubled until the R_n agree to tol between successive rules.

    Args:
        reduced_nodes: debug hook. Use a coarse two-panel rule and skip the refinement, so
                       that the coefficients are wrong but self-consistent on their own rule.

    Raises:
        DomainError, if n_max exceeds what the node budget supports.
        OrthogonalityLossError, if the Gram matrix is not the identity even after
                                reorthogonalization.
        QuadratureError, if the coefficients do not stabilize under refinement.
    """
    if n_max < 1:
        raise DomainError(f"n_max must be at least 1, got {n_max}.")
    nodes_per_panel = settings.GL_NODES_PER_PANEL
    half_width = _initial_half_width(params, n_max)

    if reduced_nodes:
        rule = composite_gauss_legendre(half_width, 2, n_max // 2 + 12)
        _check_node_budget(n_max, rule)
        logger.warning("Stieltjes procedure running on a reduced rule (debug hook).")
        recurrence, _ = _lanczos(params, rule, n_max)
        return recurrence

    with settings.TIMER as timer:
        panels = _initial_panels(params, n_max, half_width)
        for _ in range(_MAX_WIDENINGS):
            rule = composite_gauss_legendre(half_width, panels, nodes_per_panel, tol)
            _check_node_budget(n_max, rule)
            recurrence, Q = _lanczos(params, rule, n_max)
            tail = _tail_size(Q, rule)
            if tail <= _TAIL_TOLERANCE:
                break
            logger.debug(f"psi tail {tail:.2e} at L={half_width:.3f}; widening.")
            half_width *= 1.3
            panels = math.ceil(panels * 1.3)
        else:
            raise QuadratureError(f"Quadrature interval for {params} kept growing", tail)

        difference = math.inf
        for _ in range(_MAX_DOUBLINGS):
            panels *= 2
            rule = composite_gauss_legendre(half_width, panels, nodes_per_panel, tol)
            _check_node_budget(n_max, rule)
            refined, _ = _lanczos(params, rule, n_max)
            difference = float(np.max(np.abs(refined.R - recurrence.R)))
            recurrence = refined
            if difference <= tol * max(1.0, float(np.max(recurrence.R))):
                break
        else:
            raise QuadratureError(
                f"Recurrence coefficients for {params} did not stabilize under node doubling",
                difference,
            )

    logger.info(
        f"Stieltjes procedure for {params}, n_max={n_max}: {len(rule.nodes)} nodes on "
        f"[-{half_width:.3f}, {half_width:.3f}], Gram defect {recurrence.gram_defect:.2e} "
        f"({timer.duration_in_s:.2f}s)."
    )
    return recurrence


def _check_node_budget(n_max: int, rule: QuadratureRule) -> None:
    if n_max + 1 > len(rule.nodes):
        raise DomainError(
            f"n_max={n_max} needs at least {n_max + 1} quadrature nodes, "
            f"the rule has {len(rule.nodes)}."
        )
    if len(rule.nodes) > _MAX_NODES:
        raise DomainError(f"n_max={n_max} needs more than {_MAX_NODES} quadrature nodes.")


def _shifted_weights(params: ModelParams, rule: QuadratureRule) -> NDArray[np.float64]:
    """
    Quadrature weights for e^{-N(V - min V)}, which peaks at 1.
    """
    exponent = params.N * (potential(params, rule.nodes) - _minimum_potential(params))
    return rule.weights * np.exp(-exponent)


def _lanczos(
    params: ModelParams, rule: QuadratureRule, n_max: int
) -> tuple[RecurrenceData, NDArray[np.float64]]:
    """
    Lanczos on diag(nodes), started from the square root of the discrete weight.

    Row k of the returned matrix holds psi_k at the nodes times the square root of the
    Gauss-Legendre weights. The weight is even and the nodes symmetric, so the diagonal
    recurrence coefficients vanish and only R_n = beta_n^2 is kept.
    """
    Q, betas = _lanczos_vectors(params, rule, n_max, reorthogonalize=False)
    defect = _gram_defect(Q)
    bound = settings.ORTHOGONALITY_TOL
    if defect > bound:
        logger.warning(f"Gram defect {defect:.2e} exceeds {bound:.0e}; reorthogonalizing.")
        Q, betas = _lanczos_vectors(params, rule, n_max, reorthogonalize=True)
        defect = _gram_defect(Q)
        if defect > bound:
            raise OrthogonalityLossError(defect, bound)

    R = np.concatenate([[0.0], betas**2])
    log_h0 = math.log(float(np.sum(_shifted_weights(params, rule)))) - params.N * (
        _minimum_potential(params)
    )
    log_h = log_h0 + np.concatenate([[0.0], np.cumsum(np.log(R[1:]))])
    recurrence = RecurrenceData(R=R, log_h=log_h, params=params, gram_defect=defect, rule=rule)
    return recurrence, Q


def _lanczos_vectors(
    params: ModelParams, rule: QuadratureRule, n_max: int, reorthogonalize: bool
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    x = rule.nodes
    shifted = _shifted_weights(params, rule)
    Q = np.zeros((n_max + 1, len(x)))
    betas = np.zeros(n_max)
    Q[0] = np.sqrt(shifted) / math.sqrt(float(np.sum(shifted)))
    for k in range(n_max):
        r = x * Q[k]
        if k > 0:
            r -= betas[k - 1] * Q[k - 1]
        if reorthogonalize:
            for _ in range(2):
                r -= Q[: k + 1].T @ (Q[: k + 1] @ r)
        beta = float(np.linalg.norm(r))
        if beta == 0.0:
            raise OrthogonalityLossError(observed=math.inf, bound=settings.ORTHOGONALITY_TOL)
        Q[k + 1] = r / beta
        betas[k] = beta
    return Q, betas


def _gram_defect(Q: NDArray[np.float64]) -> float:
    if settings.EXTENDED_PRECISION_GRAM:
        Q_ext = Q.astype(np.longdouble)
        gram = Q_ext @ Q_ext.T
    else:
        gram = Q @ Q.T
    return float(np.max(np.abs(gram - np.eye(len(Q)))))


def _tail_size(Q: NDArray[np.float64], rule: QuadratureRule) -> float:
    """
    The largest |psi_k| at the two outermost nodes, relative to the largest |psi_k| overall.
    """
    values = np.abs(Q) / np.sqrt(rule.weights)
    return float(np.max(values[:, [0, -1]])) / max(float(np.max(values)), 1e-300)


# psi-functions
# -------------


def _recurrence_tables(
    evaluator: PsiEvaluator, n_top: int, z: ArrayLike
) -> tuple[NDArray[np.complex128], NDArray[np.complex128], NDArray[np.float64]]:
    """
    Mantissas of psi_k and psi_k' for k = 0..n_top, and the log-scale of each row.

    psi_k(z) = mantissa_k * exp(log_scale_k). Rows are rescaled whenever the mantissa
    passes 1e150.
    """
    if n_top > evaluator.n_max:
        raise DomainError(f"n={n_top} exceeds the recurrence data (n_max={evaluator.n_max}).")
    params = evaluator.params
    R = evaluator.recurrence.R
    sqrt_R = np.sqrt(R)
    z = np.atleast_1d(np.asarray(z, dtype=complex))

    log_psi0 = -0.5 * evaluator.recurrence.log_h[0] - params.N * potential(params, z) / 2
    scale = log_psi0.real.copy()
    current = np.exp(1j * log_psi0.imag)
    current_d = -params.N * potential_derivative(params, z) / 2 * current
    previous = np.zeros_like(current)
    previous_d = np.zeros_like(current)

    psi = np.zeros((n_top + 1, len(z)), dtype=complex)
    dpsi = np.zeros((n_top + 1, len(z)), dtype=complex)
    scales = np.zeros((n_top + 1, len(z)))
    psi[0], dpsi[0], scales[0] = current, current_d, scale

    for k in range(n_top):
        following = (z * current - sqrt_R[k] * previous) / sqrt_R[k + 1]
        following_d = (current + z * current_d - sqrt_R[k] * previous_d) / sqrt_R[k + 1]
        previous, previous_d = current, current_d
        current, current_d = following, following_d

        large = np.abs(current) > _RESCALE_THRESHOLD
        if np.any(large):
            factor = np.where(large, 1 / _RESCALE_THRESHOLD, 1.0)
            current, current_d = current * factor, current_d * factor
            previous, previous_d = previous * factor, previous_d * factor
            scale = scale - np.log(factor)
        psi[k + 1], dpsi[k + 1], scales[k + 1] = current, current_d, scale

    return psi, dpsi, scales


def _finish(values: NDArray[np.complex128], scales: NDArray[np.float64], z: ArrayLike):
    result = values * np.exp(scales)
    if np.ndim(z) == 0:
        return complex(result[..., 0]) if result.ndim == 1 else result[..., 0]
    return result


def psi(evaluator: PsiEvaluator, n: int, z: ArrayLike):
    """
    psi_n(z), for scalar or array z. Values that underflow are returned as 0.
    """
    table, _, scales = _recurrence_tables(evaluator, n, z)
    return _finish(table[n], scales[n], z)


def psi_derivative(evaluator: PsiEvaluator, n: int, z: ArrayLike):
    """
    psi_n'(z), by the differentiated recurrence.
    """
    _, table, scales = _recurrence_tables(evaluator, n, z)
    return _finish(table[n], scales[n], z)


def psi_scaled(
    evaluator: PsiEvaluator, n: int, z: ArrayLike
) -> tuple[NDArray[np.complex128], NDArray[np.float64]]:
    """
    psi_n(z) as (mantissa, log_scale), with psi_n = mantissa * exp(log_scale).

    Use this where psi_n itself would underflow or overflow.
    """
    table, _, scales = _recurrence_tables(evaluator, n, z)
    return table[n], scales[n]


def psi_table(evaluator: PsiEvaluator, n_top: int, z: ArrayLike) -> NDArray[np.complex128]:
    """
    psi_0(z)..psi_{n_top}(z) as an array of shape (n_top + 1, len(z)).
    """
    table, _, scales = _recurrence_tables(evaluator, n_top, z)
    return table * np.exp(scales)


def orthonormality_defect(
    evaluator: PsiEvaluator, n_top: int, rule: QuadratureRule | None = None
) -> float:
    """
    max |G - I| for the Gram matrix G_nm = int psi_n psi_m, n, m <= n_top.

    By default the integrals are taken on a rule twice as fine as the one the recurrence
    was computed on, so a recurrence from a poor rule shows up here.
    """
    if rule is None:
        rule = _check_rule(evaluator.params, n_top)
    table = psi_table(evaluator, n_top, rule.nodes).real
    gram = (table * rule.weights) @ table.T
    return float(np.max(np.abs(gram - np.eye(n_top + 1))))


def _check_rule(params: ModelParams, n_top: int) -> QuadratureRule:
    half_width = 1.3 * _initial_half_width(params, n_top)
    panels = 2 * _initial_panels(params, n_top, half_width)
    return composite_gauss_legendre(half_width, panels, settings.GL_NODES_PER_PANEL)


# Christoffel-Darboux kernel
# --------------------------


def cd_kernel(evaluator: PsiEvaluator, N_level: int, z: ArrayLike, w: ArrayLike):
    """
    Q_N(z, w) = sum_{k<N} psi_k(z) psi_k(w), by the Christoffel-Darboux formula

        Q_N(z, w) = sqrt(R_N) (psi_N(z) psi_{N-1}(w) - psi_{N-1}(z) psi_N(w)) / (z - w),

    switching to the confluent form sqrt(R_N) (psi_N' psi_{N-1} - psi_{N-1}' psi_N) when
    |z - w| < 1e-6. Real z and w; broadcasts.
    """
    if not 1 <= N_level <= evaluator.n_max:
        raise DomainError(f"N_level must be in [1, {evaluator.n_max}], got {N_level}.")
    z_arr, w_arr = np.broadcast_arrays(np.asarray(z, dtype=float), np.asarray(w, dtype=float))
    shape = z_arr.shape
    z_flat, w_flat = z_arr.ravel(), w_arr.ravel()
    sqrt_R = math.sqrt(evaluator.recurrence.R[N_level])

    psi_z, dpsi_z, scale_z = _recurrence_tables(evaluator, N_level, z_flat)
    psi_w, _, scale_w = _recurrence_tables(evaluator, N_level, w_flat)
    top_z = (psi_z[N_level] * np.exp(scale_z[N_level])).real
    low_z = (psi_z[N_level - 1] * np.exp(scale_z[N_level - 1])).real
    dtop_z = (dpsi_z[N_level] * np.exp(scale_z[N_level])).real
    dlow_z = (dpsi_z[N_level - 1] * np.exp(scale_z[N_level - 1])).real
    top_w = (psi_w[N_level] * np.exp(scale_w[N_level])).real
    low_w = (psi_w[N_level - 1] * np.exp(scale_w[N_level - 1])).real

    difference = z_flat - w_flat
    confluent = np.abs(difference) < _CONFLUENT_THRESHOLD
    safe_difference = np.where(confluent, 1.0, difference)
    off_diagonal = sqrt_R * (top_z * low_w - low_z * top_w) / safe_difference
    diagonal = sqrt_R * (dtop_z * low_z - dlow_z * top_z)
    values = np.where(confluent, diagonal, off_diagonal).reshape(shape)
    return float(values) if values.ndim == 0 else values


def direct_kernel_sum(evaluator: PsiEvaluator, N_level: int, z: ArrayLike, w: ArrayLike):
    """
    Q_N(z, w) summed term by term, as an oracle for cd_kernel.
    """
    z_arr, w_arr = np.broadcast_arrays(np.asarray(z, dtype=float), np.asarray(w, dtype=float))
    psi_z = psi_table(evaluator, N_level - 1, z_arr.ravel()).real
    psi_w = psi_table(evaluator, N_level - 1, w_arr.ravel()).real
    values = np.sum(psi_z * psi_w, axis=0).reshape(z_arr.shape)
    return float(values) if values.ndim == 0 else values


def correlation(evaluator: PsiEvaluator, N_level: int, points: ArrayLike) -> float:
    """
    The m-point correlation function det[Q_N(z_i, z_j)].

    Raises:
        CoincidentPointsError, if two points are closer than 1e-9.
    """
    points_arr = np.asarray(points, dtype=float)
    separations = np.abs(points_arr[:, None] - points_arr[None, :])
    np.fill_diagonal(separations, np.inf)
    if len(points_arr) > 1 and np.min(separations) <= _COINCIDENT_THRESHOLD:
        raise CoincidentPointsError(
            "Correlation points must be distinct; use cd_kernel(z, z) for diagonal limits."
        )
    matrix = cd_kernel(evaluator, N_level, points_arr[:, None], points_arr[None, :])
    return float(np.linalg.det(np.atleast_2d(matrix)))


# Lax pair
# --------


def lax_matrix(params: ModelParams, R_prev: float, R_n: float, R_next: float, z: complex):
    """
    The matrix A_n(z) of psi_vec_n' = N A_n psi_vec_n, where psi_vec_n = (psi_n, psi_{n-1}).
    """
    t, g = params.t, params.g
    diagonal = t * z / 2 + g * z**3 / 2 + g * z * R_n
    sqrt_R = math.sqrt(R_n)
    return np.array(
        [
            [-diagonal, sqrt_R * (t + g * z**2 + g * R_n + g * R_next)],
            [-sqrt_R * (t + g * z**2 + g * R_prev + g * R_n), diagonal],
        ],
        dtype=complex,
    )


def shift_matrix(R_n: float, R_next: float, z: complex):
    """
    The matrix U_n(z) of psi_vec_{n+1} = U_n psi_vec_n.
    """
    return np.array(
        [[z / math.sqrt(R_next), -math.sqrt(R_n / R_next)], [1, 0]],
        dtype=complex,
    )


def lax_residuals(recurrence: RecurrenceData, n: int, z_grid: ArrayLike) -> tuple[float, float]:
    """
    Residuals of the Lax pair at level n over a grid of complex points.

    Returns:
        (compatibility, evolution): the max over the grid of
        |U_n' - N A_{n+1} U_n + N U_n A_n| (max-norm of the matrix), and of
        |psi_vec_n' - N A_n psi_vec_n| / (N |A_n| |psi_vec_n|), with psi_vec_n' from a
        five-point stencil of step 1e-4 max(1, |z|).
    """
    if not 1 <= n <= recurrence.n_max - 2:
        raise DomainError(f"n must be in [1, {recurrence.n_max - 2}], got {n}.")
    params = recurrence.params
    N = params.N
    R = recurrence.R
    evaluator = PsiEvaluator.from_recurrence(recurrence)
    derivative_U = np.array([[1 / math.sqrt(R[n + 1]), 0], [0, 0]], dtype=complex)

    compatibility = 0.0
    evolution = 0.0
    for z in np.atleast_1d(np.asarray(z_grid, dtype=complex)):
        A_n = lax_matrix(params, R[n - 1], R[n], R[n + 1], z)
        A_next = lax_matrix(params, R[n], R[n + 1], R[n + 2], z)
        U_n = shift_matrix(R[n], R[n + 1], z)
        defect = derivative_U - N * A_next @ U_n + N * U_n @ A_n
        compatibility = max(compatibility, float(np.max(np.abs(defect))))

        h = 1e-4 * max(1.0, abs(z))
        stencil = z + h * np.array([-2, -1, 1, 2])
        table = psi_table(evaluator, n, np.append(stencil, z))
        vectors = np.stack([table[n], table[n - 1]])
        derivative = (
            vectors[:, 0] - 8 * vectors[:, 1] + 8 * vectors[:, 2] - vectors[:, 3]
        ) / (12 * h)
        at_z = vectors[:, 4]
        scale = N * np.max(np.abs(A_n)) * np.max(np.abs(at_z))
        if scale > 0:
            evolution = max(
                evolution, float(np.max(np.abs(derivative - N * A_n @ at_z))) / scale
            )

    return compatibility, evolution


def perturbed(recurrence: RecurrenceData, amount: float) -> RecurrenceData:
    """
    A copy of the recurrence data with every R_n (n >= 1) shifted by amount.

    Debug hook for checks that must detect inconsistent coefficients.
    """
    R = recurrence.R.copy()
    R[1:] += amount
    log_h = recurrence.log_h[0] + np.concatenate([[0.0], np.cumsum(np.log(R[1:]))])
    return RecurrenceData(
        R=R, log_h=log_h, params=recurrence.params, gram_defect=recurrence.gram_defect
    )
