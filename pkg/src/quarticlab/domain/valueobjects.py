from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from quarticlab.exceptions import DomainError


@dataclass(frozen=True)
class ModelParams:
    """
    Parameters of the quartic potential V(M) = t/2 M^2 + g/4 M^4 and the weight scale N.
    """

    t: float
    g: float
    N: int

    def __post_init__(self) -> None:
        if not self.g > 0:
            raise DomainError(f"The quartic coefficient g must be positive, got {self.g}.")
        if self.N < 1:
            raise DomainError(f"The weight scale N must be at least 1, got {self.N}.")

    def __str__(self) -> str:
        return f"t={self.t}, g={self.g}, N={self.N}"

    def with_N(self, N: int) -> ModelParams:
        return ModelParams(t=self.t, g=self.g, N=N)


class Regime(enum.Enum):
    ONE_CUT = "one-cut"
    CRITICAL = "critical"
    TWO_CUT = "two-cut"


@dataclass(frozen=True)
class DerivedConstants:
    """
    The closed-form constants of the quartic model.

    Constants built on z_0 only exist for t < 0; asking for them otherwise raises DomainError.
    """

    t: float
    g: float

    @property
    def t_c(self) -> float:
        return -2 * math.sqrt(self.g)

    @property
    def lambda_c(self) -> float:
        return self.t**2 / (4 * self.g)

    @property
    def z_0(self) -> float:
        self._require_negative_t("z_0")
        return math.sqrt(-2 * self.t / self.g)

    @property
    def c_0(self) -> float:
        self._require_negative_t("c_0")
        return (self.t**2 / (2 * self.g)) ** (1 / 3)

    @property
    def c_1(self) -> float:
        self._require_negative_t("c_1")
        return (2 * abs(self.t) / self.g**2) ** (1 / 3)

    @property
    def c_2(self) -> float:
        if self.t == 0:
            raise DomainError("c_2 is not defined at t = 0.")
        return 0.5 * (1 / (2 * abs(self.t) * self.g)) ** (1 / 3)

    @property
    def C(self) -> float:
        self._require_negative_t("C")
        return (32 / (abs(self.t) * self.g)) ** (1 / 6)

    @property
    def c_9(self) -> float:
        self._require_negative_t("c_9")
        return 2 ** (14 / 3) * self.g ** (2 / 3) / abs(self.t) ** (4 / 3)

    def _require_negative_t(self, name: str) -> None:
        if not self.t < 0:
            raise DomainError(f"{name} is only defined for t < 0 (got t={self.t}).")


@dataclass(frozen=True)
class EquilibriumDensity:
    """
    The limiting eigenvalue density in one of the three regimes.

    The endpoints are listed in increasing order: (-a, a) for one interval, (-a, -b, b, a)
    for two. The density is (b_0 + b_2 x^2) sqrt(a^2 - x^2) / pi on one interval and
    (b_2 / pi) |x| sqrt((a^2 - x^2)(x^2 - b^2)) on two.
    """

    regime: Regime
    endpoints: tuple[float, ...]
    b_0: float
    b_2: float

    @property
    def a(self) -> float:
        return self.endpoints[-1]

    @property
    def b(self) -> float:
        """
        The inner endpoint, 0 when the support is one interval.
        """
        if self.regime is Regime.TWO_CUT:
            return self.endpoints[2]
        return 0.0

    @property
    def intervals(self) -> tuple[tuple[float, float], ...]:
        points = self.endpoints
        return tuple((points[i], points[i + 1]) for i in range(0, len(points), 2))


class TrajectoryMethod(enum.Enum):
    FORWARD = "forward"
    VARIATIONAL = "variational"
    QUADRATURE_ORACLE = "quadrature-oracle"


@dataclass(frozen=True, eq=False)
class Trajectory:
    """
    Recurrence coefficients R_0..R_{n_max}, with R_0 = 0.

    For forward recursion, blowup_index is the first index at which the bound on R_n
    failed; the trajectory is truncated just before it.
    """

    params: ModelParams
    R: NDArray[np.float64]
    method: TrajectoryMethod
    # R_{n_max+1}, needed for the last string residual; NaN when unknown.
    R_next: float = float("nan")
    converged: bool = True
    residual: float = 0.0
    iterations: int = 0
    blowup_index: int | None = None

    @property
    def n_max(self) -> int:
        return len(self.R) - 1


@dataclass(frozen=True)
class FixedPoints:
    """
    Attractors of the string equation at n/N = lambda_.

    Below lambda_c the two branches satisfy R + L = -t/g and R L = lambda_/g;
    at and above it they coincide.
    """

    lambda_: float
    branch_R: float
    branch_L: float

    @property
    def is_split(self) -> bool:
        return self.branch_R != self.branch_L


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    nodes: NDArray[np.float64]
    weights: NDArray[np.float64]
    target_tol: float


@dataclass(frozen=True, eq=False)
class RecurrenceData:
    """
    Recurrence coefficients and log-normalizations of the monic orthogonal polynomials.

    R[0] = 0 by convention, and R[n] = exp(log_h[n] - log_h[n - 1]) for n >= 1.
    """

    R: NDArray[np.float64]
    log_h: NDArray[np.float64]
    params: ModelParams
    gram_defect: float = 0.0
    # The rule the coefficients were computed on, when they come from quadrature.
    rule: QuadratureRule | None = None

    @property
    def n_max(self) -> int:
        return len(self.R) - 1


@dataclass(frozen=True)
class TurningPoints:
    """
    Roots in s^2 of s^4 + (y/2) s^2 + q = 0, with q = (v^2 - 4 u'^2) / 16.
    """

    s1_sq: float
    s2_sq: float
    discriminant: float


@dataclass(frozen=True)
class CheckResult:
    """
    The outcome of one invariant check run by the self test.
    """

    name: str
    observed: float
    bound: float
    passed: bool = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "passed", bool(self.observed <= self.bound))

    def __str__(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name}: observed {self.observed:.3e}, bound {self.bound:.3e}"
