class QuarticLabException(Exception):
    """
    Base exception for all custom quarticlab exceptions to inherit.
    """


class DomainError(QuarticLabException, ValueError):
    """
    Indicates that a quantity was requested outside the parameter range where it is defined.

    For example, the constants built on z_0 only exist for t < 0.
    """


class QuadratureError(QuarticLabException):
    """
    Indicates that a quadrature did not reach the requested tolerance.
    """

    def __init__(self, message: str, achieved_error: float) -> None:
        """
        Args:
            message: Description of the integral that failed.
            achieved_error: The error estimate that was actually reached.
        """
        super().__init__(message)
        self.message = message
        self.achieved_error = achieved_error

    def __str__(self):
        return f"{self.message} (achieved error estimate {self.achieved_error:.3e})"

    def __reduce__(self):
        return QuadratureError, (self.message, self.achieved_error)


class OrthogonalityLossError(QuarticLabException):
    """
    Indicates that the discretized Stieltjes procedure lost orthogonality, even after
    reorthogonalization, so its recurrence coefficients cannot be trusted.
    """

    def __init__(self, observed: float, bound: float) -> None:
        self.observed = observed
        self.bound = bound

    def __str__(self):
        return (
            f"Gram matrix off-diagonal {self.observed:.3e} exceeds {self.bound:.3e}; "
            "recurrence coefficients refused."
        )

    def __eq__(self, other):
        return (self.observed, self.bound) == (other.observed, other.bound)

    def __reduce__(self):
        return OrthogonalityLossError, (self.observed, self.bound)


class ConvergenceError(QuarticLabException):
    """
    Indicates that an iterative solver failed to converge.
    """

    def __init__(self, solver: str, iterations: int, residual: float) -> None:
        """
        Args:
            solver: Name of the solver that failed.
            iterations: Number of iterations performed.
            residual: The residual of the best iterate.
        """
        self.solver = solver
        self.iterations = iterations
        self.residual = residual

    def __str__(self):
        return (
            f"{self.solver} did not converge after {self.iterations} iterations "
            f"(residual {self.residual:.3e})."
        )

    def __eq__(self, other):
        return (self.solver, self.iterations, self.residual) == (
            other.solver,
            other.iterations,
            other.residual,
        )

    def __reduce__(self):
        # Keep this exception pickleable, so it can be sent between worker threads and processes.
        return ConvergenceError, (self.solver, self.iterations, self.residual)


class ExtrapolationError(QuarticLabException):
    """
    Indicates that a Hastings-McLeod grid was asked for a value outside its y range.
    """


class RegionError(QuarticLabException):
    """
    Indicates that an asymptotic approximant was evaluated outside the region where it applies.
    """


class CoincidentPointsError(QuarticLabException):
    """
    Indicates that a correlation determinant was requested at coincident points.

    Use the diagonal (confluent) kernel values instead.
    """


class NoSignChangeError(QuarticLabException):
    """
    Indicates that a root was requested but the function does not change sign on the grid.
    """


class ConfigValidationError(QuarticLabException):
    """
    Indicates that an experiment configuration is invalid.
    """
