"""Exception hierarchy shared across the package.

Three branches matter to callers: configuration problems (bad input
data), solver failures (an iteration did not converge), and degeneracies
(a quantity that must stay away from zero dropped below its floor).
The CLI maps these onto distinct exit codes and message prefixes.
"""


class VolformError(Exception):
    """Base class for all package errors."""


class ConfigError(VolformError):
    """Invalid user-supplied configuration (field spec, scheme name, flags)."""


class UnknownFieldError(ConfigError):
    """Requested a builtin vector field that does not exist."""


class SolverError(VolformError):
    """An iterative solve failed to converge."""


class NewtonDivergenceError(SolverError):
    """Scalar Newton iteration exceeded its iteration budget.

    Carries the name of the defining equation and the point at which the
    solve was attempted.
    """

    def __init__(self, equation: str, point, iterations: int, residual: float):
        self.equation = equation
        self.point = tuple(float(v) for v in point)
        self.iterations = iterations
        self.residual = residual
        super().__init__(
            f"Newton iteration for {equation} did not converge after "
            f"{iterations} steps at point {self.point} (residual {residual:.3e})"
        )


class QuadratureFailureError(SolverError):
    """Adaptive quadrature could not reach the requested tolerance."""


class DegeneracyError(VolformError):
    """A nondegeneracy requirement was violated."""


class TwistViolationError(DegeneracyError):
    """A mixed second partial required to be nonzero vanished during a solve."""

    def __init__(self, equation: str, point, value: float):
        self.equation = equation
        self.point = tuple(float(v) for v in point)
        self.value = value
        super().__init__(
            f"twist condition violated in {equation} at point {self.point}: "
            f"derivative {value:.3e} is below the degeneracy floor"
        )


class TwistDegenerateError(DegeneracyError):
    """A matrix entry required nonzero by a scheme construction is too small."""


class StepTooLargeError(DegeneracyError):
    """The step size sits within the exclusion band of a denominator zero."""


class LegendreFailureError(DegeneracyError):
    """The momentum-velocity inversion of a potential is ill-posed."""


class DegenerateCoefficientError(DegeneracyError):
    """Attempted to solve a linear relation for a symbol with a ~zero coefficient."""


class SelfReferenceError(VolformError):
    """Substitution target expression references the symbol being replaced."""
