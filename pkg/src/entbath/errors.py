"""Exception types used across the package.

Each class marks one failure mode of the simulator; callers that want to
distinguish configuration mistakes from numerical breakdowns can catch the
corresponding subclass instead of parsing messages.
"""

from __future__ import annotations


class EntbathError(Exception):
    """Base class for all errors raised by this package."""


class InvalidDimensionError(EntbathError):
    """Operator or state dimensions are inconsistent with the geometry."""


class InvalidArgumentError(EntbathError):
    """An argument is outside the domain of the operation."""


class InvalidConfigurationError(EntbathError):
    """A parameter set or config file is internally inconsistent."""


class DegenerateConfigurationError(InvalidConfigurationError):
    """Resonator frequencies are degenerate where distinct ones are required
    (or vice versa); the message names the builder to use instead."""


class NumericalFailureError(EntbathError):
    """A numerical routine (quadrature, eigensolver, exponential) failed to
    converge or returned non-finite values."""


class StiffnessError(NumericalFailureError):
    """The ODE integrator could not meet the tolerance at its minimum step.

    Attributes:
        t_reached: integration time reached before the failure.
    """

    def __init__(self, message: str, t_reached: float | None = None):
        super().__init__(message)
        self.t_reached = t_reached


class IntegrationQualityError(EntbathError):
    """An integrated state violated trace, Hermiticity, or positivity budgets."""


class NonUniqueSteadyStateError(EntbathError):
    """The generator has a degenerate null space; no unique fixed point.

    Attributes:
        null_dimension: number of near-zero singular values found.
    """

    def __init__(self, message: str, null_dimension: int | None = None):
        super().__init__(message)
        self.null_dimension = null_dimension


class TruncationWarningError(EntbathError):
    """Truncation leakage exceeded its budget; rerun with a larger Fock cutoff."""
