"""Exception and warning types shared across the package."""


class SpinrollError(Exception):
    """Base class for all errors raised by this package."""


class PoleError(SpinrollError, ArithmeticError):
    """A formula was evaluated at (or numerically on top of) a coordinate pole."""


class DomainError(SpinrollError, ValueError):
    """An inverse-trigonometric argument left its domain by more than the clamp tolerance."""


class DomainClampWarning(UserWarning):
    """An inverse-trigonometric argument was clamped back into [-1, 1]."""


class NumericalDomain(SpinrollError, ArithmeticError):
    """A radicand or inverse-trig argument in the minimum-distance chain is out of domain."""


class InvalidGoal(SpinrollError, ValueError):
    """The goal violates the assumptions of the requested computation."""


class SteeringSingularity(SpinrollError, ArithmeticError):
    """The steering angle is undefined (e.g. the torsion input vanished)."""


class StepFailure(SpinrollError, RuntimeError):
    """The adaptive integrator could not make progress."""


class DegenerateError(SpinrollError, ArithmeticError):
    """A ratio used by the planner has a vanishing denominator."""


class InfeasibleGoal(SpinrollError, ValueError):
    """The plane displacement is shorter than the required minimum distance."""

    def __init__(self, message, d=None):
        super().__init__(message)
        self.d = d


class ExcludedDirection(SpinrollError, ValueError):
    """The plane direction lies inside the uncontrollable band around pi/4."""


class SingularScale(SpinrollError, ArithmeticError):
    """The smooth time scale is undefined because alpha_s vanished."""


class PathDrift(SpinrollError, RuntimeError):
    """A re-timed trajectory no longer follows the original paths."""


class ConfigError(SpinrollError, ValueError):
    """A run configuration could not be parsed or validated."""
