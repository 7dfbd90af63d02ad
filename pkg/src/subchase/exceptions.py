"""Exception types raised across the package."""


class CapacityError(ValueError):
    """An exact (exponential-time) routine was asked to handle too large an input."""


class DomainError(ValueError):
    """The input lies outside the mathematical domain of the operation."""


class InfeasibleError(ValueError):
    """A constraint cannot be satisfied inside the unit box."""


class InstanceError(ValueError):
    """A chase instance or stream failed validation."""


class InvariantError(RuntimeError):
    """An internal invariant was breached. Always a bug."""
