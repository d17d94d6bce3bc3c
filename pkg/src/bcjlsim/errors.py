"""Exception types raised across the simulator."""


class DimensionError(ValueError):
    """Operand shapes or subsystem indices do not line up."""


class NotPSDError(ValueError):
    """A matrix expected to be positive semidefinite has a negative eigenvalue."""


class ValidationError(ValueError):
    """A value violates a type invariant (norm, trace, completeness, ...)."""


class SteeringInfeasibleError(ValueError):
    """Target ensemble does not average to the reduced state of the purification."""


class InvalidCodeError(ValueError):
    """Generator matrix is not a valid binary linear code."""


class InfeasibleContextError(ValueError):
    """Shared (C, r) context leaves one of the commitment classes empty."""


class FeasibilityError(ValueError):
    """Requested exact enumeration exceeds the supported size."""


class ConfigError(ValueError):
    """Bad command-line or run configuration."""
