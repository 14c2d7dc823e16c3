"""Exception types raised by Rabi QST."""


class RabiQSTError(Exception):
    """Base class for all Rabi QST errors."""


class InvalidStateError(RabiQSTError, ValueError):
    """A vector or matrix is not a valid quantum state."""


class DomainError(RabiQSTError, ValueError):
    """An argument lies outside the domain of a conversion."""


class DimensionMismatchError(RabiQSTError, ValueError):
    """Operands have incompatible dimensions."""


class RepresentationError(RabiQSTError):
    """A state cannot be kept in the requested representation."""


class ConfigError(RabiQSTError, ValueError):
    """A simulation or run configuration is invalid."""


class FitError(RabiQSTError):
    """A trace cannot be fitted."""


class InconsistentAmplitudesError(RabiQSTError):
    """Rabi amplitudes do not describe a point on the Bloch sphere (drift or misfit)."""


class AmbiguousStateError(RabiQSTError):
    """Rabi phases leave part of the state undetermined."""
