"""Exception types shared across the package."""


class IsochronError(Exception):
    """Base class for all package-specific failures."""


class NonConvergent(IsochronError):
    """An iterative numerical procedure exhausted its budget before meeting tolerance."""


class DomainError(IsochronError):
    """An evaluator was called, or produced a value, outside its valid domain."""


class NoBracket(IsochronError):
    """Root finding was requested on an interval without a sign change."""


class StencilOutOfDomain(IsochronError):
    """A finite-difference stencil point could not be evaluated."""


class OriginState(IsochronError):
    """Action-angle coordinates requested at (or too close to) the equilibrium."""


class BlowUp(IsochronError):
    """Trajectory exceeded the overflow guard; carries the last good state."""

    def __init__(self, state, message="orbit exceeded the overflow guard"):
        super().__init__(message)
        self.state = state


class AngleNotMonotone(IsochronError):
    """The running angle reversed direction; energy too low for the angle-time exchange."""


class OriginApproach(IsochronError):
    """An orbit passed too close to the origin for angle tracking."""


class DegenerateFit(IsochronError):
    """A regression was requested on data with (numerically) zero variance."""


class ConfigError(IsochronError):
    """Invalid or malformed run configuration."""
