"""Exception types shared across the package."""


class InfoBridgeError(Exception):
    """Base class for all package-specific errors."""


class DomainError(InfoBridgeError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class NonConvergence(InfoBridgeError, RuntimeError):
    """Adaptive quadrature exhausted its subdivision budget without meeting tolerance."""


class EnvelopeError(InfoBridgeError, RuntimeError):
    """No valid truncation point could be derived for a semi-infinite integral."""


class IntegrabilityError(InfoBridgeError, RuntimeError):
    """The integrand grows too fast for the tail envelope to bound it."""


class InsufficientPaths(InfoBridgeError, ValueError):
    """A Monte Carlo reduction was asked for with too few paths to be meaningful."""


class ConfigError(InfoBridgeError, ValueError):
    """A run configuration is malformed or inconsistent."""
