"""Exception types shared across the package."""


class AuvError(Exception):
    """Base class for all package errors."""


class SingularAttitude(AuvError):
    """Pitch is too close to +-pi/2 for the Euler-angle kinematics."""


class NonPositiveDefinite(AuvError):
    """Mass matrix built from a coefficient set is not positive definite."""


class NumericalDivergence(AuvError):
    """Integrated state left the finite range the simulator accepts."""


class ConfigError(AuvError):
    """Invalid configuration, coefficient file, or mode/action mismatch."""


class ShapeMismatch(AuvError, ValueError):
    """Array dimensions do not match the network architecture."""


class NonFiniteLoss(AuvError, FloatingPointError):
    """PPO loss or its gradient became NaN/inf."""
