"""Path-following AUV simulation with PPO-trained and PID-assisted controllers."""

from .errors import (AuvError, ConfigError, NonFiniteLoss, NonPositiveDefinite, NumericalDivergence,
                     ShapeMismatch, SingularAttitude)

__version__ = "0.1.0"

__all__ = ["AuvError", "ConfigError", "NonFiniteLoss", "NonPositiveDefinite", "NumericalDivergence",
           "ShapeMismatch", "SingularAttitude", "__version__"]
