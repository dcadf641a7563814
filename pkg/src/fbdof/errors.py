"""Exception types raised across the package."""

import numpy as np


class DimensionError(ValueError):
    """Matrix or antenna dimensions are zero or inconsistent."""


class SingularSystemError(np.linalg.LinAlgError):
    """A least-squares system lacks full column rank."""


class DomainError(ValueError):
    """Input outside the mathematical domain of an operation."""


class PowerConstraintError(ValueError):
    """A transmitter exceeded its per-slot power budget."""


class CausalityError(RuntimeError):
    """An encoder touched feedback or CSI it could not have yet."""


class RegimeError(ValueError):
    """A scheme was invoked outside the antenna regime it supports."""


class DemandMismatchError(ValueError):
    """Symbol pools do not match the broadcast schedule's demand."""


class ModeError(ValueError):
    """Operation not defined for a transcript in this mode."""


class ConfigError(ValueError):
    """Invalid experiment or network configuration."""
