"""Exception types raised across the package."""


class CavityAdderError(Exception):
    """Base class for all package errors."""


class InvalidDimensionError(CavityAdderError):
    """A Fock truncation or operator dimension is not usable."""


class LayoutMismatchError(CavityAdderError):
    """Two objects live on different tensor-space layouts."""


class TruncationError(CavityAdderError):
    """A state does not fit the requested Fock truncation.

    Carries ``minimal_dim``, the smallest truncation that would satisfy the
    tail tolerance.
    """

    def __init__(self, message: str, minimal_dim: int | None = None):
        super().__init__(message)
        self.minimal_dim = minimal_dim


class PositivityError(CavityAdderError):
    """A quantity that must be (approximately) positive is not."""


class ResonanceError(CavityAdderError):
    """Dispersive shifts are undefined at Delta = 0 or Delta = anharmonicity."""


class InvalidScheduleError(CavityAdderError):
    """A (k1, k2) schedule has a vanishing denominator."""


class RegimeViolationError(CavityAdderError):
    """A schedule produced a detuning with |Delta| <= anharmonicity."""


class ScheduleInconsistencyError(CavityAdderError):
    """The swap and idle timing conditions cannot hold simultaneously."""


class EmptyBranchError(CavityAdderError):
    """A projective measurement branch has (numerically) zero probability."""


class DestructiveInterferenceError(CavityAdderError):
    """The adder output is undefined because the superposition cancels."""


class IntegrationError(CavityAdderError):
    """The ODE step controller failed; ``last_time`` is the last good time."""

    def __init__(self, message: str, last_time: float | None = None):
        super().__init__(message)
        self.last_time = last_time


class ConfigError(CavityAdderError):
    """A scenario/config file or CLI parameter set is invalid."""
