"""Exception hierarchy.

Each error class carries the CLI exit code it maps to, so the command layer
never has to guess a category.
"""


class RelKeplerError(Exception):
    exit_code = 1


class ConfigError(RelKeplerError, ValueError):
    exit_code = 2

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class DomainError(RelKeplerError, ValueError):
    """Evaluation outside the admissible domain (origin, |v| >= c, bad coefficients)."""

    exit_code = 4


class RegionError(DomainError):
    """A state sits in the wrong energy region (Omega_h / Sigma_h / forbidden)."""


class EnergyMismatch(DomainError):
    """Initial data does not carry the energy level it was declared with."""


class SpiralRegime(DomainError):
    """Angular momentum too small for a non-collision ell=4 orbit (L^2 <= m*beta)."""


class AsymptoteError(DomainError):
    pass


class IntegrationError(RelKeplerError):
    """Integration stopped early. ``last_state`` and ``trajectory`` hold what was computed."""

    exit_code = 3

    def __init__(self, message, t=None, last_state=None, trajectory=None):
        super().__init__(message)
        self.t = t
        self.last_state = last_state
        self.trajectory = trajectory


class MaxStepsExceeded(IntegrationError):
    pass


class StepUnderflow(IntegrationError):
    pass


class DomainExit(IntegrationError):
    exit_code = 4


class NonMonotoneClock(IntegrationError):
    pass


class InsufficientEvents(RelKeplerError):
    exit_code = 3
