"""Exception hierarchy for the simulator and its estimators."""


class BurgulenceError(Exception):
    """Base class for every error raised by this package."""


class HermitianViolation(BurgulenceError):
    pass


class AliasError(BurgulenceError):
    pass


class BlowUp(BurgulenceError):
    def __init__(self, message: str, t: float | None = None):
        super().__init__(message)
        self.t = t


class StepRejected(BurgulenceError):
    """Raised when the advective CFL guard fails."""

    def __init__(self, message: str, t: float | None = None):
        super().__init__(message)
        self.t = t


class OracleRangeError(BurgulenceError):
    """Cole-Hopf potential too large to exponentiate at this viscosity."""


class WindowError(BurgulenceError):
    pass


class ResolutionError(BurgulenceError):
    pass


class BandError(BurgulenceError):
    pass


class DomainError(BurgulenceError):
    pass


class SampleError(BurgulenceError):
    pass


class PlanError(BurgulenceError):
    """Plan file could not be parsed or violates an invariant."""
