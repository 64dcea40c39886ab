"""Exception hierarchy."""


class NoGoCoolError(Exception):
    """Base class for all package errors."""


class NumericalFailure(NoGoCoolError):
    """A numerical routine produced an unusable result (CLI exit status 3)."""


class ConfigInvalid(NoGoCoolError):
    """Scenario configuration failed validation (CLI exit status 2)."""

    def __init__(self, path: str, message: str):
        self.path = path
        self.message = message
        super().__init__(f"{path}: {message}" if path else message)


class ValidationError(NoGoCoolError, ValueError):
    pass


class NotHermitian(ValidationError):
    pass


class NotUnitary(ValidationError):
    pass


class NotPositiveSemidefinite(ValidationError):
    pass


class InvalidDensityMatrix(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


class InvalidSplit(ValidationError):
    pass


class OverflowGuard(NumericalFailure):
    pass


class DecompositionFailure(NumericalFailure):
    pass


class InfeasiblePairing(NumericalFailure):
    pass


class StepSizeTooLarge(ValidationError):
    pass


class PositivityLoss(NumericalFailure):
    pass


class BoundViolation(NumericalFailure):
    """A sampled unitary beat the analytic bound. Indicates a bug."""
