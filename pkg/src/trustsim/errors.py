"""Exception types shared across the package."""


class TrustSimError(Exception):
    """Base class for all package errors."""


class InvalidDeadlineError(TrustSimError):
    """Deadline does not leave any room after the start time."""


class DuplicateEventError(TrustSimError):
    """A rating event with the same id was already recorded."""


class ContractViolationError(TrustSimError):
    """A caller violated an operation precondition."""


class UndefinedMetricError(TrustSimError):
    """The metric is undefined on the given input (e.g. empty stream)."""


class InvariantViolationError(TrustSimError):
    """A runtime invariant of the simulation was breached."""


class ConfigError(TrustSimError):
    """Invalid experiment configuration."""
