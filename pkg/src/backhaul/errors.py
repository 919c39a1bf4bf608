"""Exception hierarchy. The CLI maps each family onto an exit code."""


class BackhaulError(Exception):
    """Base class for all package errors."""


class DomainError(BackhaulError, ValueError):
    """An argument lies outside the domain of the operation."""


class ConfigError(BackhaulError, ValueError):
    """Scenario configuration is malformed or violates an invariant."""


class NumericalGuardError(BackhaulError):
    """A numerical safety limit was hit."""


class OracleSizeError(NumericalGuardError):
    """Exhaustive enumeration would exceed the composition guard."""


class SingularStackError(NumericalGuardError):
    """The stacked zero-forcing constraint matrix is rank deficient."""

    def __init__(self, message, trial_index=None):
        super().__init__(message)
        self.trial_index = trial_index
