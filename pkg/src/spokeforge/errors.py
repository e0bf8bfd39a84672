"""Exception hierarchy shared by all spokeforge modules."""


class SpokeForgeError(Exception):
    """Base class for every error raised by the package."""

    exit_code = 1


class DomainError(SpokeForgeError, ValueError):
    """An argument lies outside the domain an operation accepts."""

    exit_code = 2


class ConfigError(SpokeForgeError, ValueError):
    exit_code = 2


class InfeasibleDesignError(SpokeForgeError):
    """A generated profile violates the minimum-thickness floor."""

    exit_code = 3

    def __init__(self, message, min_thickness=None):
        super().__init__(message)
        self.min_thickness = min_thickness


class NonConvergenceError(SpokeForgeError):
    exit_code = 3


class DatasetError(SpokeForgeError, ValueError):
    """Malformed or inconsistent tabular input."""

    exit_code = 4


class NumericalError(SpokeForgeError, ArithmeticError):
    """A factorization or solve failed."""

    exit_code = 4
