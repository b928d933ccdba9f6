"""Exception hierarchy shared by all modules and mapped to CLI exit codes."""


class CFError(Exception):
    """Base class for library errors."""


class DomainError(CFError, ValueError):
    """An argument lies outside the domain of the operation."""


class ValidationError(CFError, ValueError):
    """Invalid configuration or input data (CLI exit code 2)."""


class BudgetExceeded(CFError, RuntimeError):
    """A tolerance or enumeration size cannot be met within the term budget."""


class ConvergenceError(CFError, RuntimeError):
    """An iteration failed to converge (CLI exit code 3)."""


class NoSignChange(ConvergenceError):
    """The objective has no sign change on the search bracket."""


class OrderingViolation(CFError, AssertionError):
    """A mathematically forced ordering was violated by computed values."""
