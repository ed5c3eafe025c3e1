class HarqError(Exception):
    """Base class for library errors."""


class DomainError(HarqError, ValueError):
    """An argument lies outside the domain of the operation."""


class ConvergenceError(HarqError, ArithmeticError):
    """A series did not decay below tolerance within the term budget."""
