"""Exception types shared across the package."""


class SmallCoverError(Exception):
    """Base class for all package errors."""


class ConfigError(SmallCoverError, ValueError):
    """Invalid input data; ``field`` names the offending field when known."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class BudgetExceeded(SmallCoverError, RuntimeError):
    """An exact enumeration would visit more states than allowed."""

    def __init__(self, states, budget, what="states"):
        super().__init__(f"enumeration of {states} {what} exceeds budget {budget}")
        self.states = states
        self.budget = budget


class PreconditionError(SmallCoverError, ValueError):
    """An operation was called outside its mathematical domain."""


class EmptyFamilyError(SmallCoverError, ValueError):
    """A supremum over an empty family was requested."""
