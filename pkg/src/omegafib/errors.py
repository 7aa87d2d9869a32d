"""Exception types shared across the package.

The CLI maps these onto exit codes: ConfigError -> 2, BudgetError -> 3,
anything else -> 4.
"""


class OmegafibError(Exception):
    pass


class ConfigError(OmegafibError):
    """Malformed or inconsistent user input."""


class BudgetError(OmegafibError):
    """A computation was refused because it exceeds a declared resource cap."""

    def __init__(self, message: str, required=None, budget=None):
        super().__init__(message)
        self.required = required
        self.budget = budget


class IntegerBudgetError(BudgetError):
    """An integer left the supported 128-bit range."""


class CoverageError(OmegafibError):
    """A table was asked about primes outside the range it covers."""
