"""
Exception hierarchy for the accountant, with the CLI exit code of each error.
"""


class AccountingError(Exception):
    """
    Base class for all errors raised by the accountant.
    """
    exit_code = 1

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step

    def at_step(self, step):
        """
        Attach the iteration index at which the error surfaced.

        Args:
            step (int): Simulation or stream step

        Returns:
            AccountingError: self, for chaining in ``raise``
        """
        self.step = step
        return self

    def __str__(self):
        message = super().__str__()
        if self.step is not None:
            return f"step {self.step}: {message}"
        return message


class DomainError(AccountingError, ValueError):
    """Input outside the mathematical domain of an operation."""
    exit_code = 2


class DivergenceUndefinedError(DomainError):
    """Rényi divergence is infinite for the requested order."""


class ConfigurationError(AccountingError):
    """Invalid or inconsistent configuration."""
    exit_code = 2


class DataError(AccountingError):
    """Input data violates an invariant (negative cost, bad label, ...)."""
    exit_code = 2


class StreamParseError(DataError):
    """
    A distance stream, ledger document or dataset could not be parsed.
    """

    def __init__(self, message, line=None, row=None, column=None):
        location = []
        if line is not None:
            location.append(f"line {line}")
        if row is not None:
            location.append(f"row {row}")
        if column is not None:
            location.append(f"column {column!r}")
        if location:
            message = f"{', '.join(location)}: {message}"
        super().__init__(message)
        self.line = line
        self.row = row
        self.column = column


class BudgetExhaustedError(AccountingError):
    """
    The requested δ does not exceed the estimator failure mass already spent.
    """
    exit_code = 3

    def __init__(self, delta, min_feasible_delta):
        super().__init__(
            f"delta={delta:.6g} is not above the estimator failure mass; "
            f"minimum feasible delta is {min_feasible_delta:.6g} (exclusive)"
        )
        self.delta = delta
        self.min_feasible_delta = min_feasible_delta


class NumericError(AccountingError, ArithmeticError):
    """
    A numerical routine failed to converge.
    """
    exit_code = 4

    def __init__(self, message, bracket=None):
        if bracket is not None:
            message = f"{message} (last bracket [{bracket[0]!r}, {bracket[1]!r}])"
        super().__init__(message)
        self.bracket = bracket
