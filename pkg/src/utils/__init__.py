"""
Shared utilities: errors, special functions, random streams and display helpers.
"""
from .errors import (AccountingError, BudgetExhaustedError, ConfigurationError, DataError,
                     DivergenceUndefinedError, DomainError, NumericError, StreamParseError)
from .helpers import format_percent, significant
