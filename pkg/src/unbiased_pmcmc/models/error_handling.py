"""
Error taxonomy and exit-code mapping for the sampler library and CLI.
"""

from enum import Enum
from typing import Any, Dict, Optional


class ErrorCategory(Enum):
    """Error categories."""

    CONFIGURATION = "configuration"
    DOMAIN = "domain"  # input outside the domain
    NUMERICAL = "numerical"
    DEGENERATE = "degenerate"  # all weights vanished
    CONVERGENCE = "convergence"
    BUDGET = "budget"  # time budget exhausted
    IO = "io"
    INTERNAL = "internal"  # broken internal invariant


class SamplerError(Exception):
    """Base class of sampler errors."""

    category: ErrorCategory = ErrorCategory.INTERNAL

    def __init__(
        self,
        message: str,
        category: Optional[ErrorCategory] = None,
        data: Optional[Dict[str, Any]] = None,
    ):
        super().__init__(message)
        self.message = message
        if category is not None:
            self.category = category
        self.data = data or {}

    def to_dict(self) -> Dict[str, Any]:
        """Convert to a serializable dictionary."""
        return {
            "category": self.category.value,
            "message": self.message,
            "data": self.data,
        }


class ConfigurationError(SamplerError):
    """Invalid configuration file or argument."""

    category = ErrorCategory.CONFIGURATION


class DomainError(SamplerError):
    """Raised when an argument lies outside the operation's domain."""

    category = ErrorCategory.DOMAIN


class ConditioningError(DomainError):
    """Conditional resampling asked to keep a particle of zero weight."""


class DegenerateWeightsError(SamplerError):
    """All importance weights vanished."""

    category = ErrorCategory.DEGENERATE

    def __init__(self, message: str, stage: Optional[int] = None):
        super().__init__(message, data={"stage": stage})
        self.stage = stage


class NumericalError(SamplerError):
    """Numerical failure, e.g. a failed Cholesky factorization."""

    category = ErrorCategory.NUMERICAL


class ConvergenceError(NumericalError):
    """Iterative algorithm did not converge within its sweep limit."""

    category = ErrorCategory.CONVERGENCE

    def __init__(self, message: str, sweeps: int, change: float):
        super().__init__(message, data={"sweeps": sweeps, "change": change})
        self.sweeps = sweeps
        self.change = change


class IncompleteRunError(SamplerError):
    """Estimator requested from a run whose chains never met."""

    category = ErrorCategory.BUDGET


class OutputError(SamplerError):
    """Reading or writing an output file failed."""

    category = ErrorCategory.IO


class InvariantError(SamplerError):
    category = ErrorCategory.INTERNAL


class ExitCodeMapping:
    """Map from error category to process exit code."""

    SUCCESS = 0
    FAILURE = 1

    EXIT_CODES: Dict[ErrorCategory, int] = {
        ErrorCategory.CONFIGURATION: 2,
        ErrorCategory.IO: 2,
        ErrorCategory.DOMAIN: 2,
        ErrorCategory.NUMERICAL: 3,
        ErrorCategory.DEGENERATE: 3,
        ErrorCategory.CONVERGENCE: 3,
        ErrorCategory.BUDGET: 4,
        ErrorCategory.INTERNAL: 1,
    }

    USER_FRIENDLY_MESSAGES: Dict[ErrorCategory, str] = {
        ErrorCategory.CONFIGURATION: "Configuration error",
        ErrorCategory.IO: "Input/output error",
        ErrorCategory.DOMAIN: "Invalid argument",
        ErrorCategory.NUMERICAL: "Numerical error",
        ErrorCategory.DEGENERATE: "Degenerate importance weights",
        ErrorCategory.CONVERGENCE: "Iterative sampler did not converge",
        ErrorCategory.BUDGET: "Time budget exhausted",
        ErrorCategory.INTERNAL: "Internal error",
    }

    @classmethod
    def get_exit_code(cls, category: ErrorCategory) -> int:
        """Exit code of a category."""
        return cls.EXIT_CODES.get(category, cls.FAILURE)

    @classmethod
    def for_exception(cls, error: BaseException) -> int:
        """Exit code of an exception."""
        if isinstance(error, SamplerError):
            return cls.get_exit_code(error.category)
        if isinstance(error, (FloatingPointError, ArithmeticError)):
            return cls.get_exit_code(ErrorCategory.NUMERICAL)
        if isinstance(error, OSError):
            return cls.get_exit_code(ErrorCategory.IO)
        return cls.FAILURE

    @classmethod
    def get_user_friendly_message(cls, error: BaseException) -> str:
        """User-facing message for an exception."""
        if isinstance(error, SamplerError):
            prefix = cls.USER_FRIENDLY_MESSAGES.get(error.category, "Error")
            return f"{prefix}: {error.message}"
        return f"Error: {error}"


BUDGET_PARTIAL_EXIT_CODE = ExitCodeMapping.get_exit_code(ErrorCategory.BUDGET)
