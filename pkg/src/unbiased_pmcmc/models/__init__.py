"""
Data models and error taxonomy for unbiased particle MCMC.
"""

from .data_models import (
    AdaptationConfig,
    CoupledRun,
    CurveRow,
    EstimateReport,
    IactEstimate,
    StageRecord,
    TemperingSchedule,
    validate_non_negative_int,
    validate_positive_int,
    validate_temperature,
    validate_threshold,
)
from .error_handling import (
    BUDGET_PARTIAL_EXIT_CODE,
    ConditioningError,
    ConfigurationError,
    ConvergenceError,
    DegenerateWeightsError,
    DomainError,
    ErrorCategory,
    ExitCodeMapping,
    IncompleteRunError,
    InvariantError,
    NumericalError,
    OutputError,
    SamplerError,
)

__all__ = [
    "AdaptationConfig",
    "CoupledRun",
    "CurveRow",
    "EstimateReport",
    "IactEstimate",
    "StageRecord",
    "TemperingSchedule",
    "validate_non_negative_int",
    "validate_positive_int",
    "validate_temperature",
    "validate_threshold",
    "BUDGET_PARTIAL_EXIT_CODE",
    "ConditioningError",
    "ConfigurationError",
    "ConvergenceError",
    "DegenerateWeightsError",
    "DomainError",
    "ErrorCategory",
    "ExitCodeMapping",
    "IncompleteRunError",
    "InvariantError",
    "NumericalError",
    "OutputError",
    "SamplerError",
]
