"""
Core data models shared by the samplers, the estimators and the CLI.
"""

import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np


def validate_temperature(alpha: float, field_name: str = "alpha") -> float:
    """Check a temperature lies in [0, 1]."""
    if not isinstance(alpha, (int, float)) or isinstance(alpha, bool):
        raise ValueError(f"{field_name} must be a real number")
    alpha = float(alpha)
    if not math.isfinite(alpha) or alpha < 0.0 or alpha > 1.0:
        raise ValueError(f"{field_name} must lie in [0, 1], got {alpha}")
    return alpha


def validate_threshold(value: float, field_name: str) -> float:
    """Check a threshold lies in [0, 1]."""
    return validate_temperature(value, field_name)


def validate_positive_int(value: int, field_name: str) -> int:
    """Check a positive integer."""
    if not isinstance(value, (int, np.integer)) or isinstance(value, bool):
        raise ValueError(f"{field_name} must be an integer")
    if value < 1:
        raise ValueError(f"{field_name} must be positive")
    return int(value)


def validate_non_negative_int(value: int, field_name: str) -> int:
    """Check a non-negative integer."""
    if not isinstance(value, (int, np.integer)) or isinstance(value, bool):
        raise ValueError(f"{field_name} must be an integer")
    if value < 0:
        raise ValueError(f"{field_name} must be non-negative")
    return int(value)


@dataclass
class TemperingSchedule:
    """Temperature ladder and the MCMC moves of each stage."""

    alphas: List[float]
    mcmc_counts: List[int]
    model: str = ""
    seed: Optional[int] = None

    def __post_init__(self):
        """Validate fields."""
        if not isinstance(self.alphas, (list, tuple)) or len(self.alphas) == 0:
            raise ValueError("alphas must be a non-empty list (alpha_0 is required)")
        self.alphas = [validate_temperature(a, "alpha") for a in self.alphas]
        if self.alphas[-1] >= 1.0:
            raise ValueError("Temperatures must stay below 1")
        for prev, nxt in zip(self.alphas, self.alphas[1:]):
            if nxt <= prev:
                raise ValueError(
                    f"Temperatures must be strictly increasing ({prev} >= {nxt})"
                )

        self.mcmc_counts = [
            validate_positive_int(m, "mcmc count") for m in self.mcmc_counts
        ]
        if len(self.mcmc_counts) != len(self.alphas) - 1:
            raise ValueError(
                "mcmc_counts must have one entry per temperature above alpha_0"
            )

    @property
    def n_stages(self) -> int:
        """S: number of temperatures above alpha_0."""
        return len(self.mcmc_counts)

    @property
    def alpha0(self) -> float:
        return self.alphas[0]

    def to_dict(self) -> Dict[str, Any]:
        """Convert to a JSON dictionary."""
        return {
            "alphas": list(self.alphas),
            "mcmc_counts": list(self.mcmc_counts),
            "model": self.model,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "TemperingSchedule":
        """Build from a JSON dictionary."""
        try:
            return cls(
                alphas=list(data["alphas"]),
                mcmc_counts=list(data["mcmc_counts"]),
                model=data.get("model", ""),
                seed=data.get("seed"),
            )
        except KeyError as e:
            raise ValueError(f"Missing required field in schedule: {e}")


@dataclass
class AdaptationConfig:
    """Settings for the adaptive schedule construction."""

    n0: int = 10000
    gamma0: float = 0.8
    zeta0: float = 0.95
    rejection_rate: Optional[float] = None
    max_steps: int = 100
    max_stages: int = 10000

    def __post_init__(self):
        """Validate fields."""
        self.n0 = validate_positive_int(self.n0, "N0")
        if self.n0 < 2:
            raise ValueError("N0 must be at least 2")
        self.gamma0 = validate_threshold(self.gamma0, "gamma0")
        if self.gamma0 >= 1.0:
            # the temperature search targets an ESS strictly below N0
            raise ValueError("gamma0 must be below 1")
        self.zeta0 = validate_threshold(self.zeta0, "zeta0")
        if self.rejection_rate is not None:
            rate = float(self.rejection_rate)
            if not 0.0 < rate <= 1.0:
                raise ValueError("rejection_rate must lie in (0, 1]")
            self.rejection_rate = rate
        self.max_steps = validate_positive_int(self.max_steps, "max_steps")
        self.max_stages = validate_positive_int(self.max_stages, "max_stages")


@dataclass
class StageRecord:
    """One line of the per-run SMC trace."""

    stage: int
    alpha: float
    ess: float
    resampled: bool
    log_z_so_far: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            "stage": self.stage,
            "alpha": self.alpha,
            "ess": self.ess,
            "resampled": self.resampled,
            "log_z_so_far": self.log_z_so_far,
        }


def _as_matrix(values: Any, field_name: str) -> np.ndarray:
    array = np.asarray(values, dtype=float)
    if array.ndim == 1:
        array = array.reshape(-1, 1) if array.size else array.reshape(0, 0)
    if array.ndim != 2:
        raise ValueError(f"{field_name} must be a T x J matrix")
    return array


@dataclass
class CoupledRun:
    """Result of one coupled chain run."""

    replicate: int
    tau: Optional[int]
    wall_time_s: float
    completed: bool
    H: np.ndarray
    H_bar: np.ndarray
    H_point: Optional[np.ndarray] = None
    H_bar_point: Optional[np.ndarray] = None
    l: int = 1
    statistic_names: List[str] = field(default_factory=list)

    def __post_init__(self):
        """Validate fields."""
        self.replicate = validate_non_negative_int(self.replicate, "replicate")
        self.H = _as_matrix(self.H, "H")
        self.H_bar = _as_matrix(self.H_bar, "H_bar")
        if self.H.shape != self.H_bar.shape:
            raise ValueError("H and H_bar must have the same shape")
        for name in ("H_point", "H_bar_point"):
            value = getattr(self, name)
            if value is not None:
                value = _as_matrix(value, name)
                if value.shape != self.H.shape:
                    raise ValueError(f"{name} must match the shape of H")
                setattr(self, name, value)
        if self.completed:
            if self.tau is None:
                raise ValueError("A completed run must carry its meeting time")
            self.tau = validate_positive_int(self.tau, "tau")
        elif self.tau is not None:
            raise ValueError("tau is undefined for incomplete runs")
        self.l = validate_positive_int(self.l, "l")
        if self.wall_time_s < 0:
            raise ValueError("wall_time_s must be non-negative")

    @property
    def T(self) -> int:
        """Number of recorded outer iterations (max(tau, l) when completed)."""
        return int(self.H.shape[0])

    @property
    def n_statistics(self) -> int:
        return int(self.H.shape[1]) if self.H.ndim == 2 and self.H.size else 0

    def to_dict(self) -> Dict[str, Any]:
        """Convert to one row of the run store."""
        row: Dict[str, Any] = {
            "replicate": self.replicate,
            "tau": self.tau,
            "wall_time_s": self.wall_time_s,
            "completed": self.completed,
            "l": self.l,
            "H": self.H.tolist(),
            "H_bar": self.H_bar.tolist(),
        }
        if self.H_point is not None and self.H_bar_point is not None:
            row["H_point"] = self.H_point.tolist()
            row["H_bar_point"] = self.H_bar_point.tolist()
        if self.statistic_names:
            row["statistic_names"] = list(self.statistic_names)
        return row

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "CoupledRun":
        """Build from one row of the run store."""
        try:
            return cls(
                replicate=data["replicate"],
                tau=data.get("tau"),
                wall_time_s=float(data["wall_time_s"]),
                completed=bool(data["completed"]),
                H=np.asarray(data["H"], dtype=float),
                H_bar=np.asarray(data["H_bar"], dtype=float),
                H_point=(
                    np.asarray(data["H_point"], dtype=float)
                    if "H_point" in data
                    else None
                ),
                H_bar_point=(
                    np.asarray(data["H_bar_point"], dtype=float)
                    if "H_bar_point" in data
                    else None
                ),
                l=int(data.get("l", 1)),
                statistic_names=list(data.get("statistic_names", [])),
            )
        except KeyError as e:
            raise ValueError(f"Missing required field in run record: {e}")


@dataclass
class EstimateReport:
    """Summary of the unbiased estimates."""

    estimate: float
    variance: Optional[float]
    std_error: Optional[float]
    ci_low: Optional[float]
    ci_high: Optional[float]
    confidence: float
    r_used: int
    k: int = 1
    l: int = 1
    statistic: str = ""
    r_incomplete: int = 0

    def __post_init__(self):
        """Validate fields."""
        self.r_used = validate_positive_int(self.r_used, "R_used")
        self.r_incomplete = validate_non_negative_int(
            self.r_incomplete, "R_incomplete"
        )
        if not 0.0 < self.confidence < 1.0:
            raise ValueError("confidence must lie in (0, 1)")
        if self.variance is not None and self.variance < 0:
            raise ValueError("variance must be non-negative")

    @property
    def has_variance(self) -> bool:
        return self.variance is not None

    def to_dict(self) -> Dict[str, Any]:
        """Convert to a JSON dictionary."""
        return {
            "statistic": self.statistic,
            "estimate": self.estimate,
            "variance": self.variance,
            "std_error": self.std_error,
            "ci": [self.ci_low, self.ci_high],
            "confidence": self.confidence,
            "R_used": self.r_used,
            "R_incomplete": self.r_incomplete,
            "k": self.k,
            "l": self.l,
            "no_variance": not self.has_variance,
        }


@dataclass
class IactEstimate:
    """Integrated autocorrelation time estimate."""

    value: float
    degenerate: bool = False
    window: int = 0


@dataclass
class CurveRow:
    """One row of the variance x time table."""

    l: int
    k: Optional[int]
    variance: Optional[float]
    mean_time_s: float
    variance_times_time: Optional[float]
    flagged: bool = False

    def to_row(self) -> List[Any]:
        return [
            self.l,
            self.k,
            self.variance,
            self.mean_time_s,
            self.variance_times_time,
            int(self.flagged),
        ]

    @staticmethod
    def header() -> Sequence[str]:
        return ("l", "k", "variance", "mean_time_s", "variance_times_time", "flagged")
