"""
Model contract shared by every target.

A model owns its data and exposes the prior, the likelihood, a tempered
inner MCMC kernel and the statistics used by adaptation and estimation.
Model points are opaque to the samplers; equality between points is
decided on their canonical byte form.
"""

import logging
from abc import ABC, abstractmethod
from typing import Any, Dict, List, Sequence, Tuple

import numpy as np

from ..models.error_handling import DomainError
from ..samplers.rng import RngStream

logger = logging.getLogger(__name__)

ModelPoint = Any


def check_inner_temperature(alpha: float) -> float:
    """Inner kernels are defined for alpha in (0, 1]."""
    if not 0.0 < alpha <= 1.0:
        raise DomainError(
            f"inner kernel needs alpha in (0, 1], got {alpha}; "
            "use sample_prior at alpha = 0"
        )
    return float(alpha)


class Model(ABC):
    """Abstract target for tempered SMC and coupled particle MCMC."""

    name: str = "model"

    @abstractmethod
    def log_likelihood(self, x: ModelPoint) -> float:
        """log p(y | x); may be -inf."""

    @abstractmethod
    def sample_prior(self, rng: RngStream) -> ModelPoint:
        """One draw from p(x)."""

    @abstractmethod
    def _transition(self, x: ModelPoint, alpha: float, rng: RngStream) -> ModelPoint:
        """One pi_alpha-invariant transition; may draw from named substreams."""

    @abstractmethod
    def summary_stats(self, x: ModelPoint) -> np.ndarray:
        """Statistics for the correlation criterion; entry 0 is the log-likelihood."""

    @abstractmethod
    def estimands(self, x: ModelPoint) -> np.ndarray:
        """Vector of test functions h(x) whose posterior means are estimated."""

    @abstractmethod
    def canonical_bytes(self, x: ModelPoint) -> bytes:
        """Serialized form whose bitwise equality defines point equality."""

    def validate_point(self, x: ModelPoint) -> None:
        """Raise DomainError when ``x`` is not a member of the state space."""

    def estimand_names(self) -> List[str]:
        return []

    def max_log_likelihood(self) -> float:
        """sup_x log p(y | x), needed for rejection-sampled alpha_0."""
        raise DomainError(f"model '{self.name}' does not expose a likelihood bound")

    def describe(self) -> Dict[str, Any]:
        return {"name": self.name}

    def log_likelihoods(self, points: Sequence[ModelPoint]) -> np.ndarray:
        return np.array([self.log_likelihood(x) for x in points], dtype=float)

    def inner_kernel(
        self, x: ModelPoint, alpha: float, rng: RngStream
    ) -> ModelPoint:
        alpha = check_inner_temperature(alpha)
        return self._transition(x, alpha, rng)

    def coupled_inner_kernel(
        self, x: ModelPoint, x_bar: ModelPoint, alpha: float, rng: RngStream
    ) -> Tuple[ModelPoint, ModelPoint]:
        """Common-random-number coupling: both chains replay the same stream."""
        alpha = check_inner_temperature(alpha)
        x_new = self._transition(x, alpha, rng)
        if self.points_equal(x, x_bar):
            return x_new, x_new
        return x_new, self._transition(x_bar, alpha, rng)

    def points_equal(self, x: ModelPoint, y: ModelPoint) -> bool:
        if x is y:
            return True
        return self.canonical_bytes(x) == self.canonical_bytes(y)

    def paths_equal(
        self, path: Sequence[ModelPoint], other: Sequence[ModelPoint]
    ) -> bool:
        if len(path) != len(other):
            return False
        return all(self.points_equal(a, b) for a, b in zip(path, other))


class GeneratorKernelModel(Model):
    """Model whose inner kernel draws every variate from one generator."""

    @abstractmethod
    def _kernel_step(
        self, x: ModelPoint, alpha: float, gen: np.random.Generator
    ) -> ModelPoint:
        """One pi_alpha-invariant transition driven by ``gen``."""

    def _transition(self, x: ModelPoint, alpha: float, rng: RngStream) -> ModelPoint:
        return self._kernel_step(x, alpha, rng.generator())
