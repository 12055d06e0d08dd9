"""
Equal-weight Gaussian mixture with unknown component means.
"""

import logging
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from scipy.special import logsumexp

from ..models.error_handling import DomainError
from ..samplers.rng import RngStream
from .base import GeneratorKernelModel

logger = logging.getLogger(__name__)

PRIOR_BOUND = 10.0
_LOG_SQRT_2PI = 0.5 * np.log(2 * np.pi)


class MixtureModel(GeneratorKernelModel):
    """y_i iid from d_x^-1 sum_j N(x_j, 1), uniform prior on [-10, 10]^d_x.

    Inner kernel: random-walk Metropolis with identity proposal covariance.
    """

    name = "mixture"

    def __init__(self, y: Sequence[float], d_x: int = 2):
        y = np.asarray(y, dtype=float).ravel()
        if y.size == 0:
            raise DomainError("mixture model needs at least one observation")
        if d_x < 1:
            raise DomainError("d_x must be positive")
        self.y = y
        self.d_x = int(d_x)

    @property
    def d_y(self) -> int:
        return int(self.y.size)

    def describe(self) -> Dict[str, Any]:
        return {"name": self.name, "d_x": self.d_x, "d_y": self.d_y}

    def in_support(self, x: np.ndarray) -> bool:
        return bool(np.all(np.abs(x) <= PRIOR_BOUND))

    def validate_point(self, x: np.ndarray) -> None:
        if np.shape(x) != (self.d_x,) or not np.all(np.isfinite(x)):
            raise DomainError(f"point must be a finite vector of length {self.d_x}")

    def log_likelihood(self, x: np.ndarray) -> float:
        self.validate_point(x)
        diff = self.y[:, None] - np.asarray(x)[None, :]
        log_components = -0.5 * diff * diff - _LOG_SQRT_2PI
        return float(
            np.sum(logsumexp(log_components, axis=1)) - self.d_y * np.log(self.d_x)
        )

    def sample_prior(self, rng: RngStream) -> np.ndarray:
        return rng.generator().uniform(-PRIOR_BOUND, PRIOR_BOUND, self.d_x)

    def _kernel_step(
        self, x: np.ndarray, alpha: float, gen: np.random.Generator
    ) -> np.ndarray:
        # fixed draw order: proposal noise then the uniform
        proposal = x + gen.standard_normal(self.d_x)
        u = gen.random()
        if not self.in_support(proposal):
            return x
        log_ratio = alpha * (self.log_likelihood(proposal) - self.log_likelihood(x))
        if np.log(u) < log_ratio:
            return proposal
        return x

    def summary_stats(self, x: np.ndarray) -> np.ndarray:
        return np.array([self.log_likelihood(x), float(np.linalg.norm(x))])

    def estimands(self, x: np.ndarray) -> np.ndarray:
        """h(x) = sum_j x_j + x_j^2, invariant to relabelling the components."""
        x = np.asarray(x, dtype=float)
        return np.array([float(np.sum(x + x * x))])

    def estimand_names(self) -> List[str]:
        return ["sum_x_plus_x2"]

    def canonical_bytes(self, x: np.ndarray) -> bytes:
        return np.ascontiguousarray(x, dtype=float).tobytes()


def mixture_simulate(
    x_star: Optional[Sequence[float]] = None, d_y: int = 100, seed: int = 0
) -> np.ndarray:
    """Draw d_y observations from the mixture with component means x_star."""
    means = np.asarray([-3.0, 0.0] if x_star is None else x_star, dtype=float)
    gen = RngStream(seed, (0,)).generator()
    labels = gen.integers(means.size, size=d_y)
    return means[labels] + gen.standard_normal(d_y)
