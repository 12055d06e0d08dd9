"""
Analytically tractable targets used as oracles.
"""

import logging
from typing import Any, Dict, List, Optional

import numpy as np
from scipy import stats

from ..models.error_handling import DomainError
from ..samplers.rng import RngStream
from .base import GeneratorKernelModel

logger = logging.getLogger(__name__)

KERNELS = ("exact", "rwmh")


class ConjugateGaussianModel(GeneratorKernelModel):
    """Gaussian mean with a Gaussian prior.

    x ~ N(prior_mean, prior_sd^2 I_d) and y_i | x ~ N(x, noise_sd^2 I_d), so
    every tempered posterior is Gaussian and the evidence is closed form.
    """

    name = "conjugate_gaussian"

    def __init__(
        self,
        y: np.ndarray,
        prior_mean: float = 0.0,
        prior_sd: float = 1.0,
        noise_sd: float = 1.0,
        kernel: str = "exact",
        step_size: float = 0.5,
    ):
        y = np.asarray(y, dtype=float)
        if y.ndim == 1:
            y = y.reshape(-1, 1)
        if y.ndim != 2 or y.shape[0] == 0:
            raise DomainError("y must be an n x d matrix with n >= 1")
        if prior_sd <= 0 or noise_sd <= 0 or step_size <= 0:
            raise DomainError("prior_sd, noise_sd and step_size must be positive")
        if kernel not in KERNELS:
            raise DomainError(f"kernel must be one of {KERNELS}, got '{kernel}'")
        self.y = y
        self.n, self.d = y.shape
        self.prior_mean = float(prior_mean)
        self.prior_sd = float(prior_sd)
        self.noise_sd = float(noise_sd)
        self.kernel = kernel
        self.step_size = float(step_size)
        self._y_sum = y.sum(axis=0)

    def describe(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "n": self.n,
            "d": self.d,
            "prior_mean": self.prior_mean,
            "prior_sd": self.prior_sd,
            "noise_sd": self.noise_sd,
            "kernel": self.kernel,
        }

    def validate_point(self, x: np.ndarray) -> None:
        if np.shape(x) != (self.d,) or not np.all(np.isfinite(x)):
            raise DomainError(f"point must be a finite vector of length {self.d}")

    def log_likelihood(self, x: np.ndarray) -> float:
        self.validate_point(x)
        resid = self.y - x
        var = self.noise_sd**2
        return float(
            -0.5 * self.n * self.d * np.log(2 * np.pi * var)
            - 0.5 * np.sum(resid * resid) / var
        )

    def log_prior(self, x: np.ndarray) -> float:
        return float(
            np.sum(stats.norm.logpdf(x, loc=self.prior_mean, scale=self.prior_sd))
        )

    def sample_prior(self, rng: RngStream) -> np.ndarray:
        gen = rng.generator()
        return self.prior_mean + self.prior_sd * gen.standard_normal(self.d)

    def tempered_posterior(self, alpha: float):
        """Mean vector and standard deviation of pi_alpha."""
        precision = 1.0 / self.prior_sd**2 + alpha * self.n / self.noise_sd**2
        mean = (
            self.prior_mean / self.prior_sd**2 + alpha * self._y_sum / self.noise_sd**2
        ) / precision
        return mean, 1.0 / np.sqrt(precision)

    def posterior_mean(self, alpha: float = 1.0) -> np.ndarray:
        return self.tempered_posterior(alpha)[0]

    def log_evidence(self) -> float:
        """log p(y), coordinates are independent given the isotropic prior."""
        cov = self.noise_sd**2 * np.eye(self.n) + self.prior_sd**2 * np.ones(
            (self.n, self.n)
        )
        mean = np.full(self.n, self.prior_mean)
        return float(
            sum(
                stats.multivariate_normal.logpdf(self.y[:, j], mean=mean, cov=cov)
                for j in range(self.d)
            )
        )

    def max_log_likelihood(self) -> float:
        return self.log_likelihood(self.y.mean(axis=0))

    def _kernel_step(
        self, x: np.ndarray, alpha: float, gen: np.random.Generator
    ) -> np.ndarray:
        z = gen.standard_normal(self.d)
        if self.kernel == "exact":
            mean, sd = self.tempered_posterior(alpha)
            return mean + sd * z
        u = gen.random()
        proposal = x + self.step_size * z
        log_ratio = (
            self.log_prior(proposal)
            - self.log_prior(x)
            + alpha * (self.log_likelihood(proposal) - self.log_likelihood(x))
        )
        if np.log(u) < log_ratio:
            return proposal
        return x

    def summary_stats(self, x: np.ndarray) -> np.ndarray:
        return np.array([self.log_likelihood(x), float(np.linalg.norm(x))])

    def estimands(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x, dtype=float).copy()

    def estimand_names(self) -> List[str]:
        return [f"x{j + 1}" for j in range(self.d)]

    def canonical_bytes(self, x: np.ndarray) -> bytes:
        return np.ascontiguousarray(x, dtype=float).tobytes()


class ConstantLikelihoodModel(GeneratorKernelModel):
    """Standard normal prior with p(y | x) = exp(log_c) everywhere."""

    name = "constant"

    def __init__(self, log_c: float = 0.0):
        self.log_c = float(log_c)

    def describe(self) -> Dict[str, Any]:
        return {"name": self.name, "log_c": self.log_c}

    def log_likelihood(self, x: np.ndarray) -> float:
        return self.log_c

    def sample_prior(self, rng: RngStream) -> np.ndarray:
        return rng.generator().standard_normal(1)

    def _kernel_step(
        self, x: np.ndarray, alpha: float, gen: np.random.Generator
    ) -> np.ndarray:
        # every tempered posterior is the prior
        return gen.standard_normal(1)

    def summary_stats(self, x: np.ndarray) -> np.ndarray:
        return np.array([self.log_c, float(abs(x[0]))])

    def estimands(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x, dtype=float).copy()

    def estimand_names(self) -> List[str]:
        return ["x1"]

    def max_log_likelihood(self) -> float:
        return self.log_c

    def canonical_bytes(self, x: np.ndarray) -> bytes:
        return np.ascontiguousarray(x, dtype=float).tobytes()


def conjugate_simulate(
    n: int,
    d: int = 1,
    x_true: Optional[np.ndarray] = None,
    noise_sd: float = 1.0,
    seed: int = 0,
) -> np.ndarray:
    """Observations y_i ~ N(x_true, noise_sd^2 I_d)."""
    gen = RngStream(seed, (0,)).generator()
    centre = np.zeros(d) if x_true is None else np.asarray(x_true, dtype=float)
    return centre + noise_sd * gen.standard_normal((n, d))
