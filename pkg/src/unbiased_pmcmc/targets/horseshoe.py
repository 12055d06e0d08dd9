"""
Horseshoe regression with a blocked Gibbs / slice inner kernel.

Parameterisation: beta_j | eta, xi, sigma2 ~ N(0, sigma2 / (xi * eta_j)),
sqrt(eta_j) and sqrt(xi) half-Cauchy(0, 1), 1 / sigma2 ~ Gamma(1, 1).
Tempering by alpha is carried out by substituting (alpha * n,
sqrt(alpha) * y, sqrt(alpha) * W) for the data.
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Tuple

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve, solve_triangular

from ..models.error_handling import DomainError, NumericalError
from ..samplers.rng import RngStream
from .base import GeneratorKernelModel

logger = logging.getLogger(__name__)

SLICE_WIDTH = 1.0
MAX_STEP_OUT = 50
MAX_SHRINK = 200


@dataclass(frozen=True)
class HorseshoeState:
    """Parameter state of the horseshoe regression."""

    beta: np.ndarray
    eta: np.ndarray
    sigma2: float
    xi: float

    def __post_init__(self):
        beta = np.asarray(self.beta, dtype=float)
        eta = np.asarray(self.eta, dtype=float)
        if beta.ndim != 1 or beta.shape != eta.shape:
            raise DomainError("beta and eta must be vectors of equal length")
        if not np.all(eta > 0) or not np.all(np.isfinite(eta)):
            raise DomainError("eta must be positive and finite")
        if not self.sigma2 > 0 or not self.xi > 0:
            raise DomainError("sigma2 and xi must be positive")
        if not np.all(np.isfinite(beta)):
            raise DomainError("beta must be finite")
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "eta", eta)
        object.__setattr__(self, "sigma2", float(self.sigma2))
        object.__setattr__(self, "xi", float(self.xi))

    def to_bytes(self) -> bytes:
        return np.concatenate(
            [self.beta, self.eta, np.array([self.sigma2, self.xi])]
        ).tobytes()


def horseshoe_tempered_data(
    n: float, y: np.ndarray, W: np.ndarray, alpha: float
) -> Tuple[float, np.ndarray, np.ndarray]:
    """Data substitution that turns p(y | x)^alpha into an ordinary likelihood."""
    if not 0.0 < alpha <= 1.0:
        raise DomainError(f"alpha must lie in (0, 1], got {alpha}")
    if alpha == 1.0:
        return n, y, W
    root = np.sqrt(alpha)
    return alpha * n, root * y, root * W


def _sample_eta(
    eta: np.ndarray, m: np.ndarray, gen: np.random.Generator
) -> np.ndarray:
    """Exact slice update for densities proportional to exp(-m eta) / (1 + eta)."""
    u = (1.0 - gen.random(eta.size)) / (1.0 + eta)
    upper = 1.0 / u - 1.0
    v = 1.0 - gen.random(eta.size)
    with np.errstate(divide="ignore", invalid="ignore"):
        # inverse CDF of Exp(m) truncated to (0, upper)
        truncated = -np.log1p(v * np.expm1(-m * upper)) / m
    new_eta = np.where(m > 0, truncated, v * upper)
    return np.clip(new_eta, np.finfo(float).tiny, np.finfo(float).max)


def _log_xi_density(theta: float, p: int, s: float) -> float:
    """Conditional of log(xi), Jacobian included."""
    return 0.5 * (p + 1) * theta - s * np.exp(theta) - np.logaddexp(0.0, theta)


def _sample_xi(xi: float, p: int, s: float, gen: np.random.Generator) -> float:
    """Stepping-out slice sampler on log(xi) with unit initial width."""
    theta0 = np.log(xi)
    level = _log_xi_density(theta0, p, s) + np.log(1.0 - gen.random())
    left = theta0 - SLICE_WIDTH * gen.random()
    right = left + SLICE_WIDTH
    steps = 0
    while steps < MAX_STEP_OUT and _log_xi_density(left, p, s) > level:
        left -= SLICE_WIDTH
        steps += 1
    steps = 0
    while steps < MAX_STEP_OUT and _log_xi_density(right, p, s) > level:
        right += SLICE_WIDTH
        steps += 1
    for _ in range(MAX_SHRINK):
        theta = left + (right - left) * gen.random()
        if _log_xi_density(theta, p, s) > level:
            return float(np.exp(theta))
        if theta < theta0:
            left = theta
        else:
            right = theta
    logger.debug("xi slice sampler hit the shrink cap; keeping current value")
    return xi


class HorseshoeModel(GeneratorKernelModel):
    """Linear regression y = W beta + noise under the horseshoe prior."""

    name = "horseshoe"

    def __init__(
        self,
        y: np.ndarray,
        W: np.ndarray,
        target_index: int = 9,
        threshold: float = 0.01,
    ):
        y = np.asarray(y, dtype=float).ravel()
        W = np.asarray(W, dtype=float)
        if W.ndim != 2 or W.shape[0] != y.size:
            raise DomainError("W must be an n x p matrix matching len(y)")
        if not 0 <= target_index < W.shape[1]:
            raise DomainError(f"target_index must lie in [0, {W.shape[1]})")
        self.y = y
        self.W = W
        self.n, self.p = W.shape
        self.target_index = int(target_index)
        self.threshold = float(threshold)
        self._WtW = W.T @ W
        self._Wty = W.T @ y

    def describe(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "n": self.n,
            "p": self.p,
            "target_index": self.target_index,
        }

    def validate_point(self, x: HorseshoeState) -> None:
        if not isinstance(x, HorseshoeState) or x.beta.size != self.p:
            raise DomainError(f"point must be a HorseshoeState with p = {self.p}")

    def log_likelihood(self, x: HorseshoeState) -> float:
        self.validate_point(x)
        resid = self.y - self.W @ x.beta
        return float(
            -0.5 * self.n * np.log(2 * np.pi * x.sigma2)
            - 0.5 * resid @ resid / x.sigma2
        )

    def max_log_likelihood(self) -> float:
        beta_hat, _, _, _ = np.linalg.lstsq(self.W, self.y, rcond=None)
        rss = float(np.sum((self.y - self.W @ beta_hat) ** 2))
        if rss <= 0:
            raise DomainError("likelihood is unbounded: the data are fitted exactly")
        return float(-0.5 * self.n * (np.log(2 * np.pi * rss / self.n) + 1.0))

    def sample_prior(self, rng: RngStream) -> HorseshoeState:
        gen = rng.generator()
        xi = float(np.abs(gen.standard_cauchy()) ** 2)
        eta = np.abs(gen.standard_cauchy(self.p)) ** 2
        sigma2 = 1.0 / gen.gamma(1.0, 1.0)
        beta = gen.standard_normal(self.p) * np.sqrt(sigma2 / (xi * eta))
        return HorseshoeState(beta=beta, eta=eta, sigma2=sigma2, xi=xi)

    def _sample_beta(
        self, alpha: float, eta: np.ndarray, xi: float, sigma2: float, z: np.ndarray
    ) -> np.ndarray:
        precision = (alpha * self._WtW + np.diag(xi * eta)) / sigma2
        try:
            factor = cho_factor(precision, lower=True)
        except LinAlgError as e:
            raise NumericalError(
                f"beta conditional precision is not positive definite: {e}",
                data={"condition_number": float(np.linalg.cond(precision))},
            )
        mean = cho_solve(factor, alpha * self._Wty / sigma2)
        lower = np.tril(factor[0])
        return mean + solve_triangular(lower.T, z, lower=False)

    def _kernel_step(
        self, x: HorseshoeState, alpha: float, gen: np.random.Generator
    ) -> HorseshoeState:
        beta = x.beta
        n_alpha, _, _ = horseshoe_tempered_data(self.n, self.y, self.W, alpha)

        eta = _sample_eta(x.eta, x.xi * beta * beta / (2.0 * x.sigma2), gen)
        s = float(np.sum(eta * beta * beta) / (2.0 * x.sigma2))
        xi = _sample_xi(x.xi, self.p, s, gen)

        rss_alpha = alpha * float(
            np.sum((self.y - self.W @ beta) ** 2)
        )  # ||sqrt(a) y - sqrt(a) W beta||^2
        shape = 1.0 + 0.5 * (n_alpha + self.p)
        rate = 1.0 + 0.5 * (rss_alpha + xi * float(np.sum(eta * beta * beta)))
        sigma2 = 1.0 / gen.gamma(shape, 1.0 / rate)

        beta = self._sample_beta(alpha, eta, xi, sigma2, gen.standard_normal(self.p))
        return HorseshoeState(beta=beta, eta=eta, sigma2=sigma2, xi=xi)

    def summary_stats(self, x: HorseshoeState) -> np.ndarray:
        return np.array(
            [
                self.log_likelihood(x),
                float(np.sum(np.abs(x.beta) > self.threshold)),
            ]
        )

    def estimands(self, x: HorseshoeState) -> np.ndarray:
        b = x.beta[self.target_index]
        return np.array([b + b * b])

    def estimand_names(self) -> List[str]:
        j = self.target_index + 1
        return [f"beta{j}_plus_beta{j}_sq"]

    def canonical_bytes(self, x: HorseshoeState) -> bytes:
        return x.to_bytes()


def horseshoe_beta_star(p: int = 20) -> np.ndarray:
    j = np.arange(1, p + 1)
    return np.where(j <= 10, 2.0 ** ((9.0 - j) / 4.0), 0.0)


def horseshoe_simulate(
    seed: int, n: int = 100, p: int = 20, sigma2: float = 8.0
) -> Tuple[np.ndarray, np.ndarray]:
    """Simulated design: W iid N(0, 1), y ~ N(W beta_star, sigma2 I)."""
    gen = RngStream(seed, (0,)).generator()
    W = gen.standard_normal((n, p))
    y = W @ horseshoe_beta_star(p) + np.sqrt(sigma2) * gen.standard_normal(n)
    return y, W
