"""
Adaptive construction of the tempering schedule.

Temperatures are chosen so the ESS of each reweighting stays at
gamma0 * N0; each stage's number of inner-kernel steps is the first count
at which every summary statistic has decorrelated below zeta0.
"""

import logging
import math
import warnings
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..models.data_models import AdaptationConfig, TemperingSchedule
from ..models.error_handling import ConvergenceError, DomainError, NumericalError
from ..targets.base import Model, ModelPoint
from .resampling import ess, multinomial_resample, normalize_log_weights
from .rng import RngStream
from .smc import tempered_increment

logger = logging.getLogger(__name__)

BISECTION_ITERATIONS = 60
BISECTION_TOLERANCE = 1e-10


def _ess_at(log_liks: np.ndarray, delta: float) -> float:
    log_w = tempered_increment(log_liks, delta)
    if not np.any(log_w > -np.inf):
        return 0.0
    return ess(normalize_log_weights(log_w))


def next_temperature(
    log_liks: Sequence[float], alpha_prev: float, gamma0: float
) -> float:
    """Smallest alpha in (alpha_prev, 1] keeping ESS >= gamma0 * N, or 1."""
    if not 0.0 <= alpha_prev < 1.0:
        raise DomainError(f"alpha_prev must lie in [0, 1), got {alpha_prev}")
    log_liks = np.asarray(log_liks, dtype=float)
    if np.any(np.isnan(log_liks)) or np.any(log_liks == np.inf):
        raise DomainError("log-likelihood values must not be NaN or +inf")
    target = gamma0 * log_liks.size
    if _ess_at(log_liks, 1.0 - alpha_prev) >= target:
        return 1.0
    lo, hi = alpha_prev, 1.0
    for _ in range(BISECTION_ITERATIONS):
        if hi - lo < BISECTION_TOLERANCE:
            break
        mid = 0.5 * (lo + hi)
        if _ess_at(log_liks, mid - alpha_prev) >= target:
            lo = mid
        else:
            hi = mid
    if lo <= alpha_prev:
        raise NumericalError(
            f"temperature search cannot leave alpha = {alpha_prev}: the ESS "
            "collapses for every increment",
            data={"alpha_prev": alpha_prev},
        )
    return lo


def _correlations(
    before: np.ndarray, after: np.ndarray, keep: np.ndarray
) -> np.ndarray:
    values = []
    for j in np.flatnonzero(keep):
        if np.std(after[:, j]) == 0.0:
            values.append(0.0)
            continue
        values.append(float(np.corrcoef(before[:, j], after[:, j])[0, 1]))
    return np.array(values)


def select_mcmc_count(
    model: Model,
    particles: Sequence[ModelPoint],
    alpha: float,
    zeta0: float,
    max_steps: int,
    rng: RngStream,
) -> Tuple[int, List[ModelPoint]]:
    """Number of inner-kernel steps needed to decorrelate the statistics.

    Returns the count and the mutated particles; step k of particle i uses
    rng.child(k, i).
    """
    if len(particles) == 0:
        raise DomainError("select_mcmc_count needs at least one particle")
    before = np.array([model.summary_stats(x) for x in particles], dtype=float)
    keep = np.std(before, axis=0) > 0.0
    if not np.all(keep):
        logger.warning(
            f"Dropping {int(np.sum(~keep))} zero-variance statistic(s) at "
            f"alpha={alpha:.6f}"
        )
    current = list(particles)
    for step in range(max_steps):
        current = [
            model.inner_kernel(x, alpha, rng.child(step, i))
            for i, x in enumerate(current)
        ]
        if not np.any(keep):
            return 1, current
        after = np.array([model.summary_stats(x) for x in current], dtype=float)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            corr = _correlations(before, after, keep)
        if np.max(corr) <= zeta0:
            return step + 1, current
    logger.warning(f"Correlation criterion unmet after {max_steps} steps")
    return max_steps, current


def select_alpha0_rejection(
    model: Model, n0: int, acceptance_rate: float, rng: RngStream
) -> Tuple[float, List[ModelPoint]]:
    """Initial temperature targeting a rejection-sampler acceptance rate.

    Draws ceil(n0 / a) prior particles; particle i is accepted at alpha when
    log u_i < alpha * b_i with b_i = log p(y | x_i) - sup log p(y | .), i.e.
    when alpha <= t_i = log u_i / b_i. alpha0 is the n0-th largest t_i.
    """
    if not 0.0 < acceptance_rate <= 1.0:
        raise DomainError(f"acceptance rate must lie in (0, 1], got {acceptance_rate}")
    n_draws = math.ceil(n0 / acceptance_rate)
    bound = model.max_log_likelihood()
    draws = [model.sample_prior(rng.child(0, i)) for i in range(n_draws)]
    log_u = np.log(rng.child(1).generator().random(n_draws))
    b = model.log_likelihoods(draws) - bound
    if np.sum(b < 0) < n0:
        logger.warning(
            "Fewer than N0 prior draws below the likelihood bound; using alpha0 = 0"
        )
        return 0.0, draws[:n0]
    with np.errstate(divide="ignore", invalid="ignore"):
        thresholds = np.where(b < 0, log_u / b, np.inf)
    alpha0 = float(np.sort(thresholds)[::-1][n0 - 1])
    alpha0 = min(max(alpha0, 0.0), np.nextafter(1.0, 0.0))
    accepted = [x for x, t in zip(draws, thresholds) if t >= alpha0][:n0]
    logger.info(f"Rejection-sampled alpha0 = {alpha0:.6g} from {n_draws} prior draws")
    return alpha0, accepted


def adapt(
    model: Model,
    config: AdaptationConfig,
    rng: RngStream,
    seed: Optional[int] = None,
) -> TemperingSchedule:
    """Build the tempering schedule by running an adaptive SMC with N0 particles."""
    if config.rejection_rate is not None:
        alpha, particles = select_alpha0_rejection(
            model, config.n0, config.rejection_rate, rng.child(0)
        )
    else:
        alpha = 0.0
        particles = [model.sample_prior(rng.child(0, i)) for i in range(config.n0)]
    alphas = [alpha]
    counts: List[int] = []

    for s in range(1, config.max_stages + 1):
        log_liks = model.log_likelihoods(particles)
        alpha_next = next_temperature(log_liks, alpha, config.gamma0)
        if alpha_next >= 1.0:
            break
        weights = normalize_log_weights(
            tempered_increment(log_liks, alpha_next - alpha), stage=s
        )
        parents = multinomial_resample(weights, rng.child(1, s))
        particles = [particles[a] for a in parents]
        m, particles = select_mcmc_count(
            model,
            particles,
            alpha_next,
            config.zeta0,
            config.max_steps,
            rng.child(2, s),
        )
        alpha = alpha_next
        alphas.append(alpha)
        counts.append(m)
        logger.info(f"Adaptation stage {s}: alpha={alpha:.6g}, m={m}")
    else:
        raise ConvergenceError(
            f"adaptation did not reach alpha = 1 within {config.max_stages} stages",
            sweeps=config.max_stages,
            change=1.0 - alpha,
        )

    schedule = TemperingSchedule(
        alphas=alphas, mcmc_counts=counts, model=model.name, seed=seed
    )
    logger.info(
        f"Adaptation finished: S={schedule.n_stages}, "
        f"m total={sum(counts)}, alpha0={alphas[0]:.6g}"
    )
    return schedule
