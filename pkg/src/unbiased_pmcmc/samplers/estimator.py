"""
Coupled particle MCMC driver and the unbiased estimators built on it.

Rows of ``H``/``H_bar`` are 0-based: row t - 1 holds outer iteration t.
"""

import logging
import math
import time
from typing import Callable, List, Optional, Sequence

import numpy as np
from scipy import stats

from ..models.data_models import (
    CoupledRun,
    CurveRow,
    EstimateReport,
    IactEstimate,
    TemperingSchedule,
)
from ..models.error_handling import (
    DegenerateWeightsError,
    DomainError,
    IncompleteRunError,
)
from ..targets.base import Model, ModelPoint
from .coupled_kernels import (
    CoupledState,
    conditional_smc_step,
    coupled_csmc_step,
    coupled_pimh_step,
    initial_pimh_step,
    pimh_proposal,
    states_coincide,
)
from .rng import RngStream
from .smc import ChainState

logger = logging.getLogger(__name__)

MIN_IACT_LENGTH = 10


def _record(model: Model, state: CoupledState, rows: List[List[np.ndarray]]) -> None:
    h = state.chain.rao_blackwellized(model)
    point = state.chain.point_estimands(model)
    if state.met:
        h_bar, point_bar = h, point
    else:
        h_bar = state.chain_bar.rao_blackwellized(model)
        point_bar = state.chain_bar.point_estimands(model)
    for store, value in zip(rows, (h, h_bar, point, point_bar)):
        store.append(value)


def run_coupled_chain(
    model: Model,
    schedule: TemperingSchedule,
    n_particles: int,
    rho: float,
    l: int,
    rng: RngStream,
    gamma: float = 0.5,
    time_budget: Optional[float] = None,
    max_iterations: Optional[int] = None,
    replicate: int = 0,
) -> CoupledRun:
    """Run two coupled outer chains until they meet and at least l steps passed.

    Each outer step flips one rho-coin shared by both chains: PIMH with
    probability rho, coupled conditional SMC otherwise. Streams:
    rng.child(0) builds x(0), rng.child(1, t, 0) is the coin at step t and
    rng.child(1, t, 1) drives the chosen kernel.
    """
    if not 0.0 <= rho <= 1.0:
        raise DomainError(f"rho must lie in [0, 1], got {rho}")
    if l < 1:
        raise DomainError(f"l must be at least 1, got {l}")
    start = time.perf_counter()
    x0: ChainState = pimh_proposal(model, schedule, n_particles, gamma, rng.child(0))

    H: List[np.ndarray] = []
    H_bar: List[np.ndarray] = []
    H_point: List[np.ndarray] = []
    H_bar_point: List[np.ndarray] = []
    rows = [H, H_bar, H_point, H_bar_point]

    tau: Optional[int] = None
    completed = True
    t = 1
    while True:
        coin = rng.child(1, t, 0).uniform()
        kernel_rng = rng.child(1, t, 1)
        use_pimh = coin < rho
        if t == 1:
            if use_pimh:
                state = initial_pimh_step(
                    x0, model, schedule, n_particles, gamma, kernel_rng
                )
            else:
                chain = conditional_smc_step(
                    x0, model, schedule, n_particles, gamma, kernel_rng
                )
                state = CoupledState(
                    chain, x0, met=states_coincide(model, chain, x0)
                )
        elif use_pimh:
            state = coupled_pimh_step(
                state, model, schedule, n_particles, gamma, kernel_rng
            )
        else:
            state = coupled_csmc_step(
                state, model, schedule, n_particles, gamma, kernel_rng
            )
        _record(model, state, rows)

        if state.met and tau is None:
            tau = t
            logger.debug(f"Replicate {replicate}: chains met at t={t}")
        if tau is not None and t >= l:
            break
        elapsed = time.perf_counter() - start
        if time_budget is not None and elapsed > time_budget:
            logger.warning(
                f"Replicate {replicate}: time budget {time_budget}s exhausted at t={t}"
            )
            completed = False
            break
        if max_iterations is not None and t >= max_iterations:
            logger.warning(
                f"Replicate {replicate}: iteration cap {max_iterations} reached"
            )
            completed = False
            break
        t += 1

    return CoupledRun(
        replicate=replicate,
        tau=tau if completed else None,
        wall_time_s=time.perf_counter() - start,
        completed=completed,
        H=np.array(H),
        H_bar=np.array(H_bar),
        H_point=np.array(H_point),
        H_bar_point=np.array(H_bar_point),
        l=l,
        statistic_names=model.estimand_names(),
    )


def _series(run: CoupledRun, point: bool):
    if point:
        if run.H_point is None or run.H_bar_point is None:
            raise DomainError("run has no single-particle statistic series")
        return run.H_point, run.H_bar_point
    return run.H, run.H_bar


def _check_run(run: CoupledRun, statistic_index: int) -> int:
    if not run.completed or run.tau is None:
        raise IncompleteRunError(
            f"replicate {run.replicate} did not meet; unbiased estimators are "
            "undefined for it"
        )
    if not 0 <= statistic_index < run.n_statistics:
        raise DomainError(
            f"statistic index {statistic_index} outside [0, {run.n_statistics})"
        )
    return run.tau


def h_hat_k(
    run: CoupledRun, statistic_index: int, k: int, point: bool = False
) -> float:
    """H(k) plus the bias correction sum over t = k+1 .. tau-1."""
    tau = _check_run(run, statistic_index)
    if not 1 <= k <= run.T:
        raise DomainError(f"k must lie in [1, {run.T}], got {k}")
    H, H_bar = _series(run, point)
    h = H[:, statistic_index]
    correction = h[k : tau - 1] - H_bar[k : tau - 1, statistic_index]
    return float(h[k - 1] + np.sum(correction))


def h_bar_k_l(
    run: CoupledRun, statistic_index: int, k: int, l: int, point: bool = False
) -> float:
    """Time-averaged estimator over t = k .. l with its bias correction."""
    tau = _check_run(run, statistic_index)
    if not 1 <= k <= l <= run.T:
        raise DomainError(f"need 1 <= k <= l <= {run.T}, got k={k}, l={l}")
    H, H_bar = _series(run, point)
    h = H[:, statistic_index]
    width = l - k + 1
    average = float(np.mean(h[k - 1 : l]))
    t = np.arange(k + 1, tau)
    if t.size == 0:
        return average
    diffs = h[t - 1] - H_bar[t - 1, statistic_index]
    factors = np.minimum(width, t - k) / width
    return average + float(np.sum(factors * diffs))


def rao_blackwell_statistic(
    weights: Sequence[float],
    particles: Sequence[ModelPoint],
    h: Callable[[ModelPoint], float],
) -> float:
    """Weighted average of h over a particle cloud."""
    w = np.asarray(weights, dtype=float)
    if w.size != len(particles) or w.size == 0:
        raise DomainError("weights and particles must be non-empty and aligned")
    if np.any(w < 0) or not np.sum(w) > 0:
        raise DegenerateWeightsError("cloud has no positive weight")
    values = np.array([h(x) for x in particles], dtype=float)
    return float(np.sum(w * values) / np.sum(w))


def aggregate(
    estimates: Sequence[float],
    confidence: float = 0.95,
    k: int = 1,
    l: int = 1,
    statistic: str = "",
    r_incomplete: int = 0,
    allow_single: bool = False,
) -> EstimateReport:
    """Mean, unbiased sample variance and normal-theory interval."""
    values = np.asarray(estimates, dtype=float)
    if values.size == 0 or (values.size < 2 and not allow_single):
        raise DomainError(f"need at least 2 estimates to aggregate, got {values.size}")
    mean = float(np.mean(values))
    if values.size < 2:
        return EstimateReport(
            estimate=mean,
            variance=None,
            std_error=None,
            ci_low=None,
            ci_high=None,
            confidence=confidence,
            r_used=1,
            k=k,
            l=l,
            statistic=statistic,
            r_incomplete=r_incomplete,
        )
    variance = float(np.var(values, ddof=1))
    std_error = math.sqrt(variance / values.size)
    half_width = float(stats.norm.ppf(0.5 + confidence / 2.0)) * std_error
    return EstimateReport(
        estimate=mean,
        variance=variance,
        std_error=std_error,
        ci_low=mean - half_width,
        ci_high=mean + half_width,
        confidence=confidence,
        r_used=int(values.size),
        k=k,
        l=l,
        statistic=statistic,
        r_incomplete=r_incomplete,
    )


def _autocovariance(x: np.ndarray) -> np.ndarray:
    n = x.size
    centred = x - x.mean()
    size = 1 << (2 * n - 1).bit_length()
    spectrum = np.fft.rfft(centred, size)
    return np.fft.irfft(spectrum * np.conj(spectrum), size)[:n] / n


def iact(series: Sequence[float]) -> IactEstimate:
    """Integrated autocorrelation time with the initial monotone sequence rule."""
    x = np.asarray(series, dtype=float)
    if x.size < MIN_IACT_LENGTH:
        raise DomainError(f"IACT needs at least {MIN_IACT_LENGTH} values, got {x.size}")
    if np.all(x == x[0]):
        logger.warning("IACT requested for a constant series")
        return IactEstimate(value=1.0, degenerate=True, window=0)
    gamma = _autocovariance(x)
    n_pairs = gamma.size // 2
    pair_sums = gamma[0 : 2 * n_pairs : 2] + gamma[1 : 2 * n_pairs : 2]
    total = 0.0
    previous = np.inf
    window = 0
    for m in range(n_pairs):
        current = min(pair_sums[m], previous)
        if current <= 0:
            break
        total += current
        previous = current
        window = 2 * m + 1
    value = max((2.0 * total - gamma[0]) / gamma[0], 0.0)
    return IactEstimate(value=float(value), degenerate=False, window=window)


def _estimates_by_k(
    runs: Sequence[CoupledRun], statistic_index: int, k: int, l: int
) -> np.ndarray:
    return np.array([h_bar_k_l(run, statistic_index, k, l) for run in runs])


def variance_time_curve(
    runs: Sequence[CoupledRun],
    statistic_index: int,
    l_grid: Sequence[int],
    k_grid: Optional[Sequence[int]] = None,
) -> List[CurveRow]:
    """For each l, the k minimizing the variance of h_bar_k^l and variance x time.

    The cost of a run at a given l is its wall time scaled by max(tau, l) / T.
    """
    completed = [run for run in runs if run.completed]
    table: List[CurveRow] = []
    for l in l_grid:
        usable = [run for run in completed if run.T >= l]
        if not usable:
            table.append(CurveRow(l, None, None, 0.0, None, flagged=True))
            continue
        cost = float(
            np.mean(
                [run.wall_time_s * max(run.tau, l) / run.T for run in usable]
            )
        )
        if len(usable) < 2:
            table.append(CurveRow(l, None, None, cost, None, flagged=True))
            continue
        candidates = [k for k in (k_grid or range(1, l + 1)) if 1 <= k <= l]
        best_k, best_var = None, np.inf
        for k in candidates:
            var = float(np.var(_estimates_by_k(usable, statistic_index, k, l), ddof=1))
            if var < best_var:
                best_k, best_var = k, var
        table.append(CurveRow(l, best_k, best_var, cost, best_var * cost))
    return table


def choose_k(taus: Sequence[int], quantile: float = 0.9) -> int:
    """A high empirical quantile of the meeting times."""
    values = np.asarray([t for t in taus if t is not None], dtype=float)
    if values.size == 0:
        raise DomainError("no meeting times to choose k from")
    return max(1, int(math.ceil(np.quantile(values, quantile))))
