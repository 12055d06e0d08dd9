"""
Tempered SMC sampler with adaptive systematic resampling.

Stream layout under a run stream ``rng``:
    rng.child(0, i)          initial particle i
    rng.child(1, s)          resampling at stage s
    rng.child(2, s, i, k)    k-th inner-kernel step of particle i at stage s
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
from scipy.special import logsumexp

from ..models.data_models import StageRecord, TemperingSchedule
from ..models.error_handling import DomainError, InvariantError, NumericalError
from ..targets.base import Model, ModelPoint
from .resampling import (
    categorical_draw,
    ess,
    normalize_log_weights,
    systematic_resample,
)
from .rng import RngStream

logger = logging.getLogger(__name__)

INIT_STREAM = 0
RESAMPLE_STREAM = 1
MUTATE_STREAM = 2

MAX_REJECTION_TRIES = 1_000_000


def init_stream(rng: RngStream, i: int) -> RngStream:
    return rng.child(INIT_STREAM, i)


def resample_stream(rng: RngStream, stage: int) -> RngStream:
    return rng.child(RESAMPLE_STREAM, stage)


def mutate_stream(rng: RngStream, stage: int, i: int, step: int) -> RngStream:
    return rng.child(MUTATE_STREAM, stage, i, step)


def tempered_increment(log_liks: np.ndarray, delta: float) -> np.ndarray:
    """delta * log-likelihood with 0 * (-inf) read as 0."""
    log_liks = np.asarray(log_liks, dtype=float)
    if delta == 0.0:
        return np.zeros_like(log_liks)
    return delta * log_liks


@dataclass
class ParticleSystem:
    """Output of one SMC run.

    ``particles[s]`` holds stage s after mutation (stage 0 is the initial
    draw); ``ancestry[s - 1][i]`` is the stage s-1 parent of particle i at
    stage s. ``final_weights`` is the normalized weighted cloud before the
    terminal resample.
    """

    particles: List[List[ModelPoint]]
    ancestry: List[np.ndarray]
    resampled: List[bool]
    log_Z: float
    final_weights: np.ndarray
    trace: List[StageRecord] = field(default_factory=list)

    @property
    def n_particles(self) -> int:
        return len(self.particles[0])

    @property
    def n_stages(self) -> int:
        return len(self.particles) - 1

    @property
    def final_particles(self) -> List[ModelPoint]:
        return self.particles[-1]


@dataclass
class ChainState:
    """One outer-chain state: a path x_0..x_S with its evidence estimate."""

    path: List[ModelPoint]
    log_Z: float
    cloud_weights: np.ndarray
    cloud_particles: List[ModelPoint]

    @property
    def terminal(self) -> ModelPoint:
        return self.path[-1]

    def rao_blackwellized(self, model: Model) -> np.ndarray:
        """Weighted terminal-cloud average of the model's estimands."""
        values = np.array([model.estimands(x) for x in self.cloud_particles])
        return self.cloud_weights @ values

    def point_estimands(self, model: Model) -> np.ndarray:
        return np.asarray(model.estimands(self.terminal), dtype=float)


def sample_initial(
    model: Model,
    alpha0: float,
    rng: RngStream,
    log_lik_bound: Optional[float] = None,
) -> ModelPoint:
    """One exact draw from pi_{alpha0}.

    The prior when alpha0 = 0; otherwise rejection from the prior with
    acceptance probability exp(alpha0 * (log p(y | x) - sup log p(y | .))).
    """
    if alpha0 == 0.0:
        return model.sample_prior(rng)
    bound = model.max_log_likelihood() if log_lik_bound is None else log_lik_bound
    for attempt in range(MAX_REJECTION_TRIES):
        x = model.sample_prior(rng.child(attempt, 0))
        u = rng.child(attempt, 1).uniform()
        if np.log(u) < alpha0 * (model.log_likelihood(x) - bound):
            return x
    raise NumericalError(
        f"rejection sampler for alpha0 = {alpha0} accepted nothing in "
        f"{MAX_REJECTION_TRIES} attempts",
        data={"alpha0": alpha0},
    )


def initial_particles(
    model: Model, schedule: TemperingSchedule, indices: Sequence[int], rng: RngStream
) -> List[ModelPoint]:
    bound = model.max_log_likelihood() if schedule.alpha0 > 0 else None
    return [
        sample_initial(model, schedule.alpha0, init_stream(rng, i), bound)
        for i in indices
    ]


def mutate(
    model: Model,
    x: ModelPoint,
    alpha: float,
    n_steps: int,
    rng: RngStream,
    stage: int,
    i: int,
) -> ModelPoint:
    for k in range(n_steps):
        x = model.inner_kernel(x, alpha, mutate_stream(rng, stage, i, k))
    return x


def _check_smc_arguments(n_particles: int, gamma: float) -> None:
    if n_particles < 1:
        raise DomainError(f"N must be positive, got {n_particles}")
    if not 0.0 <= gamma <= 1.0:
        raise DomainError(f"gamma must lie in [0, 1], got {gamma}")


def run_smc(
    model: Model,
    schedule: TemperingSchedule,
    n_particles: int,
    gamma: float,
    rng: RngStream,
) -> ParticleSystem:
    """Tempered SMC from pi_{alpha_0} to the posterior.

    Resamples systematically whenever the ESS of the carried weights drops
    below N * gamma; log_Z accrues log sum_i W_i w_i at every reweighting.
    """
    _check_smc_arguments(n_particles, gamma)
    N = n_particles
    alphas = schedule.alphas
    current = initial_particles(model, schedule, range(N), rng)
    particles = [current]
    ancestry: List[np.ndarray] = []
    resampled: List[bool] = []
    trace: List[StageRecord] = []
    log_W = np.full(N, -np.log(N))
    log_Z = 0.0

    for s in range(1, schedule.n_stages + 1):
        increments = tempered_increment(
            model.log_likelihoods(current), alphas[s] - alphas[s - 1]
        )
        W = normalize_log_weights(log_W + increments, stage=s)
        stage_log_z = float(logsumexp(log_W + increments))
        log_Z += stage_log_z
        stage_ess = ess(W)
        did_resample = stage_ess < N * gamma
        if did_resample:
            parents = systematic_resample(W, resample_stream(rng, s).uniform())
            log_W = np.full(N, -np.log(N))
        else:
            parents = np.arange(N)
            log_W = log_W + increments - stage_log_z
        logger.debug(
            f"SMC stage {s}: alpha={alphas[s]:.6f} ESS={stage_ess:.1f} "
            f"resampled={did_resample}"
        )
        count = schedule.mcmc_counts[s - 1]
        current = [
            mutate(model, current[parents[i]], alphas[s], count, rng, s, i)
            for i in range(N)
        ]
        particles.append(current)
        ancestry.append(parents)
        resampled.append(did_resample)
        trace.append(StageRecord(s, alphas[s], stage_ess, did_resample, log_Z))

    increments = tempered_increment(model.log_likelihoods(current), 1.0 - alphas[-1])
    final_stage = schedule.n_stages + 1
    log_Z += float(logsumexp(log_W + increments))
    final_weights = normalize_log_weights(log_W + increments, stage=final_stage)
    trace.append(StageRecord(final_stage, 1.0, ess(final_weights), False, log_Z))
    return ParticleSystem(
        particles=particles,
        ancestry=ancestry,
        resampled=resampled,
        log_Z=log_Z,
        final_weights=final_weights,
        trace=trace,
    )


def select_terminal_particle(system: ParticleSystem, rng: RngStream) -> int:
    """Index drawn proportionally to the final weights."""
    return categorical_draw(system.final_weights, rng.uniform())


def trace_ancestor_path(system: ParticleSystem, terminal_index: int) -> ChainState:
    """Walk the ancestry back from a terminal particle."""
    N = system.n_particles
    if not 0 <= terminal_index < N:
        raise DomainError(f"terminal index {terminal_index} outside [0, {N})")
    path = [system.particles[-1][terminal_index]]
    index = terminal_index
    for s in range(system.n_stages, 0, -1):
        parents = system.ancestry[s - 1]
        if len(parents) != N:
            raise InvariantError(f"ancestry at stage {s} has {len(parents)} entries")
        index = int(parents[index])
        if not 0 <= index < N:
            raise InvariantError(f"ancestor index {index} at stage {s} out of range")
        path.append(system.particles[s - 1][index])
    path.reverse()
    return ChainState(
        path=path,
        log_Z=system.log_Z,
        cloud_weights=system.final_weights,
        cloud_particles=list(system.final_particles),
    )


@dataclass
class SmcEstimate:
    """Posterior means from the weighted terminal cloud of one SMC run."""

    estimates: np.ndarray
    log_Z: float
    final_ess: float
    names: List[str]
    trace: List[StageRecord] = field(default_factory=list)

    def to_dict(self):
        return {
            "estimates": dict(zip(self.names, self.estimates.tolist())),
            "log_Z": self.log_Z,
            "final_ess": self.final_ess,
        }


def smc_estimate(
    model: Model,
    schedule: TemperingSchedule,
    n_particles: int,
    gamma: float,
    rng: RngStream,
) -> SmcEstimate:
    system = run_smc(model, schedule, n_particles, gamma, rng)
    values = np.array([model.estimands(x) for x in system.final_particles])
    names = model.estimand_names() or [f"h{j}" for j in range(values.shape[1])]
    return SmcEstimate(
        estimates=system.final_weights @ values,
        log_Z=system.log_Z,
        final_ess=ess(system.final_weights),
        names=names,
        trace=system.trace,
    )
