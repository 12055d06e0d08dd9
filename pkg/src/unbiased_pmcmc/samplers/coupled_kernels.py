"""
Coupled outer-MCMC transitions on paths: particle independent
Metropolis-Hastings and conditional SMC.

Stream layout under a step stream ``rng``:
    PIMH:  rng.child(0) fresh SMC run, rng.child(1) terminal draw,
           rng.child(2) shared acceptance uniform
    CSMC:  the smc layout for the free particles, rng.child(3) final draw
"""

import logging
from dataclasses import dataclass, replace
from typing import List, Sequence

import numpy as np
from scipy.special import logsumexp

from ..models.data_models import TemperingSchedule
from ..models.error_handling import DomainError
from ..targets.base import Model, ModelPoint
from .resampling import (
    categorical_draw,
    conditional_systematic_resample,
    coupled_conditional_systematic,
    ess,
    maximal_coupling_discrete,
    normalize_log_weights,
)
from .rng import RngStream
from .smc import (
    ChainState,
    ParticleSystem,
    initial_particles,
    mutate,
    mutate_stream,
    resample_stream,
    run_smc,
    select_terminal_particle,
    tempered_increment,
    trace_ancestor_path,
)

logger = logging.getLogger(__name__)

ACCEPT_STREAM = 2
FINAL_DRAW_STREAM = 3


@dataclass
class CoupledState:
    """Pair of outer-chain states; ``met`` once they coincide."""

    chain: ChainState
    chain_bar: ChainState
    met: bool = False

    @classmethod
    def single(cls, chain: ChainState) -> "CoupledState":
        return cls(chain=chain, chain_bar=chain, met=True)


def states_coincide(model: Model, a: ChainState, b: ChainState) -> bool:
    """Equal paths and equal evidence estimates."""
    if a is b:
        return True
    return a.log_Z == b.log_Z and model.paths_equal(a.path, b.path)


def pimh_proposal(
    model: Model,
    schedule: TemperingSchedule,
    n_particles: int,
    gamma: float,
    rng: RngStream,
) -> ChainState:
    """Fresh SMC run and an ancestral path drawn from its final weights."""
    system = run_smc(model, schedule, n_particles, gamma, rng.child(0))
    index = select_terminal_particle(system, rng.child(1))
    return trace_ancestor_path(system, index)


def coupled_pimh_step(
    state: CoupledState,
    model: Model,
    schedule: TemperingSchedule,
    n_particles: int,
    gamma: float,
    rng: RngStream,
) -> CoupledState:
    """Both chains propose the same SMC path and share one acceptance uniform."""
    proposal = pimh_proposal(model, schedule, n_particles, gamma, rng)
    log_u = np.log(rng.child(ACCEPT_STREAM).uniform())
    accept = bool(log_u < proposal.log_Z - state.chain.log_Z)
    if state.met:
        chain = proposal if accept else state.chain
        return CoupledState.single(chain)
    accept_bar = bool(log_u < proposal.log_Z - state.chain_bar.log_Z)
    chain = proposal if accept else state.chain
    chain_bar = proposal if accept_bar else state.chain_bar
    met = accept and accept_bar
    if met:
        logger.debug("PIMH: both chains accepted the proposal")
    return CoupledState(chain=chain, chain_bar=chain_bar, met=met)


def initial_pimh_step(
    chain: ChainState,
    model: Model,
    schedule: TemperingSchedule,
    n_particles: int,
    gamma: float,
    rng: RngStream,
) -> CoupledState:
    """First outer step under PIMH.

    The lagged chain takes the proposal itself, so the pair has met exactly
    when the leading chain accepts it.
    """
    proposal = pimh_proposal(model, schedule, n_particles, gamma, rng)
    log_u = np.log(rng.child(ACCEPT_STREAM).uniform())
    if log_u < proposal.log_Z - chain.log_Z:
        return CoupledState.single(proposal)
    return CoupledState(chain=chain, chain_bar=proposal, met=False)


def _conditional_systems(
    model: Model,
    paths: Sequence[Sequence[ModelPoint]],
    schedule: TemperingSchedule,
    n_particles: int,
    gamma: float,
    rng: RngStream,
) -> List[ParticleSystem]:
    """One or two conditional SMC systems driven by the same random draws.

    Slot 0 carries the conditioned path; the N - 1 free initial particles
    are shared objects across systems and free particles are moved with the
    coupled inner kernel.
    """
    N = n_particles
    if N < 2:
        raise DomainError(f"conditional SMC needs N >= 2, got {N}")
    S = schedule.n_stages
    for path in paths:
        if len(path) != S + 1:
            raise DomainError(f"path has {len(path)} states, schedule needs {S + 1}")
    alphas = schedule.alphas
    n_sys = len(paths)
    free = initial_particles(model, schedule, range(1, N), rng)
    current = [[path[0]] + free for path in paths]
    particles = [[c] for c in current]
    ancestry: List[List[np.ndarray]] = [[] for _ in paths]
    resampled: List[List[bool]] = [[] for _ in paths]
    log_W = [np.full(N, -np.log(N)) for _ in paths]
    log_Z = [0.0 for _ in paths]

    for s in range(1, S + 1):
        weights = []
        for k in range(n_sys):
            unnormalized = log_W[k] + tempered_increment(
                model.log_likelihoods(current[k]), alphas[s] - alphas[s - 1]
            )
            stage_log_z = float(logsumexp(unnormalized))
            log_Z[k] += stage_log_z
            weights.append(normalize_log_weights(unnormalized, stage=s))
            log_W[k] = unnormalized - stage_log_z
        # both systems resample as soon as either one degenerates
        trigger = any(ess(w) < N * gamma for w in weights)
        if trigger:
            stream = resample_stream(rng, s)
            if n_sys == 1:
                parents = [conditional_systematic_resample(weights[0], stream)]
            else:
                parents = list(
                    coupled_conditional_systematic(weights[0], weights[1], stream)
                )
            log_W = [np.full(N, -np.log(N)) for _ in paths]
        else:
            parents = [np.arange(N) for _ in paths]

        alpha, count = alphas[s], schedule.mcmc_counts[s - 1]
        moved = [[path[s]] for path in paths]
        for i in range(1, N):
            if n_sys == 1:
                moved[0].append(
                    mutate(model, current[0][parents[0][i]], alpha, count, rng, s, i)
                )
                continue
            x, x_bar = current[0][parents[0][i]], current[1][parents[1][i]]
            for step in range(count):
                x, x_bar = model.coupled_inner_kernel(
                    x, x_bar, alpha, mutate_stream(rng, s, i, step)
                )
            moved[0].append(x)
            moved[1].append(x_bar)
        current = moved
        for k in range(n_sys):
            particles[k].append(current[k])
            ancestry[k].append(np.asarray(parents[k], dtype=np.int64))
            resampled[k].append(trigger)

    systems = []
    for k in range(n_sys):
        unnormalized = log_W[k] + tempered_increment(
            model.log_likelihoods(current[k]), 1.0 - alphas[-1]
        )
        log_Z[k] += float(logsumexp(unnormalized))
        systems.append(
            ParticleSystem(
                particles=particles[k],
                ancestry=ancestry[k],
                resampled=resampled[k],
                log_Z=log_Z[k],
                final_weights=normalize_log_weights(unnormalized, stage=S + 1),
            )
        )
    return systems


def conditional_smc_step(
    chain: ChainState,
    model: Model,
    schedule: TemperingSchedule,
    n_particles: int,
    gamma: float,
    rng: RngStream,
) -> ChainState:
    """Single-chain conditional SMC update of a path.

    The evidence estimate is carried over from ``chain``; only PIMH steps
    refresh it.
    """
    (system,) = _conditional_systems(
        model, [chain.path], schedule, n_particles, gamma, rng
    )
    index = categorical_draw(
        system.final_weights, rng.child(FINAL_DRAW_STREAM).uniform()
    )
    return replace(trace_ancestor_path(system, index), log_Z=chain.log_Z)


def coupled_csmc_step(
    state: CoupledState,
    model: Model,
    schedule: TemperingSchedule,
    n_particles: int,
    gamma: float,
    rng: RngStream,
) -> CoupledState:
    """Coupled conditional SMC; final indices drawn from a maximal coupling.

    Equal conditioned paths give identical systems, so one system is run and
    both chains take its path with their own evidence estimates.
    """
    if state.met or model.paths_equal(state.chain.path, state.chain_bar.path):
        chain = conditional_smc_step(
            state.chain, model, schedule, n_particles, gamma, rng
        )
        if state.met or state.chain.log_Z == state.chain_bar.log_Z:
            return CoupledState.single(chain)
        chain_bar = replace(chain, log_Z=state.chain_bar.log_Z)
        return CoupledState(chain=chain, chain_bar=chain_bar, met=False)
    system, system_bar = _conditional_systems(
        model,
        [state.chain.path, state.chain_bar.path],
        schedule,
        n_particles,
        gamma,
        rng,
    )
    index, index_bar = maximal_coupling_discrete(
        system.final_weights, system_bar.final_weights, rng.child(FINAL_DRAW_STREAM)
    )
    chain = replace(trace_ancestor_path(system, index), log_Z=state.chain.log_Z)
    chain_bar = replace(
        trace_ancestor_path(system_bar, index_bar), log_Z=state.chain_bar.log_Z
    )
    met = states_coincide(model, chain, chain_bar)
    if met:
        logger.debug("CSMC: final draws selected the same path")
    return CoupledState(chain=chain, chain_bar=chain_bar, met=met)

