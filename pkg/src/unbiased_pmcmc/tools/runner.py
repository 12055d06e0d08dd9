"""
Replicate fan-out for coupled particle MCMC runs.

Replicate r draws all of its randomness from
``RngStream(seed).child(REPLICATE_STREAM, r)``, so results do not depend
on the number of workers or on scheduling order.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional

from joblib import Parallel, delayed

from ..models.data_models import CoupledRun, TemperingSchedule
from ..samplers.estimator import run_coupled_chain
from ..samplers.rng import RngStream
from ..targets.base import Model

logger = logging.getLogger(__name__)

ADAPT_STREAM = 0
REPLICATE_STREAM = 1
SMC_STREAM = 2
CHAIN_STREAM = 3


@dataclass
class ReplicateSettings:
    """Settings of one coupled run."""

    n_particles: int
    rho: float
    l: int
    gamma: float = 0.5
    time_budget: Optional[float] = None
    max_iterations: Optional[int] = None


def run_replicate(
    model: Model,
    schedule: TemperingSchedule,
    settings: ReplicateSettings,
    seed: int,
    replicate: int,
) -> CoupledRun:
    run = run_coupled_chain(
        model,
        schedule,
        settings.n_particles,
        settings.rho,
        settings.l,
        RngStream(seed).child(REPLICATE_STREAM, replicate),
        gamma=settings.gamma,
        time_budget=settings.time_budget,
        max_iterations=settings.max_iterations,
        replicate=replicate,
    )
    logger.debug(f"Replicate {replicate} finished: tau={run.tau}, T={run.T}")
    return run


def run_replicates(
    model: Model,
    schedule: TemperingSchedule,
    settings: ReplicateSettings,
    n_replicates: int,
    seed: int,
    workers: int = 1,
) -> List[CoupledRun]:
    """Run replicates 0 .. R-1 on a joblib worker pool, sorted by replicate."""
    logger.info(
        f"Running {n_replicates} replicate(s) on {workers} worker(s): "
        f"N={settings.n_particles}, rho={settings.rho}, l={settings.l}"
    )
    if workers == 1:
        runs = [
            run_replicate(model, schedule, settings, seed, r)
            for r in range(n_replicates)
        ]
    else:
        runs = Parallel(n_jobs=workers)(
            delayed(run_replicate)(model, schedule, settings, seed, r)
            for r in range(n_replicates)
        )
    runs = sorted(runs, key=lambda run: run.replicate)
    incomplete = sum(1 for run in runs if not run.completed)
    logger.info(
        f"Finished {n_replicates - incomplete}/{n_replicates} replicate(s)"
        + (f", {incomplete} incomplete" if incomplete else "")
    )
    return runs
