"""
Shared fixtures for the sampler tests.
"""

import numpy as np
import pytest

from unbiased_pmcmc.models.data_models import TemperingSchedule
from unbiased_pmcmc.samplers.smc import ChainState
from unbiased_pmcmc.targets.conjugate import (
    ConjugateGaussianModel,
    ConstantLikelihoodModel,
    conjugate_simulate,
)


def _chain(value: float, log_Z: float = 0.0) -> ChainState:
    point = np.array([value])
    return ChainState(
        path=[point], log_Z=log_Z, cloud_weights=np.ones(1), cloud_particles=[point]
    )


@pytest.fixture
def make_chain():
    """Factory for one-state paths holding a scalar."""
    return _chain


@pytest.fixture
def constant_model():
    return ConstantLikelihoodModel(log_c=-2.0)


@pytest.fixture
def prior_only_schedule():
    return TemperingSchedule(alphas=[0.0], mcmc_counts=[])


@pytest.fixture
def conjugate_model():
    return ConjugateGaussianModel(conjugate_simulate(n=5, seed=1))


@pytest.fixture
def three_stage_schedule():
    return TemperingSchedule(alphas=[0.0, 0.25, 0.5], mcmc_counts=[1, 1])
