"""
Tests for adaptive schedule construction.
"""

import numpy as np
import pytest

from unbiased_pmcmc.models.data_models import AdaptationConfig
from unbiased_pmcmc.models.error_handling import ConvergenceError, DomainError
from unbiased_pmcmc.samplers.adaptation import (
    adapt,
    next_temperature,
    select_alpha0_rejection,
    select_mcmc_count,
)
from unbiased_pmcmc.samplers.resampling import ess, normalize_log_weights
from unbiased_pmcmc.samplers.rng import RngStream
from unbiased_pmcmc.targets.conjugate import (
    ConjugateGaussianModel,
    conjugate_simulate,
)


class TestNextTemperature:
    """Test the ESS-targeting temperature search."""

    def test_equal_log_likelihoods_jump_to_one(self):
        """Test equal likelihoods never lose ESS."""
        assert next_temperature([-1.0, -1.0, -1.0], 0.0, 0.5) == 1.0

    def test_ess_hits_target(self):
        """Test the chosen increment keeps ESS at gamma0 * N."""
        log_liks = np.random.default_rng(0).normal(0.0, 10.0, 1000)
        alpha = next_temperature(log_liks, 0.1, 0.5)
        assert 0.1 < alpha < 1.0
        achieved = ess(normalize_log_weights((alpha - 0.1) * log_liks))
        assert achieved >= 500.0
        assert achieved == pytest.approx(500.0, abs=1.0)

    def test_minus_infinity_allowed(self):
        """Test -inf log-likelihoods are zero weights, not errors."""
        alpha = next_temperature([-np.inf, 0.0, 0.0, 0.0], 0.0, 0.5)
        assert 0.0 < alpha <= 1.0

    def test_nan_rejected(self):
        """Test NaN log-likelihoods are rejected."""
        with pytest.raises(DomainError, match="NaN"):
            next_temperature([0.0, np.nan], 0.0, 0.5)

    def test_alpha_prev_range(self):
        """Test alpha_prev must lie in [0, 1)."""
        with pytest.raises(DomainError, match="alpha_prev"):
            next_temperature([0.0, 1.0], 1.0, 0.5)


class TestSelectMcmcCount:
    """Test the decorrelation criterion."""

    def test_exact_kernel_needs_one_step(self):
        """Test an independent redraw decorrelates in one step."""
        model = ConjugateGaussianModel(conjugate_simulate(n=10, seed=2))
        particles = [model.sample_prior(RngStream(0, (i,))) for i in range(200)]
        m, moved = select_mcmc_count(model, particles, 0.5, 0.9, 20, RngStream(1))
        assert m == 1
        assert len(moved) == 200

    def test_constant_statistic_dropped(self, constant_model):
        """Test zero-variance statistics do not block the criterion."""
        particles = [constant_model.sample_prior(RngStream(0, (i,))) for i in range(50)]
        m, _ = select_mcmc_count(constant_model, particles, 1.0, 0.9, 5, RngStream(1))
        assert m == 1

    def test_sticky_kernel_hits_cap(self):
        """Test a slowly mixing kernel returns max_steps."""
        model = ConjugateGaussianModel(
            conjugate_simulate(n=10, seed=2), kernel="rwmh", step_size=1e-4
        )
        particles = [model.sample_prior(RngStream(0, (i,))) for i in range(100)]
        m, _ = select_mcmc_count(model, particles, 0.5, 0.5, 3, RngStream(1))
        assert m == 3

    def test_no_particles(self, constant_model):
        """Test empty particle sets are rejected."""
        with pytest.raises(DomainError):
            select_mcmc_count(constant_model, [], 0.5, 0.9, 5, RngStream(0))


class TestAdapt:
    """Test the full adaptive schedule."""

    def test_constant_model_has_no_stages(self, constant_model):
        """Test a flat likelihood needs no intermediate temperatures."""
        schedule = adapt(constant_model, AdaptationConfig(n0=50), RngStream(0), seed=0)
        assert schedule.alphas == [0.0]
        assert schedule.mcmc_counts == []
        assert schedule.model == "constant"
        assert schedule.seed == 0

    def test_conjugate_schedule(self):
        """Test temperatures increase and the exact kernel needs one step."""
        model = ConjugateGaussianModel(conjugate_simulate(n=20, x_true=[1.5], seed=3))
        schedule = adapt(model, AdaptationConfig(n0=200, gamma0=0.5), RngStream(1))
        assert schedule.n_stages >= 1
        assert all(b > a for a, b in zip(schedule.alphas, schedule.alphas[1:]))
        assert schedule.alphas[-1] < 1.0
        assert schedule.mcmc_counts == [1] * schedule.n_stages

    def test_deterministic(self):
        """Test the schedule depends only on the stream."""
        model = ConjugateGaussianModel(conjugate_simulate(n=20, x_true=[1.5], seed=3))
        config = AdaptationConfig(n0=100, gamma0=0.5)
        a = adapt(model, config, RngStream(4))
        b = adapt(model, config, RngStream(4))
        assert a.to_dict() == b.to_dict()

    def test_stage_cap(self):
        """Test the stage cap raises ConvergenceError."""
        model = ConjugateGaussianModel(conjugate_simulate(n=50, x_true=[2.0], seed=0))
        config = AdaptationConfig(n0=100, gamma0=0.5, max_stages=1)
        with pytest.raises(ConvergenceError, match="did not reach"):
            adapt(model, config, RngStream(0))

    def test_rejection_alpha0(self):
        """Test rejection-sampled alpha0 lies in [0, 1)."""
        model = ConjugateGaussianModel(conjugate_simulate(n=20, x_true=[1.5], seed=3))
        schedule = adapt(
            model,
            AdaptationConfig(n0=100, gamma0=0.5, rejection_rate=0.5),
            RngStream(2),
        )
        assert 0.0 < schedule.alpha0 < 1.0


class TestSelectAlpha0Rejection:
    """Test the rejection-rate choice of alpha0."""

    def test_returns_n0_particles(self):
        """Test exactly N0 particles are accepted."""
        model = ConjugateGaussianModel(conjugate_simulate(n=20, seed=5))
        alpha0, particles = select_alpha0_rejection(model, 100, 0.5, RngStream(0))
        assert 0.0 <= alpha0 < 1.0
        assert len(particles) == 100

    def test_full_acceptance_keeps_every_draw(self):
        """Test an acceptance rate of one keeps all prior draws."""
        model = ConjugateGaussianModel(conjugate_simulate(n=20, seed=5))
        _, particles = select_alpha0_rejection(model, 40, 1.0, RngStream(0))
        assert len(particles) == 40

    def test_rate_range(self):
        """Test the acceptance rate must lie in (0, 1]."""
        model = ConjugateGaussianModel(conjugate_simulate(n=5, seed=5))
        with pytest.raises(DomainError):
            select_alpha0_rejection(model, 10, 0.0, RngStream(0))
