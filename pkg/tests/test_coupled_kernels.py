"""
Tests for coupled PIMH and coupled conditional SMC transitions.
"""

import numpy as np
import pytest

from unbiased_pmcmc.models.error_handling import DomainError
from unbiased_pmcmc.samplers.coupled_kernels import (
    CoupledState,
    conditional_smc_step,
    coupled_csmc_step,
    coupled_pimh_step,
    initial_pimh_step,
    pimh_proposal,
    states_coincide,
)
from unbiased_pmcmc.samplers.rng import RngStream

LOG_C = -2.0


@pytest.fixture
def flat(constant_model, prior_only_schedule):
    """Constant-likelihood model with its prior-only schedule."""
    return constant_model, prior_only_schedule


class TestStatesCoincide:
    """Test the meeting rule."""

    def test_same_object(self, make_chain, constant_model):
        """Test a state coincides with itself."""
        chain = make_chain(1.0)
        assert states_coincide(constant_model, chain, chain)

    def test_equal_path_and_evidence(self, make_chain, constant_model):
        """Test equal paths with equal log_Z coincide."""
        assert states_coincide(constant_model, make_chain(1.0), make_chain(1.0))

    def test_different_evidence(self, make_chain, constant_model):
        """Test equal paths with different log_Z do not coincide."""
        assert not states_coincide(
            constant_model, make_chain(1.0, 0.0), make_chain(1.0, 0.5)
        )

    def test_different_paths(self, make_chain, constant_model):
        """Test different paths do not coincide."""
        assert not states_coincide(constant_model, make_chain(1.0), make_chain(2.0))


class TestCoupledPimh:
    """Test coupled particle independent Metropolis-Hastings."""

    def test_proposal_evidence(self, flat):
        """Test the proposal carries the fresh SMC evidence."""
        model, schedule = flat
        proposal = pimh_proposal(model, schedule, 5, 0.5, RngStream(0))
        assert proposal.log_Z == pytest.approx(LOG_C)
        assert len(proposal.path) == 1

    def test_met_pair_stays_met(self, make_chain, flat):
        """Test a met pair remains a single chain."""
        model, schedule = flat
        state = CoupledState.single(make_chain(0.3, LOG_C))
        for trial in range(20):
            state = coupled_pimh_step(state, model, schedule, 4, 0.5, RngStream(trial))
            assert state.met
            assert state.chain is state.chain_bar

    def test_acceptance_rate(self, make_chain, flat):
        """Test acceptance probability min(1, Z' / Z)."""
        model, schedule = flat
        accepted = 0
        n_trials = 400
        for trial in range(n_trials):
            chain = make_chain(5.0, LOG_C + np.log(2.0))
            state = CoupledState(chain, chain, met=True)
            out = coupled_pimh_step(state, model, schedule, 2, 0.5, RngStream(trial))
            accepted += int(out.chain is not chain)
        assert accepted / n_trials == pytest.approx(0.5, abs=0.08)

    def test_meets_exactly_when_both_accept(self, make_chain, flat):
        """Test the shared uniform gives Pr(meet) = min of the two rates."""
        model, schedule = flat
        met = 0
        n_trials = 400
        for trial in range(n_trials):
            chain = make_chain(1.0, LOG_C + np.log(2.0))
            chain_bar = make_chain(2.0, LOG_C + np.log(4.0))
            state = CoupledState(chain, chain_bar)
            out = coupled_pimh_step(state, model, schedule, 2, 0.5, RngStream(trial))
            if out.met:
                met += 1
                assert out.chain is out.chain_bar
            else:
                assert out.chain_bar is chain_bar
        assert met / n_trials == pytest.approx(0.25, abs=0.07)

    def test_initial_step_meets_on_acceptance(self, make_chain, flat):
        """Test the first step meets when the leading chain accepts."""
        model, schedule = flat
        state = initial_pimh_step(
            make_chain(0.0, LOG_C), model, schedule, 3, 0.5, RngStream(1)
        )
        assert state.met
        assert state.chain is state.chain_bar


class TestCoupledCsmc:
    """Test coupled conditional SMC."""

    def test_conditional_step_keeps_evidence(self, make_chain, flat):
        """Test a conditional SMC step carries log_Z over."""
        model, schedule = flat
        out = conditional_smc_step(
            make_chain(0.7, 1.25), model, schedule, 6, 0.5, RngStream(0)
        )
        assert out.log_Z == 1.25
        assert len(out.path) == 1

    def test_needs_two_particles(self, make_chain, flat):
        """Test N = 1 is rejected."""
        model, schedule = flat
        with pytest.raises(DomainError, match="N >= 2"):
            conditional_smc_step(make_chain(0.0), model, schedule, 1, 0.5, RngStream(0))

    def test_path_length_checked(
        self, make_chain, constant_model, three_stage_schedule
    ):
        """Test a path shorter than the schedule is rejected."""
        with pytest.raises(DomainError, match="path has"):
            conditional_smc_step(
                make_chain(0.0),
                constant_model,
                three_stage_schedule,
                4,
                0.5,
                RngStream(0),
            )

    def test_met_pair_stays_met(self, make_chain, flat):
        """Test a met pair remains a single chain."""
        model, schedule = flat
        state = CoupledState.single(make_chain(0.3))
        out = coupled_csmc_step(state, model, schedule, 5, 0.5, RngStream(2))
        assert out.met
        assert out.chain is out.chain_bar

    def test_distinct_paths_usually_meet(self, make_chain, flat):
        """Test shared free particles let the final draws pick one path."""
        model, schedule = flat
        met = 0
        for trial in range(10):
            state = CoupledState(make_chain(1.0), make_chain(2.0))
            out = coupled_csmc_step(state, model, schedule, 50, 0.5, RngStream(trial))
            if out.met:
                met += 1
                assert model.paths_equal(out.chain.path, out.chain_bar.path)
                assert out.chain.log_Z == out.chain_bar.log_Z
        assert met >= 8

    def test_equal_paths_different_evidence(self, make_chain, flat):
        """Test equal paths share one system but keep their own evidence."""
        model, schedule = flat
        state = CoupledState(make_chain(1.0, 0.0), make_chain(1.0, 0.5))
        out = coupled_csmc_step(state, model, schedule, 5, 0.5, RngStream(3))
        assert not out.met
        assert model.paths_equal(out.chain.path, out.chain_bar.path)
        assert (out.chain.log_Z, out.chain_bar.log_Z) == (0.0, 0.5)

    def test_two_systems_with_stages(
        self, make_chain, conjugate_model, three_stage_schedule
    ):
        """Test the two-system update is deterministic and well formed."""
        chain = make_chain(0.1)
        chain.path = [np.array([0.1]), np.array([0.2]), np.array([0.3])]
        chain_bar = make_chain(-1.0, 0.3)
        chain_bar.path = [np.array([-1.0]), np.array([-0.5]), np.array([0.0])]
        state = CoupledState(chain, chain_bar)
        a = coupled_csmc_step(
            state, conjugate_model, three_stage_schedule, 8, 1.0, RngStream(11)
        )
        b = coupled_csmc_step(
            state, conjugate_model, three_stage_schedule, 8, 1.0, RngStream(11)
        )
        assert len(a.chain.path) == 3
        assert len(a.chain_bar.path) == 3
        assert (a.chain.log_Z, a.chain_bar.log_Z) == (0.0, 0.3)
        assert not a.met
        assert conjugate_model.paths_equal(a.chain.path, b.chain.path)
        assert conjugate_model.paths_equal(a.chain_bar.path, b.chain_bar.path)
        np.testing.assert_allclose(a.chain.cloud_weights.sum(), 1.0)
