"""
Tests for resampling schemes and discrete couplings.
"""

import math
from collections import Counter, defaultdict

import numpy as np
import pytest
from scipy import stats

from unbiased_pmcmc.models.error_handling import (
    ConditioningError,
    DegenerateWeightsError,
    DomainError,
)
from unbiased_pmcmc.samplers.resampling import (
    _conditional_uniform,
    _rotations_starting_at_zero,
    categorical_draw,
    conditional_systematic_resample,
    coupled_conditional_systematic,
    ess,
    ess_from_log_weights,
    maximal_coupling_discrete,
    multinomial_resample,
    normalize,
    normalize_log_weights,
    rotation_coupling,
    systematic_resample,
)
from unbiased_pmcmc.samplers.rng import RngStream

# N = 3; N p_1 is fractional in both systems, then integer in the first
WEIGHT_PAIRS = [
    (np.array([0.45, 0.2, 0.35]), np.array([0.2, 0.5, 0.3])),
    (np.array([1 / 3, 0.5, 1 / 6]), np.array([0.45, 0.1, 0.45])),
]


def _fraction(p: np.ndarray) -> float:
    np1 = p.size * p[0]
    r = np1 - math.floor(np1)
    return 0.0 if min(r, 1.0 - r) < 1e-12 else r


def _cells(points):
    """Midpoints and widths of the partition of [0, 1] at ``points``."""
    edges = np.unique(np.clip(np.append(list(points), [0.0, 1.0]), 0.0, 1.0))
    return list(zip((edges[:-1] + edges[1:]) / 2, np.diff(edges)))


def _select_cells(*vectors):
    points = []
    for p in vectors:
        r = _fraction(p)
        if r:
            np1 = p.size * p[0]
            points.append(r * (math.floor(np1) + 1) / np1)
    return _cells(points)


def _position_cells(*vectors):
    """Cells of u_position on which every systematic output is constant."""
    points = []
    for p in vectors:
        jumps = np.mod(p.size * np.cumsum(p), 1.0)
        points.extend(jumps)
        for q in vectors:
            r = _fraction(q)
            if r:
                points.extend(jumps / r)
                points.extend((jumps - r) / (1.0 - r))
    return _cells(points)


def _key(a) -> tuple:
    return tuple(int(v) for v in a)


def conditional_law(p: np.ndarray) -> dict:
    """Exact law of conditional systematic resampling by cell enumeration."""
    law = defaultdict(float)
    for u_select, width_s in _select_cells(p):
        for u_position, width_p in _position_cells(p):
            U = _conditional_uniform(p[0], p.size, u_select, u_position)
            rotations = _rotations_starting_at_zero(systematic_resample(p, U))
            for a in rotations:
                law[_key(a)] += width_s * width_p / len(rotations)
    return dict(law)


def systematic_given_zero(p: np.ndarray) -> dict:
    """Law of a uniformly rotated systematic draw given that it starts at 0."""
    law = defaultdict(float)
    for U, width in _cells(np.mod(p.size * np.cumsum(p), 1.0)):
        b = systematic_resample(p, U)
        for shift in np.flatnonzero(b == 0):
            law[_key(np.roll(b, -shift))] += width / (p.size * p[0])
    return dict(law)


def _coupled_cells(p, p_bar):
    for u_select, width_s in _select_cells(p, p_bar):
        for u_position, width_p in _position_cells(p, p_bar):
            b = systematic_resample(
                p, _conditional_uniform(p[0], p.size, u_select, u_position)
            )
            b_bar = systematic_resample(
                p_bar, _conditional_uniform(p_bar[0], p_bar.size, u_select, u_position)
            )
            yield width_s * width_p, rotation_coupling(b, b_bar)


def coupled_joint_law(p: np.ndarray, p_bar: np.ndarray) -> dict:
    law = defaultdict(float)
    for area, (rows, cols, joint) in _coupled_cells(p, p_bar):
        for i, j in zip(*np.nonzero(joint)):
            law[(_key(rows[i]), _key(cols[j]))] += area * joint[i, j]
    return dict(law)


def coupled_marginal_laws(p: np.ndarray, p_bar: np.ndarray):
    first, second = defaultdict(float), defaultdict(float)
    for area, (rows, cols, joint) in _coupled_cells(p, p_bar):
        for a, mass in zip(rows, joint.sum(axis=1)):
            first[_key(a)] += area * mass
        for a, mass in zip(cols, joint.sum(axis=0)):
            second[_key(a)] += area * mass
    return dict(first), dict(second)


def total_variation(law: dict, other: dict) -> float:
    keys = set(law) | set(other)
    return 0.5 * sum(abs(law.get(k, 0.0) - other.get(k, 0.0)) for k in keys)


class TestNormalization:
    """Test probability-vector checks and weight normalization."""

    def test_normalize_rejects_negative(self):
        """Test negative entries are rejected."""
        with pytest.raises(DomainError, match="finite and >= 0"):
            normalize(np.array([0.5, -0.1, 0.6]))

    def test_normalize_rejects_bad_sum(self):
        """Test vectors far from summing to one are rejected."""
        with pytest.raises(DomainError, match="sums to"):
            normalize(np.array([0.5, 0.6]))

    def test_normalize_rejects_empty(self):
        """Test empty vectors are rejected."""
        with pytest.raises(DomainError):
            normalize(np.array([]))

    def test_normalize_log_weights(self):
        """Test log weights normalize with large offsets."""
        w = normalize_log_weights(np.array([1000.0, 1000.0 + np.log(3.0)]))
        np.testing.assert_allclose(w, [0.25, 0.75])

    def test_all_weights_vanish(self):
        """Test degenerate weights carry their stage."""
        with pytest.raises(DegenerateWeightsError) as info:
            normalize_log_weights(np.full(3, -np.inf), stage=4)
        assert info.value.stage == 4

    def test_nan_weights(self):
        """Test NaN log weights are degenerate."""
        with pytest.raises(DegenerateWeightsError):
            normalize_log_weights(np.array([0.0, np.nan]))


class TestEss:
    """Test effective sample size."""

    def test_uniform_weights(self):
        """Test ESS of equal weights is N."""
        assert ess(np.full(8, 0.125)) == pytest.approx(8.0)

    def test_single_weight(self):
        """Test ESS of a point mass is 1."""
        assert ess(np.array([0.0, 1.0, 0.0])) == pytest.approx(1.0)

    def test_unnormalized_input(self):
        """Test ESS is scale invariant."""
        assert ess(np.array([2.0, 2.0])) == pytest.approx(2.0)

    def test_from_log_weights(self):
        """Test ESS from log weights."""
        assert ess_from_log_weights(np.zeros(5)) == pytest.approx(5.0)

    def test_zero_weights(self):
        """Test all-zero weights are degenerate."""
        with pytest.raises(DegenerateWeightsError):
            ess(np.zeros(3))


class TestSystematicResample:
    """Test systematic resampling."""

    def test_hand_computed_indices(self):
        """Test indices on a hand-worked example."""
        p = np.array([0.2, 0.3, 0.5])
        np.testing.assert_array_equal(systematic_resample(p, 0.5), [0, 1, 2])
        np.testing.assert_array_equal(
            systematic_resample(np.array([0.5, 0.25, 0.25]), 0.1), [0, 0, 1]
        )

    def test_point_mass(self):
        """Test a point mass is copied N times."""
        p = np.array([0.0, 1.0, 0.0, 0.0])
        np.testing.assert_array_equal(systematic_resample(p, 0.7), [1, 1, 1, 1])

    def test_offspring_counts_are_floor_or_ceil(self):
        """Test each index is copied floor(Np) or ceil(Np) times."""
        gen = np.random.default_rng(0)
        for _ in range(50):
            p = gen.dirichlet(np.ones(6))
            counts = np.bincount(systematic_resample(p, gen.random()), minlength=6)
            assert np.all(counts >= np.floor(6 * p) - 1e-9)
            assert np.all(counts <= np.ceil(6 * p) + 1e-9)
            assert counts.sum() == 6

    def test_indices_sorted(self):
        """Test output indices are non-decreasing."""
        p = np.array([0.1, 0.4, 0.2, 0.3])
        out = systematic_resample(p, 0.33)
        assert np.all(np.diff(out) >= 0)

    def test_invalid_uniform(self):
        """Test U outside [0, 1] is rejected."""
        with pytest.raises(DomainError, match="U must lie"):
            systematic_resample(np.array([0.5, 0.5]), 1.5)

    def test_marginal_chi_square(self):
        """Test expected offspring counts equal N p."""
        p = np.array([0.1, 0.25, 0.3, 0.35])
        gen = np.random.default_rng(11)
        totals = np.zeros(4)
        n_draws = 20000
        for _ in range(n_draws):
            totals += np.bincount(systematic_resample(p, gen.random()), minlength=4)
        np.testing.assert_allclose(totals / n_draws, 4 * p, atol=0.02)


class TestMultinomialAndCategorical:
    """Test independent categorical draws."""

    def test_multinomial_chi_square(self):
        """Test multinomial marginals with a chi-square test at the 1% level."""
        p = np.array([0.1, 0.2, 0.3, 0.4])
        draws = multinomial_resample(p, RngStream(3), size=100000)
        observed = np.bincount(draws, minlength=4)
        result = stats.chisquare(observed, 100000 * p)
        assert result.pvalue > 0.01

    def test_multinomial_default_size(self):
        """Test default size equals the number of weights."""
        draws = multinomial_resample(np.full(5, 0.2), RngStream(0))
        assert draws.shape == (5,)
        assert draws.dtype == np.int64

    def test_categorical_skips_zero_weight(self):
        """Test inverse-CDF draws never return zero-weight indices."""
        p = np.array([0.0, 0.5, 0.5])
        assert categorical_draw(p, 0.0) == 1
        assert categorical_draw(p, 0.49) == 1
        assert categorical_draw(p, 0.51) == 2
        assert categorical_draw(p, 1.0 - 1e-12) == 2


class TestConditionalSystematic:
    """Test conditional systematic resampling."""

    def test_slot_zero_kept(self):
        """Test slot 0 always descends from particle 0."""
        gen = np.random.default_rng(1)
        for trial in range(100):
            p = gen.dirichlet(np.ones(5))
            out = conditional_systematic_resample(p, RngStream(trial))
            assert out[0] == 0
            counts = np.bincount(out, minlength=5)
            assert np.all(counts <= np.ceil(5 * p) + 1e-9)

    def test_uniform_weights_are_identity(self):
        """Test equal weights give the identity ancestry."""
        out = conditional_systematic_resample(np.full(3, 1 / 3), RngStream(0))
        np.testing.assert_array_equal(out, [0, 1, 2])

    def test_zero_weight_conditioning(self):
        """Test conditioning on a zero-weight particle fails."""
        with pytest.raises(ConditioningError):
            conditional_systematic_resample(np.array([0.0, 0.5, 0.5]), RngStream(0))

    def test_conditional_uniform_integer_case(self):
        """Test U is unrestricted when N p_1 is an integer."""
        assert _conditional_uniform(0.5, 4, 0.2, 0.37) == pytest.approx(0.37)

    @pytest.mark.parametrize("p", [w for pair in WEIGHT_PAIRS for w in pair])
    def test_law_matches_reweighted_systematic(self, p):
        """Test the exact law against systematic resampling given slot 0."""
        assert total_variation(conditional_law(p), systematic_given_zero(p)) < 1e-10

    @pytest.mark.slow
    def test_conditional_chi_square(self):
        """Test conditional ancestries with a chi-square test at the 1% level."""
        p = WEIGHT_PAIRS[0][0]
        law = conditional_law(p)
        n_draws = 100000
        observed = Counter(
            tuple(conditional_systematic_resample(p, RngStream(2, (t,))))
            for t in range(n_draws)
        )
        assert set(observed) <= set(law)
        keys = sorted(law)
        expected = n_draws * np.array([law[key] for key in keys])
        assert expected.min() >= 5
        result = stats.chisquare(
            [observed[key] for key in keys], expected * n_draws / expected.sum()
        )
        assert result.pvalue > 0.01

    def test_conditional_uniform_keeps_slot_zero(self):
        """Test the conditional U always selects particle 0 at least once."""
        p = np.array([0.3, 0.3, 0.4])
        gen = np.random.default_rng(5)
        for _ in range(200):
            U = _conditional_uniform(p[0], 3, gen.random(), gen.random())
            assert 0 in systematic_resample(p, U)


class TestCoupledConditionalSystematic:
    """Test the coupled conditional systematic scheme."""

    def test_rotation_coupling_marginals(self):
        """Test the joint law over rotations has uniform margins."""
        b = np.array([0, 0, 1, 2, 0])
        b_bar = np.array([0, 1, 1, 0, 2])
        rows, cols, joint = rotation_coupling(b, b_bar)
        np.testing.assert_allclose(joint.sum(axis=1), 1 / len(rows))
        np.testing.assert_allclose(joint.sum(axis=0), 1 / len(cols))

    def test_rotation_coupling_identical_inputs(self):
        """Test identical vectors are paired rotation by rotation."""
        b = np.array([0, 0, 1])
        rows, cols, joint = rotation_coupling(b, b)
        np.testing.assert_allclose(joint, np.diag([0.5, 0.5]))

    def test_identical_weights_give_identical_ancestry(self):
        """Test equal weight vectors resample identically."""
        p = np.array([0.4, 0.1, 0.3, 0.2])
        for trial in range(50):
            a, a_bar = coupled_conditional_systematic(p, p, RngStream(trial))
            np.testing.assert_array_equal(a, a_bar)
            assert a[0] == 0

    @pytest.mark.parametrize("p, p_bar", WEIGHT_PAIRS)
    def test_marginals_match_single_system_exactly(self, p, p_bar):
        """Test both coupled outputs have the single-system conditional law."""
        first, second = coupled_marginal_laws(p, p_bar)
        assert total_variation(first, conditional_law(p)) < 1e-10
        assert total_variation(second, conditional_law(p_bar)) < 1e-10

    @pytest.mark.slow
    def test_coupled_chi_square(self):
        """Test coupled ancestry pairs with a chi-square test at the 1% level."""
        p, p_bar = WEIGHT_PAIRS[0]
        law = coupled_joint_law(p, p_bar)
        n_draws = 100000
        observed = Counter(
            tuple(
                tuple(a)
                for a in coupled_conditional_systematic(p, p_bar, RngStream(1, (t,)))
            )
            for t in range(n_draws)
        )
        assert set(observed) <= set(law)
        keys = sorted(law)
        expected = n_draws * np.array([law[key] for key in keys])
        assert expected.min() >= 5
        result = stats.chisquare(
            [observed[key] for key in keys], expected * n_draws / expected.sum()
        )
        assert result.pvalue > 0.01


class TestMaximalCoupling:
    """Test the maximal coupling of two discrete laws."""

    def test_identical_laws_always_agree(self):
        """Test equal marginals always give equal indices."""
        p = np.array([0.2, 0.5, 0.3])
        for trial in range(100):
            i, j = maximal_coupling_discrete(p, p, RngStream(trial))
            assert i == j

    def test_disjoint_supports_never_agree(self):
        """Test disjoint marginals never give equal indices."""
        p = np.array([1.0, 0.0])
        q = np.array([0.0, 1.0])
        for trial in range(50):
            assert maximal_coupling_discrete(p, q, RngStream(trial)) == (0, 1)

    def test_marginals_and_agreement_rate(self):
        """Test marginals and Pr(i = i_bar) = sum min(p, q)."""
        p = np.array([0.7, 0.3])
        q = np.array([0.2, 0.8])
        n_draws = 4000
        draws = np.array(
            [
                maximal_coupling_discrete(p, q, RngStream(9, (t,)))
                for t in range(n_draws)
            ]
        )
        assert np.mean(draws[:, 0] == 0) == pytest.approx(0.7, abs=0.04)
        assert np.mean(draws[:, 1] == 0) == pytest.approx(0.2, abs=0.04)
        assert np.mean(draws[:, 0] == draws[:, 1]) == pytest.approx(0.5, abs=0.04)

    def test_length_mismatch(self):
        """Test unequal lengths are rejected."""
        with pytest.raises(DomainError, match="equal length"):
            maximal_coupling_discrete(
                np.array([0.5, 0.5]), np.array([1 / 3] * 3), RngStream(0)
            )
