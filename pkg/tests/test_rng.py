"""
Tests for deterministic random streams.
"""

import numpy as np
import pytest

from unbiased_pmcmc.models.error_handling import DomainError
from unbiased_pmcmc.samplers.rng import RngStream


class TestRngStream:
    """Test RngStream keys and generators."""

    def test_same_key_replays_numbers(self):
        """Test that a stream rebuilt from the same key gives the same draws."""
        a = RngStream(42, (1, 2)).generator().random(5)
        b = RngStream(42, (1, 2)).generator().random(5)
        np.testing.assert_array_equal(a, b)

    def test_child_extends_path(self):
        """Test child path construction."""
        stream = RngStream(7).child(3).child(1, 4)
        assert stream.path == (3, 1, 4)
        assert stream.seed == 7
        assert stream == RngStream(7, (3, 1, 4))

    def test_different_paths_differ(self):
        """Test that sibling streams are not identical."""
        root = RngStream(0)
        assert root.child(0).uniform() != root.child(1).uniform()
        assert root.child(0, 1).uniform() != root.child(1, 0).uniform()

    def test_different_seeds_differ(self):
        """Test that seeds change the draws."""
        assert RngStream(1).uniform() != RngStream(2).uniform()

    def test_uniform_range(self):
        """Test uniform draws lie in [0, 1)."""
        values = [RngStream(5, (i,)).uniform() for i in range(200)]
        assert all(0.0 <= v < 1.0 for v in values)

    def test_invalid_seed(self):
        """Test seed validation."""
        with pytest.raises(DomainError, match="64-bit"):
            RngStream(-1)
        with pytest.raises(DomainError, match="64-bit"):
            RngStream(2**64)

    def test_negative_path_index(self):
        """Test path index validation."""
        with pytest.raises(DomainError, match="non-negative"):
            RngStream(0, (1, -2))

    def test_numpy_integers_accepted(self):
        """Test that numpy integer indices normalize to Python ints."""
        stream = RngStream(np.uint64(3)).child(np.int64(2))
        assert stream.path == (2,)
        assert isinstance(stream.seed, int)
