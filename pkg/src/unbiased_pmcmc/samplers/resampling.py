"""
Resampling schemes and couplings of discrete distributions.

Indices are 0-based: slot 0 is the conditioned particle in the conditional
schemes.
"""

import logging
import math
from typing import List, Optional, Tuple

import numpy as np
from scipy.special import logsumexp

from ..models.error_handling import (
    ConditioningError,
    DegenerateWeightsError,
    DomainError,
)
from .rng import RngStream

logger = logging.getLogger(__name__)

SUM_TOLERANCE = 1e-6
_INTEGER_TOLERANCE = 1e-12


def normalize(p: np.ndarray) -> np.ndarray:
    """Renormalize a probability vector, rejecting clear caller mistakes."""
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise DomainError("probability vector must be a non-empty 1-d array")
    if np.any(~np.isfinite(p)) or np.any(p < 0):
        raise DomainError("probability vector entries must be finite and >= 0")
    total = p.sum()
    if abs(total - 1.0) > SUM_TOLERANCE:
        raise DomainError(f"probability vector sums to {total}, expected 1")
    return p / total


def normalize_log_weights(log_w: np.ndarray, stage: Optional[int] = None) -> np.ndarray:
    """Exponentiate log weights after subtracting their maximum."""
    log_w = np.asarray(log_w, dtype=float)
    if log_w.size == 0 or not np.any(log_w > -np.inf):
        raise DegenerateWeightsError(
            f"all weights vanished at stage {stage}", stage=stage
        )
    if np.any(np.isnan(log_w)) or np.any(log_w == np.inf):
        raise DegenerateWeightsError(
            f"non-finite log weights at stage {stage}", stage=stage
        )
    return np.exp(log_w - logsumexp(log_w))


def ess(weights: np.ndarray) -> float:
    """Effective sample size (sum w)^2 / sum w^2."""
    w = np.asarray(weights, dtype=float)
    if np.any(w < 0) or np.any(~np.isfinite(w)):
        raise DomainError("weights must be finite and non-negative")
    total = w.sum()
    if total <= 0:
        raise DegenerateWeightsError("all weights are zero")
    w = w / total
    return float(1.0 / np.sum(w * w))


def ess_from_log_weights(log_w: np.ndarray) -> float:
    return ess(normalize_log_weights(log_w))


def systematic_resample(p: np.ndarray, U: float) -> np.ndarray:
    """Cumulative-sum sweep with points U, U + 1, ..., U + N - 1."""
    if not 0.0 <= U <= 1.0:
        raise DomainError(f"U must lie in [0, 1], got {U}")
    p = normalize(p)
    n = p.size
    v = n * np.cumsum(p)
    points = U + np.arange(n)
    # first j with v_j >= point; clipped against float drift in the last sum
    indices = np.searchsorted(v, points, side="left")
    return np.minimum(indices, n - 1).astype(np.int64)


def multinomial_resample(
    p: np.ndarray, rng: RngStream, size: Optional[int] = None
) -> np.ndarray:
    """Independent categorical draws."""
    p = normalize(p)
    n = p.size if size is None else size
    gen = rng.generator()
    return np.minimum(
        np.searchsorted(np.cumsum(p), gen.random(n), side="right"), p.size - 1
    ).astype(np.int64)


def categorical_draw(p: np.ndarray, u: float) -> int:
    """Inverse-CDF draw of one index from uniform ``u``."""
    p = np.asarray(p, dtype=float)
    cdf = np.cumsum(p)
    index = int(np.searchsorted(cdf, u * cdf[-1], side="right"))
    return min(index, p.size - 1)


def _conditional_uniform(
    p1: float, n: int, u_select: float, u_position: float
) -> float:
    """Law of U given that slot 0 is selected, as a map of two uniforms."""
    np1 = n * p1
    floor_np1 = math.floor(np1)
    r = np1 - floor_np1
    if r < _INTEGER_TOLERANCE or 1.0 - r < _INTEGER_TOLERANCE:
        # Np1 is an integer: every U in (0, 1) keeps the same copy count.
        return u_position
    if u_select < r * (floor_np1 + 1) / np1:
        return r * u_position
    return r + (1.0 - r) * u_position


def _rotations_starting_at_zero(b: np.ndarray) -> List[np.ndarray]:
    """Cyclic rotations of ``b`` whose first entry is index 0."""
    return [np.roll(b, -shift) for shift in np.flatnonzero(b == 0)]


def conditional_systematic_resample(p: np.ndarray, rng: RngStream) -> np.ndarray:
    """Systematic resampling conditioned on keeping slot 0 in position 0."""
    p = normalize(p)
    if p[0] <= 0:
        raise ConditioningError("cannot condition on a particle with zero weight")
    gen = rng.generator()
    u_select, u_position = gen.random(2)
    U = _conditional_uniform(p[0], p.size, u_select, u_position)
    rotations = _rotations_starting_at_zero(systematic_resample(p, U))
    return rotations[int(gen.integers(len(rotations)))]


def rotation_coupling(
    b: np.ndarray, b_bar: np.ndarray
) -> Tuple[List[np.ndarray], List[np.ndarray], np.ndarray]:
    """Greedy overlap-maximizing joint law over admissible rotation pairs.

    Rows and columns keep uniform marginals; ties in overlap go to the
    lexicographically smallest pair of rotation positions.
    """
    rows = _rotations_starting_at_zero(b)
    cols = _rotations_starting_at_zero(b_bar)
    overlap = np.array(
        [[int(np.sum(a == a_bar)) for a_bar in cols] for a in rows], dtype=np.int64
    )
    row_left = np.full(len(rows), 1.0 / len(rows))
    col_left = np.full(len(cols), 1.0 / len(cols))
    joint = np.zeros((len(rows), len(cols)))
    order = sorted(
        ((i, j) for i in range(len(rows)) for j in range(len(cols))),
        key=lambda ij: (-overlap[ij], ij[0], ij[1]),
    )
    for i, j in order:
        mass = min(row_left[i], col_left[j])
        if mass <= 0:
            continue
        joint[i, j] = mass
        row_left[i] -= mass
        col_left[j] -= mass
    return rows, cols, joint


def coupled_conditional_systematic(
    p: np.ndarray, p_bar: np.ndarray, rng: RngStream
) -> Tuple[np.ndarray, np.ndarray]:
    """Conditional systematic resampling of two systems with shared uniforms."""
    p = normalize(p)
    p_bar = normalize(p_bar)
    if p.size != p_bar.size:
        raise DomainError("coupled probability vectors must have equal length")
    if p[0] <= 0 or p_bar[0] <= 0:
        raise ConditioningError("cannot condition on a particle with zero weight")
    gen = rng.generator()
    u_select, u_position = gen.random(2)
    b = systematic_resample(
        p, _conditional_uniform(p[0], p.size, u_select, u_position)
    )
    b_bar = systematic_resample(
        p_bar, _conditional_uniform(p_bar[0], p_bar.size, u_select, u_position)
    )
    rows, cols, joint = rotation_coupling(b, b_bar)
    flat = categorical_draw(joint.ravel(), gen.random())
    i, j = divmod(flat, len(cols))
    return rows[i], cols[j]


def maximal_coupling_discrete(
    p: np.ndarray, p_bar: np.ndarray, rng: RngStream
) -> Tuple[int, int]:
    """Draw (i, i_bar) with the given marginals and maximal Pr(i = i_bar)."""
    p = normalize(p)
    p_bar = normalize(p_bar)
    if p.size != p_bar.size:
        raise DomainError("coupled probability vectors must have equal length")
    p_min = np.minimum(p, p_bar)
    a = float(p_min.sum())
    gen = rng.generator()
    u_branch, u_first, u_second = gen.random(3)
    residual = np.clip(p - p_min, 0.0, None)
    residual_bar = np.clip(p_bar - p_min, 0.0, None)
    if u_branch < a or residual.sum() <= 0 or residual_bar.sum() <= 0:
        i = categorical_draw(p_min, u_first)
        return i, i
    return (
        categorical_draw(residual, u_first),
        categorical_draw(residual_bar, u_second),
    )
