"""
Undirected graphs and the G-Wishart distribution.

W_G(delta, D) has density proportional to
|K|^{(delta - 2) / 2} exp(-<K, D> / 2) on positive-definite K with
K_ij = 0 whenever (i, j) is not an edge of G. On the complete graph it is
the standard Wishart with df = delta + p - 1 and scale D^{-1}.
"""

import logging
from dataclasses import dataclass, field
from typing import Iterable, List, Sequence, Tuple

import numpy as np
from scipy import stats
from scipy.linalg import LinAlgError, cholesky

from ..models.error_handling import ConvergenceError, DomainError
from ..samplers.rng import RngStream

logger = logging.getLogger(__name__)

CONVERGENCE_TOLERANCE = 1e-8
MAX_SWEEPS = 1000


@dataclass(frozen=True, eq=False)
class Graph:
    """Undirected graph: symmetric adjacency with a False diagonal."""

    adjacency: np.ndarray

    def __post_init__(self):
        adj = np.array(self.adjacency, dtype=bool)
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1] or adj.shape[0] < 1:
            raise DomainError("adjacency must be a square p x p matrix")
        if not np.array_equal(adj, adj.T):
            raise DomainError("adjacency must be symmetric")
        if np.any(np.diag(adj)):
            raise DomainError("graph may not contain self-loops")
        adj.setflags(write=False)
        object.__setattr__(self, "adjacency", adj)

    @classmethod
    def empty(cls, p: int) -> "Graph":
        return cls(np.zeros((p, p), dtype=bool))

    @classmethod
    def complete(cls, p: int) -> "Graph":
        return cls(~np.eye(p, dtype=bool))

    @classmethod
    def from_edges(cls, p: int, edges: Iterable[Tuple[int, int]]) -> "Graph":
        adj = np.zeros((p, p), dtype=bool)
        for i, j in edges:
            if i == j:
                raise DomainError(f"self-loop ({i}, {j}) is not allowed")
            adj[i, j] = adj[j, i] = True
        return cls(adj)

    @property
    def p(self) -> int:
        return int(self.adjacency.shape[0])

    @property
    def max_edges(self) -> int:
        return self.p * (self.p - 1) // 2

    @property
    def n_edges(self) -> int:
        return int(np.count_nonzero(np.triu(self.adjacency, 1)))

    def has_edge(self, i: int, j: int) -> bool:
        return bool(self.adjacency[i, j])

    def edges(self) -> List[Tuple[int, int]]:
        rows, cols = np.nonzero(np.triu(self.adjacency, 1))
        return list(zip(rows.tolist(), cols.tolist()))

    def non_edges(self) -> List[Tuple[int, int]]:
        missing = np.triu(~self.adjacency, 1)
        rows, cols = np.nonzero(missing)
        return list(zip(rows.tolist(), cols.tolist()))

    def neighbours(self, j: int) -> np.ndarray:
        return np.flatnonzero(self.adjacency[j])

    def flip(self, i: int, j: int) -> "Graph":
        adj = self.adjacency.copy()
        adj[i, j] = adj[j, i] = not adj[i, j]
        return Graph(adj)

    def permuted(self, perm: Sequence[int]) -> "Graph":
        perm = np.asarray(perm)
        return Graph(self.adjacency[np.ix_(perm, perm)])

    def edge_indicators(self) -> np.ndarray:
        """Upper-triangle indicators in row-major order."""
        return self.adjacency[np.triu_indices(self.p, 1)].astype(float)

    def canonical_bytes(self) -> bytes:
        return np.packbits(self.adjacency[np.triu_indices(self.p, 1)]).tobytes()

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return self.p == other.p and np.array_equal(self.adjacency, other.adjacency)

    def __hash__(self) -> int:
        return hash((self.p, self.canonical_bytes()))


@dataclass(frozen=True)
class GWishartParams:
    """G-Wishart parameters (delta, D)."""

    delta: float = 3.0
    D: np.ndarray = field(default_factory=lambda: np.eye(2))

    def __post_init__(self):
        if not self.delta > 2:
            raise DomainError(f"delta must exceed 2, got {self.delta}")
        D = np.array(self.D, dtype=float)
        if D.ndim != 2 or D.shape[0] != D.shape[1]:
            raise DomainError("D must be a square matrix")
        if not np.allclose(D, D.T):
            raise DomainError("D must be symmetric")
        try:
            cholesky(D, lower=True)
        except LinAlgError:
            raise DomainError("D must be positive definite")
        D.setflags(write=False)
        object.__setattr__(self, "D", D)

    @classmethod
    def identity(cls, p: int, delta: float = 3.0) -> "GWishartParams":
        return cls(delta=delta, D=np.eye(p))

    @property
    def p(self) -> int:
        return int(self.D.shape[0])

    def posterior(self, U: np.ndarray, n: float) -> "GWishartParams":
        """Conjugate update (delta + n, D + U)."""
        return GWishartParams(delta=self.delta + n, D=self.D + U)


def gwishart_sample(
    graph: Graph,
    params: GWishartParams,
    rng: RngStream,
    tol: float = CONVERGENCE_TOLERANCE,
    max_sweeps: int = MAX_SWEEPS,
) -> np.ndarray:
    """Draw K ~ W_G(delta, D) by iterative proportional completion.

    A standard Wishart draw is inverted and its covariance completed so the
    inverse has zeros off G, sweeping over nodes with neighbourhood
    regressions until the largest entry change falls below ``tol``.
    """
    p = graph.p
    if params.p != p:
        raise DomainError(f"graph has {p} nodes but D is {params.p} x {params.p}")
    gen = rng.generator()
    df = params.delta + p - 1
    K0 = np.atleast_2d(
        stats.wishart(df=df, scale=np.linalg.inv(params.D)).rvs(random_state=gen)
    )
    sigma = np.linalg.inv(K0)
    W = sigma.copy()

    if graph.n_edges < graph.max_edges:
        change = np.inf
        sweeps = 0
        while change >= tol:
            if sweeps >= max_sweeps:
                raise ConvergenceError(
                    f"G-Wishart completion did not converge after {sweeps} "
                    f"sweeps (last change {change:.3e})",
                    sweeps=sweeps,
                    change=float(change),
                )
            W_prev = W.copy()
            for j in range(p):
                others = np.array([i for i in range(p) if i != j])
                nbrs = graph.neighbours(j)
                if nbrs.size == 0:
                    column = np.zeros(p - 1)
                else:
                    beta_star = np.linalg.solve(W[np.ix_(nbrs, nbrs)], sigma[nbrs, j])
                    column = W[np.ix_(others, nbrs)] @ beta_star
                W[others, j] = column
                W[j, others] = column
            change = float(np.max(np.abs(W - W_prev)))
            sweeps += 1
        logger.debug(f"G-Wishart completion converged in {sweeps} sweeps")

    K = np.linalg.inv(W)
    K[~graph.adjacency & ~np.eye(p, dtype=bool)] = 0.0
    return 0.5 * (K + K.T)


def node_reorder(obj, i: int, j: int) -> Tuple[object, np.ndarray]:
    """Move nodes i < j to positions p-2 and p-1, keeping the others in order.

    Works on graphs and on square matrices; returns the reordered object and
    the permutation (new position -> old index). ``np.argsort(perm)``
    reverts it.
    """
    if not i < j:
        raise DomainError(f"node_reorder needs i < j, got ({i}, {j})")
    p = obj.p if isinstance(obj, Graph) else np.shape(obj)[0]
    perm = np.array([k for k in range(p) if k not in (i, j)] + [i, j])
    if isinstance(obj, Graph):
        return obj.permuted(perm), perm
    return np.asarray(obj)[np.ix_(perm, perm)], perm


def revert_order(matrix: np.ndarray, perm: np.ndarray) -> np.ndarray:
    inverse = np.argsort(perm)
    return np.asarray(matrix)[np.ix_(inverse, inverse)]
