"""
Gaussian graphical model with a size-based graph prior and a G-Wishart
prior on the precision matrix.

The inner kernel refreshes K given G exactly and moves G by one edge with
an exchange-type acceptance, so no G-Wishart normalizing constant is ever
evaluated.
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from scipy.linalg import LinAlgError, cholesky
from scipy.special import gammaln, logsumexp

from ..models.error_handling import DomainError, NumericalError
from ..samplers.rng import RngStream
from .base import Model
from .gwishart import (
    Graph,
    GWishartParams,
    gwishart_sample,
    node_reorder,
    revert_order,
)

logger = logging.getLogger(__name__)

_LOG_2PI = np.log(2 * np.pi)


@dataclass(frozen=True)
class GGMPoint:
    """GGM state (K, G)."""

    K: np.ndarray
    graph: Graph

    def __post_init__(self):
        K = np.array(self.K, dtype=float)
        if K.shape != (self.graph.p, self.graph.p):
            raise DomainError("K must be p x p for the graph it belongs to")
        K.setflags(write=False)
        object.__setattr__(self, "K", K)

    def canonical_bytes(self) -> bytes:
        return self.graph.canonical_bytes() + np.ascontiguousarray(self.K).tobytes()


@dataclass
class GGMMove:
    """Outcome of one graph move, with the factors of its log acceptance ratio."""

    graph: Graph
    K: np.ndarray
    accepted: bool
    edge: Tuple[int, int]
    epsilon: int
    log_ratio: float
    log_prior_ratio: float
    log_q_ratio: float


def edge_list(p: int) -> List[Tuple[int, int]]:
    """Upper-triangle node pairs in row-major order."""
    rows, cols = np.triu_indices(p, 1)
    return list(zip(rows.tolist(), cols.tolist()))


def _log_size_weight(n_edges: int, p: int) -> float:
    m = p * (p - 1) // 2
    log_binom = gammaln(m + 1) - gammaln(n_edges + 1) - gammaln(m - n_edges + 1)
    return float(n_edges * np.log(p / (p + 1.0)) - log_binom)


def size_prior_log(graph: Graph) -> float:
    """Normalized log p(G): truncated-geometric edge count, uniform given it."""
    p = graph.p
    m = graph.max_edges
    log_norm = logsumexp(np.arange(m + 1) * np.log(p / (p + 1.0)))
    return _log_size_weight(graph.n_edges, p) - float(log_norm)


def size_prior_log_ratio(graph: Graph, other: Graph) -> float:
    """log p(other) - log p(graph)."""
    if graph.p != other.p:
        raise DomainError("graphs must share the node count")
    return _log_size_weight(other.n_edges, other.p) - _log_size_weight(
        graph.n_edges, graph.p
    )


def _log_move_probability(graph: Graph, adding: bool) -> float:
    """log q of one specific single-edge move out of ``graph``."""
    m = graph.max_edges
    n_e = graph.n_edges
    if n_e == 0 or n_e == m:
        return -np.log(m)
    if adding:
        return float(np.log(0.5) - np.log(m - n_e))
    return float(np.log(0.5) - np.log(n_e))


def flipped_edge(graph: Graph, other: Graph) -> Tuple[int, int]:
    diff = np.argwhere(np.triu(graph.adjacency != other.adjacency, 1))
    if len(diff) != 1:
        raise DomainError("graphs must differ in exactly one edge")
    i, j = diff[0]
    return int(i), int(j)


def graph_proposal_log_ratio(graph: Graph, proposed: Graph) -> float:
    """log q(graph | proposed) - log q(proposed | graph)."""
    i, j = flipped_edge(graph, proposed)
    adding = proposed.has_edge(i, j)
    return _log_move_probability(proposed, not adding) - _log_move_probability(
        graph, adding
    )


def propose_graph(graph: Graph, rng: RngStream) -> Tuple[Graph, float]:
    """Add or remove one edge; returns the proposal and its log q ratio."""
    if graph.p < 2:
        raise DomainError("graph proposals need at least two nodes")
    gen = rng.generator()
    u_move = gen.random()
    u_edge = gen.random()
    n_e = graph.n_edges
    if n_e == 0:
        adding = True
    elif n_e == graph.max_edges:
        adding = False
    else:
        adding = u_move < 0.5
    candidates = graph.non_edges() if adding else graph.edges()
    i, j = candidates[min(int(u_edge * len(candidates)), len(candidates) - 1)]
    proposed = graph.flip(i, j)
    return proposed, graph_proposal_log_ratio(graph, proposed)


def _cholesky_upper(K: np.ndarray, what: str) -> np.ndarray:
    try:
        return cholesky(K, lower=False)
    except LinAlgError as e:
        logger.error(f"Cholesky failed for {what}:\n{np.array2string(K)}")
        raise NumericalError(
            f"{what} is not positive definite: {e}", data={"matrix": K.tolist()}
        )


def ggm_loglik(K: np.ndarray, U: np.ndarray, n: float) -> float:
    """Gaussian log-likelihood in terms of the scatter matrix U = Y^T Y."""
    K = np.asarray(K, dtype=float)
    p = K.shape[0]
    phi = _cholesky_upper(K, "precision matrix")
    log_det = 2.0 * float(np.sum(np.log(np.diag(phi))))
    return float(-0.5 * n * p * _LOG_2PI + 0.5 * n * log_det - 0.5 * np.sum(K * U))


def _completion(phi: np.ndarray) -> float:
    """Value of the last off-diagonal Cholesky entry forcing K[p-2, p-1] = 0."""
    a, b = phi.shape[0] - 2, phi.shape[0] - 1
    return float(-np.dot(phi[:a, a], phi[:a, b]) / phi[a, a])


def _with_free_element(phi: np.ndarray, value: float) -> np.ndarray:
    out = phi.copy()
    out[-2, -1] = value
    return out


def ggm_inner_step(
    graph: Graph,
    U: np.ndarray,
    n: float,
    params: GWishartParams,
    alpha: float,
    rng: RngStream,
) -> GGMMove:
    """One graph move targeting the alpha-tempered posterior.

    Substreams: child(0) graph proposal, child(1) K given G,
    child(2) auxiliary K given the proposed graph, child(3) the free
    Cholesky element and the acceptance uniform.
    """
    if not 0.0 < alpha <= 1.0:
        raise DomainError(f"alpha must lie in (0, 1], got {alpha}")
    p = graph.p
    proposed, log_q_ratio = propose_graph(graph, rng.child(0))
    i, j = flipped_edge(graph, proposed)
    epsilon = 1 if proposed.has_edge(i, j) else -1
    log_prior_ratio = size_prior_log_ratio(graph, proposed)

    D_star = params.D + alpha * np.asarray(U, dtype=float)
    graph_r, perm = node_reorder(graph, i, j)
    proposed_r, _ = node_reorder(proposed, i, j)
    D_r = params.D[np.ix_(perm, perm)]
    D_star_r = D_star[np.ix_(perm, perm)]

    K = gwishart_sample(
        graph_r, GWishartParams(params.delta + alpha * n, D_star_r), rng.child(1)
    )
    K_tilde = gwishart_sample(
        proposed_r, GWishartParams(params.delta, D_r), rng.child(2)
    )
    phi = _cholesky_upper(K, "posterior G-Wishart draw")
    phi_tilde = _cholesky_upper(K_tilde, "auxiliary G-Wishart draw")

    a, b = p - 2, p - 1
    theta = -D_star_r[a, b] * phi[a, a] / D_star_r[b, b]
    theta_tilde = -D_r[a, b] * phi_tilde[a, a] / D_r[b, b]
    gen = rng.child(3).generator()
    z, u = gen.standard_normal(), gen.random()

    if epsilon == 1:
        x_free = theta + z / np.sqrt(D_star_r[b, b])
        y_free = phi_tilde[a, b]
        phi_pr = _with_free_element(phi, x_free)
        phi_tilde_pr = _with_free_element(phi_tilde, _completion(phi_tilde))
    else:
        x_free = phi[a, b]
        y_free = theta_tilde + z / np.sqrt(D_r[b, b])
        phi_pr = _with_free_element(phi, _completion(phi))
        phi_tilde_pr = _with_free_element(phi_tilde, y_free)
    K_pr = phi_pr.T @ phi_pr
    K_tilde_pr = phi_tilde_pr.T @ phi_tilde_pr

    free_terms = (
        np.log(phi[a, a])
        - np.log(phi_tilde[a, a])
        + 0.5 * np.log(D_r[b, b])
        - 0.5 * np.log(D_star_r[b, b])
        + 0.5 * D_star_r[b, b] * (x_free - theta) ** 2
        - 0.5 * D_r[b, b] * (y_free - theta_tilde) ** 2
    )
    log_ratio = float(
        log_prior_ratio
        + log_q_ratio
        - 0.5 * np.sum((K_pr - K) * D_star_r)
        - 0.5 * np.sum((K_tilde_pr - K_tilde) * D_r)
        + epsilon * free_terms
    )
    accepted = bool(np.log(u) < log_ratio)
    if accepted:
        out_graph, K_out = proposed, K_pr
        K_out[~proposed_r.adjacency & ~np.eye(p, dtype=bool)] = 0.0
        K_out = 0.5 * (K_out + K_out.T)
    else:
        out_graph, K_out = graph, K
    return GGMMove(
        graph=out_graph,
        K=revert_order(K_out, perm),
        accepted=accepted,
        edge=(i, j),
        epsilon=epsilon,
        log_ratio=log_ratio,
        log_prior_ratio=log_prior_ratio,
        log_q_ratio=log_q_ratio,
    )


def max_log_likelihood(U: np.ndarray, n: float) -> float:
    """sup_K of ggm_loglik, attained at K = n U^{-1}; needs U positive definite."""
    p = U.shape[0]
    try:
        chol = cholesky(U, lower=True)
    except LinAlgError:
        raise DomainError(
            "scatter matrix is singular (n < p?); the likelihood is unbounded"
        )
    log_det_U = 2.0 * float(np.sum(np.log(np.diag(chol))))
    return float(
        -0.5 * n * p * _LOG_2PI + 0.5 * n * (p * np.log(n) - log_det_U) - 0.5 * n * p
    )


class GGMModel(Model):
    """Structure learning for zero-mean Gaussian data Y (n x p)."""

    name = "ggm"

    def __init__(
        self,
        Y: Optional[np.ndarray] = None,
        U: Optional[np.ndarray] = None,
        n: Optional[float] = None,
        params: Optional[GWishartParams] = None,
    ):
        if Y is not None:
            Y = np.asarray(Y, dtype=float)
            if Y.ndim != 2:
                raise DomainError("Y must be an n x p matrix")
            U = Y.T @ Y
            n = Y.shape[0]
        if U is None or n is None:
            raise DomainError("GGMModel needs either Y or both U and n")
        U = np.asarray(U, dtype=float)
        if U.ndim != 2 or U.shape[0] != U.shape[1] or U.shape[0] < 2:
            raise DomainError("U must be a square matrix with p >= 2")
        if n < 1:
            raise DomainError("n must be at least 1")
        self.U = U
        self.n = float(n)
        self.p = U.shape[0]
        self.params = params or GWishartParams.identity(self.p)
        if self.params.p != self.p:
            raise DomainError("prior rate matrix D does not match the data dimension")
        self._edges = edge_list(self.p)

    def describe(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "p": self.p,
            "n": self.n,
            "delta": self.params.delta,
        }

    def validate_point(self, x: GGMPoint) -> None:
        if not isinstance(x, GGMPoint) or x.graph.p != self.p:
            raise DomainError(f"point must be a GGMPoint on {self.p} nodes")
        off_graph = ~x.graph.adjacency & ~np.eye(self.p, dtype=bool)
        if np.any(np.abs(x.K[off_graph]) > 1e-8):
            raise DomainError("K has non-zero entries off the graph")

    def log_likelihood(self, x: GGMPoint) -> float:
        self.validate_point(x)
        return ggm_loglik(x.K, self.U, self.n)

    def max_log_likelihood(self) -> float:
        return max_log_likelihood(self.U, self.n)

    def edge_count_pmf(self) -> np.ndarray:
        m = len(self._edges)
        log_w = np.arange(m + 1) * np.log(self.p / (self.p + 1.0))
        return np.exp(log_w - logsumexp(log_w))

    def sample_prior(self, rng: RngStream) -> GGMPoint:
        gen = rng.child(0).generator()
        pmf = self.edge_count_pmf()
        n_e = int(gen.choice(pmf.size, p=pmf))
        chosen = gen.choice(len(self._edges), size=n_e, replace=False)
        graph = Graph.from_edges(self.p, [self._edges[k] for k in sorted(chosen)])
        K = gwishart_sample(graph, self.params, rng.child(1))
        return GGMPoint(K=K, graph=graph)

    def _transition(self, x: GGMPoint, alpha: float, rng: RngStream) -> GGMPoint:
        move = ggm_inner_step(x.graph, self.U, self.n, self.params, alpha, rng)
        return GGMPoint(K=move.K, graph=move.graph)

    def summary_stats(self, x: GGMPoint) -> np.ndarray:
        return np.array([self.log_likelihood(x), float(x.graph.n_edges)])

    def estimands(self, x: GGMPoint) -> np.ndarray:
        return x.graph.edge_indicators()

    def estimand_names(self) -> List[str]:
        return [f"edge_{i}_{j}" for i, j in self._edges]

    def canonical_bytes(self, x: GGMPoint) -> bytes:
        return x.canonical_bytes()


def median_probability_graph(p: int, edge_probabilities: np.ndarray) -> Graph:
    """Edges whose estimated inclusion probability exceeds 1/2."""
    probs = np.asarray(edge_probabilities, dtype=float)
    pairs = edge_list(p)
    if probs.size != len(pairs):
        raise DomainError(f"expected {len(pairs)} edge probabilities, got {probs.size}")
    return Graph.from_edges(p, [e for e, q in zip(pairs, probs) if q > 0.5])


def ggm_synthetic(
    p: int, n: int, sparsity: float, seed: int, delta: float = 3.0
) -> Tuple[np.ndarray, Graph, np.ndarray]:
    """Data Y (n x p) with rows N(0, K^{-1}), K ~ W_G(delta, I)."""
    if p < 2 or n < 1:
        raise DomainError("ggm_synthetic needs p >= 2 and n >= 1")
    if not 0.0 <= sparsity <= 1.0:
        raise DomainError(f"sparsity must lie in [0, 1], got {sparsity}")
    root = RngStream(seed, (0,))
    pairs = edge_list(p)
    n_e = int(round(sparsity * len(pairs)))
    chosen = root.child(0).generator().choice(len(pairs), size=n_e, replace=False)
    graph = Graph.from_edges(p, [pairs[k] for k in sorted(chosen)])
    K = gwishart_sample(graph, GWishartParams.identity(p, delta), root.child(1))
    Y = root.child(2).generator().multivariate_normal(
        np.zeros(p), np.linalg.inv(K), size=n
    )
    return Y, graph, K


@dataclass
class GGMChainResult:
    """Edge-inclusion frequencies of a plain single-chain run."""

    edge_frequencies: np.ndarray
    acceptance_rate: float
    n_steps: int
    burn_in: int

    def to_dict(self) -> Dict[str, Any]:
        return {
            "edge_frequencies": self.edge_frequencies.tolist(),
            "acceptance_rate": self.acceptance_rate,
            "n_steps": self.n_steps,
            "burn_in": self.burn_in,
        }


def run_ggm_chain(
    model: GGMModel,
    n_steps: int,
    rng: RngStream,
    burn_in: int = 0,
    init: Optional[GGMPoint] = None,
) -> GGMChainResult:
    """Iterate the untempered inner kernel; step t uses rng.child(1, t)."""
    if n_steps <= burn_in:
        raise DomainError("n_steps must exceed burn_in")
    graph = (init or model.sample_prior(rng.child(0))).graph
    totals = np.zeros(len(model.estimand_names()))
    accepted = 0
    for t in range(n_steps):
        move = ggm_inner_step(
            graph, model.U, model.n, model.params, 1.0, rng.child(1, t)
        )
        graph = move.graph
        accepted += int(move.accepted)
        if t >= burn_in:
            totals += graph.edge_indicators()
    kept = n_steps - burn_in
    logger.info(f"GGM chain finished: {n_steps} steps, {accepted} accepted moves")
    return GGMChainResult(
        edge_frequencies=totals / kept,
        acceptance_rate=accepted / n_steps,
        n_steps=n_steps,
        burn_in=burn_in,
    )
