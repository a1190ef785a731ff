"""
Network Processor Module

This module builds communication graphs and the consensus matrices that mix
agent variables over them, and computes the contraction factor rho.
"""

import logging
import math
from typing import Iterable, Tuple

import networkx as nx
import numpy as np

from models.network import STOCHASTIC_TOL, Graph, MixingMatrix
from models.rng_stream import PURPOSE_SPECTRAL, RngStream
from utils.exceptions import (GraphConstructionError, InvalidGraphError, InvalidMatrixError,
                              InvalidSizeError, ShapeError)

logger = logging.getLogger(__name__)

GEOMETRIC_RETRY_BUDGET = 1000
POWER_ITERATION_CAP = 10_000
POWER_ITERATION_RTOL = 1e-10


def build_ring(n: int) -> Graph:
    """Cycle 0-1-...-(n-1)-0. For n = 2 the cycle degenerates to one edge."""
    if n < 2:
        raise InvalidSizeError(f"ring needs n >= 2, got {n}")
    return Graph.from_edges(n, [(i, (i + 1) % n) for i in range(n)])


def build_path(n: int) -> Graph:
    """Path 0-1-...-(n-1)."""
    if n < 2:
        raise InvalidSizeError(f"path needs n >= 2, got {n}")
    return Graph.from_edges(n, [(i, i + 1) for i in range(n - 1)])


def build_complete(n: int) -> Graph:
    if n < 2:
        raise InvalidSizeError(f"complete graph needs n >= 2, got {n}")
    return Graph.from_edges(n, [(i, j) for i in range(n) for j in range(i + 1, n)])


def graph_from_edges(n: int, edges: Iterable[Tuple[int, int]]) -> Graph:
    """Rebuild a graph from an explicit edge list (e.g. a run manifest)."""
    graph = Graph.from_edges(n, edges)
    if not is_connected(graph):
        raise InvalidGraphError(f"edge list on {n} vertices is not connected")
    return graph


def build_geometric_sphere(n: int, max_angle: float, rng: np.random.Generator,
                           max_attempts: int = GEOMETRIC_RETRY_BUDGET) -> Graph:
    """Random geometric graph on the unit 2-sphere.

    Samples n uniform points on S^2 and links pairs whose spherical distance is
    strictly below max_angle. The whole point set is resampled until the graph
    is connected.

    Args:
        n: Number of agents
        max_angle: Connection threshold in radians, 0 < max_angle <= pi
        rng: Seeded generator
        max_attempts: Retry budget

    Returns:
        Connected Graph

    Raises:
        GraphConstructionError: if no connected sample was found within the budget
    """
    if n < 2:
        raise InvalidSizeError(f"geometric graph needs n >= 2, got {n}")
    if not 0.0 < max_angle <= np.pi:
        raise InvalidGraphError(f"max_angle must lie in (0, pi], got {max_angle}")

    upper = np.triu_indices(n, k=1)
    for attempt in range(1, max_attempts + 1):
        points = rng.standard_normal((n, 3))
        points /= np.linalg.norm(points, axis=1, keepdims=True)
        angles = np.arccos(np.clip(points @ points.T, -1.0, 1.0))

        close = angles[upper] < max_angle
        graph = Graph.from_edges(n, zip(upper[0][close], upper[1][close]))
        if is_connected(graph):
            logger.info(f"Geometric graph: n={n}, {len(graph.edges)} edges after {attempt} attempt(s)")
            return graph

    logger.error(f"No connected geometric graph with n={n}, max_angle={max_angle:.4f} "
                 f"in {max_attempts} attempts")
    raise GraphConstructionError(max_attempts)


def is_connected(graph: Graph) -> bool:
    """True iff a breadth-first traversal from vertex 0 reaches every vertex."""
    if graph.n == 1:
        return True
    reached = nx.descendants(graph.to_networkx(), 0)
    return len(reached) + 1 == graph.n


def metropolis_weights(graph: Graph, seed: int = 0) -> MixingMatrix:
    """Metropolis-Hastings weights W_ij = 1 / (1 + max(deg_i, deg_j)) on edges.

    The diagonal absorbs the remainder so every row sums to one.
    """
    w = _metropolis_array(graph)
    return MixingMatrix(w=w, rho=spectral_gap(w, seed), graph=graph, scheme='metropolis')


def lazy_metropolis_weights(graph: Graph, seed: int = 0) -> MixingMatrix:
    """(I + W_metropolis) / 2."""
    w = 0.5 * (np.eye(graph.n) + _metropolis_array(graph))
    return MixingMatrix(w=w, rho=spectral_gap(w, seed), graph=graph, scheme='lazy-metropolis')


def mixing_matrix(graph: Graph, scheme: str, seed: int = 0) -> MixingMatrix:
    """Dispatch on the weight scheme name used in configs."""
    if scheme == 'metropolis':
        return metropolis_weights(graph, seed)
    if scheme == 'lazy-metropolis':
        return lazy_metropolis_weights(graph, seed)
    raise ValueError(f"unknown weight scheme '{scheme}'")


def lazy_metropolis_rho_ceiling(n: int) -> float:
    """Upper bound 1 - 1/(71 n^2) on rho for lazy Metropolis weights."""
    return 1.0 - 1.0 / (71.0 * n * n)


def _metropolis_array(graph: Graph) -> np.ndarray:
    if not is_connected(graph):
        raise InvalidGraphError(f"{graph} is not connected")

    degrees = graph.degrees()
    w = np.zeros((graph.n, graph.n))
    for i, j in graph.edges:
        w[i, j] = w[j, i] = 1.0 / (1.0 + max(degrees[i], degrees[j]))
    np.fill_diagonal(w, 1.0 - w.sum(axis=1))
    return w


def spectral_gap(w: np.ndarray, seed: int = 0) -> float:
    """rho = ||W - (1/n) 11^T|| for symmetric doubly stochastic W.

    Power iteration on B^2, B = W - (1/n) 11^T, with the all-ones direction
    projected out at every step. B^2 is positive semidefinite, so +rho and -rho
    eigenvalues of B cannot cancel. The loop stops once the eigen-residual
    ||B^2 x - mu x|| falls below POWER_ITERATION_RTOL * mu, mu the Rayleigh
    quotient. If the cap is hit first, rho comes from a dense symmetric
    eigensolve instead of the unconverged estimate.

    Args:
        w: n x n symmetric doubly stochastic matrix
        seed: Run seed; the start vector is drawn from its spectral stream

    Returns:
        rho in [0, 1]

    Raises:
        InvalidMatrixError: if w is not square, symmetric and doubly stochastic
    """
    w = np.asarray(w, dtype=float)
    if w.ndim != 2 or w.shape[0] != w.shape[1]:
        raise InvalidMatrixError(f"expected a square matrix, got shape {w.shape}")
    if not np.allclose(w, w.T, rtol=0.0, atol=STOCHASTIC_TOL):
        raise InvalidMatrixError("matrix is not symmetric")
    if (np.max(np.abs(w.sum(axis=1) - 1.0)) > STOCHASTIC_TOL
            or np.max(np.abs(w.sum(axis=0) - 1.0)) > STOCHASTIC_TOL):
        raise InvalidMatrixError("matrix is not doubly stochastic")

    n = w.shape[0]
    if n == 1:
        return 0.0

    deflated = w - np.full((n, n), 1.0 / n)
    deflated = 0.5 * (deflated + deflated.T)
    x = RngStream.for_purpose(seed, PURPOSE_SPECTRAL).generator().standard_normal(n)
    x = _unit_orthogonal_to_ones(x)

    for iteration in range(1, POWER_ITERATION_CAP + 1):
        y = _deflated_apply(deflated, _deflated_apply(deflated, x))
        mu = float(x @ y)
        if mu <= 1e-24:
            # rho below 1e-12: rounding noise of an averaging matrix
            return math.sqrt(max(mu, 0.0))

        residual = float(np.linalg.norm(y - mu * x))
        if residual <= POWER_ITERATION_RTOL * mu:
            rho = math.sqrt(mu)
            logger.debug(f"Power iteration converged after {iteration} steps: rho={rho:.12f}")
            return min(rho, 1.0)
        x = y / np.linalg.norm(y)

    rho = float(np.max(np.abs(np.linalg.eigvalsh(deflated))))
    logger.warning(f"Power iteration hit the {POWER_ITERATION_CAP} step cap (residual {residual:.3e}); "
                   f"rho={rho:.12f} from a dense eigensolve")
    return min(rho, 1.0)


def consensus_apply(w: MixingMatrix, vectors: np.ndarray) -> np.ndarray:
    """Mix stacked agent vectors: row i of the result is sum_j W_ij * row j."""
    vectors = np.asarray(vectors, dtype=float)
    if vectors.ndim != 2 or vectors.shape[0] != w.n or vectors.shape[1] < 1:
        raise ShapeError(f"expected ({w.n}, d) stacked vectors, got shape {vectors.shape}")
    return w.w @ vectors


def _unit_orthogonal_to_ones(x: np.ndarray) -> np.ndarray:
    x = x - x.mean()
    norm = np.linalg.norm(x)
    if norm == 0.0:
        x = np.zeros_like(x)
        x[0], x[1] = 1.0, -1.0
        norm = np.linalg.norm(x)
    return x / norm


def _deflated_apply(deflated: np.ndarray, x: np.ndarray) -> np.ndarray:
    y = deflated @ x
    return y - y.mean()
