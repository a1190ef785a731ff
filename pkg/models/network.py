"""
Network Model Module

This module defines the communication graph and the consensus (mixing) matrix
types. Both are immutable after construction.
"""

from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Optional, Tuple

import networkx as nx
import numpy as np

from utils.exceptions import InvalidGraphError, InvalidMatrixError

STOCHASTIC_TOL = 1e-12


def _normalize_edge(i: int, j: int) -> Tuple[int, int]:
    return (i, j) if i < j else (j, i)


@dataclass(frozen=True)
class Graph:
    """Undirected simple graph over agents 0..n-1.

    Edges are stored once as (i, j) with i < j; symmetry is implied.
    """

    n: int
    edges: FrozenSet[Tuple[int, int]] = field(default_factory=frozenset)

    def __post_init__(self):
        if self.n < 1:
            raise InvalidGraphError(f"graph needs at least one vertex, got n={self.n}")
        normalized = set()
        for i, j in self.edges:
            if i == j:
                raise InvalidGraphError(f"self-loop at vertex {i}")
            if not (0 <= i < self.n and 0 <= j < self.n):
                raise InvalidGraphError(f"edge ({i}, {j}) outside 0..{self.n - 1}")
            normalized.add(_normalize_edge(int(i), int(j)))
        object.__setattr__(self, 'edges', frozenset(normalized))

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Tuple[int, int]]) -> 'Graph':
        return cls(n=n, edges=frozenset(_normalize_edge(int(i), int(j)) for i, j in edges))

    def has_edge(self, i: int, j: int) -> bool:
        return _normalize_edge(i, j) in self.edges

    def to_networkx(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(range(self.n))
        g.add_edges_from(self.edges)
        return g

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n, dtype=int)
        for i, j in self.edges:
            deg[i] += 1
            deg[j] += 1
        return deg

    def neighbors(self) -> Dict[int, List[int]]:
        adjacency: Dict[int, List[int]] = {i: [] for i in range(self.n)}
        for i, j in sorted(self.edges):
            adjacency[i].append(j)
            adjacency[j].append(i)
        return adjacency

    def sorted_edges(self) -> List[Tuple[int, int]]:
        return sorted(self.edges)

    def __str__(self) -> str:
        return f"Graph(n={self.n}, |E|={len(self.edges)})"


@dataclass(frozen=True)
class MixingMatrix:
    """Symmetric doubly stochastic consensus matrix with its contraction factor.

    Attributes:
        w: n x n weights (read-only array)
        rho: spectral norm of W - (1/n) 11^T
        graph: communication graph whose sparsity pattern W follows (optional)
        scheme: name of the construction ('metropolis', 'lazy-metropolis', ...)
    """

    w: np.ndarray
    rho: float
    graph: Optional[Graph] = None
    scheme: str = 'custom'

    def __post_init__(self):
        w = np.array(self.w, dtype=float)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise InvalidMatrixError(f"mixing matrix must be square, got shape {w.shape}")
        n = w.shape[0]

        if np.any(w < 0):
            raise InvalidMatrixError("mixing matrix has negative entries")
        if not np.allclose(w, w.T, rtol=0.0, atol=STOCHASTIC_TOL):
            raise InvalidMatrixError("mixing matrix is not symmetric")
        if np.max(np.abs(w.sum(axis=1) - 1.0)) > STOCHASTIC_TOL:
            raise InvalidMatrixError("row sums differ from 1")
        if np.max(np.abs(w.sum(axis=0) - 1.0)) > STOCHASTIC_TOL:
            raise InvalidMatrixError("column sums differ from 1")
        if np.any(np.diag(w) <= 0):
            raise InvalidMatrixError("diagonal entries must be positive")
        if not self.rho < 1.0:
            raise InvalidMatrixError(f"rho = {self.rho} is not below 1; the graph is not connected")

        if self.graph is not None:
            if self.graph.n != n:
                raise InvalidMatrixError(f"graph has {self.graph.n} vertices, matrix has {n}")
            off_diagonal = ~np.eye(n, dtype=bool)
            pattern = np.zeros((n, n), dtype=bool)
            for i, j in self.graph.edges:
                pattern[i, j] = pattern[j, i] = True
            if np.any((w > 0)[off_diagonal] != pattern[off_diagonal]):
                raise InvalidMatrixError("positive off-diagonal pattern differs from graph edges")

        w.setflags(write=False)
        object.__setattr__(self, 'w', w)
        object.__setattr__(self, 'rho', float(self.rho))

    @property
    def n(self) -> int:
        return self.w.shape[0]

    def __str__(self) -> str:
        return f"MixingMatrix({self.scheme}, n={self.n}, rho={self.rho:.6f})"
