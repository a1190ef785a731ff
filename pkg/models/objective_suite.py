"""
Objective Suite Model Module

This module defines the interface shared by all local-objective families:
value and analytic-gradient oracles for n agents plus the smoothness
constants the theorems are stated in.
"""

from abc import ABC, abstractmethod
from typing import Callable, Dict, Optional

import numpy as np

from utils.exceptions import ShapeError


class ObjectiveSuite(ABC):
    """n local objectives f_i on R^d with global objective f = (1/n) sum_i f_i.

    Constants that are unknown for a family are None:
        L: uniform smoothness constant of every f_i
        G: uniform Lipschitz constant of every f_i
        mu: gradient-domination constant of f
        f_star: minimum value of f
        delta_gap: f_star - (1/n) sum_i min f_i
    """

    kind = 'abstract'

    def __init__(self, d: int, n: int,
                 L: Optional[float] = None,
                 G: Optional[float] = None,
                 mu: Optional[float] = None,
                 f_star: Optional[float] = None,
                 delta_gap: Optional[float] = None):
        self.d = d
        self.n = n
        self.L = L
        self.G = G
        self.mu = mu
        self.f_star = f_star
        self.delta_gap = delta_gap

    @abstractmethod
    def local_value(self, i: int, x: np.ndarray) -> float:
        """Value of f_i at x."""

    @abstractmethod
    def local_grad(self, i: int, x: np.ndarray) -> np.ndarray:
        """Analytic gradient of f_i at x (metrics and checks only)."""

    @abstractmethod
    def parameters(self) -> Dict[str, np.ndarray]:
        """Arrays that fully determine the suite, for the run manifest."""

    def local_values(self, x: np.ndarray) -> np.ndarray:
        """All f_i at the same point x."""
        x = self.check_point(x)
        return np.array([self.local_value(i, x) for i in range(self.n)])

    def local_grads(self, x: np.ndarray) -> np.ndarray:
        """All analytic gradients at the same point x, stacked (n, d)."""
        x = self.check_point(x)
        return np.stack([self.local_grad(i, x) for i in range(self.n)])

    def global_value(self, x: np.ndarray) -> float:
        return float(np.mean(self.local_values(x)))

    def global_grad(self, x: np.ndarray) -> np.ndarray:
        return np.mean(self.local_grads(x), axis=0)

    def value_oracle(self, i: int) -> Callable[[np.ndarray], float]:
        """Value-only query interface handed to the algorithm kernels.

        The returned callable takes x and returns f_i(x); it is the only thing
        the kernels receive from a suite. The closure still references the
        suite: an interface boundary, not a sandbox.
        """
        local_value = self.local_value

        def query(x: np.ndarray) -> float:
            return local_value(i, x)

        return query

    def check_point(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.d,):
            raise ShapeError(f"expected a point of shape ({self.d},), got {x.shape}")
        return x

    def constants(self) -> Dict[str, Optional[float]]:
        return {
            'L': self.L,
            'G': self.G,
            'mu': self.mu,
            'f_star': self.f_star,
            'delta_gap': self.delta_gap,
        }

    def __str__(self) -> str:
        return f"{type(self).__name__}(d={self.d}, n={self.n})"
