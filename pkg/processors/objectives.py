"""
Objectives Processor Module

Local objective families: the logistic-plus-log-barrier benchmark used in the
numerical experiments, and separable quadratics with closed-form constants for
the theorem checks.
"""

import logging
from typing import Dict, Mapping, Optional

import numpy as np

from models.objective_suite import ObjectiveSuite
from utils.exceptions import InvalidSizeError, ShapeError

logger = logging.getLogger(__name__)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    # tanh form stays finite for large |z|
    return 0.5 * (1.0 + np.tanh(0.5 * z))


class BenchmarkSuite(ObjectiveSuite):
    """f_i(x) = a_i / (1 + exp(-xi_i^T x - nu_i)) + b_i ln(1 + |x|^2).

    L and G are not derived from the parameters; callers may supply them.
    f_star is unknown.
    """

    kind = 'benchmark'

    def __init__(self, a: np.ndarray, nu: np.ndarray, xi: np.ndarray, b: np.ndarray,
                 L: Optional[float] = None, G: Optional[float] = None):
        a = np.asarray(a, dtype=float)
        nu = np.asarray(nu, dtype=float)
        b = np.asarray(b, dtype=float)
        xi = np.asarray(xi, dtype=float)
        n = a.shape[0]
        if xi.ndim != 2 or xi.shape[0] != n or nu.shape != (n,) or b.shape != (n,):
            raise ShapeError(f"inconsistent parameter shapes a{a.shape} nu{nu.shape} xi{xi.shape} b{b.shape}")

        super().__init__(d=xi.shape[1], n=n, L=L, G=G)
        self.a, self.nu, self.xi, self.b = a, nu, xi, b

    def local_value(self, i: int, x: np.ndarray) -> float:
        sigma = _sigmoid(self.xi[i] @ x + self.nu[i])
        return float(self.a[i] * sigma + self.b[i] * np.log1p(x @ x))

    def local_grad(self, i: int, x: np.ndarray) -> np.ndarray:
        sigma = _sigmoid(self.xi[i] @ x + self.nu[i])
        return self.a[i] * sigma * (1.0 - sigma) * self.xi[i] + 2.0 * self.b[i] * x / (1.0 + x @ x)

    def local_values(self, x: np.ndarray) -> np.ndarray:
        x = self.check_point(x)
        sigma = _sigmoid(self.xi @ x + self.nu)
        return self.a * sigma + self.b * np.log1p(x @ x)

    def local_grads(self, x: np.ndarray) -> np.ndarray:
        x = self.check_point(x)
        sigma = _sigmoid(self.xi @ x + self.nu)
        logistic = (self.a * sigma * (1.0 - sigma))[:, None] * self.xi
        return logistic + np.outer(2.0 * self.b / (1.0 + x @ x), x)

    def logistic_grad_ceiling(self) -> np.ndarray:
        """Per-agent bound |a_i| |xi_i| / 4 on the logistic term's gradient norm."""
        return np.abs(self.a) * np.linalg.norm(self.xi, axis=1) / 4.0

    def parameters(self) -> Dict[str, np.ndarray]:
        return {'a': self.a, 'nu': self.nu, 'xi': self.xi, 'b': self.b}


class QuadraticSuite(ObjectiveSuite):
    """f_i(x) = 1/2 (x - c_i)^T H (x - c_i) with a shared diagonal H = diag(h).

    The global objective is 1/2 (x - c_bar)^T H (x - c_bar) + f_star with
    f_star = (1/2n) sum_i (c_i - c_bar)^T H (c_i - c_bar); every local minimum
    is 0, so delta_gap = f_star. L = max h and mu = min h.
    """

    kind = 'quadratic'

    def __init__(self, centers: np.ndarray, curvature: Optional[np.ndarray] = None):
        centers = np.asarray(centers, dtype=float)
        if centers.ndim != 2:
            raise ShapeError(f"centers must be an (n, d) array, got shape {centers.shape}")
        n, d = centers.shape
        h = np.ones(d) if curvature is None else np.asarray(curvature, dtype=float)
        if h.shape != (d,):
            raise ShapeError(f"curvature must have shape ({d},), got {h.shape}")
        if np.any(h <= 0):
            raise ValueError("curvature entries must be positive")

        self.centers = centers
        self.h = h
        self.c_bar = centers.mean(axis=0)
        spread = centers - self.c_bar
        f_star = float(0.5 * np.mean(np.sum(spread * spread * h, axis=1)))
        super().__init__(d=d, n=n, L=float(h.max()), G=None, mu=float(h.min()),
                         f_star=f_star, delta_gap=f_star)

    def local_value(self, i: int, x: np.ndarray) -> float:
        r = x - self.centers[i]
        return float(0.5 * np.sum(self.h * r * r))

    def local_grad(self, i: int, x: np.ndarray) -> np.ndarray:
        return self.h * (x - self.centers[i])

    def local_values(self, x: np.ndarray) -> np.ndarray:
        x = self.check_point(x)
        r = x - self.centers
        return 0.5 * np.sum(self.h * r * r, axis=1)

    def local_grads(self, x: np.ndarray) -> np.ndarray:
        x = self.check_point(x)
        return self.h * (x - self.centers)

    def minimizer(self) -> np.ndarray:
        return self.c_bar.copy()

    def optimality_gap(self, x: np.ndarray) -> float:
        """f(x) - f_star without the cancellation of subtracting two values."""
        r = self.check_point(x) - self.c_bar
        return float(0.5 * np.sum(self.h * r * r))

    def parameters(self) -> Dict[str, np.ndarray]:
        return {'centers': self.centers, 'curvature': self.h}


def make_benchmark_instance(d: int, n: int, rng: np.random.Generator,
                        L: Optional[float] = None, G: Optional[float] = None) -> BenchmarkSuite:
    """Random benchmark instance.

    a_i, nu_i and every entry of xi_i are i.i.d. standard normal. b is drawn
    from N(1, I - 11^T/n) by projecting out the mean of a standard normal
    vector and adding one, so mean(b) = 1.

    Args:
        d: Dimension
        n: Number of agents (>= 2)
        rng: Seeded generator
        L: Optional smoothness constant supplied by the caller
        G: Optional Lipschitz constant supplied by the caller

    Returns:
        BenchmarkSuite
    """
    if d < 1:
        raise InvalidSizeError(f"dimension must be >= 1, got {d}")
    if n < 2:
        raise InvalidSizeError(f"agent count must be >= 2, got {n}")

    a = rng.standard_normal(n)
    nu = rng.standard_normal(n)
    xi = rng.standard_normal((n, d))
    raw = rng.standard_normal(n)
    b = raw - raw.mean() + 1.0

    logger.debug(f"Benchmark instance d={d}, n={n}: mean(b)={b.mean():.15f}")
    return BenchmarkSuite(a=a, nu=nu, xi=xi, b=b, L=L, G=G)


def make_quadratic_suite(d: int, n: int, centers: np.ndarray,
                         curvature: Optional[np.ndarray] = None) -> QuadraticSuite:
    """Quadratic suite f_i(x) = 1/2 |x - c_i|_H^2 with L = mu = 1 for the default H = I."""
    centers = np.asarray(centers, dtype=float)
    if centers.shape != (n, d):
        raise ShapeError(f"expected centers of shape ({n}, {d}), got {centers.shape}")
    return QuadraticSuite(centers, curvature)


def global_value(suite: ObjectiveSuite, x: np.ndarray) -> float:
    """f(x) = (1/n) sum_i f_i(x)."""
    return suite.global_value(x)


def global_grad(suite: ObjectiveSuite, x: np.ndarray) -> np.ndarray:
    """grad f(x) = (1/n) sum_i grad f_i(x)."""
    return suite.global_grad(x)


def suite_from_parameters(kind: str, params: Mapping[str, np.ndarray], d: int, n: int,
                          L: Optional[float] = None, G: Optional[float] = None) -> ObjectiveSuite:
    """Rebuild a suite from manifest parameters (flat arrays are reshaped)."""
    if kind == 'benchmark':
        return BenchmarkSuite(a=params['a'], nu=params['nu'],
                          xi=np.asarray(params['xi']).reshape(n, d), b=params['b'], L=L, G=G)
    if kind == 'quadratic':
        return QuadraticSuite(np.asarray(params['centers']).reshape(n, d), params['curvature'])
    raise ValueError(f"unknown suite kind '{kind}'")
