"""
Estimators Processor Module

Zero-order gradient estimators built only from function-value queries:
the randomized 2-point estimator along a uniform sphere direction and the
2d-point coordinate-wise central difference estimator.
"""

import logging
from typing import Callable, Optional, Union

import numpy as np

from models.rng_stream import RngStream
from utils.exceptions import EvaluationError, InvalidDimensionError, ShapeError

logger = logging.getLogger(__name__)

ValueFunction = Callable[[np.ndarray], float]
RandomSource = Union[RngStream, np.random.Generator]

UNIT_NORM_TOL = 1e-12
RADIUS_PRECISION_FLOOR = 1e-7


class QueryCounter:
    """Running count of function-value queries."""

    def __init__(self, count: int = 0):
        self.count = count

    def add(self, queries: int) -> None:
        self.count += queries

    def __repr__(self) -> str:
        return f"QueryCounter({self.count})"


def _as_generator(rng: RandomSource) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator()
    return rng


def sample_sphere(d: int, rng: RandomSource) -> np.ndarray:
    """Uniform direction on the unit sphere S^{d-1} via normalized Gaussians.

    Args:
        d: Dimension (>= 1); for d = 1 the result is -1 or +1
        rng: RngStream (fresh generator per call) or an existing Generator

    Returns:
        Unit-norm d-vector
    """
    if d < 1:
        raise InvalidDimensionError(f"sphere dimension must be >= 1, got {d}")

    generator = _as_generator(rng)
    while True:
        z = generator.standard_normal(d)
        norm = np.linalg.norm(z)
        if norm > 0.0:
            return z / norm


def sample_sphere_batch(d: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """count independent uniform sphere directions, shape (count, d)."""
    if d < 1:
        raise InvalidDimensionError(f"sphere dimension must be >= 1, got {d}")

    z = rng.standard_normal((count, d))
    norms = np.linalg.norm(z, axis=1)
    # Exact zero rows have probability zero but are possible in floating point
    for row in np.flatnonzero(norms == 0.0):
        z[row] = sample_sphere(d, rng)
        norms[row] = 1.0
    return z / norms[:, None]


def _query(f: ValueFunction, point: np.ndarray) -> float:
    value = f(point)
    if not np.isfinite(value):
        raise EvaluationError(f"non-finite function value {value}")
    return float(value)


def _check_radius(x: np.ndarray, u: float) -> None:
    if not u > 0:
        raise ValueError(f"smoothing radius must be positive, got {u}")
    if u < RADIUS_PRECISION_FLOOR * (1.0 + np.linalg.norm(x)):
        logger.warning(f"Smoothing radius u={u:.3g} is below the double-precision floor "
                       f"for |x|={np.linalg.norm(x):.3g}; central differences lose accuracy")


def estimate_2point(f: ValueFunction, x: np.ndarray, u: float, z: np.ndarray,
                    counter: Optional[QueryCounter] = None) -> np.ndarray:
    """2-point estimator d * (f(x + u z) - f(x - u z)) / (2u) * z.

    Args:
        f: Value oracle
        x: Query center
        u: Smoothing radius (> 0)
        z: Unit direction
        counter: Incremented by 2 when given

    Returns:
        Gradient estimate (d-vector)
    """
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    if z.shape != x.shape:
        raise ShapeError(f"direction shape {z.shape} differs from point shape {x.shape}")
    if abs(np.linalg.norm(z) - 1.0) > UNIT_NORM_TOL:
        raise ValueError(f"direction must have unit norm, got {np.linalg.norm(z)}")
    _check_radius(x, u)

    d = x.shape[0]
    forward = _query(f, x + u * z)
    backward = _query(f, x - u * z)
    if counter is not None:
        counter.add(2)
    return d * (forward - backward) / (2.0 * u) * z


def estimate_2d_point(f: ValueFunction, x: np.ndarray, u: float,
                      counter: Optional[QueryCounter] = None) -> np.ndarray:
    """2d-point estimator: central differences along every coordinate axis.

    Args:
        f: Value oracle
        x: Query center
        u: Smoothing radius (> 0)
        counter: Incremented by 2d when given

    Returns:
        Gradient estimate (d-vector)
    """
    x = np.asarray(x, dtype=float)
    _check_radius(x, u)

    d = x.shape[0]
    estimate = np.empty(d)
    step = np.zeros(d)
    for k in range(d):
        step[k] = u
        estimate[k] = (_query(f, x + step) - _query(f, x - step)) / (2.0 * u)
        step[k] = 0.0
    if counter is not None:
        counter.add(2 * d)
    return estimate


def draw_2point_estimates(f: ValueFunction, x: np.ndarray, u: float, samples: int,
                          rng: np.random.Generator) -> np.ndarray:
    """Independent 2-point estimates over fresh sphere draws, shape (samples, d)."""
    if samples < 1:
        raise ValueError(f"need at least one sample, got {samples}")
    x = np.asarray(x, dtype=float)
    directions = sample_sphere_batch(x.shape[0], samples, rng)
    return np.stack([estimate_2point(f, x, u, z) for z in directions])


def estimate_smoothed_gradient_mc(f: ValueFunction, x: np.ndarray, u: float, samples: int,
                                  rng: np.random.Generator) -> np.ndarray:
    """Monte Carlo mean of the 2-point estimator, an unbiased estimate of grad f^u(x)."""
    return draw_2point_estimates(f, x, u, samples, rng).mean(axis=0)
