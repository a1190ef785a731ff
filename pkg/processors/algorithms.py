"""
Algorithms Processor Module

The three synchronous iteration kernels, all in adapt-then-combine form:

- alg1:   2-point estimator, consensus on the decision variables only
- alg2:   2d-point estimator with gradient tracking
- hybrid: 2-point estimator with gradient tracking

and the driver loop that runs a kernel and records a trace.
"""

import logging
import math
from typing import Callable, Optional, Tuple

import numpy as np

from models.network import MixingMatrix
from models.objective_suite import ObjectiveSuite
from models.rng_stream import PURPOSE_INIT, RngStream
from models.swarm import Schedule, SwarmState
from models.trace import Trace, TraceRow
from processors.estimators import QueryCounter, estimate_2d_point, estimate_2point, sample_sphere
from processors.metrics import compute_metrics
from utils.exceptions import (DivergenceError, EvaluationError, InvalidSizeError,
                              InvariantViolation, ShapeError)

logger = logging.getLogger(__name__)

KERNELS = ('alg1', 'alg2', 'hybrid')
TRACKING_KERNELS = ('alg2', 'hybrid')
IDENTITY_TOL = 1e-10


def queries_per_iteration(kernel: str, d: int) -> int:
    """Per-agent function queries of one iteration."""
    return 2 * d if kernel == 'alg2' else 2


def default_initial_points(n: int, d: int, seed: int, std: Optional[float] = None) -> np.ndarray:
    """Initial iterates drawn i.i.d. from N(0, (25/d) I_d) unless std is given."""
    scale = 5.0 / math.sqrt(d) if std is None else std
    return RngStream.for_purpose(seed, PURPOSE_INIT).generator().normal(0.0, scale, size=(n, d))


def _two_point_estimates(state: SwarmState, suite: ObjectiveSuite, u: float, seed: int, t: int,
                         counter: QueryCounter) -> np.ndarray:
    g = np.empty_like(state.x)
    for i in range(state.n):
        z = sample_sphere(state.d, RngStream(seed=seed, agent=i, t=t))
        try:
            g[i] = estimate_2point(suite.value_oracle(i), state.x[i], u, z, counter)
        except EvaluationError as e:
            raise DivergenceError(agent=i, iteration=t) from e
    return g


def _2d_point_estimates(state: SwarmState, suite: ObjectiveSuite, u: float, t: int,
                        counter: QueryCounter) -> np.ndarray:
    g = np.empty_like(state.x)
    for i in range(state.n):
        try:
            g[i] = estimate_2d_point(suite.value_oracle(i), state.x[i], u, counter)
        except EvaluationError as e:
            raise DivergenceError(agent=i, iteration=t) from e
    return g


def _per_agent(counter: QueryCounter, n: int) -> int:
    # synchronous rounds: every agent issues the same number of queries
    return counter.count // n


def _check_finite(t: int, *arrays: np.ndarray) -> None:
    for array in arrays:
        bad_rows = np.flatnonzero(~np.all(np.isfinite(array), axis=1))
        if bad_rows.size:
            raise DivergenceError(agent=int(bad_rows[0]), iteration=t)


def _row_is_finite(row: TraceRow) -> bool:
    values = (row.f_bar, row.grad_norm_sq, row.consensus_err, row.track_err)
    return all(value is None or math.isfinite(value) for value in values)


def _first_nonfinite_agent(state: SwarmState, suite: ObjectiveSuite) -> int:
    with np.errstate(over='ignore', invalid='ignore'):
        for i in range(state.n):
            if not math.isfinite(suite.local_value(i, state.x[i])):
                return i
    return 0


def alg1_step(state: SwarmState, suite: ObjectiveSuite, w: MixingMatrix, schedule: Schedule,
              seed: int) -> SwarmState:
    """x^i(t) = sum_j W_ij (x^j(t-1) - eta_t g^j(t)) with 2-point estimates g^j(t).

    Agent i draws its direction from the (seed, i, t) stream.
    """
    t = state.t + 1
    eta, u = schedule.eta(t), schedule.u(t)

    counter = QueryCounter()
    g = _two_point_estimates(state, suite, u, seed, t, counter)
    x = w.w @ (state.x - eta * g)
    _check_finite(t, x)

    return SwarmState(x=x, s=state.s, g_prev=g, t=t, m=state.m + _per_agent(counter, state.n))


def alg2_step(state: SwarmState, suite: ObjectiveSuite, w: MixingMatrix, eta: float,
              u: float) -> SwarmState:
    """Gradient tracking on 2d-point estimates.

    s^i(t) = sum_j W_ij (s^j(t-1) + g^j(t) - g^j(t-1))
    x^i(t) = sum_j W_ij (x^j(t-1) - eta s^j(t))
    """
    t = state.t + 1
    counter = QueryCounter()
    g = _2d_point_estimates(state, suite, u, t, counter)
    return _tracking_update(state, w, g, eta, t, queries=_per_agent(counter, state.n))


def hybrid_step(state: SwarmState, suite: ObjectiveSuite, w: MixingMatrix, eta: float, u: float,
                seed: int) -> SwarmState:
    """Gradient tracking on 2-point estimates with fresh directions per agent and iteration."""
    t = state.t + 1
    counter = QueryCounter()
    g = _two_point_estimates(state, suite, u, seed, t, counter)
    return _tracking_update(state, w, g, eta, t, queries=_per_agent(counter, state.n))


def _tracking_update(state: SwarmState, w: MixingMatrix, g: np.ndarray, eta: float, t: int,
                     queries: int) -> SwarmState:
    s = w.w @ (state.s + g - state.g_prev)
    x = w.w @ (state.x - eta * s)
    _check_finite(t, s, x)
    return SwarmState(x=x, s=s, g_prev=g, t=t, m=state.m + queries)


def tracking_identity_residuals(previous: SwarmState, current: SwarmState,
                                eta: float) -> Tuple[float, float]:
    """Max-norm residuals of mean(s(t)) = mean(g(t)) and x_bar(t) = x_bar(t-1) - eta mean(g(t))."""
    g_bar = current.g_bar
    track = float(np.max(np.abs(current.s_bar - g_bar)))
    descent = float(np.max(np.abs(current.x_bar - (previous.x_bar - eta * g_bar))))
    return track, descent


def _kernel_step(kernel: str, suite: ObjectiveSuite, w: MixingMatrix, schedule: Schedule,
                 seed: int) -> Callable[[SwarmState], SwarmState]:
    if kernel == 'alg1':
        return lambda state: alg1_step(state, suite, w, schedule, seed)
    if kernel == 'alg2':
        return lambda state: alg2_step(state, suite, w, schedule.eta(state.t + 1), schedule.u(state.t + 1))
    if kernel == 'hybrid':
        return lambda state: hybrid_step(state, suite, w, schedule.eta(state.t + 1),
                                         schedule.u(state.t + 1), seed)
    raise ValueError(f"unknown kernel '{kernel}', expected one of {KERNELS}")


def run(kernel: str, suite: ObjectiveSuite, w: MixingMatrix, schedule: Schedule, T: int, seed: int,
        x0: Optional[np.ndarray] = None, init_std: Optional[float] = None,
        check_invariants: bool = False, log_every: int = 0) -> Trace:
    """Run T synchronous iterations of a kernel and record metrics after each one.

    Args:
        kernel: 'alg1', 'alg2' or 'hybrid'
        suite: Local objectives (kernels only see value oracles)
        w: Mixing matrix
        schedule: Step size / smoothing radius sequences
        T: Number of iterations (>= 1)
        seed: Run seed for initial points and direction streams
        x0: Initial iterates (n, d); drawn from the seed when omitted
        init_std: Standard deviation of the drawn initial iterates
        check_invariants: Assert the query count and the tracking identities every iteration
        log_every: Log progress every this many iterations (0 disables)

    Returns:
        Trace with rows t = 0..T

    Raises:
        DivergenceError: with the partial trace attached
    """
    if kernel not in KERNELS:
        raise ValueError(f"unknown kernel '{kernel}', expected one of {KERNELS}")
    if T < 1:
        raise InvalidSizeError(f"iteration count T must be >= 1, got {T}")
    if w.n != suite.n:
        raise ShapeError(f"mixing matrix has {w.n} agents, suite has {suite.n}")

    if x0 is None:
        x0 = default_initial_points(suite.n, suite.d, seed, init_std)
    x0 = np.array(x0, dtype=float)
    if x0.shape != (suite.n, suite.d):
        raise ShapeError(f"initial points must have shape ({suite.n}, {suite.d}), got {x0.shape}")

    step = _kernel_step(kernel, suite, w, schedule, seed)
    tracking = kernel in TRACKING_KERNELS

    state = SwarmState.initial(x0)
    trace = Trace(kernel=kernel, x0=x0.copy())
    initial_row = compute_metrics(state, suite)
    if not _row_is_finite(initial_row):
        logger.error(f"Divergence in {kernel}: metrics at the initial iterates are not finite")
        raise DivergenceError(agent=_first_nonfinite_agent(state, suite), iteration=0, partial_trace=trace)
    trace.append(initial_row)
    prev_grad = suite.global_grad(state.x_bar)

    logger.info(f"Running {kernel} for T={T} on {suite} with {w} and {schedule}")
    for t in range(1, T + 1):
        try:
            new_state = step(state)
        except DivergenceError as e:
            e.partial_trace = trace
            logger.error(f"Divergence in {kernel}: agent {e.agent}, iteration {e.iteration}")
            raise

        if check_invariants:
            expected_m = state.m + queries_per_iteration(kernel, suite.d)
            if new_state.m != expected_m:
                raise InvariantViolation(f"query count at t={t} is {new_state.m}, expected {expected_m}")
        if check_invariants and tracking:
            track_res, descent_res = tracking_identity_residuals(state, new_state, schedule.eta(t))
            if track_res > IDENTITY_TOL or descent_res > IDENTITY_TOL:
                raise InvariantViolation(f"tracking identities broken at t={t}: "
                                         f"mean-tracking {track_res:.3e}, mean-descent {descent_res:.3e}")

        state = new_state
        row = compute_metrics(state, suite, prev_grad if tracking else None,
                              eta_t=schedule.eta(t), u_t=schedule.u(t))
        if not _row_is_finite(row):
            error = DivergenceError(agent=_first_nonfinite_agent(state, suite), iteration=t,
                                    partial_trace=trace)
            logger.error(f"Divergence in {kernel}: metrics overflowed at iteration {t}")
            raise error
        trace.append(row)
        prev_grad = suite.global_grad(state.x_bar)

        if log_every and t % log_every == 0:
            row = trace.last
            logger.debug(f"{kernel} t={t} m={row.m} grad_norm_sq={row.grad_norm_sq:.4e} "
                         f"consensus_err={row.consensus_err:.4e}")

    logger.info(f"Finished {kernel}: m={state.m}, final grad_norm_sq={trace.last.grad_norm_sq:.4e}")
    return trace
