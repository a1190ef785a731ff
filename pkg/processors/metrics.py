"""
Metrics Processor Module

Per-iteration metrics evaluated with the analytic oracles at the mean iterate.
These evaluations are not function queries of the algorithms and never touch
the query count m.
"""

from typing import Optional

import numpy as np

from models.objective_suite import ObjectiveSuite
from models.swarm import SwarmState
from models.trace import TraceRow


def consensus_error(x: np.ndarray) -> float:
    """(1/n) sum_i |x^i - x_bar|^2."""
    deviation = x - x.mean(axis=0)
    return float(np.mean(np.sum(deviation * deviation, axis=1)))


def tracking_error(s: np.ndarray, target: np.ndarray) -> float:
    """(1/n) sum_i |s^i - target|^2."""
    deviation = s - target
    return float(np.mean(np.sum(deviation * deviation, axis=1)))


def compute_metrics(state: SwarmState, suite: ObjectiveSuite,
                    prev_mean_grad_target: Optional[np.ndarray] = None,
                    eta_t: Optional[float] = None,
                    u_t: Optional[float] = None) -> TraceRow:
    """Trace row for the given state.

    Args:
        state: Swarm state after iteration t
        suite: Objective suite with analytic gradients
        prev_mean_grad_target: grad f(x_bar(t-1)); None when the kernel has no
            trackers or at t = 0, in which case track_err is left empty
        eta_t: Step size used for iteration t
        u_t: Smoothing radius used for iteration t

    Returns:
        TraceRow
    """
    x_bar = state.x_bar
    grad = suite.global_grad(x_bar)
    track = None
    if prev_mean_grad_target is not None:
        track = tracking_error(state.s, prev_mean_grad_target)

    return TraceRow(
        t=state.t,
        m=state.m,
        f_bar=suite.global_value(x_bar),
        grad_norm_sq=float(grad @ grad),
        consensus_err=consensus_error(state.x),
        track_err=track,
        eta_t=eta_t,
        u_t=u_t,
    )
