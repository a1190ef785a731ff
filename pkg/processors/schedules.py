"""
Schedules Processor Module

Constructors for step-size and smoothing-radius sequences. Each theorem
constructor validates the theorem's preconditions and sets u_t at the
stated ceiling.
"""

import logging
import math
from typing import Any, Dict, Mapping, Optional

import numpy as np

from models.swarm import SCHEDULE_KINDS, Schedule
from utils.exceptions import ScheduleError

logger = logging.getLogger(__name__)

RADIUS_SERIES_TERMS = 1_000_000


def schedule_manual(eta0: float, eta_power: float, u0: float, u_power: float) -> Schedule:
    """eta_t = eta0 * t^(-eta_power), u_t = u0 * t^(-u_power).

    Covers the hand-tuned experiment settings, e.g. eta_t = 0.02/sqrt(t),
    u_t = 4/sqrt(t).
    """
    if eta0 <= 0 or u0 <= 0:
        raise ScheduleError(f"eta0 and u0 must be positive, got eta0={eta0}, u0={u0}")
    if eta_power < 0 or u_power < 0:
        raise ScheduleError("eta_power and u_power must be non-negative")

    params = {'eta0': eta0, 'eta_power': eta_power, 'u0': u0, 'u_power': u_power,
              'constant_eta': eta_power == 0}
    return Schedule(kind='manual',
                    eta_fn=lambda t: eta0 * t ** (-eta_power),
                    u_fn=lambda t: u0 * t ** (-u_power),
                    params=params)


def schedule_theorem1(L: float, d: int, alpha_eta: float, alpha_u: float, G: float,
                      gamma: float) -> Schedule:
    """Diminishing steps for the 2-point kernel on smooth Lipschitz objectives.

    eta_t = alpha_eta / (4 L sqrt(d)) / sqrt(t),
    u_t   = alpha_u G / (L sqrt(d)) / t^(gamma/2 - 1/4).
    """
    if L is None or G is None:
        raise ScheduleError("theorem1 schedule needs both L and G")
    if not 0 < alpha_eta <= 1:
        raise ScheduleError(f"alpha_eta must lie in (0, 1], got {alpha_eta}")
    if alpha_u < 0:
        raise ScheduleError(f"alpha_u must be >= 0, got {alpha_u}")
    if alpha_u == 0:
        raise ScheduleError("alpha_u = 0 gives u_t = 0; function queries need a positive radius")
    if gamma <= 1:
        raise ScheduleError(f"gamma must exceed 1, got {gamma}")
    if L <= 0 or G <= 0:
        raise ScheduleError("L and G must be positive")

    eta_scale = alpha_eta / (4.0 * L * math.sqrt(d))
    u_scale = alpha_u * G / (L * math.sqrt(d))
    u_exponent = gamma / 2.0 - 0.25
    if eta_scale * L > 0.25:
        raise ScheduleError(f"eta_1 L = {eta_scale * L} exceeds 1/4")

    params = {'L': L, 'd': d, 'alpha_eta': alpha_eta, 'alpha_u': alpha_u, 'G': G, 'gamma': gamma,
              'u_exponent': u_exponent}
    return Schedule(kind='theorem1',
                    eta_fn=lambda t: eta_scale / math.sqrt(t),
                    u_fn=lambda t: u_scale * t ** (-u_exponent),
                    params=params)


def theorem2_offset(mu: float, L: float, d: int, rho: float, alpha_eta: float) -> int:
    """Smallest integer t0 >= 2 alpha_eta L / (mu (1 - rho^2)) (32 L d / (3 mu) + 9 rho) - 1."""
    bound = 2.0 * alpha_eta * L / (mu * (1.0 - rho ** 2)) * (32.0 * L * d / (3.0 * mu) + 9.0 * rho) - 1.0
    # Guard against 41.99999999 style rounding of exact bounds
    return max(0, math.ceil(bound - 1e-9))


def schedule_theorem2(mu: float, L: float, d: int, rho: float, alpha_eta: float,
                      alpha_u: float) -> Schedule:
    """Steps for the 2-point kernel on gradient-dominated objectives.

    eta_t = 2 alpha_eta / (mu (t + t0)), u_t = alpha_u / sqrt(t + t0).
    """
    if mu is None or L is None:
        raise ScheduleError("theorem2 schedule needs mu and L")
    if alpha_eta <= 1:
        raise ScheduleError(f"alpha_eta must exceed 1, got {alpha_eta}")
    if alpha_u <= 0:
        raise ScheduleError(f"alpha_u must be positive, got {alpha_u}")
    if not 0 <= rho < 1:
        raise ScheduleError(f"rho must lie in [0, 1), got {rho}")
    if not 0 < mu <= L:
        raise ScheduleError(f"need 0 < mu <= L, got mu={mu}, L={L}")

    t0 = theorem2_offset(mu, L, d, rho, alpha_eta)
    params = {'mu': mu, 'L': L, 'd': d, 'rho': rho, 'alpha_eta': alpha_eta, 'alpha_u': alpha_u,
              't0': t0}
    return Schedule(kind='theorem2',
                    eta_fn=lambda t: 2.0 * alpha_eta / (mu * (t + t0)),
                    u_fn=lambda t: alpha_u / math.sqrt(t + t0),
                    params=params)


def theorem3_step_ceiling(L: float, rho: float) -> float:
    """Largest eta with eta L <= min{1/6, (1 - rho^2)^2 / (4 rho^2 (3 + 4 rho^2))}."""
    if rho == 0:
        return 1.0 / (6.0 * L)
    network_term = (1.0 - rho ** 2) ** 2 / (4.0 * rho ** 2 * (3.0 + 4.0 * rho ** 2))
    return min(1.0 / 6.0, network_term) / L


def schedule_theorem3(L: float, rho: float, u0: float, u_power: float = 1.0) -> Schedule:
    """Constant step at the ceiling with a square-summable radius u_t = u0 / t^u_power.

    d sum_t u_t^2 is finite iff u_power > 1/2.
    """
    if L is None or L <= 0:
        raise ScheduleError("theorem3 schedule needs a positive L")
    if not 0 <= rho < 1:
        raise ScheduleError(f"rho must lie in [0, 1), got {rho}")
    if u0 <= 0:
        raise ScheduleError(f"u0 must be positive, got {u0}")
    if u_power <= 0.5:
        raise ScheduleError(f"u_power = {u_power} makes d * sum u_t^2 diverge; need u_power > 1/2")

    eta = theorem3_step_ceiling(L, rho)
    params = {'L': L, 'rho': rho, 'u0': u0, 'u_power': u_power, 'eta': eta, 'constant_eta': True}
    return Schedule(kind='theorem3',
                    eta_fn=lambda t: eta,
                    u_fn=lambda t: u0 * t ** (-u_power),
                    params=params)


def theorem4_rate(mu: float, L: float, rho: float, alpha: float) -> float:
    """lambda = 1 - alpha ((1 - rho^2) / 5)^2 (mu / L)^(4/3)."""
    return 1.0 - alpha * ((1.0 - rho ** 2) / 5.0) ** 2 * (mu / L) ** (4.0 / 3.0)


def schedule_theorem4(mu: float, L: float, rho: float, alpha: float, u1: float,
                      lambda_tilde: Optional[float] = None) -> Schedule:
    """Constant step eta L = alpha (mu/L)^(1/3) (1 - rho^2)^2 / 14 with u_t = u1 lambda_tilde^(t/2).

    lambda_tilde defaults to lambda^2 and must stay below lambda.
    """
    if mu is None or L is None:
        raise ScheduleError("theorem4 schedule needs mu and L")
    if not 0 < alpha <= 1:
        raise ScheduleError(f"alpha must lie in (0, 1], got {alpha}")
    if not 0 < mu <= L:
        raise ScheduleError(f"need 0 < mu <= L, got mu={mu}, L={L}")
    if not 0 <= rho < 1:
        raise ScheduleError(f"rho must lie in [0, 1), got {rho}")
    if u1 <= 0:
        raise ScheduleError(f"u1 must be positive, got {u1}")

    lam = theorem4_rate(mu, L, rho, alpha)
    if lambda_tilde is None:
        lambda_tilde = lam ** 2
    if not 0 < lambda_tilde < lam:
        raise ScheduleError(f"lambda_tilde = {lambda_tilde} must lie in (0, lambda = {lam})")

    eta = alpha * (mu / L) ** (1.0 / 3.0) * (1.0 - rho ** 2) ** 2 / 14.0 / L
    params = {'mu': mu, 'L': L, 'rho': rho, 'alpha': alpha, 'u1': u1, 'lambda_tilde': lambda_tilde,
              'lambda': lam, 'eta': eta, 'constant_eta': True}
    return Schedule(kind='theorem4',
                    eta_fn=lambda t: eta,
                    u_fn=lambda t: u1 * lambda_tilde ** (t / 2.0),
                    params=params)


def summable_radius_sum(schedule: Schedule, d: int) -> float:
    """Upper bound on R_u = d * sum_{t >= 1} u_t^2.

    Closed form for the geometric radius; otherwise a partial sum plus an
    integral bound on the tail of a polynomially decaying radius.
    """
    if schedule.kind == 'theorem4':
        q = schedule.params['lambda_tilde']
        return d * schedule.params['u1'] ** 2 * q / (1.0 - q)

    if schedule.kind == 'theorem2':
        # alpha_u^2 / (t + t0) is not summable
        return math.inf
    if schedule.kind == 'theorem1':
        u0 = schedule.u(1)
        power = schedule.params['u_exponent']
    else:
        u0 = schedule.params['u0']
        power = schedule.params['u_power']
    if power <= 0.5:
        return math.inf

    t = np.arange(1, RADIUS_SERIES_TERMS + 1, dtype=float)
    exponent = 2.0 * power
    partial = float(np.sum(u0 ** 2 * t ** (-exponent)))
    tail = u0 ** 2 * RADIUS_SERIES_TERMS ** (1.0 - exponent) / (exponent - 1.0)
    return d * (partial + tail)


def build_schedule(kind: str, params: Mapping[str, Any]) -> Schedule:
    """Construct a schedule from its kind and a parameter mapping (configs, manifests)."""
    if kind not in SCHEDULE_KINDS:
        raise ScheduleError(f"unknown schedule kind '{kind}'")
    p = dict(params)
    if kind == 'manual':
        return schedule_manual(p['eta0'], p.get('eta_power', 0.0), p['u0'], p.get('u_power', 0.0))
    if kind == 'theorem1':
        return schedule_theorem1(p['L'], int(p['d']), p['alpha_eta'], p['alpha_u'], p['G'], p['gamma'])
    if kind == 'theorem2':
        return schedule_theorem2(p['mu'], p['L'], int(p['d']), p['rho'], p['alpha_eta'], p['alpha_u'])
    if kind == 'theorem3':
        return schedule_theorem3(p['L'], p['rho'], p['u0'], p.get('u_power', 1.0))
    return schedule_theorem4(p['mu'], p['L'], p['rho'], p['alpha'], p['u1'], p.get('lambda_tilde'))


def schedule_parameters(schedule: Schedule) -> Dict[str, Any]:
    """Constructor arguments needed to rebuild the schedule."""
    derived = {'constant_eta', 'u_exponent', 't0', 'eta', 'lambda'}
    return {k: v for k, v in schedule.params.items() if k not in derived}
