"""
Swarm Model Module

This module defines the per-iteration state of the agent swarm and the
step-size / smoothing-radius schedule driving it.
"""

from dataclasses import dataclass, field
from typing import Any, Callable, Dict

import numpy as np

SCHEDULE_KINDS = ('theorem1', 'theorem2', 'theorem3', 'theorem4', 'manual')


@dataclass(frozen=True)
class SwarmState:
    """Stacked agent variables after iteration t.

    Attributes:
        x: decision vectors x^i(t), shape (n, d)
        s: tracker vectors s^i(t), shape (n, d); zeros for the kernel without tracking
        g_prev: last gradient estimates g^i(t), shape (n, d)
        t: iteration counter
        m: cumulative function queries per agent
    """

    x: np.ndarray
    s: np.ndarray
    g_prev: np.ndarray
    t: int = 0
    m: int = 0

    @classmethod
    def initial(cls, x0: np.ndarray) -> 'SwarmState':
        """State at t = 0 with s(0) = g(0) = 0."""
        x0 = np.array(x0, dtype=float)
        return cls(x=x0, s=np.zeros_like(x0), g_prev=np.zeros_like(x0), t=0, m=0)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def d(self) -> int:
        return self.x.shape[1]

    @property
    def x_bar(self) -> np.ndarray:
        return self.x.mean(axis=0)

    @property
    def g_bar(self) -> np.ndarray:
        return self.g_prev.mean(axis=0)

    @property
    def s_bar(self) -> np.ndarray:
        return self.s.mean(axis=0)


@dataclass(frozen=True)
class Schedule:
    """Step-size sequence eta_t and smoothing-radius sequence u_t for t >= 1.

    Attributes:
        kind: one of SCHEDULE_KINDS
        eta_fn: t -> eta_t
        u_fn: t -> u_t
        params: resolved constructor parameters (also written to the manifest)
    """

    kind: str
    eta_fn: Callable[[int], float]
    u_fn: Callable[[int], float]
    params: Dict[str, Any] = field(default_factory=dict)

    def eta(self, t: int) -> float:
        return float(self.eta_fn(t))

    def u(self, t: int) -> float:
        return float(self.u_fn(t))

    @property
    def constant_eta(self) -> bool:
        return bool(self.params.get('constant_eta', False))

    def __str__(self) -> str:
        shown = ', '.join(f"{k}={v}" for k, v in sorted(self.params.items()))
        return f"Schedule({self.kind}: {shown})"
