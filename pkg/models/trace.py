"""
Trace Model Module

This module defines the per-iteration metric rows recorded by a run and the
report types produced by the verification harness.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional

import numpy as np

TRACE_COLUMNS = ('t', 'm', 'f_bar', 'grad_norm_sq', 'consensus_err', 'track_err', 'eta_t', 'u_t')
METRIC_COLUMNS = ('f_bar', 'grad_norm_sq', 'consensus_err', 'track_err')


@dataclass(frozen=True)
class TraceRow:
    """Metrics after iteration t.

    track_err is None for the kernel without gradient tracking and at t = 0;
    eta_t and u_t are None at t = 0.
    """

    t: int
    m: int
    f_bar: float
    grad_norm_sq: float
    consensus_err: float
    track_err: Optional[float] = None
    eta_t: Optional[float] = None
    u_t: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        return {column: getattr(self, column) for column in TRACE_COLUMNS}


@dataclass
class Trace:
    """Metric rows of one run, in iteration order.

    Attributes:
        kernel: 'alg1', 'alg2' or 'hybrid'
        rows: one TraceRow per recorded iteration, t strictly increasing
        x0: initial iterates (n, d), kept for the theorem bound constants
    """

    kernel: str
    rows: List[TraceRow] = field(default_factory=list)
    x0: Optional[np.ndarray] = None

    def append(self, row: TraceRow) -> None:
        if self.rows and row.t <= self.rows[-1].t:
            raise ValueError(f"trace rows must have increasing t, got {row.t} after {self.rows[-1].t}")
        self.rows.append(row)

    def column(self, name: str) -> np.ndarray:
        """Column as a float array; None cells become NaN."""
        return np.array([np.nan if getattr(r, name) is None else getattr(r, name) for r in self.rows],
                        dtype=float)

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def last(self) -> TraceRow:
        return self.rows[-1]


class Verdict(str, Enum):
    PASS = 'PASS'
    FAIL = 'FAIL'
    INCONCLUSIVE = 'INCONCLUSIVE'
    NOT_COVERED = 'NOT-COVERED'


@dataclass
class VerificationReport:
    """Outcome of one verification check with measured and expected values."""

    name: str
    verdict: Verdict
    measured: Dict[str, Any] = field(default_factory=dict)
    expected: Dict[str, Any] = field(default_factory=dict)
    notes: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.verdict == Verdict.PASS

    def to_dict(self) -> Dict[str, Any]:
        return {
            'name': self.name,
            'verdict': self.verdict.value,
            'measured': _plain(self.measured),
            'expected': _plain(self.expected),
            'notes': list(self.notes),
        }

    def __str__(self) -> str:
        parts = [f"{self.verdict.value} {self.name}"]
        for key, value in self.measured.items():
            expected = self.expected.get(key)
            if expected is None:
                parts.append(f"{key}={_short(value)}")
            else:
                parts.append(f"{key}={_short(value)} (expected {_short(expected)})")
        for note in self.notes:
            parts.append(f"[{note}]")
        return ' '.join(parts)


@dataclass
class TheoremBoundReport(VerificationReport):
    """Ergodic bound check: per-t right-hand side versus empirical left-hand side.

    margin is min over t of (rhs - lhs); PASS iff margin >= -tolerance.
    """

    constants: Dict[str, float] = field(default_factory=dict)
    lhs: Optional[np.ndarray] = None
    rhs: Optional[np.ndarray] = None
    margin: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        data = super().to_dict()
        data['constants'] = _plain(self.constants)
        data['margin'] = self.margin
        return data


def _short(value: Any) -> str:
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def _plain(mapping: Dict[str, Any]) -> Dict[str, Any]:
    plain = {}
    for key, value in mapping.items():
        if isinstance(value, np.ndarray):
            plain[key] = value.tolist()
        elif isinstance(value, np.generic):
            plain[key] = value.item()
        else:
            plain[key] = value
    return plain
