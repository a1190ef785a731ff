"""
Number Formatting Module

Bit-stable rendering of numbers for CSV traces and manifests.
"""

from typing import Iterable, Optional

import numpy as np


def format_float(value: Optional[float]) -> str:
    """Render a float as the shortest decimal string that round-trips.

    Args:
        value: Number to render, or None for an empty cell

    Returns:
        String representation ('' for None)
    """
    if value is None:
        return ''
    return repr(float(value))


def parse_float(text: str) -> Optional[float]:
    """Inverse of format_float."""
    text = text.strip()
    if text == '':
        return None
    return float(text)


def format_float_list(values: Iterable[float]) -> str:
    """Render a flat sequence of floats as a comma-separated string."""
    return ','.join(format_float(v) for v in np.asarray(list(values), dtype=float).ravel())


def parse_float_list(text: str) -> np.ndarray:
    """Parse a comma-separated list produced by format_float_list."""
    text = text.strip()
    if not text:
        return np.zeros(0)
    return np.array([float(item) for item in text.split(',')], dtype=float)
