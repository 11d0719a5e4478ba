"""Harmonic numbers and the expected isolation depth of ``m`` points.

All values come from one growing table of exact partial sums, so a given
``m`` maps to the same binary64 value no matter which call produced it.
"""

from __future__ import annotations

import threading

import numpy as np

_lock = threading.Lock()
_harmonic = np.zeros(1)


def _harmonic_table(m_max: int) -> np.ndarray:
    global _harmonic
    table = _harmonic
    if len(table) > m_max:
        return table
    with _lock:
        if len(_harmonic) <= m_max:
            size = max(m_max + 1, 2 * len(_harmonic))
            terms = np.empty(size)
            terms[0] = 0.0
            terms[1:] = 1.0 / np.arange(1, size, dtype=np.float64)
            # cumsum is sequential, so prefixes are stable as the table grows
            _harmonic = np.cumsum(terms)
        return _harmonic


def harmonic(m: int) -> float:
    """H(m) = 1 + 1/2 + ... + 1/m, with H(0) = 0."""
    if m < 0:
        raise ValueError(f"harmonic number undefined for m={m}")
    return float(_harmonic_table(m)[m])


def expected_depth_table(m_max: int) -> np.ndarray:
    """Return ``values`` with ``values[m] = expected_depth(m)`` for ``0 <= m <= m_max``."""
    if m_max < 0:
        raise ValueError(f"m_max must be non-negative, got {m_max}")
    h = _harmonic_table(m_max)
    m = np.arange(m_max + 1, dtype=np.float64)
    values = np.zeros(m_max + 1)
    if m_max >= 2:
        values[2:] = 2.0 * h[1:m_max] - 2.0 * (m[2:] - 1.0) / m[2:]
    return values


def expected_depth(m: int) -> float:
    """Average path length needed to isolate one of ``m`` points.

    Zero for ``m`` in {0, 1}, otherwise ``2 H(m-1) - 2 (m-1) / m``.
    """
    if m < 0:
        raise ValueError(f"expected depth undefined for m={m}")
    if m < 2:
        return 0.0
    h = _harmonic_table(m)
    return float(2.0 * h[m - 1] - 2.0 * (m - 1.0) / m)
