"""Rasterized cross-correlation and normalized sequence edit distance."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Hashable, Sequence

import numpy as np
from scipy import signal

from radiant.evalkit.intervals import Interval


def n_frames(bounds: tuple[int, int], frame_ms: int) -> int:
    t0, t1 = bounds
    return max(0, -((t0 - t1) // frame_ms))


def _first_frame_at_or_after(offset: int, frame_ms: int) -> int:
    # Smallest i with (i + 0.5) * frame_ms >= offset, in integer arithmetic.
    return -((frame_ms - 2 * offset) // (2 * frame_ms))


def rasterize(intervals: Sequence[Interval], bounds: tuple[int, int], frame_ms: int) -> np.ndarray:
    """Binary signal: frame ``i`` is 1 when its midpoint lies inside an interval."""
    if frame_ms <= 0:
        raise ValueError("frame_ms must be positive")
    t0 = bounds[0]
    n = n_frames(bounds, frame_ms)
    out = np.zeros(n, dtype=np.int64)
    for iv in intervals:
        # Frame i has midpoint t0 + (i + 0.5) * frame_ms; solve start <= mid < end.
        lo = max(0, _first_frame_at_or_after(iv.start - t0, frame_ms))
        hi = min(n, _first_frame_at_or_after(iv.end - t0, frame_ms))
        if lo < hi:
            out[lo:hi] = 1
    return out


@dataclass
class Correlation:
    score: float
    lag: int
    undefined: bool = False


def cross_correlation(g: np.ndarray, d: np.ndarray, max_lag: int | None = None) -> Correlation:
    """Best normalized correlation of ``d`` against ``g`` over lags in ``[-max_lag, max_lag]``.

    ``lag`` is positive when the detections run late.  Without ``max_lag``
    every lag with any overlap is considered.  An all-zero signal on either
    side scores 0 and is flagged undefined.
    """
    g = np.asarray(g, dtype=np.int64)
    d = np.asarray(d, dtype=np.int64)
    if len(g) != len(d):
        raise ValueError("signals must have equal length")
    gn, dn = int(g.sum()), int(d.sum())
    if gn == 0 or dn == 0:
        return Correlation(0.0, 0, True)
    n = len(g)
    # Binary signals give integer correlations, so rounding the FFT result is exact.
    raw = np.rint(signal.correlate(d, g, mode="full", method="auto")).astype(np.int64)
    lags = np.arange(-(n - 1), n)
    if max_lag is not None:
        keep = np.abs(lags) <= max_lag
        raw, lags = raw[keep], lags[keep]
    best = int(np.argmax(raw))
    return Correlation(float(raw[best]) / math.sqrt(gn * dn), int(lags[best]))


def damerau_levenshtein(a: Sequence[Hashable], b: Sequence[Hashable]) -> int:
    """Restricted edit distance: insert, delete, substitute, adjacent transposition."""
    n, m = len(a), len(b)
    prev2: list[int] = []
    prev = list(range(m + 1))
    for i in range(1, n + 1):
        cur = [i] + [0] * m
        for j in range(1, m + 1):
            cost = 0 if a[i - 1] == b[j - 1] else 1
            cur[j] = min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + cost)
            if i > 1 and j > 1 and a[i - 1] == b[j - 2] and a[i - 2] == b[j - 1]:
                cur[j] = min(cur[j], prev2[j - 2] + 1)
        prev2, prev = prev, cur
    return prev[m]


def damerau_levenshtein_norm(a: Sequence[Hashable], b: Sequence[Hashable]) -> float:
    longest = max(len(a), len(b))
    return damerau_levenshtein(a, b) / longest if longest else 0.0
