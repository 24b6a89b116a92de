"""Small numerical helpers shared by the geometry, spectra and report modules.

Trend fitting is how "at infinity" quantities are read off a finite truncation: the raw sequences
are always kept, and the fits here only summarise their tails.
"""

from typing import Optional, Sequence, Tuple

import numpy as np

TOLERANCE = 1e-12


def relative_gap(a: float, b: float) -> float:
    """|a - b| scaled by the larger magnitude (0 when both vanish)."""
    scale = max(abs(a), abs(b))
    if scale == 0.0:
        return 0.0
    return abs(a - b) / scale


def close(a: float, b: float, rtol: float = TOLERANCE) -> bool:
    return a == b or relative_gap(a, b) <= rtol


def leq(a: float, b: float, rtol: float = TOLERANCE) -> bool:
    """a <= b up to a relative tolerance (infinite values compare exactly)."""
    if a <= b:
        return True
    if not (np.isfinite(a) and np.isfinite(b)):
        return False
    return a - b <= rtol * max(abs(a), abs(b), 1.0)


def log_grid(lo: float, hi: float, num: int = 40) -> np.ndarray:
    """``num`` log-spaced points in [lo, hi]."""
    assert 0 < lo <= hi, f"invalid grid range [{lo}, {hi}]"
    return np.geomspace(lo, hi, num)


def _last_half(xs: np.ndarray, values: np.ndarray, minimum: int) -> Tuple[np.ndarray, np.ndarray]:
    start = min(len(xs) // 2, max(0, len(xs) - minimum))
    return xs[start:], values[start:]


def decay_exponent(xs: Sequence[float], values: Sequence[float], minimum: int = 3) -> float:
    """Power-law exponent p of values ~ C * xs^(-p), fitted in log-log over the last half.

    Positive p means decay, negative p means growth. Returns nan if fewer than ``minimum`` positive
    values are available.
    """
    xs = np.asarray(xs, dtype=float)
    values = np.asarray(values, dtype=float)
    keep = np.isfinite(values) & (values > 0) & (xs > 0)
    xs, values = xs[keep], values[keep]
    if len(xs) < minimum:
        return float("nan")
    xs, values = _last_half(xs, values, minimum)
    slope = np.polyfit(np.log(xs), np.log(values), 1)[0]
    return float(-slope)


def aitken_limit(values: Sequence[float]) -> float:
    """Limit of a sequence extrapolated from its last three values by Aitken's delta-squared process.

    Falls back to the last value when fewer than three values are given or the second difference vanishes.
    """
    values = [float(v) for v in values]
    if len(values) < 3:
        return values[-1]
    a, b, c = values[-3:]
    step, curvature = c - b, (c - b) - (b - a)
    if abs(curvature) <= TOLERANCE * max(abs(a), abs(b), abs(c), 1.0):
        return c
    return c - step * step / curvature


def tail_fit(xs: Sequence[float], values: Sequence[float], start: Optional[float] = None) -> Tuple[float, float]:
    """Least-squares fit values ~ a + b / xs.

    Uses the points with xs >= start, or the last half of the points when start is None.
    The intercept ``a`` is the extrapolated limit.
    """
    xs = np.asarray(xs, dtype=float)
    values = np.asarray(values, dtype=float)
    keep = np.isfinite(values)
    xs, values = xs[keep], values[keep]
    if start is None:
        xs, values = _last_half(xs, values, 2)
    else:
        xs, values = xs[xs >= start], values[xs >= start]
    if len(xs) == 0:
        raise ValueError("no points available for the tail fit")
    if len(xs) == 1:
        return float(values[0]), 0.0
    design = np.column_stack([np.ones_like(xs), 1.0 / xs])
    (a, b), *_ = np.linalg.lstsq(design, values, rcond=None)
    return float(a), float(b)


def band_integral(lo: Sequence[float], hi: Sequence[float], weights: Optional[Sequence[float]] = None) -> float:
    """Integrate t -> sum of weights of the intervals [lo_i, hi_i) containing t.

    The integral is evaluated band by band: all interval endpoints are sorted, and each band between
    consecutive endpoints contributes its width times the total weight of the intervals spanning it.
    """
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if weights is None:
        weights = np.ones_like(lo)
    weights = np.asarray(weights, dtype=float)
    if len(lo) == 0:
        return 0.0
    assert np.all(lo <= hi), "band_integral expects lo <= hi"

    breakpoints = np.unique(np.concatenate([lo, hi]))
    first = np.searchsorted(breakpoints, lo)
    last = np.searchsorted(breakpoints, hi)

    spans = np.zeros(len(breakpoints) + 1)
    np.add.at(spans, first, weights)
    np.add.at(spans, last, -weights)
    counts = np.cumsum(spans)[:-2]
    widths = np.diff(breakpoints)
    return float(np.dot(counts, widths))
