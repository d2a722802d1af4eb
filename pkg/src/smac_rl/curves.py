"""Curve post-processing: fixed-width timestep bins and exponential smoothing."""

from __future__ import annotations

import math

import numpy as np

__all__ = ["bin_curve", "ewm_smooth", "N_BINS", "SMOOTHING"]

N_BINS = 100
SMOOTHING = 0.1


def bin_curve(points, n_bins: int = N_BINS, total: float | None = None):
    """Average ``(timestep, value)`` points into ``n_bins`` equal-width bins.

    Bins are the intervals ``(k*w, (k+1)*w]`` with ``w = total / n_bins``
    (``total`` defaults to the largest timestep); timestep 0 falls in the
    first bin.  NaN values are ignored.  An empty bin repeats the previous
    bin's mean; leading empty bins take the first non-empty mean.

    Returns ``(centers, means)`` as arrays of length ``n_bins``.
    """
    if n_bins < 1:
        raise ValueError("n_bins must be >= 1")
    pts = [(float(t), float(v)) for t, v in points if not math.isnan(float(v))]
    if not pts:
        raise ValueError("bin_curve needs at least one finite point")
    ts = np.array([p[0] for p in pts])
    vs = np.array([p[1] for p in pts])
    if total is None:
        total = float(ts.max())
    if total <= 0:
        total = 1.0
    width = total / n_bins
    idx = np.clip(np.ceil(ts / width).astype(np.int64) - 1, 0, n_bins - 1)
    # mean as (first value in bin) + (mean deviation from it): exact for constant bins
    bins, first = np.unique(idx, return_index=True)
    ref = np.zeros(n_bins)
    ref[bins] = vs[first]
    dev = np.bincount(idx, weights=vs - ref[idx], minlength=n_bins)
    counts = np.bincount(idx, minlength=n_bins)
    means = np.full(n_bins, np.nan)
    filled = counts > 0
    means[filled] = ref[filled] + dev[filled] / counts[filled]
    prev = means[np.argmax(filled)]
    for i in range(n_bins):
        if filled[i]:
            prev = means[i]
        else:
            means[i] = prev
    centers = (np.arange(n_bins) + 0.5) * width
    return centers, means


def ewm_smooth(curve, factor: float = SMOOTHING) -> np.ndarray:
    """``y[0] = x[0]``, ``y[t] = factor*x[t] + (1-factor)*y[t-1]``."""
    if not 0.0 < factor <= 1.0:
        raise ValueError("factor must lie in (0, 1]")
    x = np.asarray(curve, dtype=np.float64)
    if x.size == 0:
        raise ValueError("cannot smooth an empty curve")
    if factor == 1.0:
        return x.copy()
    y = np.empty_like(x)
    y[0] = x[0]
    # incremental form keeps a constant signal exactly constant
    for t in range(1, x.size):
        y[t] = y[t - 1] + factor * (x[t] - y[t - 1])
    return y
