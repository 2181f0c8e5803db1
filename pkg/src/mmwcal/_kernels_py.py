"""Pure-numpy fallback for the compiled PDP kernels."""

import numpy as np


def deposit_pulses(offsets, powers_mw, n_bins, span):
    """Spread each ray's power over the bin grid with a normalized sinc^2 pulse.

    ``offsets`` are ray delays in units of bins relative to bin 0. Each pulse is
    truncated to ``2 * span + 2`` taps and renormalized so a ray fully inside
    the grid deposits exactly its own power.
    """
    out = np.zeros(n_bins, dtype=np.float64)
    taps = np.arange(2 * span + 2)
    for x, p in zip(np.asarray(offsets, dtype=np.float64), np.asarray(powers_mw, dtype=np.float64)):
        k = int(np.floor(x)) - span + taps
        w = np.sinc(k - x) ** 2
        w /= w.sum()
        inside = (k >= 0) & (k < n_bins)
        np.add.at(out, k[inside], p * w[inside])
    return out


def first_path(bins_mw, threshold_mw, pulse_bins):
    """Return (threshold crossing, local peak, windowed power) or (-1, -1, 0.0)."""
    bins_mw = np.asarray(bins_mw, dtype=np.float64)
    above = np.flatnonzero(bins_mw > threshold_mw)
    if above.size == 0:
        return -1, -1, 0.0
    start = int(above[0])
    n = bins_mw.size
    hi = min(start + pulse_bins, n - 1)
    peak = start + int(np.argmax(bins_mw[start : hi + 1]))
    lo, hi = max(peak - pulse_bins, 0), min(peak + pulse_bins, n - 1)
    return start, peak, float(np.sum(bins_mw[lo : hi + 1]))
