"""Wavelet synchrosqueezing: phase-transform reassignment of CWT energy.

The phase transform estimates each coefficient's instantaneous frequency
from the phase advance of the analytic CWT,

    f(a, b) = Im( d/db W(a, b) / W(a, b) ) * fs / (2 pi)   [Hz]

with the time derivative taken by central differences (one-sided at the
edges).  Coefficients below a relative magnitude threshold are marked
invalid (NaN) because their phase is dominated by noise.  Synchrosqueezing
then moves the energy |W|^2 of every valid coefficient, weighted by the
constant log-scale cell width, into the log-frequency bin containing its
estimate; estimates outside the bin range are dropped rather than clamped.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cwt import Scalogram


@dataclass
class SyncroTfr:
    """Real energy matrix over (frequency bin x time), bins ascending."""

    energy: np.ndarray
    bin_freqs_hz: np.ndarray
    sample_rate_hz: float


def phase_transform(scalogram: Scalogram, epsilon: float = 1e-3) -> np.ndarray:
    """Instantaneous-frequency estimates in Hz; NaN where invalid."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    w = scalogram.coeffs
    mag = np.abs(w)
    peak = mag.max()
    freqs = np.full(w.shape, np.nan)
    if peak == 0.0:
        return freqs

    dt = 1.0 / scalogram.sample_rate_hz
    dw = np.empty_like(w)
    dw[:, 1:-1] = (w[:, 2:] - w[:, :-2]) / (2.0 * dt)
    dw[:, 0] = (w[:, 1] - w[:, 0]) / dt
    dw[:, -1] = (w[:, -1] - w[:, -2]) / dt

    valid = mag >= epsilon * peak
    with np.errstate(invalid="ignore", divide="ignore"):
        est = (dw[valid] / w[valid]).imag / (2.0 * np.pi)
    freqs[valid] = est
    return freqs


def synchrosqueeze(scalogram: Scalogram, n_bins: int | None = None, epsilon: float = 1e-3) -> SyncroTfr:
    """Reassign CWT energy into log-spaced frequency bins.

    Bins span the scale grid's center-frequency range; ``n_bins`` defaults
    to the number of scales so WT and WSST images have comparable vertical
    resolution.
    """
    grid = scalogram.grid
    if n_bins is None:
        n_bins = grid.n_scales
    if n_bins < 8:
        raise ValueError("n_bins must be >= 8")

    f_lo = float(grid.center_freqs_hz.min())
    f_hi = float(grid.center_freqs_hz.max())
    log_span = np.log(f_hi / f_lo)
    edges = f_lo * np.exp(log_span * np.arange(n_bins + 1) / n_bins)
    bin_freqs = np.sqrt(edges[:-1] * edges[1:])

    est = phase_transform(scalogram, epsilon)
    n_times = scalogram.coeffs.shape[1]
    with np.errstate(invalid="ignore"):
        in_range = (est >= f_lo) & (est <= f_hi)
    if not in_range.any():
        energy = np.zeros((n_bins, n_times))
        return SyncroTfr(energy=energy, bin_freqs_hz=bin_freqs, sample_rate_hz=scalogram.sample_rate_hz)

    vals = est[in_range]
    bins = np.minimum((n_bins * np.log(vals / f_lo) / log_span).astype(np.int64), n_bins - 1)
    cols = np.broadcast_to(np.arange(n_times), est.shape)[in_range]
    mass = np.abs(scalogram.coeffs[in_range]) ** 2 * grid.log_cell_width

    flat = np.bincount(bins * n_times + cols, weights=mass, minlength=n_bins * n_times)
    energy = flat.reshape(n_bins, n_times)
    return SyncroTfr(energy=energy, bin_freqs_hz=bin_freqs, sample_rate_hz=scalogram.sample_rate_hz)


def concentration_entropy(m: np.ndarray) -> float:
    """Renyi entropy of order 3 (bits) of a nonnegative energy matrix.

    Lower is sharper; 0 for a one-hot matrix, log2(cells) for uniform.
    """
    m = np.asarray(m, dtype=np.float64)
    total = m.sum()
    if not total > 0:
        raise ValueError("entropy of an all-zero matrix is undefined")
    p = m / total
    return float(-0.5 * np.log2(np.sum(p**3)))
