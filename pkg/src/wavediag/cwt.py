"""Continuous wavelet transform via frequency-domain products.

For each scale ``a`` the coefficient row is

    row = ifft( fft(zero-padded x) * conj(psi_hat(a * omega_k)) )

with ``omega_k = 2 pi k / M`` rad/sample for k < M/2 and zero response on the
negative-frequency bins (analytic wavelets).  The signal is zero-padded to
``next_pow2(2 N)`` to suppress circular wraparound and the output is trimmed
back to N columns.

Normalization is frequency-flat: psi_hat peaks at 2 and no additional
sqrt(a) factor is applied, so a unit-amplitude tone yields ridge magnitude
~1 at every frequency.  The L2 a^(-1/2) convention would instead attenuate
high-frequency ridges, which an 8-bit image quantization then erases.

:func:`cwt_direct` computes the same contract by direct quadrature against
the time-domain wavelet and exists as the test oracle for the FFT path.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
import struct

import numpy as np

from .numerics import fft, ifft, next_pow2
from .signals import SignalRecord
from .wavelets import ScaleGrid, WaveletSpec

SCALOGRAM_MAGIC = b"WDSC"


@dataclass
class Scalogram:
    """Complex CWT coefficients over (scale x time) with their axes."""

    coeffs: np.ndarray
    grid: ScaleGrid
    times_s: np.ndarray
    sample_rate_hz: float
    wavelet: WaveletSpec

    @property
    def scales(self) -> np.ndarray:
        return self.grid.scales


@lru_cache(maxsize=8)
def _filter_bank_cached(family: str, params: tuple, scales_bytes: bytes, m: int) -> np.ndarray:
    spec = WaveletSpec(family, params)
    scales = np.frombuffer(scales_bytes, dtype=np.float64)
    omega = 2.0 * np.pi * np.arange(m // 2, dtype=np.float64) / m
    bank = np.zeros((len(scales), m), dtype=np.float64)
    bank[:, : m // 2] = spec.freq_response(scales[:, None] * omega[None, :])
    bank.setflags(write=False)
    return bank


def filter_bank(spec: WaveletSpec, scales: np.ndarray, m: int) -> np.ndarray:
    """Per-scale frequency responses on an M-point DFT grid (rows read-only)."""
    return _filter_bank_cached(spec.family, spec.params, np.ascontiguousarray(scales).tobytes(), m)


def cwt(record: SignalRecord, spec: WaveletSpec, grid: ScaleGrid) -> Scalogram:
    """Transform one record over the whole scale grid."""
    x = np.asarray(record.samples, dtype=np.float64)
    n = len(x)
    if n == 0:
        raise ValueError("record is empty")
    if grid.n_samples != n:
        raise ValueError(f"scale grid built for {grid.n_samples} samples, record has {n}")
    m = next_pow2(2 * n)
    padded = np.zeros(m, dtype=np.float64)
    padded[:n] = x
    spectrum = fft(padded)
    bank = filter_bank(spec, grid.scales, m)
    # responses are real-valued, so conj(psi_hat) == psi_hat
    coeffs = ifft(spectrum[None, :] * bank)[:, :n]
    return Scalogram(
        coeffs=coeffs,
        grid=grid,
        times_s=np.arange(n, dtype=np.float64) / record.sample_rate_hz,
        sample_rate_hz=record.sample_rate_hz,
        wavelet=spec,
    )


def time_domain_wavelet(spec: WaveletSpec, scale: float, m_fine: int) -> np.ndarray:
    """Sample the analytic wavelet at unit (one-sample) spacing.

    Inverse DFT of psi_hat on an ``m_fine``-point frequency grid; index j
    holds the wavelet at time offset j for j < m_fine/2 and offset
    j - m_fine for the upper half.
    """
    omega = 2.0 * np.pi * np.arange(m_fine // 2, dtype=np.float64) / m_fine
    resp = np.zeros(m_fine, dtype=np.float64)
    resp[: m_fine // 2] = spec.freq_response(scale * omega)
    return np.fft.ifft(resp)


def cwt_direct(
    record: SignalRecord,
    spec: WaveletSpec,
    scales,
    positions,
    fine_factor: int = 4,
) -> np.ndarray:
    """Direct-quadrature oracle for :func:`cwt` (O(N^2); tests only).

    Trapezoidal quadrature of x[n] * conj(psi_a(n - b)) over the record,
    with psi_a sampled from a frequency grid ``fine_factor`` times denser
    than the FFT path uses.  Valid on interior positions where the wavelet
    has decayed within the record.
    """
    x = np.asarray(record.samples, dtype=np.float64)
    n = len(x)
    if n > 4096:
        raise ValueError("cwt_direct caps record length at 4096 samples")
    positions = np.asarray(positions, dtype=np.int64)
    scales = np.atleast_1d(np.asarray(scales, dtype=np.float64))
    m_fine = fine_factor * next_pow2(2 * n)

    weights = np.ones(n, dtype=np.float64)
    weights[0] = weights[-1] = 0.5
    xw = x * weights

    out = np.empty((len(scales), len(positions)), dtype=np.complex128)
    idx = np.arange(n, dtype=np.int64)
    for i, a in enumerate(scales):
        psi = time_domain_wavelet(spec, float(a), m_fine)
        for j, b in enumerate(positions):
            offsets = (idx - int(b)) % m_fine
            out[i, j] = np.dot(xw, np.conj(psi[offsets]))
    return out


def magnitude(scalogram: Scalogram) -> np.ndarray:
    """Entrywise coefficient magnitudes (the scalogram image content)."""
    return np.abs(scalogram.coeffs)


def write_scalogram(scalogram: Scalogram, path: str | Path) -> None:
    """Binary dump: magic, u32 n_scales, u32 n_times, f64 rate, then
    row-major little-endian (re, im) float64 pairs."""
    coeffs = scalogram.coeffs
    n_scales, n_times = coeffs.shape
    header = SCALOGRAM_MAGIC + struct.pack("<IId", n_scales, n_times, scalogram.sample_rate_hz)
    inter = np.empty((n_scales, n_times, 2), dtype="<f8")
    inter[:, :, 0] = coeffs.real
    inter[:, :, 1] = coeffs.imag
    Path(path).write_bytes(header + inter.tobytes())


def read_scalogram(path: str | Path) -> tuple[np.ndarray, float]:
    """Read back a :func:`write_scalogram` dump as (coeffs, sample_rate_hz)."""
    raw = Path(path).read_bytes()
    if raw[:4] != SCALOGRAM_MAGIC:
        raise ValueError(f"{path}: not a scalogram dump")
    n_scales, n_times, rate = struct.unpack_from("<IId", raw, 4)
    data = np.frombuffer(raw, dtype="<f8", offset=4 + struct.calcsize("<IId"))
    data = data.reshape(n_scales, n_times, 2)
    return data[:, :, 0] + 1j * data[:, :, 1], rate
