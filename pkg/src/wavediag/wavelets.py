"""Analytic mother wavelets in the frequency domain, and the scale grid.

Three families are supported, all defined directly by their frequency
response ``psi_hat(omega)`` on the positive half-axis:

* ``amor``  - analytic Morlet, a Gaussian centered at ``omega0``:
  ``psi_hat(w) = 2 exp(-(w - omega0)^2 / 2)`` for w > 0.
* ``bump``  - compactly supported C-infinity bump on (mu - sigma, mu + sigma):
  ``psi_hat(w) = 2 exp(1 - 1 / (1 - ((w - mu)/sigma)^2))`` inside, 0 outside.
* ``morse`` - generalized Morse family:
  ``psi_hat(w) = a_{beta,gamma} w^beta exp(-w^gamma)`` for w > 0, with
  ``a = 2 (e gamma / beta)^(beta/gamma)`` so the maximum equals 2.

All responses are exactly zero for omega <= 0 (analytic convention; the
factor 2 compensates the discarded negative frequencies) and peak at 2, so
a unit-amplitude tone produces a ridge of magnitude ~1 regardless of family
or frequency.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

FAMILIES = ("amor", "bump", "morse")


def amor_freq(omega, omega0: float = 6.0):
    """Analytic Morlet frequency response, peak value 2 at omega0."""
    w = np.asarray(omega, dtype=np.float64)
    out = np.where(w > 0.0, 2.0 * np.exp(-0.5 * (w - omega0) ** 2), 0.0)
    return out if out.ndim else float(out)


def bump_freq(omega, mu: float = 5.0, sigma: float = 0.6):
    """Bump frequency response, support (mu - sigma, mu + sigma), peak 2 at mu."""
    if sigma <= 0:
        raise ValueError("bump sigma must be positive")
    w = (np.asarray(omega, dtype=np.float64) - mu) / sigma
    inside = np.abs(w) < 1.0
    # evaluate only strictly inside the support; 1 - w^2 > 0 there
    wsq = np.where(inside, w * w, 0.0)
    vals = 2.0 * np.exp(1.0 - 1.0 / (1.0 - wsq))
    out = np.where(inside, vals, 0.0)
    return out if out.ndim else float(out)


def morse_freq(omega, beta: float = 20.0, gamma: float = 3.0):
    """Generalized Morse frequency response, peak 2 at (beta/gamma)^(1/gamma).

    Evaluated in log space so large omega underflows cleanly to 0 instead of
    overflowing in omega**beta.
    """
    if beta <= 0 or gamma <= 0:
        raise ValueError("morse beta and gamma must be positive")
    w = np.asarray(omega, dtype=np.float64)
    pos = w > 0.0
    log_a = np.log(2.0) + (beta / gamma) * (1.0 + np.log(gamma) - np.log(beta))
    wpos = np.where(pos, w, 1.0)
    logval = log_a + beta * np.log(wpos) - wpos**gamma
    out = np.where(pos, np.exp(logval), 0.0)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class WaveletSpec:
    """One wavelet family plus its parameters.

    Construct via :meth:`amor`, :meth:`bump`, or :meth:`morse`; ``params``
    holds the family's own parameters in a fixed order.
    """

    family: str
    params: tuple[float, ...]

    @classmethod
    def amor(cls, omega0: float = 6.0) -> "WaveletSpec":
        if omega0 <= 0:
            raise ValueError("amor omega0 must be positive")
        return cls("amor", (float(omega0),))

    @classmethod
    def bump(cls, mu: float = 5.0, sigma: float = 0.6) -> "WaveletSpec":
        if sigma <= 0 or mu <= sigma:
            raise ValueError("bump requires sigma > 0 and mu > sigma")
        return cls("bump", (float(mu), float(sigma)))

    @classmethod
    def morse(cls, beta: float = 20.0, gamma: float = 3.0) -> "WaveletSpec":
        if beta <= 0 or gamma <= 0:
            raise ValueError("morse requires beta > 0 and gamma > 0")
        return cls("morse", (float(beta), float(gamma)))

    @property
    def peak_omega(self) -> float:
        """Angular frequency (rad) where the response attains its peak of 2."""
        if self.family == "amor":
            return self.params[0]
        if self.family == "bump":
            return self.params[0]
        beta, gamma = self.params
        return (beta / gamma) ** (1.0 / gamma)

    def freq_response(self, omega):
        """Evaluate psi_hat at omega (scalar or array), zero for omega <= 0."""
        if self.family == "amor":
            return amor_freq(omega, self.params[0])
        if self.family == "bump":
            return bump_freq(omega, *self.params)
        if self.family == "morse":
            return morse_freq(omega, *self.params)
        raise ValueError(f"unknown wavelet family {self.family!r}")


@dataclass(frozen=True)
class ScaleGrid:
    """Logarithmic scale discretization for one record length and rate.

    ``scales`` are in samples per radian of wavelet argument, strictly
    increasing by the factor 2**(1/voices_per_octave); ``center_freqs_hz``
    are the per-scale equivalent frequencies peak_omega * fs / (2 pi scale),
    strictly decreasing from just below Nyquist down to ``min_freq_hz``.
    """

    scales: np.ndarray
    voices_per_octave: int
    center_freqs_hz: np.ndarray
    n_samples: int
    sample_rate_hz: float
    wavelet: WaveletSpec = field(repr=False)

    @property
    def n_scales(self) -> int:
        return len(self.scales)

    @property
    def log_cell_width(self) -> float:
        """Natural-log width of one scale cell, ln(2) / voices_per_octave."""
        return np.log(2.0) / self.voices_per_octave


def make_scale_grid(
    n_samples: int,
    sample_rate_hz: float,
    spec: WaveletSpec,
    voices_per_octave: int = 10,
    min_freq_hz: float = 10.0,
) -> ScaleGrid:
    """Build the log-spaced scale grid for a record of ``n_samples``.

    The smallest scale places the wavelet peak at fs/2 * (1 - 1/voices);
    scales then grow by 2**(1/voices) until the center frequency would drop
    below ``min_freq_hz``.  Raises if the span covers fewer than 2 octaves.
    """
    if voices_per_octave < 4:
        raise ValueError("voices_per_octave must be >= 4")
    if not 0.0 < min_freq_hz < sample_rate_hz / 2.0:
        raise ValueError("min_freq_hz must lie in (0, Nyquist)")
    f_max = 0.5 * sample_rate_hz * (1.0 - 1.0 / voices_per_octave)
    octaves = np.log2(f_max / min_freq_hz)
    if octaves < 2.0:
        raise ValueError("fewer than 2 octaves between min_freq_hz and Nyquist")
    n_scales = int(np.floor(octaves * voices_per_octave)) + 1
    j = np.arange(n_scales, dtype=np.float64)
    # scale in samples/radian: a = peak_omega / omega_center, with
    # omega_center = 2 pi f / fs in rad/sample
    a0 = spec.peak_omega * sample_rate_hz / (2.0 * np.pi * f_max)
    scales = a0 * 2.0 ** (j / voices_per_octave)
    center = spec.peak_omega * sample_rate_hz / (2.0 * np.pi * scales)
    return ScaleGrid(
        scales=scales,
        voices_per_octave=int(voices_per_octave),
        center_freqs_hz=center,
        n_samples=int(n_samples),
        sample_rate_hz=float(sample_rate_hz),
        wavelet=spec,
    )
