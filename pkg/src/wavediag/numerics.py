"""FFT helpers for the frequency-domain wavelet transform path.

The transforms are computed by NumPy's pocketfft in 64-bit precision, which
is deterministic run to run.  The wrappers enforce the power-of-two length
contract the transform pipeline relies on (callers zero-pad with
:func:`next_pow2`), and the test suite pins the wrappers against a direct
O(N^2) DFT oracle.
"""

from __future__ import annotations

import numpy as np


def next_pow2(n: int) -> int:
    """Smallest power of two >= n (n >= 1)."""
    if n < 1:
        raise ValueError("next_pow2 requires n >= 1")
    return 1 << (int(n) - 1).bit_length()


def _check_pow2(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x)
    n = x.shape[-1]
    if n < 1 or n & (n - 1):
        raise ValueError("fft length must be power of two")
    return x


def fft(x) -> np.ndarray:
    """Forward DFT, X[m] = sum_n x[n] exp(-2i pi m n / N), along the last axis."""
    return np.fft.fft(_check_pow2(x), axis=-1)


def ifft(x) -> np.ndarray:
    """Inverse DFT with 1/N normalization, along the last axis."""
    return np.fft.ifft(_check_pow2(x), axis=-1)
