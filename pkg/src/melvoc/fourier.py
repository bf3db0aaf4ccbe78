"""Radix-2 FFT and the quadratic DFT reference it is tested against.

The transform is an iterative decimation-in-time Cooley-Tukey over the
last axis, vectorized across an arbitrary batch of rows. Butterfly order
is fixed (stage by stage, ascending), so results are deterministic
regardless of batch size or caller threading.
"""

from functools import lru_cache

import numpy as np

__all__ = ["fft", "inverse_fft", "fft_batch", "inverse_fft_batch", "naive_dft"]


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@lru_cache(maxsize=32)
def _bit_reverse_indices(n: int) -> np.ndarray:
    bits = n.bit_length() - 1
    rev = np.zeros(n, dtype=np.intp)
    for i in range(1, n):
        rev[i] = (rev[i >> 1] >> 1) | ((i & 1) << (bits - 1))
    rev.setflags(write=False)
    return rev

@lru_cache(maxsize=32)
def _stage_twiddles(n: int) -> tuple:
    """Per-stage twiddle rows exp(-2i*pi*k/m) for m = 2, 4, ..., n."""
    stages = []
    m = 2
    while m <= n:
        k = np.arange(m // 2)
        stages.append(np.exp(-2j * np.pi * k / m))
        m <<= 1
    return tuple(stages)


def fft_batch(x: np.ndarray) -> np.ndarray:
    """DFT of each row of a (batch, n) complex array; n a power of two."""
    x = np.asarray(x, dtype=np.complex128)
    n = x.shape[-1]
    if not _is_pow2(n):
        raise ValueError(f"fft length must be a power of two, got {n}")
    if n == 1:
        return x.copy()
    y = x[..., _bit_reverse_indices(n)]
    for w in _stage_twiddles(n):
        half = w.shape[0]
        m = 2 * half
        v = y.reshape(*y.shape[:-1], n // m, m)
        a = v[..., :half]
        b = v[..., half:] * w
        v[..., :half] = a + b
        v[..., half:] = a - b
    return y


def inverse_fft_batch(x: np.ndarray) -> np.ndarray:
    """Inverse DFT per row via the conjugation identity."""
    x = np.asarray(x, dtype=np.complex128)
    n = x.shape[-1]
    return np.conj(fft_batch(np.conj(x))) / n


def fft(x) -> np.ndarray:
    """DFT of a 1-D sequence whose length is a power of two."""
    x = np.atleast_1d(np.asarray(x, dtype=np.complex128))
    if x.ndim != 1:
        raise ValueError("fft expects a 1-D sequence")
    if x.size == 0:
        raise ValueError("fft input must not be empty")
    return fft_batch(x[None, :])[0]


def inverse_fft(x) -> np.ndarray:
    """Inverse DFT of a 1-D spectrum whose length is a power of two."""
    x = np.atleast_1d(np.asarray(x, dtype=np.complex128))
    if x.ndim != 1:
        raise ValueError("inverse_fft expects a 1-D sequence")
    if x.size == 0:
        raise ValueError("inverse_fft input must not be empty")
    return inverse_fft_batch(x[None, :])[0]


def naive_dft(x) -> np.ndarray:
    """Direct O(n^2) DFT: X[k] = sum_n x[n] exp(-2i*pi*k*n/N).

    Any length >= 1. Kept free of radix-2 structure so it can serve as an
    independent oracle for fft().
    """
    x = np.atleast_1d(np.asarray(x, dtype=np.complex128))
    if x.ndim != 1:
        raise ValueError("naive_dft expects a 1-D sequence")
    n = x.size
    if n == 0:
        raise ValueError("naive_dft input must not be empty")
    k = np.arange(n)
    phase = np.exp(-2j * np.pi * np.outer(k, k) / n)
    return phase @ x
