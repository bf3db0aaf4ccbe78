"""Deterministic, platform-independent random streams.

Weight initialization must produce bit-identical tensors for a given
(seed, tensor name) on every platform, so we avoid numpy's Generator
(whose streams are version-dependent for some distributions) and use a
counter-mode splitmix64: outputs depend only on uint64 arithmetic and an
exact power-of-two scaling into [0, 1).
"""

import numpy as np

_GOLDEN = 0x9E3779B97F4A7C15
_MASK = 0xFFFFFFFFFFFFFFFF


def _mix_scalar(z: int) -> int:
    z &= _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return (z ^ (z >> 31)) & _MASK


def _mix_array(z: np.ndarray) -> np.ndarray:
    z = z ^ (z >> np.uint64(30))
    z = z * np.uint64(0xBF58476D1CE4E5B9)
    z = z ^ (z >> np.uint64(27))
    z = z * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def fnv1a64(text: str) -> int:
    """64-bit FNV-1a hash of the UTF-8 encoding of *text*."""
    h = 0xCBF29CE484222325
    for byte in text.encode("utf-8"):
        h = ((h ^ byte) * 0x100000001B3) & _MASK
    return h


def stream_key(seed: int, name: str) -> int:
    """Stream key for a (seed, tensor name) pair."""
    return _mix_scalar((seed & _MASK) ^ fnv1a64(name))


def uniform(seed: int, name: str, count: int) -> np.ndarray:
    """*count* float64 values in [-1, 1) from the (seed, name) stream."""
    key = np.uint64(stream_key(seed, name))
    idx = np.arange(1, count + 1, dtype=np.uint64)
    z = _mix_array(key + idx * np.uint64(_GOLDEN))
    u = (z >> np.uint64(11)).astype(np.float64) * (2.0 ** -53)
    return 2.0 * u - 1.0
