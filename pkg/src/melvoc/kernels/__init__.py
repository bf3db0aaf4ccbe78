"""Convolution kernel backends.

The compiled BLAS core is preferred when its extension module imported
successfully; otherwise the numpy implementation is used. Selection
happens once at import and can be forced with the MELVOC_KERNELS
environment variable ("blas" or "numpy") or switched at runtime with
set_backend() (used by the tests and the backend benchmark).

Both backends implement the same contract:

    conv1d(x, w, b, stride, dilation, padding, leaky_slope=0.0,
           residual=None) -> (out_ch, t_out) float64
        x: (in_ch, t_in) float64, w: (out_ch, in_ch, kernel) float32
    conv_transpose1d(x, w, b, stride, padding, leaky_slope=0.0)
        x: (in_ch, t_in) float64, w: (in_ch, out_ch, kernel) float32

leaky_slope != 0 applies leaky ReLU to the input first; residual (same
shape as the output) is added to the result. Both fusions are bitwise
identical to composing the standalone ops. Inputs are assumed validated
(melvoc.nn does that); activations and accumulation are float64,
weights float32, and per-element accumulation order is fixed.
"""

import os

import numpy as np

from . import _numpy_backend

try:
    from . import _blas_core
except ImportError:  # extension not built or scipy missing
    _blas_core = None

_active = None


def available_backends() -> tuple[str, ...]:
    return ("blas", "numpy") if _blas_core is not None else ("numpy",)


def get_backend() -> str:
    return _active


def set_backend(name: str) -> None:
    global _active
    if name not in available_backends():
        raise ValueError(
            f"unknown or unavailable backend {name!r}; available: "
            f"{available_backends()}"
        )
    _active = name


def conv1d(x, w, b, stride=1, dilation=1, padding=0, leaky_slope=0.0, residual=None):
    if _active == "blas":
        out_ch = w.shape[0]
        span = dilation * (w.shape[2] - 1) + 1
        t_out = (x.shape[1] + 2 * padding - span) // stride + 1
        out = np.empty((out_ch, t_out))
        _blas_core.conv1d(x, w, b, stride, dilation, padding, leaky_slope, residual, out)
        return out
    return _numpy_backend.conv1d(x, w, b, stride, dilation, padding, leaky_slope, residual)


def conv_transpose1d(x, w, b, stride=1, padding=0, leaky_slope=0.0):
    if _active == "blas":
        out_ch = w.shape[1]
        t_out = (x.shape[1] - 1) * stride + w.shape[2] - 2 * padding
        out = np.empty((out_ch, t_out))
        _blas_core.conv_transpose1d(x, w, b, stride, padding, leaky_slope, out)
        return out
    return _numpy_backend.conv_transpose1d(x, w, b, stride, padding, leaky_slope)


set_backend(os.environ.get("MELVOC_KERNELS") or available_backends()[0])
