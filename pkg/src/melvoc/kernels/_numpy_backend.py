"""Numpy implementation of the convolution kernels.

Activations are float64 end to end; weights arrive float32 (their
persisted precision) and are widened once per call.

The stride-1 path (every residual-block conv) runs one matmul per
kernel tap against lda-strided views of the padded input, accumulating
into a cache-sized output tile; nothing is packed. Strided convolutions
take the generic im2col path. The optional fused pre-activation
(leaky ReLU applied while padding) and residual add (applied while
storing) are bitwise identical to composing the standalone ops, they
just skip full-array passes.
"""

import numpy as np


def _tile_width(out_ch: int, t_out: int) -> int:
    # keep the accumulation tile around 4 MB so it stays cache-resident
    return max(512, min(t_out, (4 << 20) // (out_ch * 8)))


def _activated_pad(x, padding: int, leaky_slope: float):
    in_ch, t_in = x.shape
    xp = np.zeros((in_ch, t_in + 2 * padding))
    if leaky_slope == 0.0:
        xp[:, padding : padding + t_in] = x
    else:
        xp[:, padding : padding + t_in] = np.where(x >= 0, x, leaky_slope * x)
    return xp


def conv1d(x, w, b, stride, dilation, padding, leaky_slope=0.0, residual=None):
    in_ch, t_in = x.shape
    out_ch, _, kernel = w.shape
    span = dilation * (kernel - 1) + 1
    t_out = (t_in + 2 * padding - span) // stride + 1

    xp = _activated_pad(x, padding, leaky_slope)
    w64 = w.astype(np.float64)
    b64 = b.astype(np.float64)

    out = np.empty((out_ch, t_out))
    tile_w = _tile_width(out_ch, t_out)
    for start in range(0, t_out, tile_w):
        width = min(tile_w, t_out - start)
        if stride == 1:
            acc = w64[:, :, 0] @ xp[:, start : start + width]
            for k in range(1, kernel):
                lo = start + k * dilation
                acc += w64[:, :, k] @ xp[:, lo : lo + width]
        else:
            cols = np.empty((in_ch * kernel, width))
            for k in range(kernel):
                lo = start * stride + k * dilation
                cols[k::kernel, :] = xp[:, lo : lo + (width - 1) * stride + 1 : stride]
            acc = w64.reshape(out_ch, in_ch * kernel) @ cols
        acc += b64[:, None]
        if residual is not None:
            acc += residual[:, start : start + width]
        out[:, start : start + width] = acc
    return out


def conv_transpose1d(x, w, b, stride, padding, leaky_slope=0.0):
    in_ch, t_in = x.shape
    _, out_ch, kernel = w.shape
    full_len = (t_in - 1) * stride + kernel
    t_out = full_len - 2 * padding

    if leaky_slope != 0.0:
        x = np.where(x >= 0, x, leaky_slope * x)
    # y[o, k, t] = sum_i w[i, o, k] * x[i, t]
    w2 = w.astype(np.float64).transpose(1, 2, 0).reshape(out_ch * kernel, in_ch)
    y = (w2 @ x).reshape(out_ch, kernel, t_in)

    full = np.zeros((out_ch, full_len))
    for k in range(kernel):
        full[:, k : k + (t_in - 1) * stride + 1 : stride] += y[:, k, :]
    return full[:, padding : padding + t_out] + b.astype(np.float64)[:, None]
