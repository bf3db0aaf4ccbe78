"""Minimal 1D inference kernels: convolution, transposed convolution,
activations, and multi-receptive-field residual blocks.

Cross-correlation convention (no kernel flip), matching mainstream
deep-learning semantics. Weights are float32 (their persisted
precision); activations and all accumulation are float64, which is what
keeps the direct-summation oracle tolerances at 1e-9. No training
machinery.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels

LEAKY_SLOPE = 0.1


@dataclass(frozen=True)
class FeatureMap:
    """(channels, frames) float64 activations, immutable."""

    data: np.ndarray

    def __post_init__(self):
        data = np.ascontiguousarray(self.data, dtype=np.float64)
        if data.ndim != 2:
            raise ValueError("FeatureMap data must be 2-D (channels, frames)")
        if not np.isfinite(data).all():
            raise ValueError("FeatureMap values must be finite")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @property
    def channels(self) -> int:
        return self.data.shape[0]

    @property
    def frames(self) -> int:
        return self.data.shape[1]


def _trusted(data: np.ndarray) -> FeatureMap:
    """Wrap kernel output without the finiteness scan (hot path)."""
    fm = object.__new__(FeatureMap)
    data.setflags(write=False)
    object.__setattr__(fm, "data", data)
    return fm


@dataclass(frozen=True)
class ConvParams:
    """Weights for one convolution.

    weight is (out, in, kernel) for conv1d and (in, out, kernel) for
    conv_transpose1d, mirroring the scatter semantics of the latter.
    """

    in_channels: int
    out_channels: int
    kernel_size: int
    stride: int = 1
    dilation: int = 1
    padding: int = 0
    weight: np.ndarray = None
    bias: np.ndarray = None

    def __post_init__(self):
        for name in ("in_channels", "out_channels", "kernel_size", "stride", "dilation"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.padding < 0:
            raise ValueError("padding must be >= 0")
        weight = np.ascontiguousarray(self.weight, dtype=np.float32)
        bias = np.ascontiguousarray(self.bias, dtype=np.float32)
        if weight.ndim != 3 or weight.shape[2] != self.kernel_size:
            raise ValueError(
                f"weight must be 3-D with trailing kernel dim {self.kernel_size}, "
                f"got shape {weight.shape}"
            )
        if sorted(weight.shape[:2]) != sorted((self.in_channels, self.out_channels)):
            raise ValueError(
                f"weight channel dims {weight.shape[:2]} inconsistent with "
                f"in={self.in_channels}, out={self.out_channels}"
            )
        if bias.shape != (self.out_channels,):
            raise ValueError(f"bias must have shape ({self.out_channels},)")
        weight.setflags(write=False)
        bias.setflags(write=False)
        object.__setattr__(self, "weight", weight)
        object.__setattr__(self, "bias", bias)


def _conv1d_fused(
    x: FeatureMap, p: ConvParams, leaky_slope: float = 0.0,
    residual: FeatureMap | None = None,
) -> FeatureMap:
    """conv1d with optional fused input activation and residual add.

    Bitwise identical to conv1d(leaky_relu(x, s), p) + residual; the
    fusion only avoids materializing intermediate arrays.
    """
    if x.channels != p.in_channels:
        raise ValueError(
            f"input has {x.channels} channels, conv expects {p.in_channels}"
        )
    if p.weight.shape[:2] != (p.out_channels, p.in_channels):
        raise ValueError(
            f"conv1d weight must be (out, in, kernel), got {p.weight.shape}"
        )
    span = p.dilation * (p.kernel_size - 1) + 1
    t_out = (x.frames + 2 * p.padding - span) // p.stride + 1
    if t_out < 1:
        raise ValueError(
            f"empty output: {x.frames} frames with kernel span {span}, "
            f"padding {p.padding}, stride {p.stride}"
        )
    res = None
    if residual is not None:
        if residual.data.shape != (p.out_channels, t_out):
            raise ValueError(
                f"residual shape {residual.data.shape} != output shape "
                f"{(p.out_channels, t_out)}"
            )
        res = residual.data
    out = kernels.conv1d(
        x.data, p.weight, p.bias, p.stride, p.dilation, p.padding,
        leaky_slope, res,
    )
    return _trusted(out)


def conv1d(x: FeatureMap, p: ConvParams) -> FeatureMap:
    """Strided, dilated cross-correlation with zero padding."""
    return _conv1d_fused(x, p)


def _conv_transpose1d_fused(
    x: FeatureMap, p: ConvParams, leaky_slope: float = 0.0
) -> FeatureMap:
    if x.channels != p.in_channels:
        raise ValueError(
            f"input has {x.channels} channels, transposed conv expects {p.in_channels}"
        )
    if p.weight.shape[:2] != (p.in_channels, p.out_channels):
        raise ValueError(
            f"conv_transpose1d weight must be (in, out, kernel), got {p.weight.shape}"
        )
    t_out = (x.frames - 1) * p.stride - 2 * p.padding + p.kernel_size
    if t_out < 1:
        raise ValueError(
            f"empty output: {x.frames} frames, stride {p.stride}, "
            f"kernel {p.kernel_size}, padding {p.padding}"
        )
    out = kernels.conv_transpose1d(
        x.data, p.weight, p.bias, p.stride, p.padding, leaky_slope
    )
    return _trusted(out)


def conv_transpose1d(x: FeatureMap, p: ConvParams) -> FeatureMap:
    """Scatter-accumulate transposed convolution (adjoint of conv1d)."""
    return _conv_transpose1d_fused(x, p)


def leaky_relu(x: FeatureMap, slope: float = LEAKY_SLOPE) -> FeatureMap:
    d = x.data
    return _trusted(np.where(d >= 0, d, slope * d))


def exp_map(x: FeatureMap) -> FeatureMap:
    return _trusted(np.exp(x.data))


def sin_map(x: FeatureMap) -> FeatureMap:
    return _trusted(np.sin(x.data))


def tanh_map(x: FeatureMap) -> FeatureMap:
    return _trusted(np.tanh(x.data))


@dataclass(frozen=True)
class ResBlockParams:
    """One residual block: per dilation, a dilated conv then a 1-dilated
    conv, each entered through leaky ReLU, added back onto the input."""

    kernel_size: int
    dilations: tuple
    conv_pairs: tuple  # ((dilated ConvParams, dilation-1 ConvParams), ...)

    def __post_init__(self):
        if len(self.conv_pairs) != len(self.dilations):
            raise ValueError("one conv pair per dilation required")


def resblock(x: FeatureMap, block: ResBlockParams) -> FeatureMap:
    y = x
    for c_dil, c_one in block.conv_pairs:
        if c_dil.out_channels != y.channels or c_one.out_channels != y.channels:
            raise ValueError(
                f"resblock convs must preserve {y.channels} channels"
            )
        # y + conv(leaky(conv(leaky(y), dilated)), dilation 1), fused
        t = _conv1d_fused(y, c_dil, leaky_slope=LEAKY_SLOPE)
        y = _conv1d_fused(t, c_one, leaky_slope=LEAKY_SLOPE, residual=y)
    return y


def resblock_mrf(x: FeatureMap, blocks) -> FeatureMap:
    """Elementwise mean over the outputs of all residual blocks."""
    if not blocks:
        raise ValueError("at least one residual block required")
    acc = np.zeros(x.data.shape)
    for block in blocks:
        acc += resblock(x, block).data
    return _trusted(acc / len(blocks))
