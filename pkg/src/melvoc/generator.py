"""Model grammar, shape schedule, deterministic weights, and the full
generator forward pass.

A model identifier is ("C" <factor>)+ optionally followed by "I":
each C<u> stage is a temporal upsampling layer (transposed conv for
u > 1, a plain stride-1 conv for u = 1) followed by a group of residual
blocks; a trailing I replaces direct waveform output with a small-FFT
inverse-STFT synthesis head. Total upsampling s divides the base STFT
parameters, and the head runs at (fft/s, hop/s, win/s) so the output is
always exactly frames * hop samples.
"""

import hashlib
import math
import re
from dataclasses import dataclass, field

import numpy as np

from . import rng
from .dsp import (
    AudioBuffer,
    MagnitudeSpectrogram,
    MelSpectrogram,
    PhaseSpectrogram,
    StftConfig,
    istft,
    polar_to_complex,
)
from .errors import ArchitectureError, ModelIdParseError, NumericError
from .nn import (
    LEAKY_SLOPE,
    ConvParams,
    FeatureMap,
    ResBlockParams,
    _conv1d_fused,
    _conv_transpose1d_fused,
    conv1d,
    exp_map,
    resblock_mrf,
    sin_map,
    tanh_map,
)

MEL_CHANNELS = 80
DEFAULT_BASE_CONFIG = StftConfig(1024, 256, 1024)

HEAD_ISTFT = "istft"
HEAD_WAVEFORM = "waveform"

_ID_GRAMMAR = re.compile(r"(?:C\d+)+I?")


@dataclass(frozen=True)
class VariantProfile:
    """Channel width and residual-block layout for one model family."""

    name: str
    base_channels: int
    mrf_kernel_sizes: tuple
    mrf_dilations: tuple


VARIANTS = {
    "V1": VariantProfile("V1", 512, (3, 7, 11), ((1, 3, 5), (1, 3, 5), (1, 3, 5))),
    "V2": VariantProfile("V2", 128, (3, 7, 11), ((1, 3, 5), (1, 3, 5), (1, 3, 5))),
    "V3": VariantProfile("V3", 256, (3, 5, 7), ((1, 3), (1, 3), (1, 3))),
}

# Baseline per variant for rate-vs-baseline comparisons.
BASELINE_IDS = {"V1": "C8C8C2C2", "V2": "C8C8C2C2", "V3": "C8C8C4"}

FIG3_MODEL_IDS = ("C8I", "C8C8I", "C8C8C2I", "C8C1I", "C8C8C2C2")


@dataclass(frozen=True)
class ModelSpec:
    """Parsed architecture identifier with derived head parameters."""

    model_id: str
    variant: str
    stages: tuple
    head: str
    base_config: StftConfig
    upsample: int
    head_config: StftConfig | None


def derive_istft_params(base: StftConfig, s: int) -> StftConfig:
    """Scale (fft, hop, win) down by the total upsampling factor s."""
    if s < 1:
        raise ArchitectureError(f"upsample factor must be >= 1, got {s}")
    for name, value in (
        ("fft_size", base.fft_size),
        ("hop_length", base.hop_length),
        ("win_length", base.win_length),
    ):
        if value % s:
            raise ArchitectureError(
                f"{name} {value} is not divisible by upsample factor {s}"
            )
    return StftConfig(
        base.fft_size // s,
        base.hop_length // s,
        base.win_length // s,
        center_pad=True,
    )


def parse_model_id(
    model_id: str,
    variant: str = "V1",
    base: StftConfig = DEFAULT_BASE_CONFIG,
) -> ModelSpec:
    """Parse a C<u>...[I] identifier into a ModelSpec."""
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; expected one of {sorted(VARIANTS)}")
    if not _ID_GRAMMAR.fullmatch(model_id or ""):
        raise ModelIdParseError(
            f"model id {model_id!r} does not match (C<factor>)+ optionally followed by I"
        )
    stages = tuple(int(g) for g in re.findall(r"C(\d+)", model_id))
    for j, u in enumerate(stages):
        if u < 1:
            raise ArchitectureError(f"stage {j} has upsample factor {u}; must be >= 1")
    s = math.prod(stages)
    if model_id.endswith("I"):
        head = HEAD_ISTFT
        head_config = derive_istft_params(base, s)
    else:
        head = HEAD_WAVEFORM
        head_config = None
        if s != base.hop_length:
            raise ArchitectureError(
                f"waveform head needs total upsampling equal to the hop length "
                f"({base.hop_length}), got {s}"
            )
    return ModelSpec(model_id, variant, stages, head, base, s, head_config)


# ---------------------------------------------------------------------------
# Shape schedule
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LayerSpec:
    """Geometry and tensor names of one convolution layer."""

    name: str
    kind: str  # "conv" | "conv_transpose"
    in_channels: int
    out_channels: int
    kernel_size: int
    stride: int = 1
    dilation: int = 1
    padding: int = 0

    @property
    def weight_name(self) -> str:
        return f"{self.name}.weight"

    @property
    def bias_name(self) -> str:
        return f"{self.name}.bias"

    @property
    def weight_shape(self) -> tuple:
        if self.kind == "conv_transpose":
            return (self.in_channels, self.out_channels, self.kernel_size)
        return (self.out_channels, self.in_channels, self.kernel_size)

    @property
    def bias_shape(self) -> tuple:
        return (self.out_channels,)


@dataclass(frozen=True)
class BlockPlan:
    kernel_size: int
    dilations: tuple
    conv_pairs: tuple  # ((LayerSpec, LayerSpec), ...)


@dataclass(frozen=True)
class StagePlan:
    up: LayerSpec
    blocks: tuple


@dataclass(frozen=True)
class Schedule:
    pre: LayerSpec
    stages: tuple
    post: LayerSpec

    def layers(self):
        """All layers in forward order."""
        yield self.pre
        for stage in self.stages:
            yield stage.up
            for block in stage.blocks:
                for c_dil, c_one in block.conv_pairs:
                    yield c_dil
                    yield c_one
        yield self.post

    def tensor_entries(self):
        """(name, shape) pairs in deterministic serialization order."""
        for layer in self.layers():
            yield layer.weight_name, layer.weight_shape
            yield layer.bias_name, layer.bias_shape


def build_shape_schedule(spec: ModelSpec) -> Schedule:
    """Derive every layer's geometry from the model spec.

    Upsampling stages use kernel 2u, stride u, padding u/2 (exact xu
    frame growth); u = 1 stages keep their channel count and use a plain
    kernel-3 convolution. Channels halve after each true upsampling.
    """
    profile = VARIANTS[spec.variant]
    channels = profile.base_channels
    pre = LayerSpec("pre", "conv", MEL_CHANNELS, channels, 7, padding=3)

    stages = []
    for j, u in enumerate(spec.stages):
        if u > 1:
            if u % 2:
                raise ArchitectureError(
                    f"stage {j}: odd upsample factor {u} > 1 is not constructible"
                )
            out_ch = channels // 2
            if out_ch < 1:
                raise ArchitectureError(f"stage {j}: channel halving exhausted")
            up = LayerSpec(
                f"up{j}", "conv_transpose", channels, out_ch,
                2 * u, stride=u, padding=u // 2,
            )
        else:
            out_ch = channels
            up = LayerSpec(f"up{j}", "conv", channels, channels, 3, padding=1)
        blocks = []
        for b, (k, dils) in enumerate(
            zip(profile.mrf_kernel_sizes, profile.mrf_dilations)
        ):
            pairs = []
            for i, d in enumerate(dils):
                pairs.append((
                    LayerSpec(
                        f"res{j}.{b}.{i}.c1", "conv", out_ch, out_ch, k,
                        dilation=d, padding=d * (k - 1) // 2,
                    ),
                    LayerSpec(
                        f"res{j}.{b}.{i}.c2", "conv", out_ch, out_ch, k,
                        dilation=1, padding=(k - 1) // 2,
                    ),
                ))
            blocks.append(BlockPlan(k, dils, tuple(pairs)))
        stages.append(StagePlan(up, tuple(blocks)))
        channels = out_ch

    if spec.head == HEAD_ISTFT:
        head_channels = spec.head_config.bins * 2
    else:
        head_channels = 1
    post = LayerSpec("post", "conv", channels, head_channels, 7, padding=3)
    return Schedule(pre, tuple(stages), post)


def count_params(spec: ModelSpec) -> int:
    """Total weight and bias element count for the model."""
    return sum(
        math.prod(shape) for _, shape in build_shape_schedule(spec).tensor_entries()
    )


# ---------------------------------------------------------------------------
# Weights
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GeneratorWeights:
    """Named, shaped, immutable float32 parameter tensors."""

    tensors: dict

    def __post_init__(self):
        frozen = {}
        for name, arr in self.tensors.items():
            arr = np.ascontiguousarray(arr, dtype=np.float32)
            if not np.isfinite(arr).all():
                raise ValueError(f"tensor {name!r} contains non-finite values")
            arr.setflags(write=False)
            frozen[name] = arr
        object.__setattr__(self, "tensors", frozen)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.tensors[name]

    def checksum(self) -> str:
        """sha256 over names, shapes, and little-endian float32 bytes."""
        h = hashlib.sha256()
        for name in sorted(self.tensors):
            arr = self.tensors[name]
            h.update(name.encode())
            h.update(repr(arr.shape).encode())
            h.update(arr.astype("<f4").tobytes())
        return h.hexdigest()


def random_init(spec: ModelSpec, seed: int) -> GeneratorWeights:
    """Deterministic test weights: per-tensor splitmix64 streams keyed by
    (seed, tensor name), uniform in [-1, 1) scaled by 1/sqrt(fan_in)."""
    schedule = build_shape_schedule(spec)
    tensors = {}
    for layer in schedule.layers():
        scale = 1.0 / math.sqrt(layer.in_channels * layer.kernel_size)
        for name, shape in (
            (layer.weight_name, layer.weight_shape),
            (layer.bias_name, layer.bias_shape),
        ):
            values = rng.uniform(seed, name, math.prod(shape)) * scale
            tensors[name] = values.astype(np.float32).reshape(shape)
    return GeneratorWeights(tensors)


def validate_weights(schedule: Schedule, weights: GeneratorWeights) -> None:
    """Raise ValueError naming the first tensor that is missing or
    wrongly shaped for the schedule."""
    for name, shape in schedule.tensor_entries():
        arr = weights.tensors.get(name)
        if arr is None:
            raise ValueError(f"tensor {name!r}: missing (expected shape {shape})")
        if arr.shape != shape:
            raise ValueError(
                f"tensor {name!r}: expected shape {shape}, got {arr.shape}"
            )


# ---------------------------------------------------------------------------
# Forward pass
# ---------------------------------------------------------------------------

def _conv_params(layer: LayerSpec, weights: GeneratorWeights) -> ConvParams:
    return ConvParams(
        in_channels=layer.in_channels,
        out_channels=layer.out_channels,
        kernel_size=layer.kernel_size,
        stride=layer.stride,
        dilation=layer.dilation,
        padding=layer.padding,
        weight=weights[layer.weight_name],
        bias=weights[layer.bias_name],
    )


def head_spectra(
    mel: MelSpectrogram, weights: GeneratorWeights, spec: ModelSpec
):
    """Run the network body and return the head's (magnitude, phase).

    Only defined for iSTFT-headed specs. Magnitude is exp of the first
    fft/2+1 channels, phase angle is sin of the last fft/2+1 channels.
    """
    if spec.head != HEAD_ISTFT:
        raise ValueError(f"model {spec.model_id} has no spectral head")
    raw = _run_body(mel, weights, spec)
    bins = spec.head_config.bins
    mag = exp_map(FeatureMap(raw.data[:bins]))
    phase = sin_map(FeatureMap(raw.data[bins:]))
    if not (np.isfinite(mag.data).all() and np.isfinite(phase.data).all()):
        raise NumericError("non-finite magnitude or phase in synthesis head")
    return (
        MagnitudeSpectrogram(mag.data, spec.head_config),
        PhaseSpectrogram(phase.data, spec.head_config),
    )


def _run_body(mel: MelSpectrogram, weights: GeneratorWeights, spec: ModelSpec) -> FeatureMap:
    if mel.n_mels != MEL_CHANNELS:
        raise ValueError(f"generator expects {MEL_CHANNELS} mel rows, got {mel.n_mels}")
    schedule = build_shape_schedule(spec)
    validate_weights(schedule, weights)

    x = conv1d(FeatureMap(mel.data), _conv_params(schedule.pre, weights))
    for stage in schedule.stages:
        # leaky ReLU precedes each conv; it is fused into the kernels
        up = _conv_params(stage.up, weights)
        if stage.up.kind == "conv_transpose":
            x = _conv_transpose1d_fused(x, up, leaky_slope=LEAKY_SLOPE)
        else:
            x = _conv1d_fused(x, up, leaky_slope=LEAKY_SLOPE)
        blocks = [
            ResBlockParams(
                block.kernel_size,
                block.dilations,
                tuple(
                    (_conv_params(c_dil, weights), _conv_params(c_one, weights))
                    for c_dil, c_one in block.conv_pairs
                ),
            )
            for block in stage.blocks
        ]
        x = resblock_mrf(x, blocks)
        if not np.isfinite(x.data).all():
            raise NumericError(f"non-finite activations after stage {stage.up.name}")
    return _conv1d_fused(x, _conv_params(schedule.post, weights), leaky_slope=LEAKY_SLOPE)


def forward(mel: MelSpectrogram, weights: GeneratorWeights, spec: ModelSpec) -> AudioBuffer:
    """Synthesize a waveform of exactly frames * hop samples."""
    out_len = mel.frames * spec.base_config.hop_length
    if spec.head == HEAD_ISTFT:
        mag, phase = head_spectra(mel, weights, spec)
        return istft(
            polar_to_complex(mag, phase),
            spec.head_config,
            target_len=out_len,
            sample_rate=mel.sample_rate,
        )
    raw = _run_body(mel, weights, spec)
    if not np.isfinite(raw.data).all():
        raise NumericError("non-finite activations in waveform head")
    wave = tanh_map(raw)
    return AudioBuffer(wave.data[0], mel.sample_rate)
