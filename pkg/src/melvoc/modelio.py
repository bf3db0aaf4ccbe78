"""Bit-exact file formats: 16-bit PCM WAV, mel feature dumps, and the
generator weight container.

All multi-byte fields are little-endian regardless of host. Weight and
mel round trips are bit-identical; WAV round trips are within the int16
quantization bound of 1/32768 per sample.

Weight container layout:

    8 bytes   magic "ISTFTNW1"
    u32       model id length, then UTF-8 model id
    u8        variant number (1, 2, or 3)
    u32       tensor count
    per tensor (in schedule order):
        u32   name length, then UTF-8 name
        u32   rank, then one u32 per dimension
        f32[] little-endian data

Mel dump layout:

    8 bytes   magic "ISTFTMEL"
    u32 x 4   n_mels, frames, sample_rate, hop_length
    f32[]     row-major, frames outer, mels inner
"""

import struct

import numpy as np

from .dsp import AudioBuffer, MelSpectrogram, StftConfig
from .errors import (
    FormatError,
    MagicMismatchError,
    ScheduleMismatchError,
    TruncatedFileError,
)
from .generator import (
    DEFAULT_BASE_CONFIG,
    GeneratorWeights,
    ModelSpec,
    build_shape_schedule,
    parse_model_id,
)

WEIGHTS_MAGIC = b"ISTFTNW1"
MEL_MAGIC = b"ISTFTMEL"

_VARIANT_TO_BYTE = {"V1": 1, "V2": 2, "V3": 3}
_BYTE_TO_VARIANT = {v: k for k, v in _VARIANT_TO_BYTE.items()}


class _Reader:
    """Byte cursor that reports the offset of whatever is missing."""

    def __init__(self, data: bytes, path):
        self.data = data
        self.pos = 0
        self.path = path

    def take(self, n: int, what: str) -> bytes:
        if self.pos + n > len(self.data):
            raise TruncatedFileError(
                f"{self.path}: truncated while reading {what} at byte {self.pos}: "
                f"needed {n} bytes, {len(self.data) - self.pos} remain"
            )
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def u32(self, what: str) -> int:
        return struct.unpack("<I", self.take(4, what))[0]

    def u16(self, what: str) -> int:
        return struct.unpack("<H", self.take(2, what))[0]


# ---------------------------------------------------------------------------
# WAV (RIFF, PCM 16-bit mono)
# ---------------------------------------------------------------------------

def read_wav(path) -> AudioBuffer:
    """Read a mono 16-bit PCM WAV; samples are scaled by 1/32768."""
    with open(path, "rb") as fh:
        r = _Reader(fh.read(), path)
    if r.take(4, "RIFF tag") != b"RIFF":
        raise FormatError(f"{path}: not a RIFF file (byte 0)")
    r.u32("RIFF size")
    if r.take(4, "WAVE tag") != b"WAVE":
        raise FormatError(f"{path}: not a WAVE file (byte 8)")

    fmt = None
    data = None
    while r.pos < len(r.data):
        tag_at = r.pos
        tag = r.take(4, "chunk tag")
        size = r.u32("chunk size")
        body = r.take(size, f"chunk {tag!r} body")
        if size % 2:
            r.take(1, "chunk pad byte")
        if tag == b"fmt ":
            fmt = (body, tag_at)
        elif tag == b"data":
            data = (body, tag_at)

    if fmt is None:
        raise FormatError(f"{path}: no fmt chunk found")
    if data is None:
        raise FormatError(f"{path}: no data chunk found")

    body, at = fmt
    if len(body) < 16:
        raise FormatError(f"{path}: fmt chunk too short at byte {at}")
    audio_format, channels, sample_rate, _, _, bits = struct.unpack(
        "<HHIIHH", body[:16]
    )
    if audio_format != 1:
        raise FormatError(
            f"{path}: unsupported format tag {audio_format} (PCM only) at byte {at}"
        )
    if channels != 1:
        raise FormatError(f"{path}: {channels} channels (mono only) at byte {at}")
    if bits != 16:
        raise FormatError(f"{path}: {bits}-bit samples (16-bit only) at byte {at}")

    payload, at = data
    if len(payload) % 2:
        raise FormatError(f"{path}: odd data chunk length at byte {at}")
    samples = np.frombuffer(payload, dtype="<i2").astype(np.float64) / 32768.0
    return AudioBuffer(samples, sample_rate)


def write_wav(path, audio: AudioBuffer) -> None:
    """Write mono 16-bit PCM: clamp to [-1, 1], scale by 32768 with
    round-half-away-from-zero, saturating at 32767."""
    x = np.clip(audio.samples, -1.0, 1.0) * 32768.0
    q = np.clip(np.copysign(np.floor(np.abs(x) + 0.5), x), -32768, 32767)
    payload = q.astype("<i2").tobytes()
    header = b"RIFF" + struct.pack("<I", 36 + len(payload)) + b"WAVE"
    header += b"fmt " + struct.pack(
        "<IHHIIHH",
        16, 1, 1,
        audio.sample_rate,
        audio.sample_rate * 2,
        2, 16,
    )
    header += b"data" + struct.pack("<I", len(payload))
    with open(path, "wb") as fh:
        fh.write(header + payload)


# ---------------------------------------------------------------------------
# Mel feature dumps
# ---------------------------------------------------------------------------

def write_mel(path, mel: MelSpectrogram) -> None:
    with open(path, "wb") as fh:
        fh.write(MEL_MAGIC)
        fh.write(struct.pack("<IIII", mel.n_mels, mel.frames, mel.sample_rate, mel.hop_length))
        fh.write(np.ascontiguousarray(mel.data.T, dtype="<f4").tobytes())


def read_mel(path) -> MelSpectrogram:
    with open(path, "rb") as fh:
        r = _Reader(fh.read(), path)
    if r.take(8, "magic") != MEL_MAGIC:
        raise MagicMismatchError(
            f"{path}: bad magic {r.data[:8]!r}, expected {MEL_MAGIC!r}"
        )
    n_mels = r.u32("n_mels")
    frames = r.u32("frames")
    sample_rate = r.u32("sample_rate")
    hop_length = r.u32("hop_length")
    expected = n_mels * frames * 4
    remaining = len(r.data) - r.pos
    if remaining != expected:
        raise TruncatedFileError(
            f"{path}: expected {expected} data bytes for {n_mels}x{frames}, "
            f"found {remaining}"
        )
    flat = np.frombuffer(r.take(expected, "mel data"), dtype="<f4")
    data = flat.reshape(frames, n_mels).T
    return MelSpectrogram(data, sample_rate, hop_length)


# ---------------------------------------------------------------------------
# Weight container
# ---------------------------------------------------------------------------

def write_weights(path, spec: ModelSpec, weights: GeneratorWeights) -> None:
    """Serialize tensors in schedule order under the model-id header."""
    schedule = build_shape_schedule(spec)
    entries = list(schedule.tensor_entries())
    with open(path, "wb") as fh:
        fh.write(WEIGHTS_MAGIC)
        ident = spec.model_id.encode("utf-8")
        fh.write(struct.pack("<I", len(ident)) + ident)
        fh.write(struct.pack("<B", _VARIANT_TO_BYTE[spec.variant]))
        fh.write(struct.pack("<I", len(entries)))
        for name, shape in entries:
            arr = weights[name]
            encoded = name.encode("utf-8")
            fh.write(struct.pack("<I", len(encoded)) + encoded)
            fh.write(struct.pack("<I", len(shape)))
            fh.write(struct.pack(f"<{len(shape)}I", *shape))
            fh.write(np.ascontiguousarray(arr, dtype="<f4").tobytes())


def read_weights(path, base: StftConfig = DEFAULT_BASE_CONFIG):
    """Read and validate a weight file.

    Returns (ModelSpec, GeneratorWeights). The stored tensors must match
    the shape schedule implied by the header's model id and variant.
    """
    with open(path, "rb") as fh:
        r = _Reader(fh.read(), path)
    if r.take(8, "magic") != WEIGHTS_MAGIC:
        raise MagicMismatchError(
            f"{path}: bad magic {r.data[:8]!r}, expected {WEIGHTS_MAGIC!r}"
        )
    id_len = r.u32("model id length")
    model_id = r.take(id_len, "model id").decode("utf-8")
    variant_byte = r.take(1, "variant")[0]
    variant = _BYTE_TO_VARIANT.get(variant_byte)
    if variant is None:
        raise FormatError(f"{path}: unknown variant byte {variant_byte}")
    tensor_count = r.u32("tensor count")

    spec = parse_model_id(model_id, variant, base)
    entries = list(build_shape_schedule(spec).tensor_entries())
    if tensor_count != len(entries):
        raise ScheduleMismatchError(
            f"{path}: header declares {tensor_count} tensors, schedule for "
            f"{model_id} has {len(entries)}"
        )

    tensors = {}
    for expect_name, expect_shape in entries:
        name_len = r.u32("tensor name length")
        name = r.take(name_len, "tensor name").decode("utf-8")
        rank = r.u32("tensor rank")
        shape = tuple(r.u32("tensor dim") for _ in range(rank))
        if name != expect_name or shape != expect_shape:
            raise ScheduleMismatchError(
                f"{path}: tensor {name!r} with shape {shape}; schedule expects "
                f"{expect_name!r} with shape {expect_shape}"
            )
        count = int(np.prod(shape, dtype=np.int64)) if shape else 1
        raw = r.take(count * 4, f"tensor {name!r} data")
        tensors[name] = np.frombuffer(raw, dtype="<f4").reshape(shape)
    if r.pos != len(r.data):
        raise FormatError(
            f"{path}: {len(r.data) - r.pos} trailing bytes after last tensor"
        )
    return spec, GeneratorWeights(tensors)
