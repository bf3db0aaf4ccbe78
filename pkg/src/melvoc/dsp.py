"""Windowing, STFT/iSTFT with overlap-add, and log-mel extraction.

Conventions, fixed package-wide:

* periodic Hann for analysis and synthesis (hop = win/4 gives COLA);
* optional reflect-centering by fft_size/2, with matching trim on the
  inverse side;
* windows shorter than the FFT are zero-padded at the tail;
* overlap-add output is normalized by the squared-window envelope, with
  the denominator clamped at 1e-11;
* mel filters use the HTK scale with Slaney area normalization, and
  log-mel clamps energies at 1e-5 before the natural log.

All operations are pure; spectrogram and audio values are never mutated
after construction. Overlap-add accumulates in ascending frame order so
output is bit-identical run to run.
"""

from dataclasses import dataclass, field

import numpy as np

from .fourier import fft_batch, inverse_fft_batch

ENVELOPE_FLOOR = 1e-11
LOG_MEL_FLOOR = 1e-5
DEFAULT_SAMPLE_RATE = 22050


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AudioBuffer:
    """Mono audio: float samples (nominally in [-1, 1]) plus sample rate."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ValueError("AudioBuffer samples must be 1-D")
        if self.sample_rate <= 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")
        if not np.isfinite(samples).all():
            raise ValueError("AudioBuffer samples must be finite")
        samples = samples.copy()
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)

    def __len__(self) -> int:
        return self.samples.shape[0]

    @property
    def duration(self) -> float:
        """Length in seconds."""
        return len(self) / self.sample_rate


@dataclass(frozen=True)
class StftConfig:
    """Frame parameters: FFT size, hop, window length, centering flag."""

    fft_size: int
    hop_length: int
    win_length: int
    center_pad: bool = True

    def __post_init__(self):
        f, h, w = self.fft_size, self.hop_length, self.win_length
        if not (f >= w >= h >= 1):
            raise ValueError(
                f"need fft_size >= win_length >= hop_length >= 1, got "
                f"fft_size={f}, win_length={w}, hop_length={h}"
            )
        if f & (f - 1):
            raise ValueError(f"fft_size must be a power of two, got {f}")

    @property
    def bins(self) -> int:
        return self.fft_size // 2 + 1


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = arr.copy()
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ComplexSpectrogram:
    """Half-spectrum complex frames on a (bin, frame) grid."""

    data: np.ndarray  # (bins, frames) complex128
    config: StftConfig

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.complex128)
        if data.ndim != 2:
            raise ValueError("spectrogram data must be 2-D (bins, frames)")
        if data.shape[0] != self.config.bins:
            raise ValueError(
                f"expected {self.config.bins} bins for fft_size "
                f"{self.config.fft_size}, got {data.shape[0]}"
            )
        object.__setattr__(self, "data", _freeze(data))

    @property
    def bins(self) -> int:
        return self.data.shape[0]

    @property
    def frames(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class MagnitudeSpectrogram:
    """Non-negative magnitudes on the same grid as ComplexSpectrogram."""

    data: np.ndarray
    config: StftConfig

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != 2 or data.shape[0] != self.config.bins:
            raise ValueError("magnitude grid inconsistent with config")
        if not np.isfinite(data).all() or (data < 0).any():
            raise ValueError("magnitudes must be finite and non-negative")
        object.__setattr__(self, "data", _freeze(data))


@dataclass(frozen=True)
class PhaseSpectrogram:
    """Phase angles in radians on the ComplexSpectrogram grid."""

    data: np.ndarray
    config: StftConfig

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != 2 or data.shape[0] != self.config.bins:
            raise ValueError("phase grid inconsistent with config")
        if not np.isfinite(data).all():
            raise ValueError("phase angles must be finite")
        object.__setattr__(self, "data", _freeze(data))


@dataclass(frozen=True)
class MelFilterbank:
    """Triangular mel filters: (n_mels, fft_size/2 + 1) weight matrix."""

    weights: np.ndarray
    fft_size: int
    sample_rate: int
    fmin: float
    fmax: float

    def __post_init__(self):
        object.__setattr__(self, "weights", _freeze(np.asarray(self.weights, dtype=np.float64)))

    @property
    def n_mels(self) -> int:
        return self.weights.shape[0]


@dataclass(frozen=True)
class MelSpectrogram:
    """Log-scale mel features: (n_mels, frames) float32."""

    data: np.ndarray
    sample_rate: int
    hop_length: int

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float32)
        if data.ndim != 2:
            raise ValueError("mel data must be 2-D (n_mels, frames)")
        if not np.isfinite(data).all():
            raise ValueError("mel values must be finite")
        object.__setattr__(self, "data", _freeze(data))

    @property
    def n_mels(self) -> int:
        return self.data.shape[0]

    @property
    def frames(self) -> int:
        return self.data.shape[1]


# ---------------------------------------------------------------------------
# Windowing and framing
# ---------------------------------------------------------------------------

def hann_window(length: int) -> np.ndarray:
    """Periodic Hann window: w[n] = 0.5 (1 - cos(2 pi n / length))."""
    if length < 1:
        raise ValueError(f"window length must be >= 1, got {length}")
    n = np.arange(length)
    return 0.5 * (1.0 - np.cos(2.0 * np.pi * n / length))


def _padded_window(config: StftConfig) -> np.ndarray:
    w = np.zeros(config.fft_size)
    w[: config.win_length] = hann_window(config.win_length)
    return w


def stft(audio: AudioBuffer, config: StftConfig) -> ComplexSpectrogram:
    """Windowed framewise DFT, keeping the lower fft_size/2 + 1 bins.

    With center_pad, the signal is reflect-padded by fft_size/2 on both
    sides first, which makes the frame count floor(len/hop) + 1.
    """
    x = audio.samples
    if len(x) < 1:
        raise ValueError("audio must contain at least one sample")
    f, h = config.fft_size, config.hop_length
    if config.center_pad:
        pad = f // 2
        if pad >= len(x):
            raise ValueError(
                f"reflect padding of {pad} samples needs audio longer than "
                f"{pad} samples, got {len(x)}"
            )
        x = np.pad(x, pad, mode="reflect")
    if len(x) < f:
        raise ValueError(
            f"audio too short for one frame: {len(x)} samples < fft_size {f}"
        )
    n_frames = (len(x) - f) // h + 1
    frames = np.lib.stride_tricks.sliding_window_view(x, f)[::h][:n_frames]
    spectra = fft_batch(frames * _padded_window(config))
    return ComplexSpectrogram(spectra[:, : config.bins].T, config)


def _hermitian_full(half: np.ndarray, fft_size: int) -> np.ndarray:
    """Extend (frames, bins) half spectra to full length-N spectra."""
    frames = half.shape[0]
    full = np.empty((frames, fft_size), dtype=np.complex128)
    full[:, : half.shape[1]] = half
    full[:, half.shape[1]:] = np.conj(half[:, -2:0:-1])
    return full


def _overlap_add(frames: np.ndarray, hop: int, length: int) -> np.ndarray:
    """Sum frames (n_frames, frame_len) at stride *hop* into a buffer."""
    n_frames, frame_len = frames.shape
    out = np.zeros(length)
    if frame_len % hop == 0:
        # Frames split into hop-sized chunks land on disjoint slots per
        # chunk offset, so each offset is a single vectorized add.
        for j in range(frame_len // hop):
            seg = out[j * hop : j * hop + n_frames * hop]
            seg.reshape(n_frames, hop)[:] += frames[:, j * hop : (j + 1) * hop]
    else:
        for t in range(n_frames):
            out[t * hop : t * hop + frame_len] += frames[t]
    return out


def istft(
    spec: ComplexSpectrogram,
    config: StftConfig,
    target_len: int | None = None,
    sample_rate: int = DEFAULT_SAMPLE_RATE,
) -> AudioBuffer:
    """Overlap-add inverse STFT with squared-window normalization.

    Output length is (frames - 1) * hop for centered input (after
    trimming fft_size/2 from the front) and (frames - 1) * hop + fft_size
    otherwise. When *target_len* is given the output is truncated or
    zero-extended to exactly that many samples; with centering, up to
    fft_size/2 extra tail samples come from the real overlap-add buffer
    before zeros are appended.
    """
    if spec.bins != config.bins:
        raise ValueError(
            f"spectrogram has {spec.bins} bins but config expects {config.bins}"
        )
    f, h = config.fft_size, config.hop_length
    n_frames = spec.frames
    window = _padded_window(config)

    full = _hermitian_full(spec.data.T, f)
    frames = inverse_fft_batch(full).real * window

    ola_len = (n_frames - 1) * h + f
    out = _overlap_add(frames, h, ola_len)
    envelope = _overlap_add(np.broadcast_to(window * window, (n_frames, f)), h, ola_len)
    out /= np.maximum(envelope, ENVELOPE_FLOOR)

    if config.center_pad:
        out = out[f // 2 :]
        natural_len = (n_frames - 1) * h
    else:
        natural_len = ola_len

    if target_len is None:
        target_len = natural_len
    if target_len <= len(out):
        out = out[:target_len]
    else:
        out = np.concatenate([out, np.zeros(target_len - len(out))])
    return AudioBuffer(out, sample_rate)


def polar_to_complex(
    mag: MagnitudeSpectrogram, phase: PhaseSpectrogram
) -> ComplexSpectrogram:
    """Recombine magnitude and phase: mag * (cos(phase) + i sin(phase))."""
    if mag.data.shape != phase.data.shape or mag.config != phase.config:
        raise ValueError("magnitude and phase grids must match")
    data = mag.data * (np.cos(phase.data) + 1j * np.sin(phase.data))
    return ComplexSpectrogram(data, mag.config)


# ---------------------------------------------------------------------------
# Mel filterbank and log-mel extraction
# ---------------------------------------------------------------------------

def hz_to_mel(hz):
    """HTK mel scale: m = 2595 log10(1 + f/700)."""
    return 2595.0 * np.log10(1.0 + np.asarray(hz, dtype=np.float64) / 700.0)


def mel_to_hz(mel):
    """Inverse of hz_to_mel."""
    return 700.0 * (10.0 ** (np.asarray(mel, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(
    n_mels: int,
    fft_size: int,
    sample_rate: int,
    fmin: float,
    fmax: float,
) -> MelFilterbank:
    """Triangular filters with centers equally spaced on the mel scale.

    Rows are area-normalized by 2 / (upper - lower) so filter energy does
    not grow with bandwidth.
    """
    if n_mels < 1:
        raise ValueError(f"n_mels must be >= 1, got {n_mels}")
    if not (0 <= fmin < fmax <= sample_rate / 2):
        raise ValueError(
            f"need 0 <= fmin < fmax <= sample_rate/2, got fmin={fmin}, "
            f"fmax={fmax}, sample_rate={sample_rate}"
        )
    edges = mel_to_hz(np.linspace(hz_to_mel(fmin), hz_to_mel(fmax), n_mels + 2))
    bin_freqs = np.arange(fft_size // 2 + 1) * (sample_rate / fft_size)

    lower, center, upper = edges[:-2, None], edges[1:-1, None], edges[2:, None]
    up_ramp = (bin_freqs - lower) / (center - lower)
    down_ramp = (upper - bin_freqs) / (upper - center)
    weights = np.maximum(0.0, np.minimum(up_ramp, down_ramp))
    weights *= 2.0 / (upper - lower)
    return MelFilterbank(weights, fft_size, sample_rate, float(fmin), float(fmax))


def log_mel(audio: AudioBuffer, config: StftConfig, fb: MelFilterbank) -> MelSpectrogram:
    """Natural-log mel energies: log(max(fb . |stft|, 1e-5))."""
    if fb.fft_size != config.fft_size:
        raise ValueError(
            f"filterbank built for fft_size {fb.fft_size}, config has "
            f"{config.fft_size}"
        )
    magnitudes = np.abs(stft(audio, config).data)
    mel = np.log(np.maximum(fb.weights @ magnitudes, LOG_MEL_FLOOR))
    return MelSpectrogram(mel.astype(np.float32), audio.sample_rate, config.hop_length)
