"""melvoc: mel-spectrogram vocoder inference engine and DSP toolkit.

An analysis chain (STFT, mel filterbank, log-mel), a convolutional
upsampling generator with an inverse-STFT synthesis head, deterministic
weight I/O, and a real-time-factor benchmark harness.
"""

__version__ = "0.1.0"

from .dsp import (
    AudioBuffer,
    ComplexSpectrogram,
    MagnitudeSpectrogram,
    MelFilterbank,
    MelSpectrogram,
    PhaseSpectrogram,
    StftConfig,
    hann_window,
    istft,
    log_mel,
    mel_filterbank,
    polar_to_complex,
    stft,
)
from .fourier import fft, inverse_fft, naive_dft
from .generator import (
    GeneratorWeights,
    ModelSpec,
    build_shape_schedule,
    count_params,
    derive_istft_params,
    forward,
    parse_model_id,
    random_init,
)
from .nn import ConvParams, FeatureMap, conv1d, conv_transpose1d, leaky_relu, resblock_mrf

__all__ = [
    "AudioBuffer",
    "ComplexSpectrogram",
    "ConvParams",
    "FeatureMap",
    "GeneratorWeights",
    "MagnitudeSpectrogram",
    "MelFilterbank",
    "MelSpectrogram",
    "ModelSpec",
    "PhaseSpectrogram",
    "StftConfig",
    "build_shape_schedule",
    "conv1d",
    "conv_transpose1d",
    "count_params",
    "derive_istft_params",
    "fft",
    "forward",
    "hann_window",
    "inverse_fft",
    "istft",
    "leaky_relu",
    "log_mel",
    "mel_filterbank",
    "naive_dft",
    "parse_model_id",
    "polar_to_complex",
    "random_init",
    "resblock_mrf",
    "stft",
]
