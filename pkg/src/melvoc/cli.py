"""Command-line entry point.

Commands: mel, synth, roundtrip, params, bench, init-weights. All flag
defaults reproduce the reference configuration (22.05 kHz, FFT 1024,
hop 256, window 1024, 80 mels, 0-8000 Hz), so the zero-flag path is the
standard one.

Exit codes: 0 success, 1 usage error, 2 file-format error, 3 numeric or
verification failure.
"""

import argparse
import sys

import numpy as np

from . import bench as bench_mod
from . import dsp, modelio
from .errors import FormatError, NumericError
from .generator import (
    BASELINE_IDS,
    DEFAULT_BASE_CONFIG,
    count_params,
    forward,
    parse_model_id,
    random_init,
)

ROUNDTRIP_TOLERANCE = 1e-6


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(f"{self.prog}: {message}")


def _log(message: str) -> None:
    print(message, file=sys.stderr)


def _add_dsp_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--fft", type=int, default=1024, help="FFT size (default 1024)")
    p.add_argument("--hop", type=int, default=256, help="hop length (default 256)")
    p.add_argument("--win", type=int, default=1024, help="window length (default 1024)")


def _add_mel_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--mels", type=int, default=80, help="mel band count (default 80)")
    p.add_argument("--fmin", type=float, default=0.0, help="lowest mel edge in Hz (default 0)")
    p.add_argument("--fmax", type=float, default=8000.0, help="highest mel edge in Hz (default 8000)")
    p.add_argument(
        "--sample-rate", type=int, default=None,
        help="force this sample rate instead of the file's (default: use file's, warn if not 22050)",
    )


def _add_model_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--variant", default="V1", choices=("V1", "V2", "V3"),
                   help="channel/kernel profile (default V1)")
    p.add_argument("--seed", type=int, default=0, help="weight seed (default 0)")


def _stft_config(args) -> dsp.StftConfig:
    return dsp.StftConfig(args.fft, args.hop, args.win)


def cmd_mel(args) -> int:
    audio = modelio.read_wav(args.input)
    rate = args.sample_rate or audio.sample_rate
    if args.sample_rate is None and audio.sample_rate != dsp.DEFAULT_SAMPLE_RATE:
        _log(
            f"warning: {args.input} is {audio.sample_rate} Hz, not "
            f"{dsp.DEFAULT_SAMPLE_RATE} Hz; processing at the file's rate"
        )
    if rate != audio.sample_rate:
        audio = dsp.AudioBuffer(audio.samples, rate)
    config = _stft_config(args)
    fb = dsp.mel_filterbank(args.mels, args.fft, rate, args.fmin, args.fmax)
    mel = dsp.log_mel(audio, config, fb)
    modelio.write_mel(args.out, mel)
    _log(f"{args.out}: {mel.frames} frames x {mel.n_mels} mels")
    return 0


def cmd_synth(args) -> int:
    mel = modelio.read_mel(args.input)
    spec, weights = modelio.read_weights(args.weights)
    if args.model is not None and args.model != spec.model_id:
        raise FormatError(
            f"{args.weights} holds model {spec.model_id!r}, but {args.model!r} "
            f"was requested"
        )
    try:
        audio = forward(mel, weights, spec)
    except ValueError as exc:
        # input files parsed but are mutually inconsistent
        raise FormatError(str(exc)) from exc
    modelio.write_wav(args.out, audio)
    _log(f"{args.out}: {len(audio)} samples ({audio.duration:.2f} s) via {spec.model_id}")
    return 0


def cmd_roundtrip(args) -> int:
    audio = modelio.read_wav(args.input)
    config = _stft_config(args)
    rebuilt = dsp.istft(
        dsp.stft(audio, config), config,
        target_len=len(audio), sample_rate=audio.sample_rate,
    )
    error = float(np.max(np.abs(rebuilt.samples - audio.samples))) if len(audio) else 0.0
    print(f"max reconstruction error: {error:.3e}")
    if error < ROUNDTRIP_TOLERANCE:
        return 0
    _log(f"roundtrip failed: {error:.3e} >= {ROUNDTRIP_TOLERANCE:.0e}")
    return 3


def cmd_params(args) -> int:
    specs = [parse_model_id(m, args.variant) for m in args.models]
    baseline_id = args.baseline or args.models[0]
    counts = {s.model_id: count_params(s) for s in specs}
    if baseline_id not in counts:
        raise ValueError(f"baseline {baseline_id!r} not among the listed models")
    base = counts[baseline_id]
    print(f"{'model':<12} {'params':>12} {'params(M)':>10} {'rate%':>7}")
    for s in specs:
        n = counts[s.model_id]
        print(f"{s.model_id:<12} {n:>12} {n / 1e6:>10.2f} {100.0 * n / base:>7.1f}")
    return 0


def cmd_bench(args) -> int:
    baseline_id = args.baseline or BASELINE_IDS[args.variant]
    if baseline_id not in args.models:
        raise ValueError(
            f"baseline {baseline_id!r} must be among the benchmarked models"
        )
    mel = bench_mod.default_bench_mel()
    reports = []
    for model_id in args.models:
        spec = parse_model_id(model_id, args.variant)
        weights = random_init(spec, args.seed)
        _log(f"benchmarking {model_id} ({args.variant}), {args.runs} runs ...")
        reports.append(
            bench_mod.benchmark(spec, weights, mel, warmup=args.warmup, runs=args.runs)
        )
    text = bench_mod.format_report(bench_mod.compare(reports, baseline_id))
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
        _log(f"report written to {args.out}")
    else:
        print(text, end="")
    return 0


def cmd_init_weights(args) -> int:
    spec = parse_model_id(args.model, args.variant)
    weights = random_init(spec, args.seed)
    modelio.write_weights(args.out, spec, weights)
    _log(f"{args.out}: {count_params(spec)} parameters for {spec.model_id} ({spec.variant})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="melvoc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mel", help="extract a log-mel file from a WAV")
    p.add_argument("input", help="input WAV (PCM 16-bit mono)")
    p.add_argument("--out", required=True, help="output .mel path")
    _add_dsp_flags(p)
    _add_mel_flags(p)
    p.set_defaults(func=cmd_mel)

    p = sub.add_parser("synth", help="synthesize a WAV from a mel file and weights")
    p.add_argument("input", help="input .mel path")
    p.add_argument("weights", help="weight file path")
    p.add_argument("--out", required=True, help="output WAV path")
    p.add_argument("--model", default=None, help="assert the weight file holds this model id")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("roundtrip", help="verify istft(stft(x)) reconstructs x")
    p.add_argument("input", help="input WAV")
    _add_dsp_flags(p)
    p.set_defaults(func=cmd_roundtrip)

    p = sub.add_parser("params", help="print parameter counts and rates")
    p.add_argument("models", nargs="+", help="model ids, e.g. C8C8C2C2 C8C8I")
    p.add_argument("--baseline", default=None, help="rate reference (default: first listed)")
    _add_model_flags(p)
    p.set_defaults(func=cmd_params)

    p = sub.add_parser("bench", help="measure real-time factors")
    p.add_argument("models", nargs="+", help="model ids to benchmark")
    p.add_argument("--baseline", default=None,
                   help="rate reference (default: the variant's standard baseline)")
    p.add_argument("--runs", type=int, default=7, help="timed runs (default 7)")
    p.add_argument("--warmup", type=int, default=1, help="discarded warmup runs (default 1)")
    p.add_argument("--out", default=None, help="write the report here instead of stdout")
    _add_model_flags(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("init-weights", help="write deterministic random weights")
    p.add_argument("model", help="model id, e.g. C8C8I")
    p.add_argument("--out", required=True, help="output weight file path")
    _add_model_flags(p)
    p.set_defaults(func=cmd_init_weights)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        _log(str(exc))
        return 1
    try:
        return args.func(args)
    except _UsageError as exc:
        _log(str(exc))
        return 1
    except FormatError as exc:
        _log(f"format error: {exc}")
        return 2
    except NumericError as exc:
        _log(f"numeric error: {exc}")
        return 3
    except ValueError as exc:
        _log(f"error: {exc}")
        return 1
    except OSError as exc:
        _log(f"i/o error: {exc}")
        return 2


if __name__ == "__main__":
    sys.exit(main())
