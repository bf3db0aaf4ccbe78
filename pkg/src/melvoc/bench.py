"""Synthesis-speed and model-size measurement.

Real-time factor (rtf) is audio seconds produced per wall-clock second,
taken as the median over the timed runs; medians shrug off scheduler
noise on desk hardware. Absolute rtf values are hardware-specific and
never asserted against published numbers; only orderings and parameter
ratios carry meaning across machines.

The harness runs one forward at a time and is not itself thread-safe.
"""

import statistics
import time
from dataclasses import dataclass, replace

import numpy as np

from . import rng
from .dsp import MelSpectrogram
from .generator import GeneratorWeights, ModelSpec, count_params, forward

REFERENCE_SAMPLE_RATE = 22050
DEFAULT_BENCH_FRAMES = 861  # ~10 s of audio at 256-sample hop

_REPORT_COLUMNS = ("model_id", "variant", "params", "rtf", "param_rate_pct", "speed_rate_pct")
REPORT_HEADER = "# " + "\t".join(_REPORT_COLUMNS)


@dataclass(frozen=True)
class BenchReport:
    model_id: str
    variant: str
    params: int
    rtf: float
    param_rate_pct: float | None = None
    speed_rate_pct: float | None = None
    warmup_runs: int = 0
    timed_runs: int = 0
    input_frames: int = 0


def default_bench_mel(frames: int = DEFAULT_BENCH_FRAMES, seed: int = 0) -> MelSpectrogram:
    """Deterministic synthetic log-mel input of the given length.

    Values span a plausible log-energy range; synthesis speed does not
    depend on them for this architecture.
    """
    values = rng.uniform(seed, f"bench_mel/{frames}", 80 * frames)
    data = (values.reshape(80, frames) * 4.0 - 4.0).astype(np.float32)
    return MelSpectrogram(data, REFERENCE_SAMPLE_RATE, 256)


def benchmark(
    spec: ModelSpec,
    weights: GeneratorWeights,
    mel: MelSpectrogram,
    warmup: int = 1,
    runs: int = 7,
) -> BenchReport:
    """Median real-time factor of forward() over *runs* timed runs."""
    if runs < 3:
        raise ValueError(f"need at least 3 timed runs, got {runs}")
    if warmup < 0:
        raise ValueError("warmup must be >= 0")
    for _ in range(warmup):
        forward(mel, weights, spec)
    rtfs = []
    for _ in range(runs):
        start = time.perf_counter()
        audio = forward(mel, weights, spec)
        elapsed = time.perf_counter() - start
        rtfs.append((len(audio) / REFERENCE_SAMPLE_RATE) / elapsed)
    return BenchReport(
        model_id=spec.model_id,
        variant=spec.variant,
        params=count_params(spec),
        rtf=statistics.median(rtfs),
        warmup_runs=warmup,
        timed_runs=runs,
        input_frames=mel.frames,
    )


def compare(reports, baseline_id: str):
    """Fill in percent rates relative to the named same-variant baseline.

    Returns new reports sorted by model id.
    """
    reports = list(reports)
    baseline = next((r for r in reports if r.model_id == baseline_id), None)
    if baseline is None:
        raise ValueError(f"baseline {baseline_id!r} not among the benchmarked models")
    off_variant = [r.model_id for r in reports if r.variant != baseline.variant]
    if off_variant:
        raise ValueError(
            f"rates are only defined within one variant; {off_variant} differ "
            f"from baseline variant {baseline.variant}"
        )
    return [
        replace(
            r,
            param_rate_pct=100.0 * r.params / baseline.params,
            speed_rate_pct=100.0 * r.rtf / baseline.rtf,
        )
        for r in sorted(reports, key=lambda r: r.model_id)
    ]


def format_report(reports) -> str:
    """One record per line: model, variant, params, rtf, and the two
    percent rates ("-" when not computed). Floats use repr and re-parse
    exactly."""
    lines = [REPORT_HEADER]
    for r in reports:
        lines.append("\t".join((
            r.model_id,
            r.variant,
            str(r.params),
            repr(float(r.rtf)),
            "-" if r.param_rate_pct is None else repr(float(r.param_rate_pct)),
            "-" if r.speed_rate_pct is None else repr(float(r.speed_rate_pct)),
        )))
    return "\n".join(lines) + "\n"


def parse_report(text: str):
    """Inverse of format_report for the six serialized columns."""
    reports = []
    for line_no, line in enumerate(text.splitlines(), 1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != len(_REPORT_COLUMNS):
            raise ValueError(
                f"line {line_no}: expected {len(_REPORT_COLUMNS)} tab-separated "
                f"fields, got {len(parts)}"
            )
        reports.append(BenchReport(
            model_id=parts[0],
            variant=parts[1],
            params=int(parts[2]),
            rtf=float(parts[3]),
            param_rate_pct=None if parts[4] == "-" else float(parts[4]),
            speed_rate_pct=None if parts[5] == "-" else float(parts[5]),
        ))
    return reports
