import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from melvoc.dsp import ComplexSpectrogram, StftConfig, istft
from melvoc.errors import ArchitectureError, ModelIdParseError, NumericError
from melvoc.generator import (
    DEFAULT_BASE_CONFIG,
    FIG3_MODEL_IDS,
    GeneratorWeights,
    build_shape_schedule,
    count_params,
    derive_istft_params,
    forward,
    head_spectra,
    parse_model_id,
    random_init,
)
from melvoc.bench import default_bench_mel

# element counts derived by summing the layer shapes by hand
EXPECTED_PARAMS = {
    ("V1", "C8C8C2C2"): 13_926_017,
    ("V1", "C8C8C2I"): 13_792_458,
    ("V1", "C8C8I"): 13_254_034,
    ("V1", "C8I"): 10_879_874,
    ("V1", "C8C1I"): 19_338_882,
    ("V2", "C8C8C2C2"): 925_985,
    ("V2", "C8C8I"): 886_642,
    ("V2", "C8I"): 778_562,
}


# -- parsing ------------------------------------------------------------------

def test_parse_c8c8i():
    spec = parse_model_id("C8C8I")
    assert spec.stages == (8, 8)
    assert spec.upsample == 64
    assert spec.head == "istft"
    assert spec.head_config == StftConfig(16, 4, 16)


def test_parse_baseline_waveform():
    spec = parse_model_id("C8C8C2C2")
    assert spec.stages == (8, 8, 2, 2)
    assert spec.upsample == 256
    assert spec.head == "waveform"
    assert spec.head_config is None


def test_parse_c8c1i():
    spec = parse_model_id("C8C1I")
    assert spec.stages == (8, 1)
    assert spec.head_config == StftConfig(128, 32, 128)


@pytest.mark.parametrize("bad", ["I", "", "C", "c8i", "C8IC8", "X8I", "C8 I"])
def test_malformed_ids_raise_parse_error(bad):
    with pytest.raises(ModelIdParseError):
        parse_model_id(bad)


def test_zero_stage_factor_rejected():
    with pytest.raises(ArchitectureError):
        parse_model_id("C0I")


def test_waveform_head_needs_hop_upsampling():
    with pytest.raises(ArchitectureError, match="hop"):
        parse_model_id("C8C8")


def test_istft_head_divisibility_violation_names_field():
    with pytest.raises(ArchitectureError, match="hop_length"):
        parse_model_id("C8C8C8I")  # s = 512 divides fft 1024 but not hop 256


def test_unknown_variant_rejected():
    with pytest.raises(ValueError, match="variant"):
        parse_model_id("C8C8I", "V9")


# -- Eq-style parameter scaling ------------------------------------------------

def test_derive_istft_params_values():
    base = DEFAULT_BASE_CONFIG
    assert derive_istft_params(base, 64) == StftConfig(16, 4, 16)
    assert derive_istft_params(base, 1) == StftConfig(1024, 256, 1024)
    assert derive_istft_params(base, 128) == StftConfig(8, 2, 8)


def test_derive_rejects_non_divisible():
    with pytest.raises(ArchitectureError, match="fft_size"):
        derive_istft_params(StftConfig(64, 16, 64), 128)


@settings(max_examples=30, deadline=None)
@given(s1=st.sampled_from([1, 2, 4, 8]), s2=st.sampled_from([1, 2, 4, 8]))
def test_derive_composes(s1, s2):
    base = DEFAULT_BASE_CONFIG
    once = derive_istft_params(base, s1 * s2)
    twice = derive_istft_params(derive_istft_params(base, s1), s2)
    assert once == twice


def test_fft_times_upsampling_is_constant():
    for model_id in ("C8I", "C8C8I", "C8C8C2I", "C8C1I"):
        spec = parse_model_id(model_id)
        assert spec.head_config.fft_size * spec.upsample == 1024
        assert spec.head_config.hop_length * spec.upsample == 256


# -- shape schedule -------------------------------------------------------------

def test_head_channels():
    assert build_shape_schedule(parse_model_id("C8C8I", "V1")).post.out_channels == 18
    assert build_shape_schedule(parse_model_id("C8C8C2C2", "V1")).post.out_channels == 1
    assert build_shape_schedule(parse_model_id("C8I", "V2")).post.out_channels == 130


def test_upsampling_layer_geometry():
    schedule = build_shape_schedule(parse_model_id("C8C8C2C2", "V1"))
    ups = [stage.up for stage in schedule.stages]
    assert [(u.kernel_size, u.stride, u.padding) for u in ups] == [
        (16, 8, 4), (16, 8, 4), (4, 2, 1), (4, 2, 1)
    ]
    assert [u.out_channels for u in ups] == [256, 128, 64, 32]


def test_c1_stage_keeps_channels():
    schedule = build_shape_schedule(parse_model_id("C8C1I", "V1"))
    up0, up1 = (stage.up for stage in schedule.stages)
    assert up0.kind == "conv_transpose" and up0.out_channels == 256
    assert up1.kind == "conv" and up1.kernel_size == 3 and up1.out_channels == 256


def test_odd_upsampling_factor_rejected():
    spec = parse_model_id("C8C8I")
    bad = type(spec)(
        model_id="C8C3I", variant="V1", stages=(8, 3), head="istft",
        base_config=spec.base_config, upsample=24, head_config=spec.head_config,
    )
    with pytest.raises(ArchitectureError, match="odd"):
        build_shape_schedule(bad)


def test_param_counts_frozen_values():
    for (variant, model_id), expected in EXPECTED_PARAMS.items():
        assert count_params(parse_model_id(model_id, variant)) == expected


def test_param_count_strictly_shrinks_as_stages_are_replaced():
    for variant in ("V1", "V2"):
        sizes = [
            count_params(parse_model_id(m, variant))
            for m in ("C8I", "C8C8I", "C8C8C2I", "C8C8C2C2")
        ]
        assert sizes == sorted(sizes)
        assert len(set(sizes)) == len(sizes)


# -- weights --------------------------------------------------------------------

def test_random_init_deterministic():
    spec = parse_model_id("C8I", "V2")
    a = random_init(spec, 0)
    b = random_init(spec, 0)
    c = random_init(spec, 1)
    assert a.checksum() == b.checksum()
    assert a.checksum() != c.checksum()


def test_random_init_scale_bound():
    spec = parse_model_id("C8I", "V2")
    weights = random_init(spec, 0)
    w = weights["pre.weight"]
    fan_in = 80 * 7
    assert np.abs(w).max() <= 1.0 / np.sqrt(fan_in)
    assert w.shape == (128, 80, 7)


def test_random_init_platform_frozen_stream():
    # first values of the (seed 0, "pre.weight") stream, frozen once
    spec = parse_model_id("C8I", "V2")
    w = random_init(spec, 0)["pre.weight"].ravel()
    frozen = np.array(
        [0.029682066291570663, -0.021984567865729332, -0.016060875728726387],
        dtype=np.float32,
    )
    assert np.array_equal(w[:3], frozen)


# -- forward ----------------------------------------------------------------------

@settings(max_examples=10, deadline=None)
@given(
    frames=st.integers(1, 48),
    model_id=st.sampled_from(FIG3_MODEL_IDS),
)
def test_output_length_is_frames_times_hop(frames, model_id):
    spec = parse_model_id(model_id, "V2")
    weights = random_init(spec, 0)
    mel = default_bench_mel(frames=frames, seed=1)
    assert len(forward(mel, weights, spec)) == frames * 256


def test_zero_weights_give_unit_magnitude_zero_phase(backend):
    spec = parse_model_id("C8C8I", "V2")
    schedule = build_shape_schedule(spec)
    weights = GeneratorWeights({
        name: np.zeros(shape, dtype=np.float32)
        for name, shape in schedule.tensor_entries()
    })
    mel = default_bench_mel(frames=3, seed=2)
    out = forward(mel, weights, spec)

    head = spec.head_config
    ones = ComplexSpectrogram(np.ones((head.bins, 3 * 64), dtype=complex), head)
    expected = istft(ones, head, target_len=3 * 256, sample_rate=mel.sample_rate)
    assert np.array_equal(out.samples, expected.samples)


def test_head_contract(backend):
    spec = parse_model_id("C8C8I", "V2")
    weights = random_init(spec, 5)
    mel = default_bench_mel(frames=4, seed=3)
    mag, phase = head_spectra(mel, weights, spec)
    assert mag.data.shape == (9, 256)
    assert (mag.data > 0).all()
    assert (np.abs(phase.data) <= 1.0).all()


def test_forward_deterministic(backend):
    spec = parse_model_id("C8I", "V2")
    weights = random_init(spec, 0)
    mel = default_bench_mel(frames=5, seed=4)
    a = forward(mel, weights, spec)
    b = forward(mel, weights, spec)
    assert np.array_equal(a.samples, b.samples)


def test_istft_and_waveform_heads_share_output_shape(backend):
    mel = default_bench_mel(frames=6, seed=5)
    for model_id in ("C8C8I", "C8C8C2C2"):
        spec = parse_model_id(model_id, "V2")
        out = forward(mel, random_init(spec, 7), spec)
        assert len(out) == 6 * 256
        assert np.isfinite(out.samples).all()


def test_weight_shape_mismatch_names_tensor():
    spec = parse_model_id("C8I", "V2")
    weights = random_init(spec, 0)
    tensors = dict(weights.tensors)
    tensors["post.weight"] = tensors["post.weight"][:2]
    broken = GeneratorWeights(tensors)
    mel = default_bench_mel(frames=2, seed=0)
    with pytest.raises(ValueError, match="post.weight"):
        forward(mel, broken, spec)


def test_missing_tensor_names_tensor():
    spec = parse_model_id("C8I", "V2")
    tensors = dict(random_init(spec, 0).tensors)
    del tensors["up0.weight"]
    mel = default_bench_mel(frames=2, seed=0)
    with pytest.raises(ValueError, match="up0.weight"):
        forward(mel, GeneratorWeights(tensors), spec)


def test_wrong_mel_rows_rejected():
    spec = parse_model_id("C8I", "V2")
    weights = random_init(spec, 0)
    from melvoc.dsp import MelSpectrogram

    bad = MelSpectrogram(np.zeros((81, 4), dtype=np.float32), 22050, 256)
    with pytest.raises(ValueError, match="80"):
        forward(bad, weights, spec)


def test_non_finite_head_raises_numeric_error():
    spec = parse_model_id("C8C8I", "V2")
    tensors = dict(random_init(spec, 0).tensors)
    bias = tensors["post.bias"].copy()
    bias[:] = 1e5  # exp(1e5) overflows
    tensors["post.bias"] = bias
    mel = default_bench_mel(frames=2, seed=0)
    with pytest.raises(NumericError):
        forward(mel, GeneratorWeights(tensors), spec)
