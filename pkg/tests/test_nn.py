import numpy as np
import pytest

from melvoc.nn import (
    ConvParams,
    FeatureMap,
    ResBlockParams,
    _conv1d_fused,
    conv1d,
    conv_transpose1d,
    exp_map,
    leaky_relu,
    resblock_mrf,
    sin_map,
    tanh_map,
)

from oracles import conv1d_direct, conv_transpose1d_direct, random_conv_case


def conv_params(w, b, **kw):
    out_ch, in_ch, kernel = w.shape
    return ConvParams(in_ch, out_ch, kernel, weight=w, bias=b, **kw)


def tconv_params(w, b, **kw):
    in_ch, out_ch, kernel = w.shape
    return ConvParams(in_ch, out_ch, kernel, weight=w, bias=b, **kw)


def test_identity_kernel_passes_input_through(backend, rng):
    x = FeatureMap(rng.standard_normal((1, 20)))
    p = conv_params(np.ones((1, 1, 1), dtype=np.float32), np.zeros(1, dtype=np.float32))
    assert np.array_equal(conv1d(x, p).data, x.data)


def test_adjacent_sums(backend):
    x = FeatureMap(np.array([[1.0, 2.0, 3.0, 4.0]]))
    p = conv_params(np.ones((1, 1, 2), dtype=np.float32), np.zeros(1, dtype=np.float32))
    assert np.array_equal(conv1d(x, p).data, [[3.0, 5.0, 7.0]])


def test_conv_matches_direct_oracle_dilated(backend, rng):
    x = rng.standard_normal((4, 32))
    w = rng.standard_normal((4, 4, 3)).astype(np.float32)
    b = rng.standard_normal(4).astype(np.float32)
    got = conv1d(FeatureMap(x), conv_params(w, b, dilation=3, padding=3)).data
    want = conv1d_direct(x, w, b, dilation=3, padding=3)
    assert got.shape == want.shape
    assert np.abs(got - want).max() < 1e-9


def test_conv_randomized_oracle(backend, rng):
    for _ in range(25):
        x, w, b, stride, dilation, padding = random_conv_case(rng)
        got = conv1d(
            FeatureMap(x),
            conv_params(w, b, stride=stride, dilation=dilation, padding=padding),
        ).data
        want = conv1d_direct(x, w, b, stride, dilation, padding)
        assert got.shape == want.shape
        assert np.abs(got - want).max() < 1e-9


def test_nearest_neighbor_duplication(backend):
    x = FeatureMap(np.array([[1.0, 2.0]]))
    p = tconv_params(np.ones((1, 1, 2), dtype=np.float32), np.zeros(1, dtype=np.float32), stride=2)
    assert np.array_equal(conv_transpose1d(x, p).data, [[1.0, 1.0, 2.0, 2.0]])


def test_single_frame_copies_kernel(backend):
    w = np.array([[[2.0, -1.0, 0.5]]], dtype=np.float32)
    x = FeatureMap(np.array([[1.0]]))
    p = tconv_params(w, np.zeros(1, dtype=np.float32))
    assert np.allclose(conv_transpose1d(x, p).data, [[2.0, -1.0, 0.5]])


def test_tconv_upsampling_shape_and_oracle(backend, rng):
    x = rng.standard_normal((8, 16))
    w = rng.standard_normal((8, 4, 16)).astype(np.float32)
    b = rng.standard_normal(4).astype(np.float32)
    got = conv_transpose1d(FeatureMap(x), tconv_params(w, b, stride=8, padding=4)).data
    assert got.shape == (4, 128)
    want = conv_transpose1d_direct(x, w, b, stride=8, padding=4)
    assert np.abs(got - want).max() < 1e-9


def test_tconv_randomized_oracle(backend, rng):
    for _ in range(25):
        x, w, b, stride, padding = random_conv_case(rng, transposed=True)
        got = conv_transpose1d(
            FeatureMap(x), tconv_params(w, b, stride=stride, padding=padding)
        ).data
        want = conv_transpose1d_direct(x, w, b, stride, padding)
        assert got.shape == want.shape
        assert np.abs(got - want).max() < 1e-9


def test_adjoint_identity(backend, rng):
    # <conv(x), g> == <x, conv_transpose(g)> with shared weights, zero bias
    for _ in range(20):
        in_ch = int(rng.integers(1, 7))
        out_ch = int(rng.integers(1, 7))
        kernel = int(rng.integers(1, 9))
        stride = int(rng.integers(1, 5))
        padding = int(rng.integers(0, kernel))
        # pick frames so the transposed output length matches exactly
        t_out = int(rng.integers(1, 20))
        frames = (t_out - 1) * stride + kernel - 2 * padding
        if frames < 1:
            continue
        x = rng.standard_normal((in_ch, frames))
        g = rng.standard_normal((out_ch, t_out))
        w = rng.standard_normal((out_ch, in_ch, kernel)).astype(np.float32)
        zero_out = np.zeros(out_ch, dtype=np.float32)
        zero_in = np.zeros(in_ch, dtype=np.float32)

        y = conv1d(
            FeatureMap(x),
            ConvParams(in_ch, out_ch, kernel, stride=stride, padding=padding,
                       weight=w, bias=zero_out),
        ).data
        assert y.shape == g.shape
        xt = conv_transpose1d(
            FeatureMap(g),
            ConvParams(out_ch, in_ch, kernel, stride=stride, padding=padding,
                       weight=w, bias=zero_in),
        ).data
        assert xt.shape == x.shape
        lhs = float(np.sum(y * g))
        rhs = float(np.sum(x * xt))
        assert abs(lhs - rhs) <= 1e-7 * max(1.0, abs(lhs))


def test_stride1_translation_equivariance(backend, rng):
    x = rng.standard_normal((3, 48))
    shifted = np.concatenate([np.zeros((3, 1)), x[:, :-1]], axis=1)
    w = rng.standard_normal((2, 3, 5)).astype(np.float32)
    b = rng.standard_normal(2).astype(np.float32)
    p = conv_params(w, b, padding=2)
    out = conv1d(FeatureMap(x), p).data
    out_shifted = conv1d(FeatureMap(shifted), p).data
    span = 5
    assert np.array_equal(out_shifted[:, span + 1 : -span], out[:, span : -span - 1])


def test_channel_mismatch_rejected(backend, rng):
    x = FeatureMap(rng.standard_normal((3, 10)))
    p = conv_params(
        rng.standard_normal((2, 4, 3)).astype(np.float32),
        np.zeros(2, dtype=np.float32),
    )
    with pytest.raises(ValueError, match="channels"):
        conv1d(x, p)


def test_empty_output_rejected(backend, rng):
    x = FeatureMap(rng.standard_normal((1, 3)))
    p = conv_params(
        rng.standard_normal((1, 1, 8)).astype(np.float32),
        np.zeros(1, dtype=np.float32),
    )
    with pytest.raises(ValueError, match="empty"):
        conv1d(x, p)


# -- activations --------------------------------------------------------------

def test_leaky_relu_examples():
    x = FeatureMap(np.array([[1.0, -1.0]]))
    assert np.array_equal(leaky_relu(x, 0.1).data, [[1.0, -0.1]])
    nonneg = FeatureMap(np.array([[0.0, 2.0, 5.0]]))
    assert np.array_equal(leaky_relu(nonneg).data, nonneg.data)
    assert leaky_relu(x, 0.0).data.min() >= 0.0


def test_elementwise_maps():
    fm = FeatureMap(np.array([[0.0, np.pi / 2]]))
    assert np.allclose(exp_map(FeatureMap(np.array([[0.0]]))).data, [[1.0]])
    assert np.allclose(sin_map(fm).data, [[0.0, 1.0]], atol=1e-15)
    assert tanh_map(FeatureMap(np.array([[0.0]]))).data[0, 0] == 0.0
    assert (exp_map(FeatureMap(np.array([[-50.0, 0.0, 3.0]]))).data > 0).all()


# -- residual blocks ----------------------------------------------------------

def zero_resblock(channels, kernel, dilations):
    pairs = []
    for d in dilations:
        w = np.zeros((channels, channels, kernel), dtype=np.float32)
        b = np.zeros(channels, dtype=np.float32)
        pairs.append((
            ConvParams(channels, channels, kernel, dilation=d,
                       padding=d * (kernel - 1) // 2, weight=w, bias=b),
            ConvParams(channels, channels, kernel, dilation=1,
                       padding=(kernel - 1) // 2, weight=w, bias=b),
        ))
    return ResBlockParams(kernel, tuple(dilations), tuple(pairs))


def test_zero_weights_give_identity(backend, rng):
    x = FeatureMap(rng.standard_normal((4, 12)))
    blocks = [zero_resblock(4, k, (1, 3, 5)) for k in (3, 7, 11)]
    assert np.array_equal(resblock_mrf(x, blocks).data, x.data)


def test_single_block_matches_oracle_composition(backend, rng):
    channels, kernel, d = 1, 3, 2
    x = rng.standard_normal((channels, 4))
    w1 = rng.standard_normal((channels, channels, kernel)).astype(np.float32)
    b1 = rng.standard_normal(channels).astype(np.float32)
    w2 = rng.standard_normal((channels, channels, kernel)).astype(np.float32)
    b2 = rng.standard_normal(channels).astype(np.float32)
    block = ResBlockParams(kernel, (d,), ((
        ConvParams(channels, channels, kernel, dilation=d, padding=d, weight=w1, bias=b1),
        ConvParams(channels, channels, kernel, dilation=1, padding=1, weight=w2, bias=b2),
    ),))

    def leak(v):
        return np.where(v >= 0, v, 0.1 * v)

    t = conv1d_direct(leak(x), w1, b1, dilation=d, padding=d)
    t = conv1d_direct(leak(t), w2, b2, dilation=1, padding=1)
    expected = x + t

    got = resblock_mrf(FeatureMap(x), [block]).data
    assert np.abs(got - expected).max() < 1e-9


def test_resblock_preserves_frame_count(backend, rng):
    x = FeatureMap(rng.standard_normal((2, 17)))
    for kernel, d in [(3, 5), (7, 3), (11, 1)]:
        w = (0.01 * rng.standard_normal((2, 2, kernel))).astype(np.float32)
        b = np.zeros(2, dtype=np.float32)
        block = ResBlockParams(kernel, (d,), ((
            ConvParams(2, 2, kernel, dilation=d, padding=d * (kernel - 1) // 2, weight=w, bias=b),
            ConvParams(2, 2, kernel, dilation=1, padding=(kernel - 1) // 2, weight=w, bias=b),
        ),))
        out = resblock_mrf(x, [block])
        assert out.frames == x.frames


def test_mrf_is_mean_over_blocks(backend, rng):
    x = FeatureMap(rng.standard_normal((2, 8)))
    blocks = []
    for kernel in (3, 5):
        w = rng.standard_normal((2, 2, kernel)).astype(np.float32)
        b = rng.standard_normal(2).astype(np.float32)
        blocks.append(ResBlockParams(kernel, (1,), ((
            ConvParams(2, 2, kernel, dilation=1, padding=(kernel - 1) // 2, weight=w, bias=b),
            ConvParams(2, 2, kernel, dilation=1, padding=(kernel - 1) // 2, weight=w, bias=b),
        ),)))
    from melvoc.nn import resblock

    separate = [resblock(x, blk).data for blk in blocks]
    fused = resblock_mrf(x, blocks).data
    assert np.abs(fused - (separate[0] + separate[1]) / 2).max() < 1e-12


def test_fused_equals_composed_bitwise(backend, rng):
    x = FeatureMap(rng.standard_normal((8, 64)))
    res = FeatureMap(rng.standard_normal((8, 64)))
    p = conv_params(
        rng.standard_normal((8, 8, 5)).astype(np.float32),
        rng.standard_normal(8).astype(np.float32),
        dilation=2, padding=4,
    )
    fused = _conv1d_fused(x, p, leaky_slope=0.1, residual=res).data
    composed = conv1d(leaky_relu(x, 0.1), p).data + res.data
    assert np.array_equal(fused, composed)


def test_featuremap_rejects_non_finite():
    with pytest.raises(ValueError):
        FeatureMap(np.array([[np.nan, 1.0]]))
