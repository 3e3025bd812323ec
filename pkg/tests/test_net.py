import math

import numpy as np
import pytest

from coocnet import net
from coocnet.errors import NonFiniteActivation, ShapeMismatch
from coocnet.net import ops
from coocnet.net.spec import (
    NetworkSpec,
    conv,
    dense,
    flatten,
    layer_shapes,
    maxpool,
    relu,
    sigmoid,
    zero_params,
)
from oracles import naive_conv2d, naive_maxpool


def small_spec(bins=32):
    return net.default_network_spec(bins=bins)


# --- spec / shapes -------------------------------------------------------------

def test_default_stack_shapes_b32():
    spec = small_spec(32)
    shapes = layer_shapes(spec)
    # pool outputs shrink 32 -> 16 -> 8 -> 4; flatten = 128*4*4
    pool_shapes = [s for s, layer in zip(shapes, spec.layers) if layer.kind == "maxpool"]
    assert pool_shapes == [(32, 16, 16), (64, 8, 8), (128, 4, 4)]
    flat = [s for s, layer in zip(shapes, spec.layers) if layer.kind == "flatten"]
    assert flat == [(2048,)]
    assert shapes[-1] == (1,)


def test_inconsistent_specs_rejected():
    with pytest.raises(ShapeMismatch):
        NetworkSpec(layers=(dense(4), sigmoid()), input_shape=(3, 8, 8))
    with pytest.raises(ShapeMismatch):
        NetworkSpec(layers=(conv(8, 3), flatten(), dense(1)), input_shape=(3, 8, 8))
    with pytest.raises(ShapeMismatch):  # head must be a single unit
        NetworkSpec(layers=(flatten(), dense(2), sigmoid()), input_shape=(3, 4, 4))


# --- initialization ------------------------------------------------------------

def test_init_deterministic_and_zero_biases():
    spec = small_spec()
    a = net.init_params(spec, seed=99)
    b = net.init_params(spec, seed=99)
    c = net.init_params(spec, seed=100)
    for pa, pb in zip(a, b):
        for k in pa:
            assert np.array_equal(pa[k], pb[k])
    assert any(not np.array_equal(pa["w"], pc["w"])
               for pa, pc in zip(a, c) if "w" in pa)
    for p in a:
        if "b" in p:
            assert not p["b"].any()


def test_init_he_stddev():
    spec = small_spec()
    params = net.init_params(spec, seed=5)
    # the 128-filter 5x5 conv gives the largest sample of draws
    idx = [i for i, layer in enumerate(spec.layers)
           if layer.kind == "conv" and layer.channels == 128 and layer.kernel == 5]
    w = params[idx[0]]["w"]
    fan_in = w.shape[1] * w.shape[2] * w.shape[3]
    expect = math.sqrt(2.0 / fan_in)
    assert abs(w.std() - expect) / expect < 0.10


# --- forward -------------------------------------------------------------------

def test_zero_model_outputs_exactly_half(rng):
    spec = small_spec()
    zp = zero_params(spec)
    for _ in range(3):
        x = rng.random((3, 32, 32), dtype=np.float32)
        assert net.forward(zp, spec, x) == 0.5


def test_forward_in_open_interval_and_deterministic(rng):
    spec = small_spec()
    params = net.init_params(spec, seed=1)
    x = rng.random((3, 32, 32), dtype=np.float32)
    p1 = net.forward(params, spec, x)
    p2 = net.forward(params, spec, x)
    assert 0.0 < p1 < 1.0
    assert p1 == p2


def test_forward_shape_mismatch(rng):
    spec = small_spec()
    params = net.init_params(spec, seed=1)
    with pytest.raises(ShapeMismatch):
        net.forward(params, spec, rng.random((3, 16, 16), dtype=np.float32))


def test_forward_rejects_nonfinite_weights(rng):
    spec = small_spec()
    params = net.init_params(spec, seed=1)
    params[0]["w"][0, 0, 0, 0] = np.inf
    with np.errstate(invalid="ignore"), pytest.raises(NonFiniteActivation):
        net.forward(params, spec, rng.random((3, 32, 32), dtype=np.float32))


def test_conv_layer_matches_hand_convolution(rng):
    # single 3x3 conv on a known 3-channel 4x4 input vs the loop oracle
    x = rng.random((3, 4, 4)).astype(np.float64)
    w = rng.standard_normal((2, 3, 3, 3)).astype(np.float64)
    b = np.array([0.25, -1.0])
    got = ops.conv2d_forward(x, w, b)
    want = naive_conv2d(x, w, b)
    assert np.allclose(got, want, rtol=1e-12, atol=1e-12)


def test_conv_larger_against_oracle(rng):
    x = rng.random((4, 7, 9)).astype(np.float64)
    w = rng.standard_normal((3, 4, 5, 5)).astype(np.float64)
    b = rng.standard_normal(3)
    assert np.allclose(ops.conv2d_forward(x, w, b), naive_conv2d(x, w, b),
                       rtol=1e-11, atol=1e-11)


def test_bias_free_conv_is_linear(rng):
    x = rng.random((3, 8, 8)).astype(np.float64)
    w = rng.standard_normal((4, 3, 3, 3))
    b = np.zeros(4)
    one = ops.conv2d_forward(x, w, b)
    two = ops.conv2d_forward(2.0 * x, w, b)
    assert np.allclose(two, 2.0 * one, rtol=1e-12, atol=1e-12)


def test_maxpool_matches_oracle(rng):
    x = rng.random((5, 12, 14)).astype(np.float32)
    out, _ = ops.maxpool_forward(x)
    assert np.array_equal(out, naive_maxpool(x))


def test_maxpool_gradient_hits_only_argmax(rng):
    x = rng.random((2, 6, 6)).astype(np.float64)
    out, idx = ops.maxpool_forward(x)
    dout = np.ones_like(out)
    dx = ops.maxpool_backward(dout, idx, x.shape)
    # exactly one nonzero cell per window, located at the window max
    assert int((dx != 0).sum()) == out.size
    assert np.allclose(np.where(dx != 0, x, -np.inf).reshape(2, 3, 2, 3, 2).max(axis=(2, 4)),
                       out)


def test_relu_kills_gradient_below_zero(rng):
    x = rng.standard_normal((3, 5, 5))
    dout = rng.standard_normal((3, 5, 5))
    dx = ops.relu_backward(x, dout)
    assert (dx[x < 0] == 0).all()
    assert np.array_equal(dx[x > 0], dout[x > 0])


# --- loss ----------------------------------------------------------------------

def test_bce_values():
    assert abs(net.bce_loss(0.5, 1) - math.log(2)) < 1e-12
    assert abs(net.bce_loss(0.5, 0) - math.log(2)) < 1e-12
    assert abs(net.bce_loss(0.9, 1) + math.log(0.9)) < 1e-12
    # clamp keeps extreme predictions finite
    assert np.isfinite(net.bce_loss(0.0, 1))
    assert np.isfinite(net.bce_loss(1.0, 0))


# --- batched helpers ------------------------------------------------------------

def test_predict_batch_matches_forward(rng):
    spec = small_spec()
    params = net.init_params(spec, seed=1)
    xs = [rng.random((3, 32, 32), dtype=np.float32) for _ in range(5)]
    probs = net.predict_batch(params, spec, xs, workers=3)
    assert np.array_equal(probs, [net.forward(params, spec, x) for x in xs])


def test_batch_gradients_mean_of_single_grads(rng):
    spec = small_spec()
    params = net.init_params(spec, seed=2)
    xs = [rng.random((3, 32, 32), dtype=np.float32) for _ in range(3)]
    ys = [1.0, 0.0, 1.0]
    loss, grads, correct = net.batch_gradients(params, spec, xs, ys)
    singles = [net.backward(params, spec, x, y) for x, y in zip(xs, ys)]
    for i, g in enumerate(grads):
        for k in g:
            want = np.mean([s[i][k].astype(np.float64) for s in singles], axis=0)
            assert np.allclose(g[k], want, rtol=1e-6, atol=1e-9)
    want_loss = np.mean([net.bce_loss(net.forward(params, spec, x), y)
                         for x, y in zip(xs, ys)])
    assert abs(loss - want_loss) < 1e-12
    assert 0 <= correct <= 3


def test_batch_gradients_worker_counts_agree(rng):
    spec = small_spec()
    params = net.init_params(spec, seed=3)
    xs = [rng.random((3, 32, 32), dtype=np.float32) for _ in range(10)]
    ys = [float(i % 2) for i in range(10)]
    l1, g1, c1 = net.batch_gradients(params, spec, xs, ys, workers=1)
    l4, g4, c4 = net.batch_gradients(params, spec, xs, ys, workers=4)
    assert c1 == c4
    assert abs(l1 - l4) <= 1e-12 * max(1.0, abs(l1))
    for a, b in zip(g1, g4):
        for k in a:
            denom = np.maximum(np.maximum(np.abs(a[k]), np.abs(b[k])), 1e-8)
            assert float((np.abs(a[k] - b[k]) / denom).max()) < 1e-5
