"""Bit-exact parity between the compiled kernels and the numpy fallback."""

import numpy as np
import pytest

from coocnet import backend

pytestmark = pytest.mark.skipif(
    len(backend.available_backends()) < 2,
    reason="compiled backend not built; nothing to compare",
)


def _both(fn):
    out = {}
    for name in backend.available_backends():
        with backend.use_backend(name):
            out[name] = fn(backend.kernels())
    return out["python"], out["compiled"]


def test_cooc_counts_parity(rng):
    channel = rng.integers(0, 256, size=(37, 23), dtype=np.uint8)
    for dy in range(-2, 3):
        for dx in range(-2, 3):
            if dy == 0 and dx == 0:
                continue
            for bins in (16, 256):
                a, b = _both(lambda k: k.cooc_counts(channel, dy, dx, bins))
                assert np.array_equal(a, b), (dy, dx, bins)


@pytest.mark.parametrize("dtype", [np.float32, np.float64])
def test_im2col_parity(rng, dtype):
    k, c, h, w = 5, 7, 12, 9
    xp = rng.random((c, h + k - 1, w + k - 1)).astype(dtype)

    def run(ker):
        out = np.zeros((4 * w, c * k * k), dtype=dtype)
        ker.im2col_rows(xp, k, 3, 7, w, out)
        return out

    a, b = _both(run)
    assert np.array_equal(a, b)


@pytest.mark.parametrize("dtype", [np.float32, np.float64])
def test_col2im_parity(rng, dtype):
    k, c, h, w = 3, 4, 10, 8
    cols = rng.random((5 * w, c * k * k)).astype(dtype)

    def run(ker):
        gp = np.zeros((c, h + k - 1, w + k - 1), dtype=dtype)
        ker.col2im_rows_add(cols, gp, k, 2, 7, w)
        return gp

    a, b = _both(run)
    assert np.array_equal(a, b)


@pytest.mark.parametrize("dtype", [np.float32, np.float64])
def test_maxpool_parity(rng, dtype):
    x = rng.random((6, 14, 10)).astype(dtype)

    def fwd(ker):
        out = np.zeros((6, 7, 5), dtype=dtype)
        idx = np.zeros((6, 7, 5), dtype=np.uint8)
        ker.maxpool2_forward(x, out, idx)
        return out, idx

    (oa, ia), (ob, ib) = _both(fwd)
    assert np.array_equal(oa, ob)
    assert np.array_equal(ia, ib)

    dout = rng.random((6, 7, 5)).astype(dtype)

    def bwd(ker):
        out = np.zeros((6, 7, 5), dtype=dtype)
        idx = np.zeros((6, 7, 5), dtype=np.uint8)
        ker.maxpool2_forward(x, out, idx)
        dx = np.empty_like(x)
        ker.maxpool2_backward(dout, idx, dx)
        return dx

    a, b = _both(bwd)
    assert np.array_equal(a, b)


def test_maxpool_ties_take_first_window_position():
    # all-equal windows: both backends must report argmax 0
    x = np.ones((1, 4, 4), dtype=np.float32)

    def run(ker):
        out = np.zeros((1, 2, 2), dtype=np.float32)
        idx = np.zeros((1, 2, 2), dtype=np.uint8)
        ker.maxpool2_forward(x, out, idx)
        return idx

    a, b = _both(run)
    assert np.array_equal(a, b)
    assert (a == 0).all()


def test_backend_selection_roundtrip():
    import coocnet.backend as bk

    original = bk.active_backend()
    for name in bk.available_backends():
        with bk.use_backend(name):
            assert bk.active_backend() == name
    assert bk.active_backend() == original
    with pytest.raises(Exception):
        bk.set_backend("no-such-backend")
