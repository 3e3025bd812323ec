"""Single-image layer operations built on the backend kernels.

Convolutions use im2col plus a GEMM, processed in horizontal bands so the
unfolded patch buffer stays under a fixed element budget regardless of the
input resolution. Forward and backward walk the bands in the same order, so
results do not depend on the budget-derived band height for a given shape.
"""

import numpy as np

from ..backend import kernels
from ..errors import ShapeMismatch

# im2col scratch size in elements; ~32 MB of float32 at the default budget.
COLS_BUDGET = 8_000_000


def _band_height(height, width, c, k):
    per_row = width * c * k * k
    return max(1, min(height, COLS_BUDGET // max(per_row, 1)))


def conv2d_forward(x, w, b):
    """Stride-1 convolution with zero 'same' padding.

    x: (C, H, W), w: (O, C, k, k), b: (O,) -> (O, H, W)
    """
    c, h, wd = x.shape
    o, cw, k, k2 = w.shape
    if cw != c or k != k2 or k % 2 != 1:
        raise ShapeMismatch(f"conv weights {w.shape} do not match input {x.shape}")
    pad = k // 2
    xp = np.zeros((c, h + 2 * pad, wd + 2 * pad), dtype=x.dtype)
    xp[:, pad:pad + h, pad:pad + wd] = x

    wm = np.ascontiguousarray(w.reshape(o, c * k * k))
    out = np.empty((o, h, wd), dtype=x.dtype)
    band = _band_height(h, wd, c, k)
    cols = np.empty((band * wd, c * k * k), dtype=x.dtype)
    ker = kernels()
    for y0 in range(0, h, band):
        y1 = min(y0 + band, h)
        cv = cols[: (y1 - y0) * wd]
        ker.im2col_rows(xp, k, y0, y1, wd, cv)
        out[:, y0:y1, :] = (cv @ wm.T).T.reshape(o, y1 - y0, wd)
    out += b[:, None, None]
    return out


def conv2d_backward(x, w, dout):
    """Gradients of conv2d_forward; returns (dx, dw, db).

    Patches are re-unfolded band by band rather than cached from the forward
    pass, trading FLOPs for a flat memory profile.
    """
    c, h, wd = x.shape
    o, _, k, _ = w.shape
    pad = k // 2
    xp = np.zeros((c, h + 2 * pad, wd + 2 * pad), dtype=x.dtype)
    xp[:, pad:pad + h, pad:pad + wd] = x

    wm = np.ascontiguousarray(w.reshape(o, c * k * k))
    db = dout.sum(axis=(1, 2))
    dwm = np.zeros((o, c * k * k), dtype=x.dtype)
    gp = np.zeros_like(xp)
    band = _band_height(h, wd, c, k)
    cols = np.empty((band * wd, c * k * k), dtype=x.dtype)
    ker = kernels()
    for y0 in range(0, h, band):
        y1 = min(y0 + band, h)
        cv = cols[: (y1 - y0) * wd]
        ker.im2col_rows(xp, k, y0, y1, wd, cv)
        dband = np.ascontiguousarray(dout[:, y0:y1, :].reshape(o, (y1 - y0) * wd))
        dwm += dband @ cv
        ker.col2im_rows_add(dband.T @ wm, gp, k, y0, y1, wd)
    dx = gp[:, pad:pad + h, pad:pad + wd].copy()
    return dx, dwm.reshape(w.shape), db


def dense_forward(x, w, b):
    """x: (F,), w: (F, U), b: (U,) -> (U,)"""
    if x.shape[0] != w.shape[0]:
        raise ShapeMismatch(f"dense weights {w.shape} do not match input {x.shape}")
    return x @ w + b


def dense_backward(x, w, dout):
    dx = w @ dout
    dw = np.outer(x, dout)
    return dx, dw, dout.copy()


def relu_forward(x):
    return np.maximum(x, 0)


def relu_backward(x, dout):
    return dout * (x > 0)


def maxpool_forward(x):
    """2x2 stride-2 max pooling; returns (out, idx) with idx the uint8
    within-window argmax used by the backward pass."""
    c, h, w = x.shape
    if h < 2 or w < 2:
        raise ShapeMismatch(f"feature map {x.shape} too small to pool")
    out = np.empty((c, h // 2, w // 2), dtype=x.dtype)
    idx = np.empty((c, h // 2, w // 2), dtype=np.uint8)
    kernels().maxpool2_forward(x, out, idx)
    return out, idx


def maxpool_backward(dout, idx, in_shape):
    dx = np.empty(in_shape, dtype=dout.dtype)
    kernels().maxpool2_backward(dout, idx, dx)
    return dx


def sigmoid_scalar(z):
    """Logistic function of a scalar logit, evaluated in float64.

    The result is clamped to the open interval (0, 1) so downstream logs are
    finite even when the logit saturates single precision.
    """
    z = float(z)
    if z >= 0:
        p = 1.0 / (1.0 + np.exp(-z))
    else:
        ez = np.exp(z)
        p = ez / (1.0 + ez)
    return float(min(max(p, 1e-12), 1.0 - 1e-12))
