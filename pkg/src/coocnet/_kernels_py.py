"""Numpy implementations of the hot kernels.

Mirror of the compiled module `coocnet._kernels`; the two are interchangeable
and bit-exact against each other (see tests/test_backends.py). All functions
operate on a single image (channel-first) and write into caller-provided
output buffers so that allocation stays in one place.
"""

import numpy as np


def cooc_counts(channel, dy, dx, bins):
    """Count intensity pairs at offset (dy, dx) in one channel.

    Returns an int64 (bins, bins) matrix; entry (i, j) counts pixels p with
    bin(value[p]) == i and bin(value[p + (dy, dx)]) == j.
    """
    h, w = channel.shape
    y0, y1 = max(0, -dy), h - max(0, dy)
    x0, x1 = max(0, -dx), w - max(0, dx)
    a = channel[y0:y1, x0:x1]
    b = channel[y0 + dy:y1 + dy, x0 + dx:x1 + dx]
    shift = 256 // bins
    pair = (a.astype(np.int64) // shift) * bins + b.astype(np.int64) // shift
    counts = np.bincount(pair.ravel(), minlength=bins * bins)
    return counts.reshape(bins, bins)


def im2col_rows(xp, k, y0, y1, width, out):
    """Unfold k x k patches of a zero-padded image into rows of `out`.

    xp is the padded image (C, H + k - 1, W + k - 1); rows y0..y1 of the
    unpadded image are unfolded. out has shape ((y1 - y0) * width, C*k*k)
    with columns ordered (channel, ki, kj).
    """
    c = xp.shape[0]
    win = np.lib.stride_tricks.sliding_window_view(
        xp[:, y0:y1 + k - 1, :], (k, k), axis=(1, 2)
    )
    out.reshape(y1 - y0, width, c, k, k)[...] = win.transpose(1, 2, 0, 3, 4)


def col2im_rows_add(cols, gp, k, y0, y1, width):
    """Scatter-add patch rows back into the padded gradient image `gp`.

    Exact adjoint of im2col_rows. Contributions are accumulated in
    (ki, kj)-major order; the compiled kernel uses the same order so the
    two backends round identically.
    """
    c = gp.shape[0]
    v = cols.reshape(y1 - y0, width, c, k, k)
    rows = y1 - y0
    for ki in range(k):
        for kj in range(k):
            gp[:, y0 + ki:y0 + ki + rows, kj:kj + width] += v[:, :, :, ki, kj].transpose(2, 0, 1)


def maxpool2_forward(x, out, idx):
    """2x2 stride-2 max pooling of one image (C, H, W).

    Writes the pooled values into `out` (C, H//2, W//2) and the within-window
    argmax (0..3, first maximum, window scanned row-major) into `idx`.
    """
    c, h, w = x.shape
    oh, ow = h // 2, w // 2
    v = (
        x[:, :oh * 2, :ow * 2]
        .reshape(c, oh, 2, ow, 2)
        .transpose(0, 1, 3, 2, 4)
        .reshape(c, oh, ow, 4)
    )
    am = v.argmax(axis=3)
    idx[...] = am.astype(np.uint8)
    out[...] = np.take_along_axis(v, am[..., None], axis=3)[..., 0]


def maxpool2_backward(dout, idx, dx):
    """Route pooled gradients back to the argmax positions recorded by
    maxpool2_forward. Fills `dx` completely (non-argmax cells get zero)."""
    c, oh, ow = dout.shape
    buf = np.zeros((c, oh, ow, 4), dtype=dx.dtype)
    np.put_along_axis(buf, idx[..., None].astype(np.intp), dout[..., None], axis=3)
    dx[...] = 0
    dx[:, :oh * 2, :ow * 2] = (
        buf.reshape(c, oh, ow, 2, 2)
        .transpose(0, 1, 3, 2, 4)
        .reshape(c, oh * 2, ow * 2)
    )
