# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: co-occurrence counting, im2col/col2im, max pooling.

Same contract as coocnet._kernels_py; results must be bit-exact against it.
"""

import numpy as np

cimport cython
cimport numpy as cnp

ctypedef fused floating:
    float
    double


def cooc_counts(const unsigned char[:, :] channel, int dy, int dx, int bins):
    cdef int h = channel.shape[0]
    cdef int w = channel.shape[1]
    cdef int y0 = -dy if dy < 0 else 0
    cdef int y1 = h - (dy if dy > 0 else 0)
    cdef int x0 = -dx if dx < 0 else 0
    cdef int x1 = w - (dx if dx > 0 else 0)
    cdef int shift = 256 // bins
    cdef cnp.ndarray[cnp.int64_t, ndim=2] counts = np.zeros((bins, bins), dtype=np.int64)
    cdef long long[:, ::1] cv = counts
    cdef int y, x
    with nogil:
        for y in range(y0, y1):
            for x in range(x0, x1):
                cv[channel[y, x] // shift, channel[y + dy, x + dx] // shift] += 1
    return counts


def im2col_rows(floating[:, :, :] xp, int k, int y0, int y1, int width, floating[:, ::1] out):
    cdef int c = xp.shape[0]
    cdef int y, x, ci, ki, kj, row, col
    with nogil:
        for y in range(y0, y1):
            for x in range(width):
                row = (y - y0) * width + x
                col = 0
                for ci in range(c):
                    for ki in range(k):
                        for kj in range(k):
                            out[row, col] = xp[ci, y + ki, x + kj]
                            col += 1


def col2im_rows_add(floating[:, ::1] cols, floating[:, :, :] gp, int k, int y0, int y1, int width):
    # (ki, kj)-major accumulation to match the numpy fallback bit-for-bit.
    cdef int c = gp.shape[0]
    cdef int kk = k * k
    cdef int y, x, ci, ki, kj
    with nogil:
        for ki in range(k):
            for kj in range(k):
                for ci in range(c):
                    for y in range(y0, y1):
                        for x in range(width):
                            gp[ci, y + ki, x + kj] += cols[(y - y0) * width + x, ci * kk + ki * k + kj]


def maxpool2_forward(floating[:, :, :] x, floating[:, :, ::1] out, unsigned char[:, :, ::1] idx):
    cdef int c = x.shape[0]
    cdef int oh = x.shape[1] // 2
    cdef int ow = x.shape[2] // 2
    cdef int ci, y, x_, j, best
    cdef floating v, b
    with nogil:
        for ci in range(c):
            for y in range(oh):
                for x_ in range(ow):
                    best = 0
                    b = x[ci, 2 * y, 2 * x_]
                    v = x[ci, 2 * y, 2 * x_ + 1]
                    if v > b:
                        b = v
                        best = 1
                    v = x[ci, 2 * y + 1, 2 * x_]
                    if v > b:
                        b = v
                        best = 2
                    v = x[ci, 2 * y + 1, 2 * x_ + 1]
                    if v > b:
                        b = v
                        best = 3
                    out[ci, y, x_] = b
                    idx[ci, y, x_] = <unsigned char>best


def maxpool2_backward(floating[:, :, :] dout, const unsigned char[:, :, :] idx, floating[:, :, ::1] dx):
    cdef int c = dout.shape[0]
    cdef int oh = dout.shape[1]
    cdef int ow = dout.shape[2]
    cdef int h = dx.shape[1]
    cdef int w = dx.shape[2]
    cdef int ci, y, x_, j
    with nogil:
        for ci in range(c):
            for y in range(h):
                for x_ in range(w):
                    dx[ci, y, x_] = 0
        for ci in range(c):
            for y in range(oh):
                for x_ in range(ow):
                    j = idx[ci, y, x_]
                    dx[ci, 2 * y + (j >> 1), 2 * x_ + (j & 1)] = dout[ci, y, x_]
