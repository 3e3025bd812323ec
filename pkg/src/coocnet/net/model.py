"""Forward pass, loss, backpropagation and batched gradient evaluation."""

import concurrent.futures

import numpy as np

from ..errors import NonFiniteActivation, NonFiniteGradient, ShapeMismatch
from . import ops
from .spec import CONV, DENSE, FLATTEN, MAXPOOL, RELU, SIGMOID

BCE_EPS = 1e-7


def param_dtype(params):
    for p in params:
        if "w" in p:
            return p["w"].dtype
    return np.dtype(np.float32)


def _check_input(params, spec, x):
    if len(params) != len(spec.layers):
        raise ShapeMismatch(
            f"{len(params)} parameter entries for {len(spec.layers)} layers"
        )
    if tuple(x.shape) != tuple(spec.input_shape):
        raise ShapeMismatch(f"input {x.shape} does not match spec {spec.input_shape}")
    return np.ascontiguousarray(x, dtype=param_dtype(params))


def _forward_cache(params, spec, x):
    """Run the stack on one input; returns (probability, per-layer cache).

    The cache holds whatever each layer's backward pass needs: the layer
    input for conv/relu/dense, the argmax map for maxpool, the pre-flatten
    shape for flatten.
    """
    a = _check_input(params, spec, x)
    cache = []
    prob = None
    for layer, p in zip(spec.layers, params):
        if layer.kind == CONV:
            cache.append(a)
            a = ops.conv2d_forward(a, p["w"], p["b"])
            if not np.isfinite(a).all():
                raise NonFiniteActivation("non-finite convolution output")
        elif layer.kind == RELU:
            cache.append(a)
            a = ops.relu_forward(a)
        elif layer.kind == MAXPOOL:
            out, idx = ops.maxpool_forward(a)
            cache.append((idx, a.shape))
            a = out
        elif layer.kind == FLATTEN:
            cache.append(a.shape)
            a = a.reshape(-1)
        elif layer.kind == DENSE:
            cache.append(a)
            a = ops.dense_forward(a, p["w"], p["b"])
            if not np.isfinite(a).all():
                raise NonFiniteActivation("non-finite dense output")
        elif layer.kind == SIGMOID:
            cache.append(None)
            prob = ops.sigmoid_scalar(a[0])
    return prob, cache


def forward(params, spec, x):
    """Probability that `x` belongs to the positive class, in (0, 1)."""
    prob, _ = _forward_cache(params, spec, x)
    return prob


def bce_loss(prediction, label):
    """Binary cross-entropy of a probability against a 0/1 label.

    The prediction is clamped to [1e-7, 1-1e-7] so the logs stay finite.
    """
    p = min(max(float(prediction), BCE_EPS), 1.0 - BCE_EPS)
    y = float(label)
    return float(-(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))


def _backward_from_cache(params, spec, cache, prob, label):
    """Backpropagate the BCE gradient; returns ModelParams-shaped grads.

    The sigmoid and loss derivatives are folded into the usual p - y seed.
    """
    dtype = param_dtype(params)
    grads = [{} for _ in spec.layers]
    da = None
    for i in range(len(spec.layers) - 1, -1, -1):
        layer = spec.layers[i]
        if layer.kind == SIGMOID:
            da = np.array([prob - float(label)], dtype=dtype)
        elif layer.kind == DENSE:
            dx, dw, db = ops.dense_backward(cache[i], params[i]["w"], da)
            grads[i] = {"w": dw, "b": db}
            da = dx
        elif layer.kind == RELU:
            da = ops.relu_backward(cache[i], da)
        elif layer.kind == FLATTEN:
            da = da.reshape(cache[i])
        elif layer.kind == MAXPOOL:
            idx, in_shape = cache[i]
            da = ops.maxpool_backward(da, idx, in_shape)
        elif layer.kind == CONV:
            dx, dw, db = ops.conv2d_backward(cache[i], params[i]["w"], da)
            grads[i] = {"w": dw, "b": db}
            da = dx
    return grads


def backward(params, spec, x, label):
    """Gradient of bce_loss(forward(x), label) w.r.t. every parameter."""
    prob, cache = _forward_cache(params, spec, x)
    grads = _backward_from_cache(params, spec, cache, prob, label)
    for g in grads:
        for v in g.values():
            if not np.isfinite(v).all():
                raise NonFiniteGradient("non-finite parameter gradient")
    return grads


def _zero_accum(params):
    return [{k: np.zeros(v.shape, dtype=np.float64) for k, v in p.items()} for p in params]


def _chunk_stats(params, spec, xs, labels, lo, hi):
    """Loss sum, correct-prediction count and per-parameter gradient sums
    over samples lo..hi-1, accumulated in float64 in sample order."""
    acc = _zero_accum(params)
    loss = 0.0
    correct = 0
    for i in range(lo, hi):
        prob, cache = _forward_cache(params, spec, xs[i])
        loss += bce_loss(prob, labels[i])
        correct += int((prob >= 0.5) == (labels[i] >= 0.5))
        grads = _backward_from_cache(params, spec, cache, prob, labels[i])
        for a, g in zip(acc, grads):
            for k, v in g.items():
                a[k] += v
    return loss, correct, acc


def batch_gradients(params, spec, xs, labels, workers=1):
    """Mean loss, mean gradients and the number of threshold-0.5-correct
    predictions over a batch; returns (loss, grads, correct).

    Samples are split into contiguous chunks, one per worker, and each
    chunk's sums are accumulated in float64 in sample order; chunk results
    combine in chunk order. Results for different worker counts agree to
    float64 rounding, well inside the promised rel. 1e-5.
    """
    n = len(xs)
    if n == 0:
        raise ShapeMismatch("empty batch")
    if len(labels) != n:
        raise ShapeMismatch(f"{n} inputs but {len(labels)} labels")
    workers = max(1, min(int(workers), n))
    bounds = [(n * j) // workers for j in range(workers + 1)]
    ranges = [(bounds[j], bounds[j + 1]) for j in range(workers) if bounds[j] < bounds[j + 1]]

    if len(ranges) == 1:
        results = [_chunk_stats(params, spec, xs, labels, 0, n)]
    else:
        with concurrent.futures.ThreadPoolExecutor(max_workers=len(ranges)) as pool:
            results = list(
                pool.map(lambda r: _chunk_stats(params, spec, xs, labels, r[0], r[1]), ranges)
            )

    total_loss = 0.0
    total_correct = 0
    acc = _zero_accum(params)
    for loss, correct, chunk_acc in results:
        total_loss += loss
        total_correct += correct
        for a, c in zip(acc, chunk_acc):
            for k in a:
                a[k] += c[k]

    dtype = param_dtype(params)
    grads = [{k: (v / n).astype(dtype) for k, v in a.items()} for a in acc]
    for g in grads:
        for v in g.values():
            if not np.isfinite(v).all():
                raise NonFiniteGradient("non-finite batch gradient")
    return total_loss / n, grads, total_correct


def predict_batch(params, spec, xs, workers=1):
    """Forward probabilities for a sequence of inputs, order preserved."""
    n = len(xs)
    if n == 0:
        return np.zeros(0, dtype=np.float64)
    workers = max(1, min(int(workers), n))
    if workers == 1:
        probs = [forward(params, spec, x) for x in xs]
    else:
        with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
            probs = list(pool.map(lambda x: forward(params, spec, x), xs))
    return np.asarray(probs, dtype=np.float64)
