"""Network architecture description, shape checking and initialization."""

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ShapeMismatch

CONV = "conv"
RELU = "relu"
MAXPOOL = "maxpool"
FLATTEN = "flatten"
DENSE = "dense"
SIGMOID = "sigmoid"


@dataclass(frozen=True)
class Layer:
    kind: str
    channels: int = 0  # conv: output channels
    kernel: int = 0    # conv: square kernel size
    units: int = 0     # dense: output units


def conv(channels, kernel):
    return Layer(CONV, channels=channels, kernel=kernel)


def relu():
    return Layer(RELU)


def maxpool():
    return Layer(MAXPOOL)


def flatten():
    return Layer(FLATTEN)


def dense(units):
    return Layer(DENSE, units=units)


def sigmoid():
    return Layer(SIGMOID)


@dataclass(frozen=True)
class NetworkSpec:
    """Ordered layer list plus the (channels, height, width) input shape."""

    layers: tuple
    input_shape: tuple

    def __post_init__(self):
        layer_shapes(self)  # raises ShapeMismatch if the stack is inconsistent


def default_network_spec(bins=256):
    """The classifier stack: three conv/conv/pool stages (32, 64, 128 filters,
    3x3 then 5x5 kernels), two 256-unit dense layers and a sigmoid head."""
    layers = (
        conv(32, 3), relu(), conv(32, 5), maxpool(),
        conv(64, 3), relu(), conv(64, 5), maxpool(),
        conv(128, 3), relu(), conv(128, 5), maxpool(),
        flatten(),
        dense(256), relu(),
        dense(256), relu(),
        dense(1), sigmoid(),
    )
    return NetworkSpec(layers=layers, input_shape=(3, bins, bins))


def layer_shapes(spec):
    """Output shape after each layer; validates that shapes chain.

    Convolutions are stride-1 with zero 'same' padding; pooling is 2x2
    stride 2 (floor). The final layer must produce a single scalar.
    """
    shapes = []
    shape = tuple(spec.input_shape)
    for i, layer in enumerate(spec.layers):
        if layer.kind == CONV:
            if len(shape) != 3:
                raise ShapeMismatch(f"layer {i}: conv needs a (C, H, W) input, got {shape}")
            if layer.kernel % 2 != 1:
                raise ShapeMismatch(f"layer {i}: conv kernel must be odd for same padding")
            shape = (layer.channels, shape[1], shape[2])
        elif layer.kind == MAXPOOL:
            if len(shape) != 3:
                raise ShapeMismatch(f"layer {i}: maxpool needs a (C, H, W) input, got {shape}")
            if shape[1] < 2 or shape[2] < 2:
                raise ShapeMismatch(f"layer {i}: feature map {shape} too small to pool")
            shape = (shape[0], shape[1] // 2, shape[2] // 2)
        elif layer.kind == RELU:
            pass
        elif layer.kind == FLATTEN:
            shape = (int(np.prod(shape)),)
        elif layer.kind == DENSE:
            if len(shape) != 1:
                raise ShapeMismatch(f"layer {i}: dense needs a flattened input, got {shape}")
            shape = (layer.units,)
        elif layer.kind == SIGMOID:
            if shape != (1,):
                raise ShapeMismatch(f"layer {i}: sigmoid head needs a single unit, got {shape}")
        else:
            raise ShapeMismatch(f"layer {i}: unknown layer kind {layer.kind!r}")
        shapes.append(shape)
    if not shapes or shapes[-1] != (1,) or spec.layers[-1].kind != SIGMOID:
        raise ShapeMismatch("network must end in a single-unit sigmoid head")
    return shapes


def init_params(spec, seed, dtype=np.float32):
    """He-style initialization: N(0, sqrt(2/fan_in)) weights, zero biases.

    Deterministic per seed; the same seed always yields bit-identical
    parameters for a given dtype.
    """
    shapes = layer_shapes(spec)
    rng = np.random.default_rng(seed & 0xFFFFFFFFFFFFFFFF)
    params = []
    shape = tuple(spec.input_shape)
    for layer, out_shape in zip(spec.layers, shapes):
        if layer.kind == CONV:
            fan_in = shape[0] * layer.kernel * layer.kernel
            w = rng.standard_normal(
                (layer.channels, shape[0], layer.kernel, layer.kernel)
            ) * math.sqrt(2.0 / fan_in)
            params.append({"w": w.astype(dtype), "b": np.zeros(layer.channels, dtype=dtype)})
        elif layer.kind == DENSE:
            fan_in = shape[0]
            w = rng.standard_normal((fan_in, layer.units)) * math.sqrt(2.0 / fan_in)
            params.append({"w": w.astype(dtype), "b": np.zeros(layer.units, dtype=dtype)})
        else:
            params.append({})
        shape = out_shape
    return params


def zero_params(spec, dtype=np.float32):
    """All-zero parameters (the degenerate model that outputs exactly 0.5)."""
    params = init_params(spec, seed=0, dtype=dtype)
    return [{k: np.zeros_like(v) for k, v in p.items()} for p in params]


def params_astype(params, dtype):
    return [{k: v.astype(dtype) for k, v in p.items()} for p in params]


def copy_params(params):
    return [{k: v.copy() for k, v in p.items()} for p in params]
