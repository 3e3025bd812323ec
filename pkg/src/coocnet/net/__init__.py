"""From-scratch convolutional network: forward, backprop, Adam, checkpoints.

Parameters and activations are float32; a float64 mode exists for gradient
checking (pass dtype=np.float64 where accepted). Model parameters are a list
with one dict per layer: {"w": ..., "b": ...} for conv/dense layers, {} for
the others.
"""

from .adam import OptimizerState, adam_step, init_optimizer_state
from .checkpoint import load_checkpoint, save_checkpoint
from .model import (
    backward,
    batch_gradients,
    bce_loss,
    forward,
    predict_batch,
)
from .spec import (
    Layer,
    NetworkSpec,
    default_network_spec,
    init_params,
    layer_shapes,
)

__all__ = [
    "Layer",
    "NetworkSpec",
    "OptimizerState",
    "adam_step",
    "backward",
    "batch_gradients",
    "bce_loss",
    "default_network_spec",
    "forward",
    "init_optimizer_state",
    "init_params",
    "layer_shapes",
    "load_checkpoint",
    "predict_batch",
    "save_checkpoint",
]
