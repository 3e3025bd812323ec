"""GAN-image detection from pixel co-occurrence matrices.

The pipeline: decode an RGB image, compute one co-occurrence matrix per
color channel (a 3 x B x B tensor, B=256 by default), and classify the
tensor with a small convolutional network trained from scratch.

Images are numpy uint8 arrays of shape (height, width, 3); co-occurrence
tensors are float32 arrays of shape (3, B, B).
"""

__version__ = "0.1.0"

from . import backend  # noqa: F401
