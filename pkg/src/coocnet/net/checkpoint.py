"""Binary model checkpoints.

Layout (little-endian):
  header: magic "CODN", format version u32, input side length B u32,
          record count u32
  records: kind tag u8, rank u32, dims u32 x rank, float32 payload
  trailer: CRC32 (zlib) of all preceding bytes, u32

Parameterized layers contribute two records (weight then bias) with
distinct tags; parameterless layers contribute one empty rank-0 record so
the layer ordering survives the round trip. The network spec is rebuilt
from the record stream plus the header's B, then shape-checked.
"""

import os
import struct
import zlib

import numpy as np

from ..errors import ChecksumMismatch, ShapeMismatch, VersionMismatch
from .spec import (
    CONV,
    DENSE,
    FLATTEN,
    MAXPOOL,
    RELU,
    SIGMOID,
    Layer,
    NetworkSpec,
    layer_shapes,
)

MAGIC = b"CODN"
VERSION = 1

TAG_CONV_W = 1
TAG_CONV_B = 2
TAG_DENSE_W = 3
TAG_DENSE_B = 4
TAG_RELU = 5
TAG_MAXPOOL = 6
TAG_FLATTEN = 7
TAG_SIGMOID = 8

_PLAIN_TAGS = {RELU: TAG_RELU, MAXPOOL: TAG_MAXPOOL, FLATTEN: TAG_FLATTEN,
               SIGMOID: TAG_SIGMOID}
_PLAIN_KINDS = {v: k for k, v in _PLAIN_TAGS.items()}


def _record(tag, arr=None):
    if arr is None:
        return struct.pack("<BI", tag, 0)
    a = np.ascontiguousarray(arr, dtype="<f4")
    head = struct.pack("<BI", tag, a.ndim) + struct.pack(f"<{a.ndim}I", *a.shape)
    return head + a.tobytes()


def save_checkpoint(params, spec, path):
    """Serialize params + spec; the write is atomic (tmp file + rename).

    Payloads are stored as 32-bit floats, so float32 parameters round-trip
    bit-exactly.
    """
    c, b0, b1 = spec.input_shape
    if c != 3 or b0 != b1:
        raise ShapeMismatch(f"checkpoint format stores (3, B, B) inputs, got {spec.input_shape}")
    records = []
    for layer, p in zip(spec.layers, params):
        if layer.kind == CONV:
            records.append(_record(TAG_CONV_W, p["w"]))
            records.append(_record(TAG_CONV_B, p["b"]))
        elif layer.kind == DENSE:
            records.append(_record(TAG_DENSE_W, p["w"]))
            records.append(_record(TAG_DENSE_B, p["b"]))
        else:
            records.append(_record(_PLAIN_TAGS[layer.kind]))
    blob = struct.pack("<4sIII", MAGIC, VERSION, b0, len(records)) + b"".join(records)
    blob += struct.pack("<I", zlib.crc32(blob) & 0xFFFFFFFF)
    tmp = str(path) + ".tmp"
    with open(tmp, "wb") as fh:
        fh.write(blob)
    os.replace(tmp, str(path))


class _Cursor:
    def __init__(self, data):
        self.data = data
        self.pos = 0

    def take(self, fmt):
        size = struct.calcsize(fmt)
        if self.pos + size > len(self.data):
            raise ChecksumMismatch("checkpoint ends mid-record")
        out = struct.unpack_from(fmt, self.data, self.pos)
        self.pos += size
        return out

    def payload(self, shape):
        n = int(np.prod(shape, dtype=np.int64)) if shape else 1
        size = 4 * n
        if self.pos + size > len(self.data):
            raise ChecksumMismatch("checkpoint ends mid-payload")
        arr = np.frombuffer(self.data, dtype="<f4", count=n, offset=self.pos)
        self.pos += size
        return arr.reshape(shape).copy()


def load_checkpoint(path, expect_bins=None):
    """Read a checkpoint; returns (params, spec).

    expect_bins, when given, must match the B the file was written with
    (ShapeMismatch otherwise). Corruption or truncation anywhere in the
    file fails the CRC and raises ChecksumMismatch.
    """
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 20:
        raise ChecksumMismatch("file too short to be a checkpoint")
    (stored,) = struct.unpack_from("<I", data, len(data) - 4)
    if zlib.crc32(data[:-4]) & 0xFFFFFFFF != stored:
        raise ChecksumMismatch("checkpoint CRC32 does not match")

    cur = _Cursor(data[:-4])
    magic, version, bins, count = cur.take("<4sIII")
    if magic != MAGIC:
        raise VersionMismatch(f"bad magic {magic!r}, not a model checkpoint")
    if version != VERSION:
        raise VersionMismatch(f"checkpoint format version {version}, expected {VERSION}")
    if expect_bins is not None and bins != expect_bins:
        raise ShapeMismatch(f"checkpoint was written for B={bins}, run expects B={expect_bins}")

    def next_record():
        tag, rank = cur.take("<BI")
        dims = cur.take(f"<{rank}I") if rank else ()
        return tag, dims

    layers, params = [], []
    i = 0
    while i < count:
        tag, dims = next_record()
        if tag == TAG_CONV_W:
            if len(dims) != 4:
                raise ShapeMismatch(f"conv weight record has rank {len(dims)}")
            w = cur.payload(dims)
            btag, bdims = next_record()
            i += 1
            if btag != TAG_CONV_B or bdims != (dims[0],):
                raise ShapeMismatch("conv weight record not followed by its bias")
            layers.append(Layer(CONV, channels=dims[0], kernel=dims[2]))
            params.append({"w": w, "b": cur.payload(bdims)})
        elif tag == TAG_DENSE_W:
            if len(dims) != 2:
                raise ShapeMismatch(f"dense weight record has rank {len(dims)}")
            w = cur.payload(dims)
            btag, bdims = next_record()
            i += 1
            if btag != TAG_DENSE_B or bdims != (dims[1],):
                raise ShapeMismatch("dense weight record not followed by its bias")
            layers.append(Layer(DENSE, units=dims[1]))
            params.append({"w": w, "b": cur.payload(bdims)})
        elif tag in _PLAIN_KINDS:
            if dims:
                raise ShapeMismatch("parameterless layer record carries dims")
            layers.append(Layer(_PLAIN_KINDS[tag]))
            params.append({})
        else:
            raise VersionMismatch(f"unknown layer tag {tag}")
        i += 1
    if cur.pos != len(cur.data):
        raise ChecksumMismatch("trailing bytes after final record")

    spec = NetworkSpec(layers=tuple(layers), input_shape=(3, int(bins), int(bins)))
    shapes = layer_shapes(spec)
    shape = spec.input_shape
    for layer, p, out in zip(spec.layers, params, shapes):
        if layer.kind == CONV:
            want = (layer.channels, shape[0], layer.kernel, layer.kernel)
            if p["w"].shape != want:
                raise ShapeMismatch(f"conv weights {p['w'].shape} do not chain, expected {want}")
        elif layer.kind == DENSE:
            if p["w"].shape != (shape[0], layer.units):
                raise ShapeMismatch(
                    f"dense weights {p['w'].shape} do not chain, expected {(shape[0], layer.units)}"
                )
        shape = out
    return params, spec
