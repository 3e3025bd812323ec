"""Per-channel pixel co-occurrence matrices and the stacked input tensor.

A co-occurrence matrix is a B x B histogram over intensity pairs taken at a
fixed pixel offset within one channel. Stacking the three RGB matrices and
normalizing each by its own maximum yields the network input tensor.
"""

import hashlib
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import backend, imaging
from .errors import CoocnetError, OffsetTooLarge

CACHE_MAGIC = b"COOC"
CACHE_VERSION = 1
_CACHE_HEADER = struct.Struct("<4sIIiiB")

_VALID_BINS = tuple(b for b in range(2, 257) if 256 % b == 0)


@dataclass(frozen=True)
class CoOccConfig:
    """Offset, symmetry, bin count and normalization of the feature tensor.

    offset is (dy, dx); intensity i maps to bin i * bins // 256.
    """

    offset: tuple = (0, 1)
    symmetric: bool = False
    bins: int = 256
    normalization: str = "max_one"

    def __post_init__(self):
        dy, dx = self.offset
        if (dy, dx) == (0, 0):
            raise ValueError("co-occurrence offset must not be (0, 0)")
        if self.bins not in _VALID_BINS:
            raise ValueError(f"bins must divide 256 evenly, got {self.bins}")
        if self.normalization != "max_one":
            raise ValueError(f"unknown normalization {self.normalization!r}")


def cooccur_channel(channel, cfg):
    """Exact pair counts for one channel; int64 matrix of shape (bins, bins).

    In symmetric mode every pair is counted in both orders, so the result
    equals the asymmetric matrix plus its transpose.
    """
    channel = np.ascontiguousarray(channel, dtype=np.uint8)
    h, w = channel.shape
    dy, dx = cfg.offset
    if abs(dy) >= h or abs(dx) >= w:
        raise OffsetTooLarge(f"offset ({dy}, {dx}) too large for {h}x{w} image")
    counts = backend.kernels().cooc_counts(channel, dy, dx, cfg.bins)
    if cfg.symmetric:
        counts = counts + counts.T
    return counts


def cooccur_counts(img, cfg):
    """Raw per-channel counts, stacked; int64 array of shape (3, bins, bins)."""
    imaging.check_rgb8(img)
    return np.stack([cooccur_channel(img[:, :, c], cfg) for c in range(3)])


def normalize_max_one(counts):
    """Divide each channel matrix by its own maximum; all-zero channels stay zero."""
    out = np.zeros(counts.shape, dtype=np.float32)
    for c in range(counts.shape[0]):
        m = counts[c].max()
        if m > 0:
            out[c] = counts[c].astype(np.float32) / np.float32(m)
    return out


def cooccur_tensor(img, cfg):
    """Normalized network input: float32 array of shape (3, bins, bins)."""
    return normalize_max_one(cooccur_counts(img, cfg))


@dataclass
class ExtractFailure:
    path: str
    message: str


def _extract_one(record, cfg, jpeg_quality, cache_dir):
    if cache_dir is not None:
        cache_file = cache_path(cache_dir, record.path, cfg, jpeg_quality)
        if cache_file.exists():
            try:
                return read_tensor_cache(cache_file, cfg)
            except CoocnetError:
                pass  # stale or foreign file: recompute and overwrite
    img = imaging.load_image(record.path)
    if jpeg_quality is not None:
        img = imaging.jpeg_recompress(img, jpeg_quality)
    tensor = cooccur_tensor(img, cfg)
    if cache_dir is not None:
        write_tensor_cache(cache_file, tensor, cfg)
    return tensor


def batch_extract(records, cfg, workers=1, jpeg_quality=None, cache_dir=None):
    """Compute tensors for every record, in order.

    Returns (pairs, failures) where pairs is a list of (tensor, label) and
    failures lists the records that could not be decoded. Results are
    bit-identical for any worker count.
    """
    def job(record):
        try:
            return _extract_one(record, cfg, jpeg_quality, cache_dir), None
        except (CoocnetError, OSError) as exc:
            return None, ExtractFailure(record.path, f"{type(exc).__name__}: {exc}")

    records = list(records)
    if workers <= 1:
        results = [job(r) for r in records]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(job, records))

    pairs, failures = [], []
    for record, (tensor, failure) in zip(records, results):
        if failure is not None:
            failures.append(failure)
        else:
            pairs.append((tensor, record.label))
    return pairs, failures


# --- on-disk tensor cache ----------------------------------------------------

def cache_path(cache_dir, image_path, cfg, jpeg_quality=None):
    """Deterministic cache file name for one (image, config) combination."""
    dy, dx = cfg.offset
    key = f"{Path(image_path).resolve()}|{cfg.bins}|{dy}|{dx}|{int(cfg.symmetric)}|{jpeg_quality}"
    digest = hashlib.sha256(key.encode()).hexdigest()[:32]
    return Path(cache_dir) / f"{digest}.cooc"


def write_tensor_cache(path, tensor, cfg):
    """One file per image: little-endian header + 3*B*B float32 payload."""
    dy, dx = cfg.offset
    header = _CACHE_HEADER.pack(CACHE_MAGIC, CACHE_VERSION, cfg.bins, dy, dx, int(cfg.symmetric))
    payload = np.ascontiguousarray(tensor, dtype="<f4").tobytes()
    Path(path).write_bytes(header + payload)


def read_tensor_cache(path, cfg=None):
    """Read a cached tensor; validates magic, version and (optionally) the config."""
    data = Path(path).read_bytes()
    if len(data) < _CACHE_HEADER.size:
        raise CoocnetError(f"cache file {path} is truncated")
    magic, version, bins, dy, dx, symmetric = _CACHE_HEADER.unpack_from(data)
    if magic != CACHE_MAGIC or version != CACHE_VERSION:
        raise CoocnetError(f"cache file {path} has unknown format")
    expected = _CACHE_HEADER.size + 3 * bins * bins * 4
    if len(data) != expected:
        raise CoocnetError(f"cache file {path} has wrong payload size")
    if cfg is not None:
        if (bins, (dy, dx), bool(symmetric)) != (cfg.bins, tuple(cfg.offset), cfg.symmetric):
            raise CoocnetError(f"cache file {path} was written with a different config")
    tensor = np.frombuffer(data, dtype="<f4", offset=_CACHE_HEADER.size)
    return tensor.reshape(3, bins, bins).copy()
