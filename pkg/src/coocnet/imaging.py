"""Raster I/O, JPEG recompression and synthetic two-class image generation.

Images are numpy uint8 arrays of shape (height, width, 3) in RGB order.
JPEG output is always baseline, 4:2:0 chroma subsampled, non-progressive;
the codec identity is recorded in run metadata so results stay attributable.
"""

import io
from pathlib import Path

import numpy as np
import PIL
from PIL import Image, UnidentifiedImageError, features

from .errors import CorruptImage, EncodeFailure, InvalidSize, UnsupportedFormat

SYNTH_CLASSES = ("smooth", "noisy")

_JPEG_OPTS = {"subsampling": "4:2:0", "progressive": False}


def check_rgb8(img):
    """Validate the (H, W, 3) uint8 layout used throughout the package."""
    if not isinstance(img, np.ndarray) or img.dtype != np.uint8:
        raise TypeError("image must be a uint8 numpy array")
    if img.ndim != 3 or img.shape[2] != 3:
        raise TypeError(f"image must have shape (H, W, 3), got {img.shape}")


def load_image(path):
    """Decode a PNG or baseline JPEG file to an RGB raster.

    Grayscale and paletted images are promoted to RGB; alpha is dropped.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such image: {path}")
    try:
        with Image.open(path) as im:
            if im.format not in ("PNG", "JPEG"):
                raise UnsupportedFormat(f"{path}: {im.format or 'unknown'} is not PNG or JPEG")
            if im.format == "JPEG" and im.info.get("progressive", im.info.get("progression")):
                raise UnsupportedFormat(f"{path}: progressive JPEG is not supported")
            return np.asarray(im.convert("RGB"))
    except UnidentifiedImageError as exc:
        raise CorruptImage(f"{path}: not a decodable image") from exc
    except OSError as exc:
        raise CorruptImage(f"{path}: {exc}") from exc


def save_image(path, img, jpeg_quality=95):
    """Write PNG or baseline JPEG; the file extension selects the format."""
    check_rgb8(img)
    path = Path(path)
    suffix = path.suffix.lower()
    try:
        if suffix == ".png":
            Image.fromarray(img).save(path, format="PNG")
        elif suffix in (".jpg", ".jpeg"):
            Image.fromarray(img).save(path, format="JPEG", quality=jpeg_quality, **_JPEG_OPTS)
        else:
            raise UnsupportedFormat(f"cannot infer format from extension {suffix!r}")
    except OSError as exc:
        raise EncodeFailure(f"{path}: {exc}") from exc


def encode_jpeg(img, quality):
    """Encode to baseline JPEG bytes at the given quality factor (1..100)."""
    check_rgb8(img)
    if not 1 <= quality <= 100:
        raise ValueError(f"quality must be in [1, 100], got {quality}")
    buf = io.BytesIO()
    try:
        Image.fromarray(img).save(buf, format="JPEG", quality=quality, **_JPEG_OPTS)
    except OSError as exc:
        raise EncodeFailure(str(exc)) from exc
    return buf.getvalue()


def decode_jpeg(data):
    try:
        with Image.open(io.BytesIO(data)) as im:
            return np.asarray(im.convert("RGB"))
    except (UnidentifiedImageError, OSError) as exc:
        raise CorruptImage(f"undecodable JPEG stream: {exc}") from exc


def jpeg_recompress(img, quality):
    """Round-trip an image through baseline JPEG at the given quality factor."""
    return decode_jpeg(encode_jpeg(img, quality))


def jpeg_codec_identity():
    """Human-readable codec line recorded in run metadata."""
    return (
        f"Pillow {PIL.__version__} (libjpeg {features.version('jpg')}), "
        "baseline, 4:2:0 subsampling"
    )


def _bilinear_resize(src, height, width):
    """Half-pixel-center bilinear resize of a (h, w, 3) float array."""
    sh, sw = src.shape[:2]
    ys = np.clip((np.arange(height) + 0.5) * (sh / height) - 0.5, 0, sh - 1)
    xs = np.clip((np.arange(width) + 0.5) * (sw / width) - 0.5, 0, sw - 1)
    y0 = np.floor(ys).astype(np.intp)
    x0 = np.floor(xs).astype(np.intp)
    y1 = np.minimum(y0 + 1, sh - 1)
    x1 = np.minimum(x0 + 1, sw - 1)
    wy = (ys - y0)[:, None, None]
    wx = (xs - x0)[None, :, None]
    top = src[y0][:, x0] * (1 - wx) + src[y0][:, x1] * wx
    bot = src[y1][:, x0] * (1 - wx) + src[y1][:, x1] * wx
    return top * (1 - wy) + bot * wy


def synth_sample(class_label, seed, size):
    """Deterministic synthetic image for one of the two reference classes.

    `smooth` upsamples a quarter-resolution uniform-random raster 4x with
    bilinear interpolation, giving strong neighbor correlation; `noisy` draws
    every pixel independently. size is (width, height), both >= 8.
    """
    if class_label not in SYNTH_CLASSES:
        raise ValueError(f"class_label must be one of {SYNTH_CLASSES}")
    width, height = size
    if width < 8 or height < 8:
        raise InvalidSize(f"synthetic images must be at least 8x8, got {width}x{height}")
    rng = np.random.default_rng(
        [seed & 0xFFFFFFFFFFFFFFFF, SYNTH_CLASSES.index(class_label), width, height]
    )
    if class_label == "noisy":
        return rng.integers(0, 256, size=(height, width, 3), dtype=np.uint8)
    low = rng.integers(0, 256, size=(max(2, height // 4), max(2, width // 4), 3))
    up = _bilinear_resize(low.astype(np.float64), height, width)
    return np.clip(np.rint(up), 0, 255).astype(np.uint8)


def sample_seed(base_seed, class_label, index):
    """Per-image seed derived deterministically from a dataset base seed."""
    ss = np.random.SeedSequence(
        [base_seed & 0xFFFFFFFFFFFFFFFF, SYNTH_CLASSES.index(class_label), index]
    )
    return int(ss.generate_state(1, np.uint64)[0])


def synth_dataset(out_dir, count, size, seed):
    """Write a labeled synthetic dataset tree with `count` images per class.

    Layout matches the manifest builder: <out>/<label>/<category>/<name>.png,
    with smooth images labeled gan and noisy images labeled real.
    """
    out_dir = Path(out_dir)
    written = []
    for class_label, dataset_label in (("smooth", "gan"), ("noisy", "real")):
        class_dir = out_dir / dataset_label / class_label
        class_dir.mkdir(parents=True, exist_ok=True)
        for i in range(count):
            img = synth_sample(class_label, sample_seed(seed, class_label, i), size)
            path = class_dir / f"{class_label}_{i:04d}.png"
            save_image(path, img)
            written.append(path)
    return written
