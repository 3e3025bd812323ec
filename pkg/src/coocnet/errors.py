"""Exception types shared across the package."""


class CoocnetError(Exception):
    """Base class for all package-specific errors."""


# --- imaging ---------------------------------------------------------------

class UnsupportedFormat(CoocnetError):
    """File is not a PNG or baseline JPEG."""


class CorruptImage(CoocnetError):
    """File exists but cannot be decoded."""


class EncodeFailure(CoocnetError):
    """The JPEG/PNG encoder rejected the image."""


class InvalidSize(CoocnetError):
    """Requested synthetic image is too small."""


# --- co-occurrence ----------------------------------------------------------

class OffsetTooLarge(CoocnetError):
    """Co-occurrence offset exceeds the image dimensions."""


# --- network ----------------------------------------------------------------

class ShapeMismatch(CoocnetError):
    """Tensor shapes do not chain or do not match the expected layout."""


class NonFiniteActivation(CoocnetError):
    """NaN or Inf appeared in a forward pass."""


class NonFiniteGradient(CoocnetError):
    """NaN or Inf appeared in a gradient."""


class ChecksumMismatch(CoocnetError):
    """Checkpoint file is truncated or its CRC does not match."""


class VersionMismatch(CoocnetError):
    """Checkpoint file has an unknown magic or format version."""


# --- harness ----------------------------------------------------------------

class EmptyManifest(CoocnetError):
    """Manifest holds no records."""


class EmptySplit(CoocnetError):
    """Requested split holds no records."""


class SingleCategory(CoocnetError):
    """Hold-one-out evaluation needs at least two categories."""


class EmptyDirectory(CoocnetError):
    """Dataset directory contains no images."""


class AmbiguousLabel(CoocnetError):
    """Dataset directory layout does not follow <root>/<label>/<category>/."""
