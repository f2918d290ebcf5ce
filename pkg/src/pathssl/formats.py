"""On-disk formats: the EMB1 embedding container and key=value run configs.

EMB1 layout, fixed little-endian for cross-platform reproducibility::

    bytes 0..3   magic "EMB1"
    bytes 4..7   n, unsigned 32-bit
    bytes 8..11  D, unsigned 32-bit
    bytes 12..   n * D IEEE-754 float32 values, row-major

Payload length must be exactly n * D * 4 and values must be finite.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .regularizers import NORM_ATOL, EmbeddingBatch

MAGIC = b"EMB1"
_HEADER = struct.Struct("<4sII")


class EmbeddingFileError(ValueError):
    """Base class for EMB1 parse/write failures."""


class MagicError(EmbeddingFileError):
    """First four bytes are not the EMB1 magic."""


class HeaderError(EmbeddingFileError):
    """Header describes an unusable batch (zero rows or zero dimension)."""


class PayloadSizeError(EmbeddingFileError):
    """Payload length disagrees with the n * D * 4 bytes the header promises."""


class NonFiniteError(EmbeddingFileError):
    """Payload contains NaN or Inf."""


def parse_embedding_file(data: bytes) -> EmbeddingBatch:
    """Decode EMB1 bytes into a validated batch.

    The ``normalized`` flag is set from the data itself: true when every row
    is unit-norm within NORM_ATOL. Round-trips bit-exactly through
    :func:`write_embedding_file`.
    """
    if len(data) < _HEADER.size:
        raise MagicError(f"file too short for an EMB1 header ({len(data)} bytes)")
    magic, n, dim = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise MagicError(f"bad magic {magic!r}, expected {MAGIC!r}")
    if n == 0 or dim == 0:
        raise HeaderError(f"header declares an empty batch (n={n}, D={dim})")
    expected = n * dim * 4
    actual = len(data) - _HEADER.size
    if actual != expected:
        raise PayloadSizeError(
            f"payload is {actual} bytes, header promises {expected} (n={n}, D={dim})"
        )
    values = np.frombuffer(data, dtype="<f4", offset=_HEADER.size).reshape(n, dim)
    if not np.isfinite(values).all():
        raise NonFiniteError("payload contains NaN or Inf values")
    arr = values.astype(np.float64)
    norms = np.linalg.norm(arr, axis=1)
    normalized = bool(np.all(np.abs(norms - 1.0) <= NORM_ATOL))
    return EmbeddingBatch(data=arr, normalized=normalized)


def write_embedding_file(batch: EmbeddingBatch | np.ndarray) -> bytes:
    """Encode a batch (or bare 2-D array) as EMB1 bytes.

    Values are stored as float32; anything not exactly representable is
    rounded once here and stays stable on further round-trips.
    """
    arr = np.asarray(batch.data if isinstance(batch, EmbeddingBatch) else batch)
    if arr.ndim != 2:
        raise EmbeddingFileError(f"need a 2-D (n, D) array, got shape {arr.shape}")
    n, dim = arr.shape
    if n == 0 or dim == 0:
        raise HeaderError(f"refusing to write an empty batch (n={n}, D={dim})")
    values = arr.astype("<f4")
    if not np.isfinite(values).all():
        raise NonFiniteError("batch contains NaN or Inf values")
    return _HEADER.pack(MAGIC, n, dim) + values.tobytes(order="C")


def load_embeddings(path: str | Path) -> EmbeddingBatch:
    return parse_embedding_file(Path(path).read_bytes())


def save_embeddings(path: str | Path, batch: EmbeddingBatch | np.ndarray) -> None:
    Path(path).write_bytes(write_embedding_file(batch))


class RunConfigError(ValueError):
    """A run-config line that is neither a pair, a comment, nor blank."""

    def __init__(self, line_number: int, message: str) -> None:
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


def parse_run_config(text: str, known_keys: set[str]) -> dict[str, str]:
    """Parse key=value lines; '#' comments and blank lines are skipped.

    Every line is classified: a valid pair, a comment/blank, or an error
    carrying its line number. Keys outside ``known_keys`` are rejected;
    re-assignment of a key keeps the last value.
    """
    values: dict[str, str] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise RunConfigError(number, f"expected key=value, got {line!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not key:
            raise RunConfigError(number, "empty key")
        if key not in known_keys:
            raise RunConfigError(number, f"unknown key {key!r}")
        values[key] = value
    return values
