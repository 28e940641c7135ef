"""Binary tensor container (``HCNN`` format).

Layout, all integers little-endian::

    magic      4 bytes   b"HCNN"
    version    u16
    count      u32       number of entries
    entries    count x:
        name_len  u16
        name      UTF-8 bytes
        dtype     u8      0 = float32, 1 = float64
        rank      u8
        dims      u32 x rank
        payload   little-endian values, C order

Decoding is all-or-nothing: any error leaves the caller with nothing.
"""

import logging
import os
import struct
from pathlib import Path

import numpy as np

from hybridcnn.core.config import settings
from hybridcnn.core.errors import (
    BadMagicError,
    BadPathError,
    CheckpointError,
    TruncatedCheckpointError,
    VersionMismatchError,
)

logger = logging.getLogger(__name__)

MAGIC = b"HCNN"
_DTYPE_TAGS = {np.dtype("float32"): 0, np.dtype("float64"): 1}
_TAG_DTYPES = {0: np.dtype("<f4"), 1: np.dtype("<f8")}


def encode(tensors: dict[str, np.ndarray], version: int | None = None) -> bytes:
    """Serialize named arrays; iteration order of `tensors` is preserved."""
    version = settings.CHECKPOINT_VERSION if version is None else version
    chunks = [MAGIC, struct.pack("<HI", version, len(tensors))]
    for name, array in tensors.items():
        array = np.asarray(array)
        tag = _DTYPE_TAGS.get(array.dtype)
        if tag is None:
            raise CheckpointError(f"tensor '{name}' has unsupported dtype {array.dtype}")
        raw_name = name.encode("utf-8")
        chunks.append(struct.pack("<H", len(raw_name)))
        chunks.append(raw_name)
        chunks.append(struct.pack("<BB", tag, array.ndim))
        chunks.append(struct.pack(f"<{array.ndim}I", *array.shape))
        chunks.append(np.ascontiguousarray(array, dtype=_TAG_DTYPES[tag]).tobytes())
    return b"".join(chunks)


class _Reader:
    def __init__(self, blob: bytes):
        self.blob = blob
        self.offset = 0

    def take(self, size: int, what: str) -> bytes:
        end = self.offset + size
        if end > len(self.blob):
            raise TruncatedCheckpointError(
                f"truncated payload: needed {size} bytes for {what} at offset {self.offset}, "
                f"file has {len(self.blob)}"
            )
        chunk = self.blob[self.offset:end]
        self.offset = end
        return chunk

    def unpack(self, fmt: str, what: str) -> tuple:
        return struct.unpack(fmt, self.take(struct.calcsize(fmt), what))


def decode(blob: bytes, expected_version: int | None = None) -> dict[str, np.ndarray]:
    """
    Parse a container.

    Raises:
        BadMagicError: The first four bytes are not ``HCNN``
        VersionMismatchError: The version differs from the supported one
        TruncatedCheckpointError: The file ends before the declared content
        CheckpointError: Unknown dtype tag, duplicate name or trailing bytes
    """
    expected = settings.CHECKPOINT_VERSION if expected_version is None else expected_version
    reader = _Reader(blob)
    if len(blob) < len(MAGIC) or blob[: len(MAGIC)] != MAGIC:
        raise BadMagicError(f"bad magic: expected {MAGIC!r}, found {blob[:len(MAGIC)]!r}")
    reader.take(len(MAGIC), "magic")
    (version,) = reader.unpack("<H", "version")
    if version != expected:
        raise VersionMismatchError(f"checkpoint version {version} is not supported (expected {expected})")
    (count,) = reader.unpack("<I", "entry count")

    tensors: dict[str, np.ndarray] = {}
    for index in range(count):
        (name_len,) = reader.unpack("<H", f"entry {index} name length")
        name = reader.take(name_len, f"entry {index} name").decode("utf-8")
        tag, rank = reader.unpack("<BB", f"entry '{name}' header")
        if tag not in _TAG_DTYPES:
            raise CheckpointError(f"entry '{name}' has unknown dtype tag {tag}")
        dims = reader.unpack(f"<{rank}I", f"entry '{name}' dims")
        dtype = _TAG_DTYPES[tag]
        payload = reader.take(int(np.prod(dims, dtype=np.int64)) * dtype.itemsize, f"entry '{name}' payload")
        if name in tensors:
            raise CheckpointError(f"duplicate entry '{name}'")
        tensors[name] = np.frombuffer(payload, dtype=dtype).reshape(dims).astype(dtype.newbyteorder("="))
    if reader.offset != len(blob):
        raise CheckpointError(f"{len(blob) - reader.offset} trailing bytes after {count} entries")
    return tensors


def write_container(path: str | Path, tensors: dict[str, np.ndarray]) -> Path:
    """Write atomically (temporary file + rename)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    blob = encode(tensors)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(blob)
    os.replace(tmp, path)
    logger.info(f"💾 Wrote {len(tensors)} tensors ({len(blob)} bytes) to {path}")
    return path


def read_container(path: str | Path) -> dict[str, np.ndarray]:
    path = Path(path)
    if not path.is_file():
        raise BadPathError(f"checkpoint not found: {path}")
    return decode(path.read_bytes())
