"""Flat binary tensor files.

Layout: the 8-byte magic ``MIMWTNSR``, a little-endian uint32 rank, ``rank``
little-endian uint32 extents, then the row-major little-endian float32
payload. Nothing follows the payload.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

MAGIC = b"MIMWTNSR"


class TensorFormatError(ValueError):
    pass


def dumps_tensor(arr) -> bytes:
    a = np.asarray(arr, dtype="<f4", order="C")
    head = MAGIC + struct.pack(f"<I{a.ndim}I", a.ndim, *a.shape)
    return head + a.tobytes()


def loads_tensor(raw: bytes) -> np.ndarray:
    if raw[:8] != MAGIC:
        raise TensorFormatError("bad magic")
    if len(raw) < 12:
        raise TensorFormatError("truncated header")
    (rank,) = struct.unpack_from("<I", raw, 8)
    off = 12 + 4 * rank
    if len(raw) < off:
        raise TensorFormatError("truncated extents")
    shape = struct.unpack_from(f"<{rank}I", raw, 12)
    count = int(np.prod(shape, dtype=np.int64))
    if len(raw) != off + 4 * count:
        raise TensorFormatError(f"payload is {len(raw) - off} bytes, expected {4 * count}")
    return np.frombuffer(raw, dtype="<f4", offset=off, count=count).astype(np.float32).reshape(shape)


def write_tensor(path, arr) -> None:
    Path(path).write_bytes(dumps_tensor(arr))


def read_tensor(path) -> np.ndarray:
    return loads_tensor(Path(path).read_bytes())
