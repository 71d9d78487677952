"""CMAP1: the on-disk concentration-map container.

Layout (all integers little-endian):

====== ======= ==============================================
offset size    field
====== ======= ==============================================
0      6       magic ``b"CMAP1\\0"``
6      4       width  (u32)
10     4       height (u32)
14     4       channels (u32, 1..3)
18     4*w*h*c payload: float32 IEEE-754, row-major, channel
               interleaved (channel index fastest)
====== ======= ==============================================

The payload length must be exact; width and height are capped at 2^16. The
format is deliberately minimal so independent implementations in other
languages can be verified byte-for-byte against golden files.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from restain.errors import CmapFormatError, StorageError
from restain.imgio import atomic_write_bytes

MAGIC = b"CMAP1\x00"
MAX_DIM = 65536
_HEADER = struct.Struct("<6sIII")


def encode_cmap(values: np.ndarray) -> bytes:
    values = np.asarray(values)
    if values.ndim != 3:
        raise CmapFormatError(
            f"concentration array must be (H, W, C), got shape {values.shape}", kind="bad_dimensions"
        )
    h, w, c = values.shape
    if h == 0 or w == 0 or not 1 <= c <= 3:
        raise CmapFormatError(f"invalid dimensions {values.shape}", kind="bad_dimensions")
    if h > MAX_DIM or w > MAX_DIM:
        raise CmapFormatError(
            f"dimensions {w}x{h} exceed the {MAX_DIM} limit", kind="dimension_overflow"
        )
    payload = np.ascontiguousarray(values, dtype="<f4").tobytes()
    return _HEADER.pack(MAGIC, w, h, c) + payload


def decode_cmap(data: bytes) -> np.ndarray:
    if len(data) < _HEADER.size:
        raise CmapFormatError(
            f"file too short for header ({len(data)} bytes)", kind="truncated_payload"
        )
    magic, w, h, c = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise CmapFormatError(f"bad magic {magic!r}", kind="bad_magic")
    if w == 0 or h == 0 or not 1 <= c <= 3:
        raise CmapFormatError(f"invalid dimensions {w}x{h}x{c}", kind="bad_dimensions")
    if w > MAX_DIM or h > MAX_DIM:
        raise CmapFormatError(f"dimensions {w}x{h} exceed the {MAX_DIM} limit", kind="dimension_overflow")
    expected = 4 * w * h * c
    payload = data[_HEADER.size :]
    if len(payload) < expected:
        raise CmapFormatError(
            f"payload has {len(payload)} bytes, expected {expected}", kind="truncated_payload"
        )
    if len(payload) > expected:
        raise CmapFormatError(
            f"payload has {len(payload)} bytes, expected {expected}", kind="oversized_payload"
        )
    arr = np.frombuffer(payload, dtype="<f4").reshape(h, w, c)
    return arr.copy()


def write_cmap(path, values: np.ndarray) -> None:
    atomic_write_bytes(path, encode_cmap(values))


def read_cmap(path) -> np.ndarray:
    path = Path(path)
    if not path.is_file():
        raise StorageError(f"cmap file not found: {path}")
    return decode_cmap(path.read_bytes())
