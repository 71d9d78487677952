"""PNG and atomic-file helpers.

Tiles are 8-bit RGB PNGs; label maps are 8-bit single-channel PNGs with
0 = background and 1..4 = the four membrane-intensity classes. All writers
go through a temp file plus atomic rename so interrupted runs never leave
partial outputs.
"""

from __future__ import annotations

import os
import tempfile
from pathlib import Path

import numpy as np
from PIL import Image

from restain.color import RgbTile
from restain.errors import StorageError, ValidationError


def atomic_write_bytes(path, data: bytes) -> None:
    path = Path(path)
    try:
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(data)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
    except OSError as exc:
        raise StorageError(f"cannot write {path}: {exc}") from exc


def _encode_png(img: Image.Image) -> bytes:
    import io

    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


def save_rgb_png(tile: RgbTile, path) -> None:
    atomic_write_bytes(path, _encode_png(Image.fromarray(np.asarray(tile.pixels), mode="RGB")))


def load_rgb_png(path, white_point=(255.0, 255.0, 255.0)) -> RgbTile:
    path = Path(path)
    if not path.is_file():
        raise StorageError(f"image file not found: {path}")
    try:
        with Image.open(path) as img:
            arr = np.asarray(img.convert("RGB"))
    except OSError as exc:
        raise StorageError(f"cannot decode {path}: {exc}") from exc
    return RgbTile(arr, white_point=white_point)


def save_label_png(labels: np.ndarray, path) -> None:
    labels = np.asarray(labels)
    if labels.ndim != 2 or labels.dtype != np.uint8:
        raise ValidationError(f"label map must be 2-D uint8, got {labels.shape} {labels.dtype}")
    atomic_write_bytes(path, _encode_png(Image.fromarray(labels, mode="L")))


def load_label_png(path) -> np.ndarray:
    path = Path(path)
    if not path.is_file():
        raise StorageError(f"label file not found: {path}")
    try:
        with Image.open(path) as img:
            arr = np.asarray(img.convert("L"))
    except OSError as exc:
        raise StorageError(f"cannot decode {path}: {exc}") from exc
    return arr.copy()
