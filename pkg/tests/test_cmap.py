import json
import struct
from pathlib import Path

import numpy as np
import pytest

from restain.cmap import MAGIC, decode_cmap, encode_cmap, read_cmap, write_cmap
from restain.errors import CmapFormatError, StorageError

GOLDEN_DIR = Path(__file__).parent / "golden"


def test_round_trip_bit_identical(tmp_path):
    rng = np.random.default_rng(0)
    values = rng.normal(size=(7, 9, 3)).astype(np.float32)
    path = tmp_path / "c.cmap"
    write_cmap(path, values)
    back = read_cmap(path)
    assert back.dtype == np.float32
    assert np.array_equal(back, values)
    # writing the read-back values reproduces identical bytes
    write_cmap(tmp_path / "c2.cmap", back)
    assert (tmp_path / "c2.cmap").read_bytes() == path.read_bytes()


def test_float64_written_as_float32(tmp_path):
    values = np.array([[[0.1, 0.2, 0.3]]], dtype=np.float64)
    path = tmp_path / "c.cmap"
    write_cmap(path, values)
    assert np.array_equal(read_cmap(path), values.astype(np.float32))


def test_header_layout():
    values = np.arange(6, dtype=np.float32).reshape(1, 2, 3)
    blob = encode_cmap(values)
    assert blob[:6] == MAGIC
    w, h, c = struct.unpack_from("<III", blob, 6)
    assert (w, h, c) == (2, 1, 3)
    assert len(blob) == 18 + 4 * 6
    assert np.frombuffer(blob[18:], dtype="<f4").tolist() == list(range(6))


def test_bad_magic_distinct():
    blob = b"NOTCM\x00" + struct.pack("<III", 1, 1, 1) + b"\x00" * 4
    with pytest.raises(CmapFormatError) as err:
        decode_cmap(blob)
    assert err.value.kind == "bad_magic"


def test_truncated_payload_distinct():
    blob = MAGIC + struct.pack("<III", 2, 2, 1) + b"\x00" * 8
    with pytest.raises(CmapFormatError) as err:
        decode_cmap(blob)
    assert err.value.kind == "truncated_payload"


def test_oversized_payload_distinct():
    blob = MAGIC + struct.pack("<III", 1, 1, 1) + b"\x00" * 8
    with pytest.raises(CmapFormatError) as err:
        decode_cmap(blob)
    assert err.value.kind == "oversized_payload"


def test_zero_dimension_rejected():
    blob = MAGIC + struct.pack("<III", 0, 4, 1)
    with pytest.raises(CmapFormatError) as err:
        decode_cmap(blob)
    assert err.value.kind == "bad_dimensions"


def test_dimension_overflow_distinct():
    blob = MAGIC + struct.pack("<III", 70000, 1, 1) + b"\x00" * 4
    with pytest.raises(CmapFormatError) as err:
        decode_cmap(blob)
    assert err.value.kind == "dimension_overflow"


def test_channel_count_out_of_range():
    blob = MAGIC + struct.pack("<III", 1, 1, 4) + b"\x00" * 16
    with pytest.raises(CmapFormatError) as err:
        decode_cmap(blob)
    assert err.value.kind == "bad_dimensions"


def test_encode_rejects_oversized_array():
    values = np.zeros((1, 70000, 1), dtype=np.float32)
    with pytest.raises(CmapFormatError) as err:
        encode_cmap(values)
    assert err.value.kind == "dimension_overflow"


def test_missing_file_is_storage_error(tmp_path):
    with pytest.raises(StorageError):
        read_cmap(tmp_path / "absent.cmap")


def test_golden_file_matches_descriptor():
    """The checked-in golden bytes decode to the descriptor's exact values.

    Any independent implementation of the container must reproduce this file
    byte-for-byte when writing the descriptor values.
    """
    meta = json.loads((GOLDEN_DIR / "concentrations_5x4x3.json").read_text())
    blob = (GOLDEN_DIR / meta["file"]).read_bytes()
    values = decode_cmap(blob)
    assert values.shape == (meta["height"], meta["width"], meta["channels"])
    expected = np.array(meta["values_row_major_channel_fastest"], dtype=np.float32).reshape(
        values.shape
    )
    assert np.array_equal(values, expected)
    assert encode_cmap(expected) == blob
