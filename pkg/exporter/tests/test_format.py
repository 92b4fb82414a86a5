"""Byte-level checks for the SEMMAP01 container."""

import json
import struct

import numpy as np
import pytest

from semmap_exporter import (CategoryCountMismatch, FileMissing,
                             MalformedInput, NoBackgroundCategory,
                             read_semmap, sidecar_path, write_semmap)

CATS = ["background", "tree", "road"]


def block(h, w, n, seed=0):
    return np.random.default_rng(seed).random((h, w, n), dtype=np.float32)


def test_header_bytes_are_magic_then_three_uint32(tmp_path):
    path = tmp_path / "m.semmap"
    write_semmap(path, block(3, 5, 3), CATS)
    data = path.read_bytes()
    assert data[:8] == b"SEMMAP01"
    assert struct.unpack_from("<III", data, 8) == (5, 3, 3)
    assert len(data) == 8 + 12 + 5 * 3 * 3 * 4


def test_payload_is_pixel_major_float32(tmp_path):
    scores = block(2, 3, 3, seed=4)
    path = tmp_path / "m.semmap"
    write_semmap(path, scores, CATS)
    raw = np.frombuffer(path.read_bytes()[20:], dtype="<f4")
    # Row y, column x lands at offset (y*width + x) * n.
    assert np.array_equal(raw.reshape(6, 3), scores.reshape(6, 3))
    assert raw[3 * 3:4 * 3] == pytest.approx(scores[1, 0])


def test_sidecar_sits_next_to_payload(tmp_path):
    path = tmp_path / "m.semmap"
    write_semmap(path, block(2, 2, 3), CATS)
    side = sidecar_path(path)
    assert side == tmp_path / "m.semmap.json"
    assert json.loads(side.read_text()) == {"categories": CATS}


def test_round_trip_is_bit_exact(tmp_path):
    scores = block(7, 4, 3, seed=9)
    path = tmp_path / "m.semmap"
    write_semmap(path, scores, CATS)
    got, cats = read_semmap(path)
    assert got.dtype == np.float32
    assert np.array_equal(got, scores)
    assert cats == CATS


def test_reader_keeps_out_of_range_and_nan_bytes(tmp_path):
    # The reader reports what is on disk; judging values is verify's job.
    scores = np.array([[[2.5, -1.0, np.nan]]], dtype=np.float32)
    path = tmp_path / "m.semmap"
    write_semmap(path, scores, CATS)
    got, _ = read_semmap(path)
    assert got[0, 0, 0] == 2.5 and got[0, 0, 1] == -1.0
    assert np.isnan(got[0, 0, 2])


def test_missing_file_and_sidecar(tmp_path):
    with pytest.raises(FileMissing):
        read_semmap(tmp_path / "absent.semmap")
    path = tmp_path / "m.semmap"
    write_semmap(path, block(2, 2, 3), CATS)
    sidecar_path(path).unlink()
    with pytest.raises(FileMissing):
        read_semmap(path)


@pytest.mark.parametrize("mangle", [
    lambda d: b"XXXXXXXX" + d[8:],
    lambda d: d[:12],
    lambda d: d[:-4],
    lambda d: d[:8] + struct.pack("<III", 0, 3, 3) + d[20:],
])
def test_damaged_container_is_rejected(tmp_path, mangle):
    path = tmp_path / "m.semmap"
    write_semmap(path, block(3, 3, 3), CATS)
    path.write_bytes(mangle(path.read_bytes()))
    with pytest.raises(MalformedInput):
        read_semmap(path)


def test_sidecar_must_match_payload_depth(tmp_path):
    path = tmp_path / "m.semmap"
    write_semmap(path, block(2, 2, 3), CATS)
    sidecar_path(path).write_text(json.dumps({"categories": ["background", "x"]}))
    with pytest.raises(CategoryCountMismatch):
        read_semmap(path)


@pytest.mark.parametrize("names", [
    ["tree", "road", "sky"],
    ["background", "background", "road"],
])
def test_sidecar_needs_one_background(tmp_path, names):
    path = tmp_path / "m.semmap"
    write_semmap(path, block(2, 2, 3), CATS)
    sidecar_path(path).write_text(json.dumps({"categories": names}))
    with pytest.raises(NoBackgroundCategory):
        read_semmap(path)


def test_sidecar_garbage(tmp_path):
    path = tmp_path / "m.semmap"
    write_semmap(path, block(2, 2, 3), CATS)
    side = sidecar_path(path)
    for text in ["not json", '{"something": 1}', '{"categories": [1, 2, 3]}']:
        side.write_text(text)
        with pytest.raises(MalformedInput):
            read_semmap(path)


def test_writer_rejects_bad_shapes_and_names(tmp_path):
    path = tmp_path / "m.semmap"
    with pytest.raises(MalformedInput):
        write_semmap(path, np.zeros((4, 4), np.float32), CATS)
    with pytest.raises(CategoryCountMismatch):
        write_semmap(path, block(2, 2, 4), CATS)
    with pytest.raises(NoBackgroundCategory):
        write_semmap(path, block(2, 2, 3), ["a", "b", "c"])
