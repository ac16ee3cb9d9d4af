import struct

import numpy as np
import pytest

from conftest import random_atlas, random_mask, random_weights, write_custom
from voxfuse import niftio
from voxfuse.errors import (
    AtlasLabelError,
    BadMagicError,
    DataError,
    MalformedHeaderError,
    TruncatedPayloadError,
    UnsupportedDatatypeError,
)
from voxfuse.volgrid import AtlasVolume, BinaryVolume, WeightedVolume


def test_round_trip_small_mask(tmp_path):
    m = BinaryVolume(np.random.default_rng(0).random((4, 4, 4)) < 0.5)
    niftio.write_volume(m, tmp_path / "m.nii")
    assert niftio.read_volume(tmp_path / "m.nii", "binary") == m


def test_written_size_and_layout(tmp_path):
    niftio.write_volume(BinaryVolume(np.zeros((2, 2, 2))), tmp_path / "z.nii")
    raw = (tmp_path / "z.nii").read_bytes()
    assert len(raw) == 352 + 8
    assert struct.unpack("<i", raw[:4])[0] == 348
    assert raw[344:348] == b"n+1\0"
    hdr, order = niftio.parse_header(raw)
    assert order == "<" and float(hdr["vox_offset"]) == 352
    assert float(hdr["scl_slope"]) == 1.0 and float(hdr["scl_inter"]) == 0.0


def test_atlas_label_at_linear_offset(tmp_path):
    a = np.zeros((3, 4, 5), np.uint8)
    a[2, 1, 3] = 4
    niftio.write_volume(AtlasVolume(a), tmp_path / "a.nii")
    raw = (tmp_path / "a.nii").read_bytes()
    linear = 2 + 3 * (1 + 4 * 3)
    assert raw[352 + linear] == 4
    assert raw[352:].count(b"\x04") == 1


def test_scaled_float_read_as_binary(tmp_path):
    write_custom(tmp_path / "f.nii", np.full((2, 2, 2), 0.3, np.float32), niftio.DT_FLOAT32, slope=2.0)
    assert niftio.read_volume(tmp_path / "f.nii", "binary").count == 8
    write_custom(tmp_path / "g.nii", np.full((2, 2, 2), 0.3, np.float32), niftio.DT_FLOAT32, slope=0.0)
    assert niftio.read_volume(tmp_path / "g.nii", "binary").count == 0  # slope 0 means 1


def test_byteswapped_header_decodes_like_native(tmp_path):
    rng = np.random.default_rng(3)
    for dt, values in [
        (niftio.DT_UINT8, rng.integers(0, 2, (5, 4, 3))),
        (niftio.DT_INT16, rng.integers(0, 5, (5, 4, 3))),
        (niftio.DT_FLOAT32, rng.random((5, 4, 3)).astype(np.float32)),
    ]:
        write_custom(tmp_path / "le.nii", values, dt, pixdim=(1.5, 2.0, 2.5))
        write_custom(tmp_path / "be.nii", values, dt, order=">", pixdim=(1.5, 2.0, 2.5))
        assert (tmp_path / "le.nii").read_bytes() != (tmp_path / "be.nii").read_bytes()
        for kind in ("binary", "weighted", "atlas"):
            if kind == "atlas" and dt == niftio.DT_FLOAT32:
                continue
            le = niftio.read_volume(tmp_path / "le.nii", kind)
            be = niftio.read_volume(tmp_path / "be.nii", kind)
            assert le == be
            assert be.dims == (5, 4, 3) and be.spacing == (1.5, 2.0, 2.5)


def test_weighted_negative_clamped(tmp_path, caplog):
    vals = np.array([-1.0, 0.5, 2.0, -3.0, 0, 0, 0, 0], np.float32).reshape(2, 2, 2)
    write_custom(tmp_path / "w.nii", vals, niftio.DT_FLOAT32)
    v = niftio.read_volume(tmp_path / "w.nii", "weighted")
    assert v.data.min() == 0.0 and v.data.max() == 2.0
    assert "clamped 2 negative" in caplog.text


def test_atlas_rounding_and_range(tmp_path):
    write_custom(tmp_path / "a.nii", np.array([0.2, 3.6, 1.0, 4.4, 0, 0, 0, 0], np.float32).reshape(2, 2, 2),
                 niftio.DT_FLOAT32)
    a = niftio.read_volume(tmp_path / "a.nii", "atlas")
    assert sorted(a.flat().tolist()) == [0, 0, 0, 0, 0, 1, 4, 4]
    write_custom(tmp_path / "b.nii", np.full((2, 2, 2), 7), niftio.DT_INT16)
    with pytest.raises(AtlasLabelError):
        niftio.read_volume(tmp_path / "b.nii", "atlas")


def test_bad_spacing_replaced(tmp_path, caplog):
    write_custom(tmp_path / "s.nii", np.zeros((2, 2, 2)), niftio.DT_UINT8, pixdim=(0.0, -1.0, 2.0))
    assert niftio.read_volume(tmp_path / "s.nii", "binary").spacing == (1.0, 1.0, 2.0)
    assert "replaced by 1.0" in caplog.text


def _header_bytes(tmp_path):
    niftio.write_volume(BinaryVolume(np.zeros((2, 2, 2))), tmp_path / "x.nii")
    return bytearray((tmp_path / "x.nii").read_bytes())


@pytest.mark.parametrize(
    "offset,fmt,value,error",
    [
        (0, "<i", 400, MalformedHeaderError),
        (40, "<h", 4, MalformedHeaderError),
        (42, "<h", 0, MalformedHeaderError),
        (70, "<h", 64, UnsupportedDatatypeError),
        (108, "<f", 300.0, MalformedHeaderError),
    ],
)
def test_malformed_headers(tmp_path, offset, fmt, value, error):
    raw = _header_bytes(tmp_path)
    struct.pack_into(fmt, raw, offset, value)
    (tmp_path / "bad.nii").write_bytes(bytes(raw))
    with pytest.raises(error):
        niftio.read_volume(tmp_path / "bad.nii", "binary")


def test_rejects_paired_gzip_truncated(tmp_path):
    raw = _header_bytes(tmp_path)
    raw[344:348] = b"ni1\0"
    (tmp_path / "p.nii").write_bytes(bytes(raw))
    with pytest.raises(MalformedHeaderError, match="paired"):
        niftio.read_volume(tmp_path / "p.nii", "binary")
    (tmp_path / "g.nii.gz").write_bytes(b"\x1f\x8b" + b"\0" * 400)
    with pytest.raises(MalformedHeaderError, match="gzip"):
        niftio.read_volume(tmp_path / "g.nii.gz", "binary")
    raw = _header_bytes(tmp_path)
    (tmp_path / "t.nii").write_bytes(bytes(raw[:-3]))
    with pytest.raises(TruncatedPayloadError):
        niftio.read_volume(tmp_path / "t.nii", "binary")


def test_incompatible_datatype(tmp_path):
    with pytest.raises(DataError):
        niftio.write_volume(BinaryVolume(np.zeros((2, 2, 2))), tmp_path / "x.nii", "float32")
    with pytest.raises(DataError):
        niftio.write_volume(WeightedVolume(np.zeros((2, 2, 2))), tmp_path / "x.nii", "uint8")
    niftio.write_volume(WeightedVolume(np.zeros((2, 2, 2))), tmp_path / "x.nii", "float32")


def test_orientation_bytes_copied_through(tmp_path):
    raw = _header_bytes(tmp_path)
    struct.pack_into("<hh", raw, 252, 1, 2)
    struct.pack_into("<4f", raw, 280, 1.0, 0.0, 0.0, -90.0)
    (tmp_path / "o.nii").write_bytes(bytes(raw))
    v = niftio.read_volume(tmp_path / "o.nii", "binary")
    niftio.write_volume(v, tmp_path / "copy.nii")
    out = (tmp_path / "copy.nii").read_bytes()
    assert out[252:328] == bytes(raw[252:328])


def test_write_read_identity_many(tmp_path, rng):
    for i in range(50):
        shape = tuple(rng.integers(1, 9, 3))
        spacing = tuple(float(np.float32(s)) for s in rng.uniform(0.5, 3.0, 3))
        for vol in (random_mask(rng, shape, spacing=spacing), random_atlas(rng, shape), random_weights(rng, shape)):
            niftio.write_volume(vol, tmp_path / "v.nii")
            assert niftio.read_volume(tmp_path / "v.nii", vol.kind) == vol


def test_raw_layout_and_errors(tmp_path):
    niftio.write_raw(BinaryVolume(np.ones((1, 1, 1))), tmp_path / "one.vxf")
    raw = (tmp_path / "one.vxf").read_bytes()
    assert len(raw) == 4 + 12 + 12 + 1 + 1
    assert raw[:4] == b"VXF1" and raw[28] == 0 and raw[29] == 1
    (tmp_path / "bad.vxf").write_bytes(b"XXXX" + raw[4:])
    with pytest.raises(BadMagicError):
        niftio.read_raw(tmp_path / "bad.vxf")
    (tmp_path / "short.vxf").write_bytes(raw[:-1])
    with pytest.raises(TruncatedPayloadError):
        niftio.read_raw(tmp_path / "short.vxf")


def test_raw_round_trip_many(tmp_path, rng):
    for _ in range(50):
        shape = tuple(rng.integers(1, 9, 3))
        spacing = tuple(float(np.float32(s)) for s in rng.uniform(0.5, 3.0, 3))
        for vol in (random_mask(rng, shape, spacing=spacing), random_atlas(rng, shape), random_weights(rng, shape)):
            niftio.write_raw(vol, tmp_path / "v.vxf")
            back = niftio.read_raw(tmp_path / "v.vxf")
            assert type(back) is type(vol) and back == vol


def test_load_save_dispatch(tmp_path, rng):
    m = random_mask(rng)
    niftio.save(m, tmp_path / "m.vxf")
    niftio.save(m, tmp_path / "m.nii")
    assert niftio.load(tmp_path / "m.vxf", "binary") == niftio.load(tmp_path / "m.nii", "binary") == m
    with pytest.raises(DataError):
        niftio.load(tmp_path / "m.vxf", "atlas")
