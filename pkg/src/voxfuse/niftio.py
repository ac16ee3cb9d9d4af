"""NIfTI-1 single-file and VXF1 raw volume I/O.

Only what the pipeline needs: 3D volumes, datatypes uint8/int16/float32,
uncompressed ``.nii`` files with magic ``n+1``.  Orientation fields (qform,
sform) are kept as raw header bytes and written back untouched.
"""
from __future__ import annotations

import logging
import struct
from pathlib import Path

import numpy as np

from .errors import (
    AtlasLabelError,
    BadMagicError,
    DataError,
    MalformedHeaderError,
    TruncatedPayloadError,
    UnsupportedDatatypeError,
)
from .volgrid import ATLAS_LABELS, AtlasVolume, BinaryVolume, Volume, WeightedVolume

log = logging.getLogger(__name__)

HEADER_SIZE = 348
VOX_OFFSET = 352

DT_UINT8, DT_INT16, DT_FLOAT32 = 2, 4, 16
DATATYPES = {DT_UINT8: ("uint8", 8), DT_INT16: ("int16", 16), DT_FLOAT32: ("float32", 32)}
DATATYPE_NAMES = {"uint8": DT_UINT8, "int16": DT_INT16, "float32": DT_FLOAT32}

# Field layout of the 348-byte header (without byte order).
HEADER_FIELDS = [
    ("sizeof_hdr", "i4"),
    ("data_type", "S10"),
    ("db_name", "S18"),
    ("extents", "i4"),
    ("session_error", "i2"),
    ("regular", "S1"),
    ("dim_info", "u1"),
    ("dim", "i2", (8,)),
    ("intent_p1", "f4"),
    ("intent_p2", "f4"),
    ("intent_p3", "f4"),
    ("intent_code", "i2"),
    ("datatype", "i2"),
    ("bitpix", "i2"),
    ("slice_start", "i2"),
    ("pixdim", "f4", (8,)),
    ("vox_offset", "f4"),
    ("scl_slope", "f4"),
    ("scl_inter", "f4"),
    ("slice_end", "i2"),
    ("slice_code", "u1"),
    ("xyzt_units", "u1"),
    ("cal_max", "f4"),
    ("cal_min", "f4"),
    ("slice_duration", "f4"),
    ("toffset", "f4"),
    ("glmax", "i4"),
    ("glmin", "i4"),
    ("descrip", "S80"),
    ("aux_file", "S24"),
    ("qform_code", "i2"),
    ("sform_code", "i2"),
    ("quatern_b", "f4"),
    ("quatern_c", "f4"),
    ("quatern_d", "f4"),
    ("qoffset_x", "f4"),
    ("qoffset_y", "f4"),
    ("qoffset_z", "f4"),
    ("srow_x", "f4", (4,)),
    ("srow_y", "f4", (4,)),
    ("srow_z", "f4", (4,)),
    ("intent_name", "S16"),
    ("magic", "S4"),
]
# qform_code .. srow_z, copied verbatim between files
ORIENT_START, ORIENT_END = 252, 328


def header_dtype(byteorder: str = "<") -> np.dtype:
    return np.dtype([(f[0], byteorder + f[1], *f[2:]) for f in HEADER_FIELDS])


assert header_dtype().itemsize == HEADER_SIZE


def parse_header(raw: bytes):
    """Decode and validate a header; returns ``(header_record, byteorder)``."""
    if raw[:2] == b"\x1f\x8b":
        raise MalformedHeaderError("gzip-compressed NIfTI is not supported; decompress first")
    if len(raw) < HEADER_SIZE:
        raise MalformedHeaderError(f"header is {len(raw)} bytes, expected {HEADER_SIZE}")
    if struct.unpack("<i", raw[:4])[0] == HEADER_SIZE:
        order = "<"
    elif struct.unpack(">i", raw[:4])[0] == HEADER_SIZE:
        order = ">"
    else:
        raise MalformedHeaderError("sizeof_hdr is not 348 in either byte order")
    hdr = np.frombuffer(raw[:HEADER_SIZE], dtype=header_dtype(order))[0]
    magic = bytes(hdr["magic"])
    if magic == b"ni1":
        raise MalformedHeaderError("paired .hdr/.img NIfTI (magic 'ni1') is not supported")
    if magic != b"n+1":
        raise MalformedHeaderError(f"bad NIfTI magic {magic!r}")
    dim = [int(d) for d in hdr["dim"]]
    if dim[0] != 3:
        raise MalformedHeaderError(f"only 3D volumes are supported (dim[0]={dim[0]})")
    if min(dim[1:4]) < 1:
        raise MalformedHeaderError(f"non-positive dimensions {dim[1:4]}")
    if int(hdr["datatype"]) not in DATATYPES:
        raise UnsupportedDatatypeError(f"unsupported datatype code {int(hdr['datatype'])}")
    if float(hdr["vox_offset"]) < VOX_OFFSET:
        raise MalformedHeaderError(f"vox_offset {float(hdr['vox_offset'])} < {VOX_OFFSET}")
    return hdr, order


def _decode(values: np.ndarray, kind: str, dims, spacing, orientation) -> Volume:
    if kind == "binary":
        return BinaryVolume.from_flat(values > 0.5, dims, spacing, orientation)
    if kind == "weighted":
        if not np.isfinite(values).all():
            raise DataError("weighted volume contains non-finite values")
        neg = int(np.count_nonzero(values < 0))
        if neg:
            log.warning("clamped %d negative voxel values to 0", neg)
            values = np.maximum(values, 0.0)
        return WeightedVolume.from_flat(values, dims, spacing, orientation)
    if kind == "atlas":
        labels = np.rint(values)
        if not np.isin(labels, ATLAS_LABELS).all():
            bad = sorted(set(np.unique(labels).tolist()) - set(ATLAS_LABELS))
            raise AtlasLabelError(f"atlas label(s) outside 0..4: {bad[:5]}")
        return AtlasVolume.from_flat(labels.astype(np.uint8), dims, spacing, orientation)
    raise DataError(f"unknown volume kind {kind!r}")


def read_volume(path, kind: str) -> Volume:
    """Read a ``.nii`` file as a ``binary``, ``weighted`` or ``atlas`` volume."""
    raw = Path(path).read_bytes()
    hdr, order = parse_header(raw)
    dims = tuple(int(d) for d in hdr["dim"][1:4])
    name, bitpix = DATATYPES[int(hdr["datatype"])]
    start = int(hdr["vox_offset"])
    nbytes = int(np.prod(dims)) * bitpix // 8
    if len(raw) < start + nbytes:
        raise TruncatedPayloadError(f"{path}: payload needs {nbytes} bytes at offset {start}, file has {len(raw)}")
    values = np.frombuffer(raw, dtype=np.dtype(name).newbyteorder(order), count=int(np.prod(dims)), offset=start)
    slope, inter = float(hdr["scl_slope"]), float(hdr["scl_inter"])
    if slope == 0 or not np.isfinite(slope):
        slope = 1.0
    if not np.isfinite(inter):
        inter = 0.0
    values = values.astype(np.float64) * slope + inter

    spacing = []
    for s in hdr["pixdim"][1:4]:
        s = float(s)
        if not (np.isfinite(s) and s > 0):
            log.warning("%s: non-positive voxel spacing %r replaced by 1.0", path, s)
            s = 1.0
        spacing.append(s)
    orientation = raw[ORIENT_START:ORIENT_END] if order == "<" else _swap_orientation(raw)
    return _decode(values, kind, dims, spacing, orientation)


def _swap_orientation(raw: bytes) -> bytes:
    # normalise big-endian orientation bytes to little-endian for re-writing
    big = np.frombuffer(raw[:HEADER_SIZE], dtype=header_dtype(">"))[0]
    out = np.zeros((), dtype=header_dtype("<"))
    for name in header_dtype().names:
        out[name] = big[name]
    return out.tobytes()[ORIENT_START:ORIENT_END]


def _default_datatype(volume: Volume) -> int:
    return DT_FLOAT32 if isinstance(volume, WeightedVolume) else DT_UINT8


def build_header(volume: Volume, datatype: int) -> bytes:
    hdr = np.zeros((), dtype=header_dtype("<"))
    hdr["sizeof_hdr"] = HEADER_SIZE
    hdr["dim"] = [3, *volume.dims, 1, 1, 1, 1]
    hdr["datatype"] = datatype
    hdr["bitpix"] = DATATYPES[datatype][1]
    hdr["pixdim"] = [1.0, *volume.spacing, 1.0, 1.0, 1.0, 1.0]
    hdr["vox_offset"] = VOX_OFFSET
    hdr["scl_slope"] = 1.0
    hdr["scl_inter"] = 0.0
    hdr["xyzt_units"] = 2  # millimetres
    hdr["regular"] = b"r"
    hdr["magic"] = b"n+1"
    raw = bytearray(hdr.tobytes())
    if volume.orientation is not None and len(volume.orientation) == ORIENT_END - ORIENT_START:
        raw[ORIENT_START:ORIENT_END] = volume.orientation
    return bytes(raw)


def write_volume(volume: Volume, path, datatype: str | int | None = None) -> None:
    """Write ``volume`` as a little-endian single-file NIfTI-1."""
    if datatype is None:
        code = _default_datatype(volume)
    else:
        code = DATATYPE_NAMES.get(datatype, datatype) if isinstance(datatype, str) else int(datatype)
    if code != _default_datatype(volume):
        raise DataError(
            f"datatype {datatype!r} is incompatible with a {volume.kind} volume "
            f"(expected {DATATYPES[_default_datatype(volume)][0]})"
        )
    name = DATATYPES[code][0]
    payload = volume.flat().astype("<" + np.dtype(name).str[1:]).tobytes()
    with open(path, "wb") as fh:
        fh.write(build_header(volume, code))
        fh.write(b"\x00" * (VOX_OFFSET - HEADER_SIZE))
        fh.write(payload)


# VXF1: magic | u32 nx, ny, nz | f32 sx, sy, sz | u8 dtype | payload
VXF_MAGIC = b"VXF1"
VXF_HEADER = struct.Struct("<4s3I3fB")
VXF_KINDS = {0: (BinaryVolume, "<u1"), 1: (WeightedVolume, "<f4"), 2: (AtlasVolume, "<u1")}
VXF_CODES = {BinaryVolume: 0, WeightedVolume: 1, AtlasVolume: 2}


def write_raw(volume: Volume, path) -> None:
    code = VXF_CODES[type(volume)]
    header = VXF_HEADER.pack(VXF_MAGIC, *volume.dims, *volume.spacing, code)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(volume.flat().astype(VXF_KINDS[code][1]).tobytes())


def read_raw(path) -> Volume:
    raw = Path(path).read_bytes()
    if len(raw) < 4 or raw[:4] != VXF_MAGIC:
        raise BadMagicError(f"{path}: not a VXF1 file (magic {raw[:4]!r})")
    if len(raw) < VXF_HEADER.size:
        raise TruncatedPayloadError(f"{path}: header truncated")
    _, nx, ny, nz, sx, sy, sz, code = VXF_HEADER.unpack_from(raw)
    if code not in VXF_KINDS:
        raise UnsupportedDatatypeError(f"{path}: unknown VXF1 dtype {code}")
    cls, fmt = VXF_KINDS[code]
    n = nx * ny * nz
    need = VXF_HEADER.size + n * np.dtype(fmt).itemsize
    if len(raw) < need:
        raise TruncatedPayloadError(f"{path}: payload needs {need} bytes, file has {len(raw)}")
    values = np.frombuffer(raw, dtype=fmt, count=n, offset=VXF_HEADER.size)
    return cls.from_flat(values, (nx, ny, nz), (sx, sy, sz))


def load(path, kind: str) -> Volume:
    """Read by extension: ``.vxf`` files as VXF1, anything else as NIfTI-1."""
    if str(path).endswith(".vxf"):
        vol = read_raw(path)
        if vol.kind != kind:
            if kind == "binary":
                return BinaryVolume(vol.data > 0.5, vol.spacing)
            raise DataError(f"{path}: holds a {vol.kind} volume, expected {kind}")
        return vol
    return read_volume(path, kind)


def save(volume: Volume, path) -> None:
    if str(path).endswith(".vxf"):
        write_raw(volume, path)
    else:
        write_volume(volume, path)
