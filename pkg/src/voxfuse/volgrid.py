"""Volume types and voxelwise primitives.

Arrays are held as ``data[x, y, z]``; the linear (on-disk) order is x-fastest,
i.e. ``data.ravel(order="F")``.  Volumes are read-only after construction.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from . import kernels
from .errors import DataError, EmptyInputError, ShapeMismatchError

ATLAS_LABELS = (0, 1, 2, 3, 4)
REGION_LABELS = frozenset({1, 2, 3, 4})


class SpacingMismatchWarning(UserWarning):
    pass


@dataclass(frozen=True)
class GridShape:
    nx: int
    ny: int
    nz: int
    sx: float = 1.0
    sy: float = 1.0
    sz: float = 1.0

    def __post_init__(self):
        for n in self.dims:
            if int(n) != n or n < 1:
                raise DataError(f"voxel counts must be positive integers, got {self.dims}")
        for s in self.spacing:
            if not np.isfinite(s) or s <= 0:
                raise DataError(f"voxel spacing must be positive, got {self.spacing}")

    @property
    def dims(self) -> tuple[int, int, int]:
        return (self.nx, self.ny, self.nz)

    @property
    def spacing(self) -> tuple[float, float, float]:
        return (self.sx, self.sy, self.sz)

    @property
    def n_voxels(self) -> int:
        return self.nx * self.ny * self.nz

    @property
    def voxel_volume_mm3(self) -> float:
        return self.sx * self.sy * self.sz


class Volume:
    """Common base; subclasses fix the element type and validate values."""

    kind = ""
    dtype: type = np.uint8

    def __init__(self, data, spacing: Sequence[float] = (1.0, 1.0, 1.0), orientation: bytes | None = None):
        arr = np.asarray(data)
        if arr.ndim != 3:
            raise DataError(f"{self.kind} volume must be 3D, got shape {arr.shape}")
        arr = self._coerce(arr)
        view = arr.view()
        view.flags.writeable = False
        self.data = view
        self.grid = GridShape(*(int(n) for n in arr.shape), *(float(s) for s in spacing))
        # raw qform/sform header bytes carried through NIfTI copies, never interpreted
        self.orientation = orientation

    def _coerce(self, arr: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    @property
    def dims(self):
        return self.grid.dims

    @property
    def spacing(self):
        return self.grid.spacing

    def replace(self, data):
        """New volume of the same kind, spacing and orientation holding ``data``."""
        return type(self)(data, self.spacing, self.orientation)

    def flat(self) -> np.ndarray:
        return self.data.ravel(order="F")

    @classmethod
    def from_flat(cls, flat, dims, spacing=(1.0, 1.0, 1.0), orientation=None):
        return cls(np.asarray(flat).reshape(tuple(dims), order="F"), spacing, orientation)

    def __eq__(self, other):
        if type(other) is not type(self):
            return NotImplemented
        return self.grid == other.grid and np.array_equal(self.data, other.data)

    __hash__ = None

    def __repr__(self):
        return f"{type(self).__name__}(dims={self.dims}, spacing={self.spacing})"


class BinaryVolume(Volume):
    kind = "binary"
    dtype = np.uint8

    def _coerce(self, arr):
        if arr.dtype == np.bool_:
            return arr.astype(np.uint8)
        if arr.size and not np.isin(arr, (0, 1)).all():
            raise DataError("binary volume values must be 0 or 1")
        return arr.astype(np.uint8, copy=False)

    @property
    def count(self) -> int:
        return int(np.count_nonzero(self.data))


class WeightedVolume(Volume):
    kind = "weighted"
    dtype = np.float64

    def _coerce(self, arr):
        arr = arr.astype(np.float64, copy=False)
        if not np.isfinite(arr).all():
            raise DataError("weighted volume values must be finite")
        if (arr < 0).any():
            raise DataError("weighted volume values must be non-negative")
        return arr


class AtlasVolume(Volume):
    kind = "atlas"
    dtype = np.uint8

    def _coerce(self, arr):
        if arr.size and not np.isin(arr, ATLAS_LABELS).all():
            bad = sorted(set(np.unique(arr).tolist()) - set(ATLAS_LABELS))
            raise DataError(f"atlas labels must lie in {ATLAS_LABELS}, found {bad[:5]}")
        return arr.astype(np.uint8, copy=False)


class VoxelCounts(NamedTuple):
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


def check_same_grid(a: Volume, b: Volume) -> None:
    """Raise on differing voxel counts; warn on differing spacing."""
    if a.dims != b.dims:
        raise ShapeMismatchError(a.dims, b.dims)
    if a.spacing != b.spacing:
        warnings.warn(
            f"spacing differs ({a.spacing} vs {b.spacing}); using {a.spacing}",
            SpacingMismatchWarning,
            stacklevel=3,
        )


def _check_all(volumes: Sequence[Volume]) -> None:
    if not volumes:
        raise EmptyInputError("at least one volume is required")
    for v in volumes[1:]:
        check_same_grid(volumes[0], v)


def count_pair(pred: BinaryVolume, truth: BinaryVolume) -> VoxelCounts:
    check_same_grid(pred, truth)
    p = pred.data.astype(bool)
    t = truth.data.astype(bool)
    tp = int(np.count_nonzero(p & t))
    n_pred = int(np.count_nonzero(p))
    n_truth = int(np.count_nonzero(t))
    fp = n_pred - tp
    fn = n_truth - tp
    return VoxelCounts(tp, fp, fn, pred.grid.n_voxels - tp - fp - fn)


def logical_combine(masks: Sequence[BinaryVolume], mode: str) -> BinaryVolume:
    """Voxelwise AND (``"intersection"``) or OR (``"union"``) of all masks."""
    masks = list(masks)
    _check_all(masks)
    if mode == "intersection":
        op = np.logical_and
    elif mode == "union":
        op = np.logical_or
    else:
        raise DataError(f"mode must be 'intersection' or 'union', got {mode!r}")
    acc = masks[0].data.astype(bool)
    for m in masks[1:]:
        acc = op(acc, m.data.astype(bool))
    return masks[0].replace(acc)


def label_mask(atlas: AtlasVolume, labels: Iterable[int]) -> np.ndarray:
    labels = frozenset(int(v) for v in labels)
    if not labels:
        raise DataError("label set must not be empty")
    if not labels <= REGION_LABELS:
        raise DataError(f"labels must be drawn from {sorted(REGION_LABELS)}, got {sorted(labels)}")
    return np.isin(atlas.data, sorted(labels))


def mask_restrict(mask: BinaryVolume, atlas: AtlasVolume, labels: Iterable[int]) -> BinaryVolume:
    """Keep mask voxels whose atlas label is in ``labels``."""
    check_same_grid(mask, atlas)
    return mask.replace(mask.data.astype(bool) & label_mask(atlas, labels))


def summed_area_table(mask: BinaryVolume) -> np.ndarray:
    """``S[i, j, k]`` = ones in ``mask[:i+1, :j+1, :k+1]`` (int64)."""
    return kernels.padded_sat(mask.data)[1:, 1:, 1:]


def box_sum(table: np.ndarray, lo: Sequence[int], hi: Sequence[int]) -> int:
    """Count in the half-open box ``[lo, hi)`` from an inclusive table.

    Boxes are clipped to the table; an empty box counts 0.
    """
    dims = table.shape
    lo = [min(max(int(a), 0), n) for a, n in zip(lo, dims)]
    hi = [min(max(int(b), 0), n) for b, n in zip(hi, dims)]
    if any(b <= a for a, b in zip(lo, hi)):
        return 0

    def s(i, j, k):
        if i < 0 or j < 0 or k < 0:
            return 0
        return int(table[i, j, k])

    (x0, y0, z0), (x1, y1, z1) = [a - 1 for a in lo], [b - 1 for b in hi]
    return (
        s(x1, y1, z1) - s(x0, y1, z1) - s(x1, y0, z1) - s(x1, y1, z0)
        + s(x0, y0, z1) + s(x0, y1, z0) + s(x1, y0, z0) - s(x0, y0, z0)
    )
