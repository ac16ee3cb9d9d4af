"""Resampling to the working grid, intensity normalisation, binarisation and
axial slicing."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError
from .niftio import write_raw
from .volgrid import BinaryVolume, Volume, WeightedVolume

CANONICAL_SHAPE = (256, 256, 128)


@dataclass(frozen=True)
class ResamplePlan:
    target: tuple[int, int, int] = CANONICAL_SHAPE
    interpolation: str = "nearest"

    def __post_init__(self):
        if len(self.target) != 3 or min(self.target) < 1:
            raise DataError(f"target dims must be three positive integers, got {self.target}")
        if self.interpolation not in ("nearest", "trilinear"):
            raise DataError(f"unknown interpolation {self.interpolation!r}")


def source_coords(n_src: int, n_tgt: int) -> np.ndarray:
    """Continuous source coordinate of each target index (voxel centres aligned)."""
    return (np.arange(n_tgt) + 0.5) * (n_src / n_tgt) - 0.5


def _nearest_index(n_src, n_tgt):
    return np.clip(np.floor(source_coords(n_src, n_tgt) + 0.5), 0, n_src - 1).astype(np.intp)


def _linear_weights(n_src, n_tgt):
    c = np.clip(source_coords(n_src, n_tgt), 0, n_src - 1)
    lo = np.floor(c).astype(np.intp)
    hi = np.minimum(lo + 1, n_src - 1)
    return lo, hi, c - lo


def resample(volume: Volume, plan: ResamplePlan) -> Volume:
    src = volume.dims
    tgt = tuple(int(n) for n in plan.target)
    spacing = tuple(s * a / b for s, a, b in zip(volume.spacing, src, tgt))
    if plan.interpolation == "nearest":
        ix, iy, iz = (_nearest_index(a, b) for a, b in zip(src, tgt))
        out = volume.data[np.ix_(ix, iy, iz)]
        return type(volume)(out, spacing, volume.orientation)

    if not isinstance(volume, WeightedVolume):
        raise DataError(f"trilinear interpolation is not allowed for {volume.kind} volumes")
    out = volume.data
    # separable: interpolate one axis at a time
    for axis, (a, b) in enumerate(zip(src, tgt)):
        lo, hi, f = _linear_weights(a, b)
        shape = [1, 1, 1]
        shape[axis] = b
        f = f.reshape(shape)
        out = np.take(out, lo, axis=axis) * (1.0 - f) + np.take(out, hi, axis=axis) * f
    # guard against rounding just outside the input range
    out = np.clip(out, volume.data.min(), volume.data.max())
    return WeightedVolume(out, spacing, volume.orientation)


def normalize_intensity(image: WeightedVolume) -> WeightedVolume:
    """Min-max scale to [0, 1]; a constant image becomes all zeros."""
    lo, hi = float(image.data.min()), float(image.data.max())
    if hi == lo:
        return image.replace(np.zeros_like(image.data))
    return image.replace((image.data - lo) / (hi - lo))


def binarize(mask: Volume, threshold: float = 0.5) -> BinaryVolume:
    if not np.isfinite(mask.data).all():
        raise DataError("cannot binarize non-finite values")
    return BinaryVolume(mask.data > threshold, mask.spacing, mask.orientation)


def axial_slices(volume: Volume) -> list[np.ndarray]:
    """Planes ``data[:, :, z]`` for z = 0 .. nz-1, each nx-by-ny."""
    return [volume.data[:, :, k] for k in range(volume.dims[2])]


def restack(planes, like: Volume) -> Volume:
    return like.replace(np.stack(planes, axis=2))


def export_slices(volume: Volume, out_dir, prefix: str = "slice") -> list[Path]:
    """Write each axial plane as an ``nx x ny x 1`` VXF1 file ``<prefix>_0000.vxf``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for k, plane in enumerate(axial_slices(volume)):
        path = out_dir / f"{prefix}_{k:04d}.vxf"
        write_raw(type(volume)(plane[:, :, None], volume.spacing), path)
        paths.append(path)
    return paths
