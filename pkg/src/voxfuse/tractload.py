"""Weighted tract lesion load per hemisphere and severity categories."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError
from .volgrid import BinaryVolume, WeightedVolume, check_same_grid

CATEGORIES = ("Small", "Medium", "Large")
CONVENTIONS = ("neurological", "radiological")


@dataclass(frozen=True)
class SeverityThresholds:
    """Category cut-offs in the units of the load measure they are applied to.

    The defaults (0.5 cc and 2.0 cc of weighted overlap) are toolkit defaults,
    not published values; reports label them as such.
    """

    t1: float = 0.5
    t2: float = 2.0
    measure: str = "raw"
    published: bool = False

    def __post_init__(self):
        if not (0 < self.t1 < self.t2) or not math.isfinite(self.t2):
            raise ConfigError(f"thresholds need 0 < t1 < t2, got t1={self.t1}, t2={self.t2}")
        if self.measure not in ("raw", "normalized"):
            raise ConfigError(f"threshold measure must be 'raw' or 'normalized', got {self.measure!r}")


DEFAULT_THRESHOLDS = SeverityThresholds()


@dataclass(frozen=True)
class LesionLoadRecord:
    raw_overlap_cc: float
    normalized_load: float
    side: str
    category: str


def weighted_lesion_load(lesion: BinaryVolume, tract: WeightedVolume) -> tuple[float, float]:
    """``(raw cc, normalized)`` overlap of a lesion with a tract weight map.

    raw = sum(lesion * tract) * voxel volume / 1000; normalized divides the
    weighted sum by the tract's total weight instead.
    """
    check_same_grid(lesion, tract)
    inside = float(np.sum(tract.data[lesion.data.astype(bool)], dtype=np.float64))
    total = float(np.sum(tract.data, dtype=np.float64))
    if total == 0:
        raise DataError("tract map is all zero; normalized lesion load is undefined")
    raw = inside * lesion.grid.voxel_volume_mm3 / 1000.0
    return raw, inside / total


def categorize(load_value: float, thresholds: SeverityThresholds = DEFAULT_THRESHOLDS) -> str:
    if math.isnan(load_value):
        raise DataError("cannot categorize an undefined lesion load")
    if load_value < thresholds.t1:
        return "Small"
    if load_value < thresholds.t2:
        return "Medium"
    return "Large"


def category_rank(category: str) -> int:
    return CATEGORIES.index(category)


def hemisphere_split(tract: WeightedVolume, convention: str = "neurological") -> tuple[WeightedVolume, WeightedVolume]:
    """Split at x = nx/2 into ``(left, right)``.

    Neurological convention puts x < nx/2 on the left; radiological flips it.
    """
    if convention not in CONVENTIONS:
        raise ConfigError(f"side convention must be one of {CONVENTIONS}, got {convention!r}")
    nx = tract.dims[0]
    low = np.arange(nx) < nx / 2
    lo = tract.data * low[:, None, None]
    hi = tract.data * (~low)[:, None, None]
    if convention == "neurological":
        return tract.replace(lo), tract.replace(hi)
    return tract.replace(hi), tract.replace(lo)


def side_loads(lesion: BinaryVolume, tract: WeightedVolume, convention: str = "neurological") -> dict:
    """``{"left": (raw, normalized), "right": (...)}``; a side with no tract weight gives ``(0.0, nan)``."""
    out = {}
    for side, half in zip(("left", "right"), hemisphere_split(tract, convention)):
        if not half.data.any():
            out[side] = (0.0, math.nan)
            continue
        out[side] = weighted_lesion_load(lesion, half)
    return out


def dominant_side(loads: dict) -> str:
    """Side with the larger raw load; ties go to the left."""
    return "right" if loads["right"][0] > loads["left"][0] else "left"


def lesion_load_record(
    lesion: BinaryVolume,
    tract: WeightedVolume,
    thresholds: SeverityThresholds = DEFAULT_THRESHOLDS,
    convention: str = "neurological",
    side: str | None = None,
) -> LesionLoadRecord:
    """Load on ``side`` (default: the lesion's dominant side) with its category."""
    loads = side_loads(lesion, tract, convention)
    side = side or dominant_side(loads)
    raw, norm = loads[side]
    value = raw if thresholds.measure == "raw" else norm
    return LesionLoadRecord(raw, norm, side, categorize(value, thresholds))
