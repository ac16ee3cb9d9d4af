"""Super-region bookkeeping and region-wise composition of predictions."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import EmptyInputError, RegionError
from .volgrid import REGION_LABELS, AtlasVolume, BinaryVolume, check_same_grid, label_mask


@dataclass(frozen=True)
class RegionSet:
    ids: frozenset
    name: str = field(default="", compare=False)

    def __post_init__(self):
        ids = frozenset(int(i) for i in self.ids)
        if not ids:
            raise RegionError("a region set needs at least one super-region id")
        if not ids <= REGION_LABELS:
            raise RegionError(f"super-region ids must be in 1..4, got {sorted(ids)}")
        object.__setattr__(self, "ids", ids)
        if not self.name:
            object.__setattr__(self, "name", "+".join(f"R{i}" for i in sorted(ids)))

    @classmethod
    def parse(cls, text: str) -> "RegionSet":
        """``"1,4"``, ``"R1+R4"`` or ``"1+4"`` -> ``RegionSet({1, 4})``."""
        parts = text.replace("+", ",").replace("R", "").replace("r", "").split(",")
        try:
            return cls(frozenset(int(p) for p in parts if p.strip()))
        except ValueError:
            raise RegionError(f"cannot parse region set {text!r}") from None


ALL_REGIONS = RegionSet(REGION_LABELS)


@dataclass(frozen=True)
class RegionAssignment:
    counts: dict
    dominant: tuple


def merge_regions(a: RegionSet, b: RegionSet) -> RegionSet:
    return RegionSet(a.ids | b.ids)


def assign_regions(lesion: BinaryVolume, atlas: AtlasVolume) -> RegionAssignment:
    """Lesion voxels per super-region, plus the overlapped regions by count."""
    check_same_grid(lesion, atlas)
    labels = atlas.data[lesion.data.astype(bool)]
    tally = np.bincount(labels, minlength=5)
    counts = {r: int(tally[r]) for r in sorted(REGION_LABELS)}
    dominant = tuple(sorted((r for r in counts if counts[r] > 0), key=lambda r: (-counts[r], r)))
    return RegionAssignment(counts, dominant)


def compose_regionwise(per_region: Sequence[tuple[RegionSet, BinaryVolume]], atlas: AtlasVolume) -> BinaryVolume:
    """Union of each prediction gated to its own region set.

    Region sets must be disjoint and together cover R1..R4.  Atlas background
    never appears in the output.
    """
    if not per_region:
        raise EmptyInputError("no per-region predictions given")
    seen: set = set()
    for regions, _ in per_region:
        overlap = seen & regions.ids
        if overlap:
            raise RegionError(f"super-region(s) {sorted(overlap)} assigned more than once")
        seen |= regions.ids
    if seen != REGION_LABELS:
        raise RegionError(f"region sets do not cover super-region(s) {sorted(REGION_LABELS - seen)}")

    out = np.zeros(atlas.dims, dtype=bool)
    for regions, pred in per_region:
        check_same_grid(pred, atlas)
        out |= pred.data.astype(bool) & label_mask(atlas, regions.ids)
    return per_region[0][1].replace(out)
