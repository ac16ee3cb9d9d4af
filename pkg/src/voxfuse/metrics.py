"""Overlap metrics and lesion volumetry."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

from .errors import UndefinedReferenceError
from .volgrid import BinaryVolume, VoxelCounts, count_pair


@dataclass(frozen=True)
class OverlapMetrics:
    dsc: float
    iou: float
    precision: float
    recall: float


def _ratio(num: int, den: int, both_empty: bool) -> float:
    if den == 0:
        return 1.0 if both_empty else 0.0
    return num / den


def metrics_from_counts(c: VoxelCounts) -> OverlapMetrics:
    """DSC, IoU, precision and recall from confusion counts.

    Zero denominators give 1.0 when prediction and truth are both empty and
    0.0 otherwise.
    """
    empty = c.tp + c.fp + c.fn == 0
    return OverlapMetrics(
        dsc=_ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn, empty),
        iou=_ratio(c.tp, c.tp + c.fp + c.fn, empty),
        precision=_ratio(c.tp, c.tp + c.fp, empty),
        recall=_ratio(c.tp, c.tp + c.fn, empty),
    )


def overlap_metrics(pred: BinaryVolume, truth: BinaryVolume) -> OverlapMetrics:
    return metrics_from_counts(count_pair(pred, truth))


def lesion_volume(mask: BinaryVolume) -> float:
    """Lesion volume in mm^3."""
    return mask.count * mask.grid.voxel_volume_mm3


def percent_error(pred_value: float, true_value: float) -> float:
    if true_value == 0:
        raise UndefinedReferenceError("percent error is undefined for a zero reference value")
    return abs(pred_value - true_value) / abs(true_value) * 100.0


def mean_excluding(values: Iterable[float | None]) -> tuple[float, int]:
    """Arithmetic mean of the defined values and the number of ``None`` entries.

    The mean is NaN when nothing is defined.
    """
    kept, excluded = [], 0
    for v in values:
        if v is None or (isinstance(v, float) and math.isnan(v)):
            excluded += 1
        else:
            kept.append(v)
    return (math.fsum(kept) / len(kept) if kept else math.nan), excluded
