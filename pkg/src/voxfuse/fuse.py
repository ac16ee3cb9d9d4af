"""Ensemble fusion: intersection stacking and the agreement window.

Agreement window: a ``w x w x w`` box is placed at every origin
``(a, b, c)`` with each coordinate a multiple of ``stride``; boxes running past
the volume edge are clipped.  Within a box, ``I`` counts voxels where all
members agree on 1 and ``U`` voxels where any member is 1.  A box passes when
``U > 0`` and ``I / U >= tau``.  The output keeps member-union voxels that lie
inside at least one passing box.
"""
from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from . import kernels
from .errors import ConfigError, DataError
from .volgrid import BinaryVolume, _check_all, logical_combine

METHODS = ("stack", "agreement_window")


@dataclass(frozen=True)
class FusionSpec:
    method: str
    members: tuple
    window_size: int = 1
    overlap_threshold: float = 1.0
    stride: int = 1

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(self.members))
        if self.method not in METHODS:
            raise ConfigError(f"unknown fusion method {self.method!r}; choose from {METHODS}")
        if not self.members:
            raise ConfigError("a fusion spec needs at least one member")
        if self.method == "agreement_window":
            if int(self.window_size) != self.window_size or self.window_size < 1:
                raise ConfigError(f"window size must be an integer >= 1, got {self.window_size}")
            if not 0 < self.overlap_threshold <= 1:
                raise ConfigError(f"overlap threshold must be in (0, 1], got {self.overlap_threshold}")
            if int(self.stride) != self.stride or self.stride < 1:
                raise ConfigError(f"stride must be an integer >= 1, got {self.stride}")


def fuse_stack(masks: Sequence[BinaryVolume]) -> BinaryVolume:
    """Voxels predicted by every member."""
    return logical_combine(masks, "intersection")


def _stack_arrays(masks):
    masks = list(masks)
    _check_all(masks)
    all_ = masks[0].data.astype(bool)
    any_ = all_.copy()
    for m in masks[1:]:
        d = m.data.astype(bool)
        all_ &= d
        any_ |= d
    return masks, all_, any_


def window_overlap(masks: Sequence[BinaryVolume], box) -> tuple[int, int, float | None]:
    """``(I, U, I/U)`` inside ``box = (lo, hi)`` (half-open, clipped).

    The ratio is ``None`` when no member has a voxel in the box.
    """
    masks, all_, any_ = _stack_arrays(masks)
    lo, hi = box
    sl = tuple(slice(min(max(int(a), 0), n), min(max(int(b), 0), n)) for a, b, n in zip(lo, hi, all_.shape))
    inter = int(np.count_nonzero(all_[sl]))
    union = int(np.count_nonzero(any_[sl]))
    return inter, union, (inter / union if union else None)


def box_origins(n: int, stride: int) -> range:
    return range(0, n, stride)


def _check_params(w, tau, stride):
    if int(w) != w or w < 1:
        raise DataError(f"window size must be an integer >= 1, got {w}")
    if not 0 < tau <= 1:
        raise DataError(f"overlap threshold must be in (0, 1], got {tau}")
    if int(stride) != stride or stride < 1:
        raise DataError(f"stride must be an integer >= 1, got {stride}")


def _slabs(nz, jobs, stride):
    # slab edges on stride multiples so every origin lands in exactly one slab
    n_origins = len(box_origins(nz, stride))
    jobs = max(1, min(int(jobs), n_origins))
    cuts = [round(i * n_origins / jobs) * stride for i in range(jobs + 1)]
    cuts[-1] = nz
    return [(a, b) for a, b in zip(cuts, cuts[1:]) if b > a]


def _agreement_window_sat(all_, any_, w, tau, stride, jobs):
    all_u8 = all_.view(np.uint8)
    any_u8 = any_.view(np.uint8)
    sat_all = kernels.padded_sat(all_u8)
    sat_any = kernels.padded_sat(any_u8)
    passing = np.zeros(all_.shape, dtype=np.uint8)
    out = np.zeros(all_.shape, dtype=np.uint8)
    nz = all_.shape[2]

    def run(fn, slabs):
        if len(slabs) == 1:
            fn(*slabs[0])
            return
        with ThreadPoolExecutor(len(slabs)) as pool:
            list(pool.map(lambda s: fn(*s), slabs))

    run(lambda z0, z1: kernels.mark_passing(sat_all, sat_any, w, float(tau), stride, z0, z1, passing),
        _slabs(nz, jobs, stride))
    sat_pass = kernels.padded_sat(passing)
    run(lambda z0, z1: kernels.gate_covered(sat_pass, any_u8, w, z0, z1, out), _slabs(nz, jobs, 1))
    return out


def _agreement_window_naive(all_, any_, w, tau, stride):
    covered = np.zeros(all_.shape, dtype=bool)
    nx, ny, nz = all_.shape
    for a, b, c in itertools.product(box_origins(nx, stride), box_origins(ny, stride), box_origins(nz, stride)):
        sl = (slice(a, a + w), slice(b, b + w), slice(c, c + w))
        union = int(np.count_nonzero(any_[sl]))
        if union and float(np.count_nonzero(all_[sl])) >= tau * float(union):
            covered[sl] = True
    return covered & any_


def fuse_agreement_window(
    masks: Sequence[BinaryVolume],
    w: int,
    tau: float,
    stride: int = 1,
    *,
    path: str = "sat",
    jobs: int = 1,
) -> BinaryVolume:
    """Agreement-window fusion of ``masks``.

    ``path="sat"`` counts boxes through summed-area tables (optionally split
    over ``jobs`` z-slabs); ``path="naive"`` recounts every box directly.
    Both give identical output.
    """
    _check_params(w, tau, stride)
    masks, all_, any_ = _stack_arrays(masks)
    w, stride = int(w), int(stride)
    if path == "sat":
        out = _agreement_window_sat(all_, any_, w, tau, stride, jobs)
    elif path == "naive":
        out = _agreement_window_naive(all_, any_, w, tau, stride)
    else:
        raise DataError(f"unknown path {path!r}")
    return masks[0].replace(out)


def fuse_apply(spec: FusionSpec, masks: Mapping[str, BinaryVolume], *, jobs: int = 1) -> BinaryVolume:
    """Fuse the members named in ``spec`` from the ``masks`` mapping."""
    missing = [m for m in spec.members if m not in masks]
    if missing:
        raise ConfigError(f"unknown member id(s): {', '.join(missing)}")
    selected = [masks[m] for m in spec.members]
    if spec.method == "stack":
        return fuse_stack(selected)
    return fuse_agreement_window(
        selected, spec.window_size, spec.overlap_threshold, spec.stride, jobs=jobs
    )
