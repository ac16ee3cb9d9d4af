"""Deterministic phantoms and degraded "model predictions".

Phantom layout: an ellipsoidal brain split at mid-z and mid-y into four
super-regions (superior/posterior = 1, superior/anterior = 2,
inferior/posterior = 3, inferior/anterior = 4).  The tract is a pair of
vertical Gaussian columns (one per hemisphere) in the posterior half, tapering
from top to bottom, so it lies entirely in regions 1 and 3.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import DataError
from .rng import XorShift64Star, derive_seed
from .volgrid import AtlasVolume, BinaryVolume, WeightedVolume

SIX_CONN = ndimage.generate_binary_structure(3, 1)


@dataclass(frozen=True)
class NoiseSpec:
    seed: int = 0
    boundary_jitter: float = 0.0
    fp_blob_count: int = 0
    fp_blob_radius: float = 0.0
    dropout: float = 0.0

    def __post_init__(self):
        for name in ("boundary_jitter", "dropout"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise DataError(f"{name} must be a probability, got {getattr(self, name)}")
        if self.fp_blob_count < 0 or self.fp_blob_radius < 0:
            raise DataError("blob count and radius must be non-negative")


@dataclass(frozen=True)
class PhantomSpec:
    shape: tuple = (64, 64, 32)
    spacing: tuple = (2.0, 2.0, 2.0)
    center: tuple | None = None
    radii: tuple | None = None
    region: int = 1

    def __post_init__(self):
        if len(self.shape) != 3 or min(self.shape) < 4:
            raise DataError(f"phantom shape must be three dims >= 4, got {self.shape}")
        if self.region not in (1, 2, 3, 4):
            raise DataError(f"target region must be 1..4, got {self.region}")
        nx, ny, nz = self.shape
        if self.center is None:
            object.__setattr__(self, "center", (0.35 * nx, 0.3 * ny, 0.7 * nz))
        if self.radii is None:
            object.__setattr__(self, "radii", (0.06 * nx, 0.06 * ny, 0.1 * nz))
        for c, r, n in zip(self.center, self.radii, self.shape):
            if r <= 0 or c - r < 0 or c + r > n - 1:
                raise DataError(f"lesion ellipsoid (center {self.center}, radii {self.radii}) does not fit {self.shape}")


def _grid(shape):
    return np.meshgrid(*(np.arange(n, dtype=np.float64) for n in shape), indexing="ij")


def make_atlas(shape, spacing=(2.0, 2.0, 2.0)) -> AtlasVolume:
    nx, ny, nz = shape
    x, y, z = _grid(shape)
    c = [(n - 1) / 2 for n in shape]
    brain = ((x - c[0]) / (0.46 * nx)) ** 2 + ((y - c[1]) / (0.46 * ny)) ** 2 + ((z - c[2]) / (0.46 * nz)) ** 2 <= 1
    superior = z >= nz / 2
    anterior = y >= ny / 2
    labels = np.where(superior, np.where(anterior, 2, 1), np.where(anterior, 4, 3))
    return AtlasVolume(np.where(brain, labels, 0).astype(np.uint8), spacing)


def make_tract(atlas: AtlasVolume) -> WeightedVolume:
    nx, ny, nz = atlas.dims
    x, y, z = _grid(atlas.dims)
    # sigma shrinks linearly from the top slice to the bottom one
    frac = z / max(nz - 1, 1)
    sigma = (0.03 + 0.03 * frac) * nx
    yc = 0.3 * ny
    w = np.zeros(atlas.dims)
    for xc in (0.35 * nx, 0.65 * nx):
        r2 = (x - xc) ** 2 + (y - yc) ** 2
        col = np.exp(-r2 / (2 * sigma**2))
        col[r2 > (3 * sigma) ** 2] = 0.0
        w = np.maximum(w, col)
    w[~np.isin(atlas.data, (1, 3))] = 0.0
    return WeightedVolume(w, atlas.spacing)


def rasterize_ellipsoid(shape, center, radii) -> np.ndarray:
    x, y, z = _grid(shape)
    return ((x - center[0]) / radii[0]) ** 2 + ((y - center[1]) / radii[1]) ** 2 + ((z - center[2]) / radii[2]) ** 2 <= 1


def make_lesion(spec: PhantomSpec, atlas: AtlasVolume) -> BinaryVolume:
    ci = tuple(int(round(c)) for c in spec.center)
    if atlas.data[ci] != spec.region:
        raise DataError(f"lesion center {spec.center} lies outside super-region {spec.region}")
    inside = rasterize_ellipsoid(spec.shape, spec.center, spec.radii) & (atlas.data == spec.region)
    return BinaryVolume(inside, spec.spacing)


def make_phantom(spec: PhantomSpec) -> tuple[AtlasVolume, WeightedVolume, BinaryVolume]:
    atlas = make_atlas(spec.shape, spec.spacing)
    return atlas, make_tract(atlas), make_lesion(spec, atlas)


def lesion_shells(lesion: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``(inner, outer)`` 6-connected boundary shells of a boolean mask."""
    inner = lesion & ~ndimage.binary_erosion(lesion, SIX_CONN, border_value=0)
    outer = ndimage.binary_dilation(lesion, SIX_CONN) & ~lesion
    return inner, outer


def _flat_indices(mask):
    return np.flatnonzero(mask.ravel(order="F"))


def degrade(lesion: BinaryVolume, noise: NoiseSpec, brain: np.ndarray | None = None) -> BinaryVolume:
    """Simulate one model's prediction of ``lesion``.

    In order, with a single generator stream: interior voxels are deleted with
    probability ``dropout``; voxels of the inner and outer boundary shells
    are flipped with probability ``boundary_jitter``; ``fp_blob_count``
    spheres are added, centred uniformly on brain voxels farther than
    ``radius + 1`` from the lesion.  Voxels are visited in x-fastest order.
    """
    rng = XorShift64Star(noise.seed)
    truth = lesion.data.astype(bool)
    out = truth.ravel(order="F").copy()
    inner, outer = lesion_shells(truth)

    if noise.dropout > 0:
        idx = _flat_indices(truth & ~inner)
        drop = np.fromiter(rng.bernoulli(noise.dropout, idx.size), bool, idx.size)
        out[idx[drop]] = False
    if noise.boundary_jitter > 0:
        idx = _flat_indices(inner | outer)
        flip = np.fromiter(rng.bernoulli(noise.boundary_jitter, idx.size), bool, idx.size)
        out[idx[flip]] = ~out[idx[flip]]
    out = out.reshape(lesion.dims, order="F")

    if noise.fp_blob_count > 0:
        region = np.ones(lesion.dims, bool) if brain is None else np.asarray(brain, bool)
        r = float(noise.fp_blob_radius)
        far = ndimage.distance_transform_edt(~truth) > r + 1 if truth.any() else np.ones(lesion.dims, bool)
        candidates = _flat_indices(region & far)
        if candidates.size:
            for _ in range(noise.fp_blob_count):
                c = np.unravel_index(candidates[rng.randbelow(candidates.size)], lesion.dims, order="F")
                blob = rasterize_ellipsoid(lesion.dims, c, (max(r, 0.5),) * 3)
                out |= blob & region & ~truth
    return lesion.replace(out)


@dataclass(frozen=True)
class CohortSpec:
    """Recipe for a synthetic cohort; every random choice derives from ``seed``.

    Lesions are placed in super-region 1 or 3 on a random hemisphere's tract
    column so that ground-truth lesion load is non-zero.
    """

    n_subjects: int = 50
    seed: int = 2024
    shape: tuple = (64, 64, 32)
    spacing: tuple = (2.0, 2.0, 2.0)
    n_models: int = 2
    boundary_jitter: float = 0.3
    fp_blob_count: int = 3
    fp_blob_radius: float = 5.0
    dropout: float = 0.3
    radius_range: tuple = (2.0, 9.0)
    models: tuple = field(default=("model_a", "model_b"))

    @property
    def model_names(self):
        if len(self.models) >= self.n_models:
            return tuple(self.models[: self.n_models])
        return tuple(f"model_{i}" for i in range(self.n_models))


@dataclass(frozen=True)
class Subject:
    id: str
    lesion: BinaryVolume
    predictions: dict
    phantom: PhantomSpec
    noise: dict


def make_subject(cohort: CohortSpec, index: int, atlas: AtlasVolume | None = None) -> Subject:
    nx, ny, nz = cohort.shape
    rng = XorShift64Star(derive_seed(cohort.seed, index))
    atlas = atlas if atlas is not None else make_atlas(cohort.shape, cohort.spacing)
    lo, hi = cohort.radius_range
    for _ in range(100):
        region = 1 if rng.random() < 0.5 else 3
        xc = (0.35 if rng.random() < 0.5 else 0.65) * nx + rng.uniform(-0.06, 0.06) * nx
        yc = 0.3 * ny + rng.uniform(-0.06, 0.06) * ny
        zc = (rng.uniform(0.55, 0.8) if region == 1 else rng.uniform(0.2, 0.45)) * nz
        # log-uniform size, mild anisotropy
        base = lo * (hi / lo) ** rng.random()
        radii = tuple(base * rng.uniform(0.8, 1.25) for _ in range(3))
        try:
            phantom = PhantomSpec(cohort.shape, cohort.spacing, (xc, yc, zc), radii, region)
            lesion = make_lesion(phantom, atlas)
        except DataError:
            continue
        if lesion.count > 0:
            break
    else:
        raise DataError(f"could not place a lesion for subject {index}")
    brain = atlas.data > 0
    preds, noises = {}, {}
    for m, name in enumerate(cohort.model_names):
        noise = NoiseSpec(
            seed=derive_seed(cohort.seed, index, m + 1),
            boundary_jitter=cohort.boundary_jitter,
            fp_blob_count=cohort.fp_blob_count,
            fp_blob_radius=cohort.fp_blob_radius,
            dropout=cohort.dropout,
        )
        preds[name] = degrade(lesion, noise, brain)
        noises[name] = noise
    return Subject(f"sub-{index + 1:03d}", lesion, preds, phantom, noises)


def make_cohort(cohort: CohortSpec):
    atlas = make_atlas(cohort.shape, cohort.spacing)
    tract = make_tract(atlas)
    subjects = [make_subject(cohort, i, atlas) for i in range(cohort.n_subjects)]
    return atlas, tract, subjects
