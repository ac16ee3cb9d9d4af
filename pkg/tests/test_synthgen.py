import numpy as np
import pytest
from scipy import ndimage

from voxfuse.atlas import assign_regions
from voxfuse.errors import DataError
from voxfuse.rng import XorShift64Star, derive_seed, splitmix64
from voxfuse.synthgen import (
    CohortSpec,
    NoiseSpec,
    PhantomSpec,
    degrade,
    lesion_shells,
    make_atlas,
    make_phantom,
    make_subject,
)
from voxfuse.tractload import weighted_lesion_load
from voxfuse.volgrid import BinaryVolume


def test_rng_reference_stream():
    # splitmix64(0) and the first xorshift64* outputs, computed by hand from the recurrences
    assert splitmix64(0) == 0xE220A8397B1DCDAF
    r = XorShift64Star(0)
    x = 0xE220A8397B1DCDAF
    mask = (1 << 64) - 1
    for _ in range(5):
        x ^= x >> 12
        x ^= (x << 25) & mask
        x ^= x >> 27
        assert r.next_u64() == (x * 0x2545F4914F6CDD1D) & mask


def test_rng_ranges():
    r = XorShift64Star(7)
    vals = [r.random() for _ in range(10000)]
    assert min(vals) >= 0 and max(vals) < 1
    assert abs(np.mean(vals) - 0.5) < 0.02
    assert all(0 <= r.randbelow(5) < 5 for _ in range(1000))
    assert derive_seed(1, 2) != derive_seed(2, 1)


def test_phantom_deterministic():
    spec = PhantomSpec()
    a, b = make_phantom(spec), make_phantom(spec)
    assert all(x == y for x, y in zip(a, b))
    atlas, tract, lesion = a
    assert set(np.unique(atlas.data)) == {0, 1, 2, 3, 4}
    assert tract.data.min() >= 0 and tract.data.max() <= 1
    assert lesion.count > 0


def test_tract_only_in_regions_1_and_3():
    atlas, tract, _ = make_phantom(PhantomSpec())
    assert set(np.unique(atlas.data[tract.data > 0])) <= {1, 3}


def test_region_two_lesion_has_no_load():
    spec = PhantomSpec(center=(32, 45, 22), radii=(4, 4, 3), region=2)
    atlas, tract, lesion = make_phantom(spec)
    assert assign_regions(lesion, atlas).dominant == (2,)
    inside = float((tract.data * lesion.data).sum())
    assert inside == 0.0
    assert weighted_lesion_load(lesion, tract) == (0.0, 0.0)


def test_default_lesion_overlaps_tract():
    atlas, tract, lesion = make_phantom(PhantomSpec())
    assert assign_regions(lesion, atlas).dominant == (1,)
    assert weighted_lesion_load(lesion, tract)[0] > 0


def test_phantom_errors():
    with pytest.raises(DataError):
        PhantomSpec(center=(2, 2, 2), radii=(5, 5, 5))
    with pytest.raises(DataError):
        make_phantom(PhantomSpec(center=(32, 45, 22), radii=(4, 4, 3), region=3))
    with pytest.raises(DataError):
        PhantomSpec(region=5)


def _lesion():
    return make_phantom(PhantomSpec())[2], make_atlas((64, 64, 32)).data > 0


def test_degrade_identity():
    lesion, brain = _lesion()
    assert degrade(lesion, NoiseSpec(seed=3), brain) == lesion


def test_degrade_full_dropout_leaves_shell():
    lesion, brain = _lesion()
    out = degrade(lesion, NoiseSpec(seed=3, dropout=1.0), brain)
    inner, _ = lesion_shells(lesion.data.astype(bool))
    assert np.array_equal(out.data.astype(bool), inner)


def test_degrade_determinism():
    lesion, brain = _lesion()
    noise = dict(boundary_jitter=0.3, dropout=0.2, fp_blob_count=2, fp_blob_radius=3)
    a = degrade(lesion, NoiseSpec(seed=11, **noise), brain)
    assert degrade(lesion, NoiseSpec(seed=11, **noise), brain) == a
    differ = sum(
        degrade(lesion, NoiseSpec(seed=s, **noise), brain) != degrade(lesion, NoiseSpec(seed=s + 1000, **noise), brain)
        for s in range(20)
    )
    assert differ == 20


def test_degrade_without_blobs_stays_near_lesion():
    lesion, brain = _lesion()
    dil = ndimage.binary_dilation(lesion.data.astype(bool), np.ones((3, 3, 3)))
    for s in range(10):
        out = degrade(lesion, NoiseSpec(seed=s, boundary_jitter=0.5, dropout=0.3), brain)
        assert not (out.data.astype(bool) & ~dil).any()


def test_blobs_avoid_lesion_and_stay_in_brain():
    lesion, brain = _lesion()
    for s in range(10):
        out = degrade(lesion, NoiseSpec(seed=s, fp_blob_count=3, fp_blob_radius=4), brain)
        extra = out.data.astype(bool) & ~lesion.data.astype(bool)
        assert extra.any()
        assert not (extra & ~brain).any()
        assert np.array_equal(out.data.astype(bool) & lesion.data.astype(bool), lesion.data.astype(bool))
        labels, n = ndimage.label(extra)
        touching = ndimage.binary_dilation(lesion.data.astype(bool)) & extra
        assert not touching.any()


def test_noise_validation():
    with pytest.raises(DataError):
        NoiseSpec(boundary_jitter=1.5)
    with pytest.raises(DataError):
        NoiseSpec(fp_blob_count=-1)


def test_subjects_reproducible_from_seed():
    spec = CohortSpec(n_subjects=3)
    a, b = make_subject(spec, 1), make_subject(spec, 1)
    assert a.lesion == b.lesion and a.predictions == b.predictions
    assert make_subject(spec, 2).lesion != a.lesion
    assert set(a.predictions) == {"model_a", "model_b"}
    assert a.phantom.region in (1, 3)
