import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import random_mask
from oracles import voxel_loop_counts
from voxfuse.errors import ShapeMismatchError, UndefinedReferenceError
from voxfuse.metrics import lesion_volume, mean_excluding, metrics_from_counts, overlap_metrics, percent_error
from voxfuse.volgrid import BinaryVolume, VoxelCounts


def test_identical_and_disjoint(rng):
    m = random_mask(rng)
    r = overlap_metrics(m, m)
    assert (r.dsc, r.iou, r.precision, r.recall) == (1.0, 1.0, 1.0, 1.0)
    a = np.zeros((4, 4, 4), np.uint8)
    b = np.zeros((4, 4, 4), np.uint8)
    a[:2], b[2:] = 1, 1
    r = overlap_metrics(BinaryVolume(a), BinaryVolume(b))
    assert (r.dsc, r.iou, r.precision, r.recall) == (0.0, 0.0, 0.0, 0.0)


def test_hand_counted_fixture():
    # tp=6, fp=2, fn=2 laid out along x
    p = np.zeros((12, 1, 1), np.uint8)
    t = np.zeros((12, 1, 1), np.uint8)
    p[0:8] = 1
    t[0:6] = 1
    t[8:10] = 1
    assert voxel_loop_counts(p, t) == (6, 2, 2)
    r = overlap_metrics(BinaryVolume(p), BinaryVolume(t))
    assert r.dsc == 0.75 and r.iou == 0.6 and r.precision == 0.75 and r.recall == 0.75


def test_empty_conventions():
    z = BinaryVolume(np.zeros((2, 2, 2)))
    one = np.zeros((2, 2, 2), np.uint8)
    one[0, 0, 0] = 1
    r = overlap_metrics(z, z)
    assert (r.dsc, r.iou, r.precision, r.recall) == (1.0, 1.0, 1.0, 1.0)
    r = overlap_metrics(z, BinaryVolume(one))
    assert (r.dsc, r.iou, r.precision, r.recall) == (0.0, 0.0, 0.0, 0.0)
    r = overlap_metrics(BinaryVolume(one), z)
    assert (r.dsc, r.iou, r.precision, r.recall) == (0.0, 0.0, 0.0, 0.0)


def test_shape_mismatch(rng):
    with pytest.raises(ShapeMismatchError):
        overlap_metrics(random_mask(rng), random_mask(rng, (8, 8, 2)))


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 50), st.integers(0, 50), st.integers(0, 50))
def test_dice_iou_identity(tp, fp, fn):
    m = metrics_from_counts(VoxelCounts(tp, fp, fn, 0))
    assert m.iou <= m.dsc
    assert m.dsc == pytest.approx(2 * m.iou / (1 + m.iou), rel=1e-12, abs=0)


@settings(max_examples=50, deadline=None)
@given(arrays(np.uint8, (4, 3, 5), elements=st.integers(0, 1)), arrays(np.uint8, (4, 3, 5), elements=st.integers(0, 1)))
def test_symmetries(a, b):
    pa, pb = BinaryVolume(a), BinaryVolume(b)
    ab, ba = overlap_metrics(pa, pb), overlap_metrics(pb, pa)
    assert ab.dsc == ba.dsc and ab.iou == ba.iou
    assert ab.precision == ba.recall
    perm = np.random.default_rng(0).permutation(a.size)
    qa = BinaryVolume(a.ravel()[perm].reshape(a.shape))
    qb = BinaryVolume(b.ravel()[perm].reshape(b.shape))
    assert overlap_metrics(qa, qb) == ab


def test_lesion_volume():
    assert lesion_volume(BinaryVolume(np.zeros((3, 3, 3)))) == 0
    ten = np.zeros((10, 1, 1), np.uint8) + 1
    assert lesion_volume(BinaryVolume(ten)) == 10
    assert lesion_volume(BinaryVolume(ten, (2.0, 2.0, 2.0))) == 80


def test_percent_error():
    assert percent_error(100, 100) == 0.0
    assert percent_error(130, 100) == pytest.approx(30.0)
    assert percent_error(70, 100) == pytest.approx(30.0)
    with pytest.raises(UndefinedReferenceError):
        percent_error(5, 0)


def test_mean_excluding():
    assert mean_excluding([10.0, None, 20.0]) == (15.0, 1)
    mean, n = mean_excluding([None])
    assert np.isnan(mean) and n == 1
