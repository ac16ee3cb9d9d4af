import numpy as np
import pytest

from voxfuse import niftio
from voxfuse.volgrid import AtlasVolume, BinaryVolume, WeightedVolume


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_mask(rng, shape=(8, 8, 8), p=0.4, spacing=(1.0, 1.0, 1.0)):
    return BinaryVolume(rng.random(shape) < p, spacing)


def random_atlas(rng, shape=(8, 8, 8), labels=(0, 1, 2, 3, 4)):
    return AtlasVolume(rng.choice(labels, size=shape).astype(np.uint8))


def random_weights(rng, shape=(8, 8, 8)):
    return WeightedVolume(rng.random(shape).astype(np.float32).astype(np.float64))


def write_custom(path, values, datatype, slope=1.0, inter=0.0, order="<", pixdim=(1.0, 1.0, 1.0)):
    """Hand-built NIfTI file, independent of ``write_volume``."""
    values = np.asarray(values)
    hdr = np.zeros((), dtype=niftio.header_dtype(order))
    hdr["sizeof_hdr"] = 348
    hdr["dim"] = [3, *values.shape, 1, 1, 1, 1]
    hdr["datatype"] = datatype
    hdr["bitpix"] = niftio.DATATYPES[datatype][1]
    hdr["pixdim"] = [1.0, *pixdim, 1, 1, 1, 1]
    hdr["vox_offset"] = 352
    hdr["scl_slope"] = slope
    hdr["scl_inter"] = inter
    hdr["magic"] = b"n+1"
    dt = np.dtype(niftio.DATATYPES[datatype][0]).newbyteorder(order)
    payload = values.ravel(order="F").astype(dt).tobytes()
    path.write_bytes(hdr.tobytes() + b"\0" * 4 + payload)
