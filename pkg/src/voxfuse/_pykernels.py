"""Pure numpy implementations of the window kernels.

Same signatures and bit-identical results as the compiled ``_ckernels``
module; used when the extension is not built or ``VOXFUSE_KERNELS=python``.
All arrays are indexed ``[x, y, z]``.
"""
import numpy as np


def padded_sat(mask):
    """Inclusive 3D prefix sums with a leading zero plane on every axis.

    ``out[i+1, j+1, k+1]`` is the number of ones in ``mask[:i+1, :j+1, :k+1]``.
    """
    nx, ny, nz = mask.shape
    out = np.zeros((nx + 1, ny + 1, nz + 1), dtype=np.int64)
    np.cumsum(mask, axis=0, dtype=np.int64, out=out[1:, 1:, 1:])
    np.cumsum(out[1:, 1:, 1:], axis=1, out=out[1:, 1:, 1:])
    np.cumsum(out[1:, 1:, 1:], axis=2, out=out[1:, 1:, 1:])
    return out


def _box_sums(sat, lo, hi):
    # lo/hi: per-axis slices into the padded table selecting box corners
    (x0, y0, z0), (x1, y1, z1) = lo, hi
    return (
        sat[x1, y1, z1]
        - sat[x0, y1, z1]
        - sat[x1, y0, z1]
        - sat[x1, y1, z0]
        + sat[x0, y0, z1]
        + sat[x0, y1, z0]
        + sat[x1, y0, z0]
        - sat[x0, y0, z0]
    )


def mark_passing(sat_all, sat_any, w, tau, stride, z0, z1, out):
    """Write 1 into ``out`` at the origin of every passing box.

    Box origins are ``0, stride, 2*stride, ...`` on each axis; each box spans
    ``[a, min(a + w, n))``.  Only origins with ``z0 <= a_z < z1`` are handled,
    so disjoint z-slabs may be processed independently.
    """
    nx, ny, nz = out.shape
    k0 = -(-z0 // stride) * stride
    if k0 >= min(z1, nz):
        return
    k1 = min(z1, nz)
    # repeating the last plane w times makes the clipped upper corner a + w
    # valid for every origin, so all eight corners are plain strided slices
    pad = ((0, w), (0, w), (0, w))
    a_all = np.pad(sat_all, pad, mode="edge")
    a_any = np.pad(sat_any, pad, mode="edge")
    lo = (slice(0, nx, stride), slice(0, ny, stride), slice(k0, k1, stride))
    hi = (slice(w, nx + w, stride), slice(w, ny + w, stride), slice(k0 + w, k1 + w, stride))
    inter = _box_sums(a_all, lo, hi)
    union = _box_sums(a_any, lo, hi)
    ok = (union > 0) & (inter.astype(np.float64) >= tau * union.astype(np.float64))
    out[lo] = ok


def gate_covered(sat_pass, any_mask, w, z0, z1, out):
    """Set ``out[v] = any_mask[v]`` if some passing origin lies in ``[v-w+1, v]``.

    Handles voxels with ``z0 <= z < z1``; other voxels of ``out`` are untouched.
    """
    nx, ny, nz = any_mask.shape
    # w-1 leading zero planes stand in for the lower corner clipped at 0
    sat = np.pad(sat_pass, ((w - 1, 0), (w - 1, 0), (w - 1, 0)))
    lo = (slice(0, nx), slice(0, ny), slice(z0, z1))
    hi = (slice(w, nx + w), slice(w, ny + w), slice(z0 + w, z1 + w))
    covered = _box_sums(sat, lo, hi) > 0
    out[:, :, z0:z1] = any_mask[:, :, z0:z1] & covered
