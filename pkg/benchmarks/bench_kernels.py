"""Time agreement-window fusion with the compiled kernels, the numpy fallback
and the direct per-box loop.

    python benchmarks/bench_kernels.py --shape 256 256 128 --window 3

The per-box loop is far too slow for the full volume, so it runs on a thin
z-slab and its time is scaled by the ratio of box origins.
"""
import argparse
import contextlib
import time

import numpy as np

from voxfuse import _pykernels, kernels
from voxfuse.fuse import fuse_agreement_window
from voxfuse.volgrid import BinaryVolume

try:
    from voxfuse import _ckernels
except ImportError:
    _ckernels = None


@contextlib.contextmanager
def backend(module):
    saved = {name: getattr(kernels, name) for name in ("padded_sat", "mark_passing", "gate_covered")}
    for name in saved:
        setattr(kernels, name, getattr(module, name))
    try:
        yield
    finally:
        for name, fn in saved.items():
            setattr(kernels, name, fn)


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = fn()
        times.append(time.perf_counter() - t0)
    return min(times), result


def make_masks(shape, n, density, seed):
    rng = np.random.default_rng(seed)
    base = rng.random(shape) < density
    return [BinaryVolume(base ^ (rng.random(shape) < density / 4)) for _ in range(n)]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--shape", type=int, nargs=3, default=(256, 256, 128))
    ap.add_argument("--members", type=int, default=2)
    ap.add_argument("--window", type=int, default=3)
    ap.add_argument("--tau", type=float, default=0.5)
    ap.add_argument("--stride", type=int, default=1)
    ap.add_argument("--density", type=float, default=0.2)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--jobs", type=int, nargs="+", default=[1, 4])
    ap.add_argument("--naive-slab", type=int, default=4, help="z-depth used for the per-box loop (0 skips it)")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    shape = tuple(args.shape)
    masks = make_masks(shape, args.members, args.density, args.seed)
    fuse = lambda jobs: fuse_agreement_window(masks, args.window, args.tau, args.stride, jobs=jobs)
    print(f"shape {shape}, {args.members} members, w={args.window}, tau={args.tau}, stride={args.stride}")

    results = {}
    backends = [("cython", _ckernels), ("numpy", _pykernels)]
    for name, module in backends:
        if module is None:
            print(f"{name:>8}: not built")
            continue
        with backend(module):
            fuse(1)
            for jobs in args.jobs:
                t, out = best_of(lambda: fuse(jobs), args.repeat)
                results[(name, jobs)] = t
                print(f"{name:>8} jobs={jobs}: {t:8.3f} s")
                ref = results.setdefault("ref", out)
                assert ref == out, "backends disagree"

    if args.naive_slab > 0:
        depth = min(shape[2], args.naive_slab + args.window - 1)
        slab = [BinaryVolume(m.data[:, :, :depth]) for m in masks]
        t, _ = best_of(lambda: fuse_agreement_window(slab, args.window, args.tau, args.stride, path="naive"), 1)
        naive = t * len(range(0, shape[2], args.stride)) / len(range(0, depth, args.stride))
        print(f"{'naive':>8}: {naive:8.1f} s (extrapolated from a {depth}-deep slab)")
        fastest = min(v for k, v in results.items() if k != "ref")
        print(f"speed-up of fastest SAT run over the per-box loop: {naive / fastest:.0f}x")


if __name__ == "__main__":
    main()
