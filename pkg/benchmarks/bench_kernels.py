"""Time the compiled and numpy versions of each kernel on representative inputs.

Usage: python benchmarks/bench_kernels.py [--repeat 5] [--scale 1.0]

The compiled versions are warmed up once before timing so that JIT
compilation is not counted.  Each line reports the best of ``--repeat`` runs.
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from aolreg import kernels


def cases(scale: float, rng: np.random.Generator):
    def n(x):
        return max(2, int(x * scale))

    V = rng.random((n(2000), 32)).round(2)
    w = rng.dirichlet(np.ones(32))
    yield "farthest_point_cover", "_cover", (V, w, 0.15 ** 2)

    C = V[rng.integers(0, V.shape[0], size=n(200))]
    yield "nearest_center", "_assign", (V, C, w)

    sizes = rng.integers(1, 40, size=n(20000))
    offsets = np.concatenate(([0], np.cumsum(sizes))).astype(np.int64)
    yield "segment_argmin", "_segment_argmin", (rng.random(offsets[-1]), offsets)

    A = rng.random((n(60), 64))
    wa = rng.dirichlet(np.ones(64))
    th0 = np.zeros(A.shape[0])
    th0[0] = 1.0
    yield "frank_wolfe", "_fw", ((A * wa) @ A.T, A @ (wa * rng.random(64)), 0.3, th0, 1e-10, 5000)

    B = rng.integers(0, 2, size=(n(3000), 24)).astype(np.uint8)
    yield "hamming_pack", "_pack", (B, 8)

    signs = rng.choice([-1.0, 1.0], size=(n(200), 256))
    yield "rademacher_sups", "_rad_sups", (signs, rng.random((n(500), 256)))

    ssizes = rng.integers(1, 60, size=n(5000))
    vals = np.concatenate([np.sort(rng.random(s)) for s in ssizes])
    soff = np.concatenate(([0], np.cumsum(ssizes))).astype(np.int64)
    yield "sweep_cover", "_sweep", (vals, soff, rng.uniform(0.01, 0.3, size=len(ssizes)), 1e-12)


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--scale", type=float, default=1.0)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    if not kernels.HAVE_NUMBA:
        print("numba is not installed; only the numpy versions can be timed")
    print(f"{'kernel':<22}{'numba (ms)':>12}{'numpy (ms)':>12}{'speed-up':>10}")
    for name, stem, inputs in cases(args.scale, np.random.default_rng(args.seed)):
        f_np = getattr(kernels, stem + "_np")
        t_np = min(timeit.repeat(lambda: f_np(*inputs), number=1, repeat=args.repeat))
        if kernels.HAVE_NUMBA:
            f_nb = getattr(kernels, stem + "_nb")
            f_nb(*inputs)
            t_nb = min(timeit.repeat(lambda: f_nb(*inputs), number=1, repeat=args.repeat))
            print(f"{name:<22}{1e3 * t_nb:>12.2f}{1e3 * t_np:>12.2f}{t_np / t_nb:>9.1f}x")
        else:
            print(f"{name:<22}{'n/a':>12}{1e3 * t_np:>12.2f}{'':>10}")


if __name__ == "__main__":
    main()
