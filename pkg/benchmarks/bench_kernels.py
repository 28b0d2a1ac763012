"""Time the compiled kernels against the numpy fallback.

Usage: python3 benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import timeit

import numpy as np

from ris import _kernels_py as python_backend
from ris import kernels


def cases(rng):
    v2 = rng.uniform(0, 1, (128, 128))
    h2 = (1 / 127, 1 / 127)
    v3 = rng.uniform(0, 1, (32, 32, 32))
    h3 = (1 / 31,) * 3
    # images of a 48x48 cell grid under a mild smooth deformation
    n = 48
    s = np.linspace(0, 1, n + 1)
    X, Y = np.meshgrid(s, s, indexing="ij")
    X, Y = X + 0.03 * np.sin(2 * np.pi * Y), Y + 0.03 * np.sin(2 * np.pi * X)
    P = np.stack([X, Y], -1)
    quads = np.stack([P[:-1, :-1], P[1:, :-1], P[1:, 1:], P[:-1, 1:]], axis=2).reshape(-1, 4, 2)
    tets = []
    while len(tets) < 300:
        t = rng.uniform(0.05, 0.95, (4, 3))
        t = t[0] + 0.15 * (t - t[0])
        if np.linalg.det(np.stack([t[1] - t[0], t[2] - t[0], t[3] - t[0]], 1)) > 1e-5:
            tets.append(t)
    tets = np.array(tets)
    return {
        "envelope_sweep 128x128": ("envelope_sweep", (v2, h2, 3.0, 1)),
        "envelope_sweep 32^3": ("envelope_sweep", (v3, h3, 3.0, -1)),
        "rasterize_quads 2304 cells @256": ("rasterize_quads", (quads, -0.1, -0.1, 1.2 / 256,
                                                                256, 256)),
        "rasterize_tets 300 tets @48": ("rasterize_tets", (tets, np.zeros(3), 1 / 48,
                                                           (48, 48, 48))),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    compiled = kernels.compiled_backend
    if compiled is None:
        print("compiled extension not available; timing the numpy fallback only")
    print(f"{'kernel':36s} {'python [ms]':>12s} {'compiled [ms]':>14s} {'speedup':>8s}")
    for label, (fn, a) in cases(np.random.default_rng(0)).items():
        tp = min(timeit.repeat(lambda: getattr(python_backend, fn)(*a), number=1,
                               repeat=args.repeat))
        if compiled is None:
            print(f"{label:36s} {1e3 * tp:12.2f} {'-':>14s} {'-':>8s}")
            continue
        tc = min(timeit.repeat(lambda: getattr(compiled, fn)(*a), number=1, repeat=args.repeat))
        same = np.array_equal(np.asarray(getattr(compiled, fn)(*a)),
                              np.asarray(getattr(python_backend, fn)(*a)))
        print(f"{label:36s} {1e3 * tp:12.2f} {1e3 * tc:14.2f} {tp / tc:7.1f}x"
              + ("" if same else "  (outputs differ)"))


if __name__ == "__main__":
    main()
