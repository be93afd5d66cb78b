"""Benchmark the compiled pair scan against the NumPy fallback.

Usage:  python3 benchmarks/bench_pairscan.py [--sizes 2000,4000,8000]

Times the neighbor search (the hot kernel behind assembly) and a full
assemble through each backend, and checks that both produce the same pairs.
"""
import argparse
import time

import numpy as np

from pimlap import DensitySpec, ManifoldModel, assemble, sample, wendland41
from pimlap import _backend
from pimlap import assembly as assembly_mod


def timeit(fn, repeats=3):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--sizes", default="2000,4000,8000")
    ap.add_argument("--t", type=float, default=0.01)
    ap.add_argument("--shape", default="interval", choices=["interval", "circle", "sphere"])
    args = ap.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]

    impls = {name: _backend.get_impl(name) for name in _backend.backends_available()}
    if "cython" not in impls:
        print("compiled extension not available; benchmarking fallback only")

    man = (
        ManifoldModel.interval(0, 1)
        if args.shape == "interval"
        else getattr(ManifoldModel, args.shape)(1.0)
    )
    dens = DensitySpec("uniform")
    cutoff_sq = 4.0 * args.t

    header = f"{'n':>7} {'backend':>8} {'pairs':>10} {'scan (s)':>9} {'assemble (s)':>12}"
    print(header)
    print("-" * len(header))
    for n in sizes:
        cloud = sample(man, dens, n, seed=1)
        counts = {}
        for name, impl in impls.items():
            scan_t, (ii, jj, d2) = timeit(
                lambda: impl.find_pairs_cell(cloud.points, cutoff_sq)
            )
            counts[name] = len(ii)
            original = assembly_mod._backend
            assembly_mod._backend = impl
            try:
                asm_t, _ = timeit(lambda: assemble(cloud, wendland41(), args.t), repeats=1)
            finally:
                assembly_mod._backend = original
            print(f"{n:>7} {name:>8} {len(ii):>10} {scan_t:>9.4f} {asm_t:>12.4f}")
        if len(set(counts.values())) != 1:
            raise SystemExit(f"backend pair counts disagree: {counts}")
    if "cython" in impls and "python" in impls:
        print("\npair sets verified equal across backends at every size")


if __name__ == "__main__":
    main()
