"""Compare the compiled and pure-Python kernels on datacube workloads.

Usage::

    python benchmarks/bench_kernels.py --n 50 --t 12 --repeat 3
"""

import argparse
import time

import numpy as np

from nplink import _kernels
from nplink.features import PackedCubes, build_datacube
from nplink.graph import DEFAULT_LAG, DEFAULT_R_MAX
from nplink.simgen import SimConfig, generate


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def workloads(mod, seq, packed, queries, lag, lam):
    snap, nxt = seq[seq.T - 2], seq[seq.T - 1]
    window = [seq[seq.T - 2 - a] for a in range(min(lag, seq.T - 2) + 1)]
    members = np.arange(seq.n, dtype=np.int64)
    pair_args = (members, seq.n, snap.und_indptr, snap.und_indices, snap.degrees,
                 [s.out_indptr for s in window], [s.out_indices for s in window],
                 nxt.out_indptr, nxt.out_indices, lag)
    s = int(packed.keys[len(packed.keys) // 2])

    def scan():
        for q in queries:
            mod.cube_distances(q.keys, q.n, q.n_plus, packed.keys, packed.n, packed.n_plus, packed.offsets, lam)

    def pairs():
        mod.pair_cells(*pair_args)

    def cells():
        mod.cell_values(s, packed.keys, packed.n, packed.n_plus, packed.offsets, lam)

    def tv():
        for k in range(20_000):
            mod.tv_posterior(0.3 + 1e-5 * k, 40.0, 0.5, 25.0 + 1e-3 * k)

    return {"distance scan": scan, "pair cells": pairs, "cell values": cells, "tv posterior x20k": tv}


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=50)
    ap.add_argument("--t", type=int, default=12)
    ap.add_argument("--queries", type=int, default=5)
    ap.add_argument("--lag", type=int, default=DEFAULT_LAG)
    ap.add_argument("--lam", type=float, default=0.5)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    found = _kernels.backends()
    seq = generate(SimConfig(n=args.n, T=args.t, seed=args.seed))
    cubes = [build_datacube(seq, i, t, args.lag, DEFAULT_R_MAX) for t in range(1, seq.T) for i in range(seq.n)]
    packed = PackedCubes.pack(cubes)
    queries = cubes[-args.queries:]
    print(f"{len(cubes)} datacubes, {len(packed.keys)} stored cells; backends: {', '.join(found)}")

    results = {name: {} for name in found}
    for name, mod in found.items():
        for label, fn in workloads(mod, seq, packed, queries, args.lag, args.lam).items():
            results[name][label] = best_of(fn, args.repeat)

    labels = list(results["pure"])
    print(f"{'workload':<20}" + "".join(f"{n:>12}" for n in found) + ("     speedup" if "cython" in found else ""))
    for label in labels:
        row = f"{label:<20}" + "".join(f"{results[n][label] * 1e3:>10.2f}ms" for n in found)
        if "cython" in found:
            row += f"{results['pure'][label] / results['cython'][label]:>11.1f}x"
        print(row)


if __name__ == "__main__":
    main()
