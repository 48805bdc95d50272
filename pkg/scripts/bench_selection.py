#!/usr/bin/env python3
"""Timing comparison of naive vs lazy greedy selection.

Runs both algorithms on the same random candidate pools at increasing
sizes and reports wall time, gain-evaluation counts, and whether the
selections agree.  Lazy evaluation counts should stay well under the
naive ones once M is a few hundred.
"""

import argparse
import sys
import time

import numpy as np

import saco.selection as sel
from saco.data import Patch
from saco.graphs import build_feature_affinity, build_spatial_affinity


def make_pool(m, seed):
    rng = np.random.default_rng([seed, 303])
    centers = rng.normal(0.0, 1.0, size=(12, 6))
    labels = rng.integers(0, 3, size=m)
    which = rng.integers(0, 4, size=m)
    feats = centers[labels * 4 + which] + 0.25 * rng.normal(size=(m, 6))
    coords = rng.uniform(0.0, 1.0, size=(m, 2))
    return [Patch(i, feats[i], (float(coords[i, 0]), float(coords[i, 1])),
                  int(labels[i]), 0) for i in range(m)]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[100, 300, 1000])
    ap.add_argument("--k", type=int, default=20)
    ap.add_argument("--k-nn", type=int, default=16)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--skip-naive-above", type=int, default=2000,
                    help="only run lazy greedy for pools larger than this")
    args = ap.parse_args(argv)

    w = sel.ObjectiveWeights()
    print(f"{'M':>6} {'naive s':>9} {'lazy s':>9} {'naive evals':>12} "
          f"{'lazy evals':>11} {'ratio':>6}  agree")
    for m in args.sizes:
        patches = make_pool(m, args.seed)
        S = build_feature_affinity(patches, k_nn=args.k_nn)
        L = build_spatial_affinity(patches, k_nn=args.k_nn)

        t0 = time.perf_counter()
        lazy = sel.lazy_greedy(patches, S, L, w, args.k)
        lazy_s = time.perf_counter() - t0

        if m > args.skip_naive_above:
            print(f"{m:>6} {'-':>9} {lazy_s:>9.2f} {'-':>12} "
                  f"{lazy.n_evaluations:>11} {'-':>6}  (naive skipped)")
            continue

        t0 = time.perf_counter()
        naive = sel.naive_greedy(patches, S, L, w, args.k)
        naive_s = time.perf_counter() - t0

        ratio = lazy.n_evaluations / naive.n_evaluations
        agree = "yes" if lazy.ids == naive.ids else "NO"
        print(f"{m:>6} {naive_s:>9.2f} {lazy_s:>9.2f} {naive.n_evaluations:>12} "
              f"{lazy.n_evaluations:>11} {ratio:>6.3f}  {agree}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
