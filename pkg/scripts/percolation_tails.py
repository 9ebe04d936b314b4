"""Cluster-size and reach tails of the long-range percolation cluster of the origin.

    python3 scripts/percolation_tails.py --eps 0.05 --M 128 --replicas 100000
"""
import argparse
import math

import numpy as np

from spinbound.lattice import Box, CouplingFamily
from spinbound.percolation import (cluster_samples, conditional_reach_probabilities,
                                   fit_tail_exponent, tail_n)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--alpha", type=float, default=5.0)
    ap.add_argument("--eps", type=float, default=0.05)
    ap.add_argument("--M", type=int, default=128)
    ap.add_argument("--replicas", type=int, default=100_000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    box = Box(args.M)
    fam = CouplingFamily.normalized_family(args.alpha, 2 * args.M)
    n, _, _ = cluster_samples(box, fam, args.eps, args.replicas, args.seed)
    rep = tail_n(n, args.eps)
    print("k  P(n > k)  95% interval")
    for k, p, lo, hi in zip(rep.k, rep.p_hat, rep.ci_lo, rep.ci_hi):
        print(f"{k:2d}  {p:.3e}  [{lo:.3e}, {hi:.3e}]")
    print(f"log-slope {rep.slope:.3f}, reference {rep.slope_bound:.3f}")
    ks = np.arange(4, 33)
    cond = conditional_reach_probabilities(box, fam, args.eps, ks, args.replicas, args.seed + 1)
    mean = cond.mean(0)
    se = cond.std(0, ddof=1) / math.sqrt(cond.shape[0])
    fit = fit_tail_exponent(ks, mean, se)
    print(f"P(r >= k) ~ k^-g with g = {fit.exponent:.3f} [{fit.ci_lo:.3f}, {fit.ci_hi:.3f}], "
          f"reference alpha - 2 = {args.alpha - 2:g}")


if __name__ == "__main__":
    main()
