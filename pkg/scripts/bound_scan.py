"""Optimal delta and decay exponent for each built-in interaction over a beta grid.

    python3 scripts/bound_scan.py --alpha 5 --betas 0.25,0.5,1,2,4,8
"""
import argparse
import csv
import sys

from spinbound.interaction import BUILTIN, approximate, builtin
from spinbound.lattice import CouplingFamily
from spinbound.ms_bound import optimize_delta


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--alpha", type=float, default=5.0)
    ap.add_argument("--betas", default="0.25,0.5,1,2,4,8")
    ap.add_argument("--eps", type=float, default=0.05, help="trig approximation error")
    ap.add_argument("--c3", type=float, default=0.09)
    args = ap.parse_args()
    fam = CouplingFamily.normalized_family(args.alpha, 16)
    w = csv.writer(sys.stdout)
    w.writerow(["interaction", "beta", "K", "C_K", "D_K", "constraint", "delta_star", "exponent_C"])
    for name in sorted(BUILTIN):
        for beta in map(float, args.betas.split(",")):
            ap_ = approximate(builtin(name, beta), args.eps)
            for constraint in ("warmup", "general"):
                ch = optimize_delta(ap_, fam, constraint=constraint, C3=args.c3)
                w.writerow([name, beta, ap_.K, ap_.C_K, ap_.D_K, constraint,
                            ch.delta_star, ch.exponent_C])


if __name__ == "__main__":
    main()
