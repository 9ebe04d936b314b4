"""Clean and randomly shorted point-to-point resistances on a long-range network.

    python3 scripts/resistance_trend.py --eps 0.01 --replicas 50 --workers 4
"""
import argparse

from spinbound.lattice import CouplingFamily
from spinbound.resistor import clean_resistances, log_slope, shorted_resistance_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--alpha", type=float, default=5.0)
    ap.add_argument("--eps", type=float, default=0.01)
    ap.add_argument("--M", type=int, default=256)
    ap.add_argument("--replicas", type=int, default=50)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    fam = CouplingFamily.normalized_family(args.alpha, 2)
    xs = [8, 16, 32, 64]
    clean = clean_resistances(fam, args.M, xs)
    slope = log_slope(xs, clean)
    print("clean:", " ".join(f"R(0,{x})={r:.4f}" for x, r in zip(xs, clean)),
          f"slope {slope:.4f}")
    rep = shorted_resistance_experiment(fam, args.eps, xs, args.replicas, slope / 2, args.seed,
                                        args.M, workers=args.workers,
                                        progress=lambda i: print(f"\rreplica {i + 1}", end=""))
    print()
    for x, p, lo, hi, m in zip(rep.norms, rep.p_hat, rep.ci_lo, rep.ci_hi, rep.R_mean):
        print(f"|x|={x:3d}  mean R={m:.4f}  P(R >= c log|x|)={p:.3f} [{lo:.3f}, {hi:.3f}]")


if __name__ == "__main__":
    main()
