"""Monte Carlo two-point function of the long-range XY model next to the predicted decay.

    python3 scripts/mc_decay.py --M 32 --beta 0.5 --sweeps 20000
"""
import argparse

import numpy as np

from spinbound.interaction import approximate, builtin
from spinbound.lattice import CouplingFamily
from spinbound.ms_bound import predicted_correlation_bound
from spinbound.spin_mc import estimate_correlation, fit_power_law, make_config


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--alpha", type=float, default=5.0)
    ap.add_argument("--beta", type=float, default=0.5)
    ap.add_argument("--interaction", default="xy")
    ap.add_argument("--M", type=int, default=32)
    ap.add_argument("--cutoff", type=int, default=4)
    ap.add_argument("--sweeps", type=int, default=20_000)
    ap.add_argument("--burn-in", type=int, default=2000)
    ap.add_argument("--boundary", choices=["const", "random"], default="const")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    fam = CouplingFamily.normalized_family(args.alpha, args.cutoff)
    conf = make_config(args.M, fam, args.interaction, beta=args.beta, boundary=args.boundary,
                       seed=args.seed)
    xs = [x for x in (1, 2, 4, 8, 16, 32) if x < args.M]
    est = estimate_correlation(conf, xs, args.sweeps, args.burn_in, args.seed + 1)
    f = builtin(args.interaction, args.beta)
    bound, choice = predicted_correlation_bound(approximate(f, 0.05), fam, 0.09, xs)
    for e, b in zip(est, bound):
        print(f"|x|={max(map(abs, e.x)):3d}  corr={e.mean:+.6f} +- {e.stderr:.6f}  "
              f"log bound={np.log(b):.2f}")
    p, a, se = fit_power_law(xs, [abs(e.mean) for e in est], [e.stderr for e in est])
    print(f"fitted decay exponent {p:.3f} +- {se:.3f}; bound exponent {choice.exponent_C:.3g}")


if __name__ == "__main__":
    main()
