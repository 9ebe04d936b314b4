"""Command-line front end: ``spinbound {bound,perc,resist,mc,lemmas,replay}``.

Every run writes a CSV file and, next to it, a plain-text summary that is
also a valid config file (metadata lives in ``#`` comment lines), so
``spinbound replay SUMMARY`` re-runs it.

Exit status: 0 on success, 2 on invalid input, 3 on numerical failure
(solver non-convergence, diverged profile, non-finite output).
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import logging
import math
import subprocess
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from . import config as cfg
from .errors import ConfigError, SpinboundError
from .lattice import Box, CouplingFamily

log = logging.getLogger("spinbound")

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3


class NonFinite(ArithmeticError):
    pass


def _family(alpha, cutoff):
    return CouplingFamily.normalized_family(float(alpha), int(cutoff))


def _interaction(name, beta):
    from .interaction import builtin, load_coefficients_csv
    if name.endswith(".csv"):
        return load_coefficients_csv(name).with_beta(beta)
    return builtin(name, beta)


# -- runners: each returns (header, rows, notes) ------------------------------------

def run_bound(p, seed):
    from .interaction import approximate
    from .ms_bound import bound_report
    approx = approximate(_interaction(p["interaction"], p["beta"]), p["approx_eps"])
    rep = bound_report(approx, _family(p["alpha"], p["cutoff"]), p["R"], p["constraint"], p["c3"])
    notes = [f"K={approx.K}", f"C_K={approx.C_K!r}", f"D_K={approx.D_K!r}"]
    return (["delta_star", "exponent_C", "logF", "closed_form"],
            [[rep.delta_star, rep.exponent_C, rep.log_F, rep.closed_form]], notes)


def _perc_tails(p, seed):
    from . import percolation as P
    from ._util import derive_seed
    M = p["M"]
    fam = _family(p["alpha"], p["cutoff"] or 2 * M)
    box = Box(M)
    n, _, _ = P.cluster_samples(box, fam, p["rho"], p["replicas"], derive_seed(seed, 0))
    rep = P.tail_n(n, p["rho"], k_max=p["k_max"])
    rows = [["n", int(k), ph, lo, hi] for k, ph, lo, hi in zip(rep.k, rep.p_hat, rep.ci_lo, rep.ci_hi)]
    ks = np.asarray(p["r_ks"])
    cond = P.conditional_reach_probabilities(box, fam, p["rho"], ks, p["replicas"],
                                             derive_seed(seed, 1))
    mean = cond.mean(0)
    se = cond.std(0, ddof=1) / math.sqrt(cond.shape[0])
    for k, m, s in zip(ks, mean, se):
        rows.append(["r", int(k), m, m - 1.96 * s, m + 1.96 * s])
    fit = P.fit_tail_exponent(ks, mean, se) if (mean > 0).sum() >= 3 else None
    notes = [f"n_slope={rep.slope!r}", f"n_slope_bound={rep.slope_bound!r}"]
    if fit is not None:
        notes.append(f"r_exponent={float(fit.exponent)!r} "
                     f"ci=({float(fit.ci_lo)!r}, {float(fit.ci_hi)!r})")
    return ["quantity", "k", "p_hat", "ci_lo", "ci_hi"], rows, notes


def _perc_good(p, seed):
    from . import percolation as P
    from ._util import derive_seed, wilson_interval
    rows = []
    for i, R in enumerate(p["R"]):
        M = 4 * R
        fam = _family(p["alpha"], p["cutoff"] or 2 * M)
        f1, f2, s3 = P.goodness_samples(R, fam, p["rho"], p["replicas"], derive_seed(seed, i), M)
        bad = (f1 != 0) | (f2 != 0) | (s3 > p["c3"] * math.log(R))
        k = int(bad.sum())
        lo, hi = wilson_interval(k, bad.size)
        rows.append([R, k / bad.size, lo, hi, float(np.mean(f1 != 0)), float(np.mean(f2 != 0)),
                     float(np.mean(s3)) / math.log(R)])
    return ["R", "p_bad", "ci_lo", "ci_hi", "p_cond1_fail", "p_cond2_fail", "mean_s3_over_logR"], rows, []


def _perc_domination(p, seed):
    from . import percolation as P
    from ._util import derive_seed
    box = Box(p["M"])
    fam = _family(p["alpha"], p["cutoff"] or 2 * p["M"])
    rows = []
    for i, R in enumerate(p["R"]):
        lhs, rhs, rhs_all = P.domination_sums(box, fam, p["rho"], R, p["replicas"], derive_seed(seed, i))
        rows.append([R, lhs.size, float(np.mean(lhs <= rhs)), float(np.max(lhs - rhs)),
                     float(np.mean(lhs <= rhs_all))])
    return ["R", "samples", "frac_holds", "max_excess", "frac_holds_all_starts"], rows, []


def run_perc(p, seed):
    exp = p["experiment"]
    if exp == "lemmas":
        return run_lemmas({k: v for k, (_, v) in cfg.SCHEMAS["lemmas"].items()}, seed)
    return {"tails": _perc_tails, "good": _perc_good, "domination": _perc_domination}[exp](p, seed)


def run_resist(p, seed):
    from .resistor import clean_resistances, log_slope, shorted_resistance_experiment
    fam = _family(p["alpha"], p["cutoff"])
    norms = list(p["x_list"])
    notes = []
    c_tilde = p["c_tilde"]
    if c_tilde <= 0:
        clean = clean_resistances(fam, p["M"], norms, tol=min(p["tol"], 1e-8), method=p["method"])
        c_tilde = 0.5 * log_slope(norms, clean)
        notes.append(f"clean_slope={2 * c_tilde!r}")
    notes.append(f"c_tilde={c_tilde!r}")
    rep = shorted_resistance_experiment(fam, p["epsilon"], norms, p["replicas"], c_tilde, seed,
                                        p["M"], p["tol"], p["method"], workers=p["workers"],
                                        chunk=p["chunk"])
    if rep.solver_failures:
        notes.append(f"solver_failures={rep.solver_failures}")
    rows = [[int(n), m, lo, hi, ph] for n, m, lo, hi, ph in
            zip(rep.norms, rep.R_mean, rep.R_ci_lo, rep.R_ci_hi, rep.p_hat)]
    return ["x", "R_mean", "R_ci_lo", "R_ci_hi", "p_ge_threshold"], rows, notes


def run_mc(p, seed):
    from ._util import derive_seed
    from .interaction import approximate
    from .ms_bound import predicted_correlation_bound
    from .spin_mc import estimate_correlation, make_config
    f = _interaction(p["interaction"], p["beta"])
    fam = _family(p["alpha"], p["cutoff"])
    conf = make_config(p["M"], fam, f, boundary=p["boundary"], theta_bar=p["theta_bar"],
                       seed=derive_seed(seed, 0))
    est = estimate_correlation(conf, list(p["x_list"]), p["sweeps"], p["burn_in"],
                               derive_seed(seed, 1))
    bound, choice = predicted_correlation_bound(approximate(f, p["approx_eps"]), fam, p["c3"],
                                                [max(abs(e.x[0]), abs(e.x[1]), 1) for e in est])
    rows = [[max(abs(e.x[0]), abs(e.x[1])), e.mean, e.stderr, float(b)] for e, b in zip(est, bound)]
    return ["x", "corr", "stderr", "bound_value"], rows, [f"exponent_C={choice.exponent_C!r}"]


def run_lemmas(p, seed):
    from .percolation import binomial_tail_exact, chernoff_bound, convolution_bound_check
    rows = []
    for a in p["alphas"]:
        worst = -math.inf
        fails = 0
        for k in range(2, p["k_max"] + 1):
            lhs, rhs = convolution_bound_check(k, a)
            worst = max(worst, lhs / rhs)
            fails += lhs > rhs
        rows.append(["convolution", a, worst, 1.0, int(fails == 0)])
    mu = p["n"] * p["p"]
    for e in p["eps_list"]:
        exact = binomial_tail_exact(p["n"], p["p"], (1.0 + e) * mu)
        bound = chernoff_bound(mu, e)
        rows.append(["chernoff", e, exact, bound, int(exact <= bound)])
    failed = sum(1 for r in rows if not r[4])
    return ["check", "param", "value", "bound", "passed"], rows, [f"failed={failed}"]


RUNNERS = {"bound": run_bound, "perc": run_perc, "resist": run_resist, "mc": run_mc,
           "lemmas": run_lemmas}


# -- artifacts ------------------------------------------------------------------------

def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        if not math.isfinite(v):
            raise NonFinite(f"non-finite value {v!r} in output")
        return "%.17g" % v
    return str(v)


def summary_path(output) -> Path:
    out = Path(output)
    return out.with_name(out.stem + ".summary.txt")


def git_version() -> str:
    try:
        r = subprocess.run(["git", "describe", "--always", "--dirty", "--tags"],
                           cwd=Path(__file__).parent, capture_output=True, text=True, timeout=10)
        return r.stdout.strip() or "unknown"
    except (OSError, subprocess.SubprocessError):
        return "unknown"


def _sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def run(config: cfg.ExperimentConfig) -> int:
    """Execute a resolved config, write the CSV and summary, return the exit status."""
    t0 = time.perf_counter()
    try:
        header, rows, notes = RUNNERS[config.subcommand](config.params, config.master_seed)
        cells = [[_cell(v) for v in row] for row in rows]
    except (ArithmeticError, FloatingPointError) as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, SpinboundError) as e:
        print(f"invalid input: {e}", file=sys.stderr)
        return EXIT_INPUT
    out = Path(config.output_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(cells)
    wall = time.perf_counter() - t0
    meta = [f"# spinbound run record",
            f"# version: {__version__}",
            f"# git: {git_version()}",
            f"# wall_time_s: {wall:.3f}",
            f"# rows: {len(cells)}",
            f"# csv_sha256: {_sha256(out)}"]
    meta += [f"# note: {n}" for n in notes]
    summary_path(out).write_text("\n".join(meta) + "\n" + cfg.serialize(config))
    print(f"wrote {out} ({len(cells)} rows, {wall:.1f} s)")
    return EXIT_OK


def read_record(path):
    """(metadata dict, config text) of a run summary."""
    text = Path(path).read_text()
    meta = {}
    for line in text.splitlines():
        if line.startswith("# ") and ": " in line:
            k, v = line[2:].split(": ", 1)
            meta.setdefault(k.strip(), v.strip())
    return meta, text


def replay(record_path, output=None, seed=None) -> int:
    """Re-run a recorded experiment; refuses records of another version."""
    meta, text = read_record(record_path)
    if meta.get("version") != __version__:
        print(f"record was made by version {meta.get('version')!r}, this is {__version__}; "
              "refusing to replay", file=sys.stderr)
        return EXIT_INPUT
    over = {}
    if seed is not None:
        over["seed"] = str(seed)
    try:
        old = cfg.parse(text)
        target = output or str(Path(old.output_path).with_suffix(".replay.csv"))
        over["output"] = target
        conf = cfg.parse(text, over)
    except SpinboundError as e:
        print(f"invalid record: {e}", file=sys.stderr)
        return EXIT_INPUT
    status = run(conf)
    if status == EXIT_OK and "csv_sha256" in meta:
        same = _sha256(conf.output_path) == meta["csv_sha256"]
        print("replay identical" if same else "replay differs from the record")
    return status


# -- argument parsing ------------------------------------------------------------------

def _flag(key):
    return "--" + key.replace("_", "-")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="spinbound", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="subcommand", required=True)
    for name, schema in cfg.SCHEMAS.items():
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="key=value file; flags override its values")
        sp.add_argument("--seed")
        sp.add_argument("--output")
        for key, (parser, default) in schema.items():
            opts = getattr(parser, "options", None)
            sp.add_argument(_flag(key), dest=key, choices=opts,
                            help=f"default: {cfg._format(default)}")
    rp = sub.add_parser("replay")
    rp.add_argument("record")
    rp.add_argument("--output")
    rp.add_argument("--seed")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.subcommand == "replay":
        return replay(args.record, args.output, args.seed)
    over = {k: v for k, v in vars(args).items()
            if v is not None and k not in ("config", "verbose", "subcommand")}
    try:
        text = Path(args.config).read_text() if args.config else ""
        pairs = cfg.parse_pairs(text)
        if pairs.get("subcommand", args.subcommand) != args.subcommand:
            raise ConfigError(f"config file is for {pairs['subcommand']!r}, "
                                  f"not {args.subcommand!r}")
        pairs["subcommand"] = args.subcommand
        pairs.update(over)
        conf = cfg.parse("\n".join(f"{k}={v}" for k, v in pairs.items()))
    except (OSError, SpinboundError) as e:
        print(f"invalid input: {e}", file=sys.stderr)
        return EXIT_INPUT
    return run(conf)


if __name__ == "__main__":
    sys.exit(main())
