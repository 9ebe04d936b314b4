"""Small numerical and bookkeeping helpers used by several modules."""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import special, stats

from .errors import InsufficientData


def zeta(s, q=1.0):
    """Riemann (or Hurwitz, with offset ``q``) zeta function for real s > 1."""
    if s <= 1.0:
        raise ValueError(f"zeta needs s > 1, got {s}")
    return float(special.zeta(s, q))


def harmonic(n: int) -> float:
    """H_n = sum_{j=1}^n 1/j by Kahan-compensated summation."""
    return float(harmonic_table(n)[n])


def harmonic_table(n: int) -> np.ndarray:
    """Array ``H`` with ``H[i] = sum_{j<=i} 1/j`` for i = 0..n (H[0] = 0).

    Each prefix is accumulated with Kahan compensation, which keeps the
    telescoping identities of the rotation profiles exact to rounding.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    out = np.zeros(n + 1)
    s = 0.0
    comp = 0.0
    for j in range(1, n + 1):
        y = 1.0 / j - comp
        t = s + y
        comp = (t - s) - y
        s = t
        out[j] = s
    return out


def cosh_minus_one(t):
    """cosh(t) - 1 computed as 2 sinh(t/2)^2 (no cancellation near 0)."""
    h = np.sinh(np.asarray(t, dtype=float) * 0.5)
    return 2.0 * h * h


def wilson_interval(successes: int, trials: int, confidence: float = 0.95):
    """Wilson score interval for a binomial proportion."""
    if trials <= 0:
        return (0.0, 1.0)
    ci = stats.binomtest(int(successes), int(trials)).proportion_ci(
        confidence_level=confidence, method="wilson")
    return (float(ci.low), float(ci.high))


@dataclass
class LineFit:
    """Weighted least-squares line ``y = slope * x + intercept``."""

    slope: float
    intercept: float
    slope_stderr: float
    residual: float
    n_points: int

    def slope_interval(self, confidence=0.95):
        dof = max(self.n_points - 2, 1)
        t = stats.t.ppf(0.5 + confidence / 2, dof)
        return (self.slope - t * self.slope_stderr, self.slope + t * self.slope_stderr)


def fit_line(x, y, weights=None) -> LineFit:
    """Least-squares line through (x, y); ``weights`` are inverse variances.

    With weights the slope standard error comes from the weights themselves
    (known-variance regression), otherwise from the residual scatter.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2:
        raise InsufficientData(f"need at least 2 points for a line, got {x.size}")
    w = np.ones_like(x) if weights is None else np.asarray(weights, dtype=float)
    sw = w.sum()
    xm = (w * x).sum() / sw
    ym = (w * y).sum() / sw
    sxx = (w * (x - xm) ** 2).sum()
    if sxx == 0:
        raise InsufficientData("x values are all equal")
    slope = (w * (x - xm) * (y - ym)).sum() / sxx
    intercept = ym - slope * xm
    res = y - (slope * x + intercept)
    rss = float((w * res ** 2).sum())
    if weights is None:
        var = rss / max(x.size - 2, 1) / sxx
    else:
        var = 1.0 / sxx
    return LineFit(float(slope), float(intercept), float(math.sqrt(var)), rss, int(x.size))


def batch_means_stderr(series, n_batches: int = 32) -> float:
    """Standard error of the mean of a correlated series by batch means."""
    series = np.asarray(series, dtype=float)
    n = series.size // n_batches
    if n < 1:
        raise InsufficientData("series shorter than the number of batches")
    means = series[: n * n_batches].reshape(n_batches, n).mean(axis=1)
    return float(means.std(ddof=1) / math.sqrt(n_batches))


# -- seeds and workers -------------------------------------------------------

def seed_block(master_seed: int, n: int, offset: int = 0) -> np.ndarray:
    """32-bit seeds of replicas offset..offset+n-1 of ``master_seed``.

    Replica i gets word i of the output stream of
    ``numpy.random.SeedSequence(master_seed)``.  The stream is
    prefix-consistent, so a replica's seed depends only on (master, i) and
    not on how many replicas are requested or how they are scheduled.
    """
    ss = np.random.SeedSequence(int(master_seed) & 0xFFFFFFFFFFFFFFFF)
    return ss.generate_state(offset + n, dtype=np.uint32)[offset:].astype(np.int64)


def derive_seed(master_seed: int, index: int) -> int:
    """Seed of replica ``index`` (see :func:`seed_block`)."""
    return int(seed_block(master_seed, 1, index)[0])


def rng_for(master_seed: int, index: int) -> np.random.Generator:
    ss = np.random.SeedSequence([int(master_seed) & 0xFFFFFFFFFFFFFFFF, int(index)])
    return np.random.default_rng(ss)


def worker_count(requested: int | None = None) -> int:
    """Number of worker processes, capped by ``SPINBOUND_THREADS``."""
    n = requested or os.cpu_count() or 1
    cap = os.environ.get("SPINBOUND_THREADS")
    if cap:
        n = min(n, max(1, int(cap)))
    return max(1, n)


def _run_chunk(args):
    fn, items = args
    return [fn(it) for it in items]


def parallel_map(fn, items, workers: int | None = None, chunk_size: int = 16):
    """Order-preserving map over fixed-size chunks.

    Results do not depend on the number of workers: the items are cut into
    chunks of ``chunk_size`` and reassembled in input order.
    """
    items = list(items)
    chunks = [items[i:i + chunk_size] for i in range(0, len(items), chunk_size)]
    n = min(worker_count(workers), len(chunks)) if chunks else 1
    if n <= 1:
        out = [_run_chunk((fn, c)) for c in chunks]
    else:
        with ProcessPoolExecutor(max_workers=n) as ex:
            out = list(ex.map(_run_chunk, [(fn, c) for c in chunks]))
    return [r for chunk in out for r in chunk]
