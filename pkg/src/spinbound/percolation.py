"""Long-range Bernoulli bond percolation: sampling, cluster statistics,
good-configuration tests, tail estimates and the cluster-by-cluster
construction.  The two elementary inequalities used by the tail estimates
(a convolution bound and a Chernoff bound) live here as well.
"""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from . import _perc_kernels as K
from ._util import derive_seed, fit_line, seed_block, wilson_interval, zeta
from .errors import BoxTooSmall, DomainError, InsufficientData
from .lattice import Box, CouplingFamily, inner_radius

log = logging.getLogger(__name__)

EDGE_BUFFER = 1 << 16


# -- probability tables ----------------------------------------------------------

def edge_probabilities(family: CouplingFamily, rho: float, half: bool = True):
    """(dx, dy, p) with p = min(1, rho J); warns when clipping occurs."""
    if rho < 0:
        raise DomainError("rho must be nonnegative")
    dx, dy, J = family.displacements(half=half)
    p = rho * J
    if np.any(p > 1):
        log.warning("rho * J exceeds 1 for %d displacements; clipping to 1", int((p > 1).sum()))
        p = np.minimum(p, 1.0)
    return dx, dy, p


def _hazard(p):
    with np.errstate(divide="ignore"):
        return -np.log1p(-p)


def _global_table(box: Box, family: CouplingFamily, rho: float):
    dx, dy, p = edge_probabilities(family, rho, half=True)
    W = box.width
    npairs = np.clip(W - np.abs(dx), 0, None) * np.clip(W - np.abs(dy), 0, None)
    keep = (npairs > 0) & (p > 0)
    dx, dy, p, npairs = dx[keep], dy[keep], p[keep], npairs[keep]
    certain = p >= 1.0
    h = _hazard(np.where(certain, 0.0, p))
    cum = np.cumsum(npairs * h)
    return dx, dy, cum, p, certain


def _local_table(family: CouplingFamily, rho: float):
    dx, dy, p = edge_probabilities(family, rho, half=False)
    if np.any(p >= 1.0):
        raise DomainError("lazy exploration needs every edge probability below 1")
    keep = p > 0
    dx, dy, p = dx[keep], dy[keep], p[keep]
    cum = np.cumsum(_hazard(p)) if p.size else np.zeros(1)
    if not p.size:
        dx = np.zeros(1, np.int64)
        dy = np.zeros(1, np.int64)
    return dx, dy, cum


def _certain_edges(box: Box, dx, dy):
    W = box.width
    ix, iy = np.meshgrid(np.arange(W), np.arange(W), indexing="ij")
    a_all, b_all = [], []
    for ddx, ddy in zip(dx, dy):
        jx, jy = ix + ddx, iy + ddy
        ok = (jx >= 0) & (jx < W) & (jy >= 0) & (jy < W)
        a_all.append((ix * W + iy)[ok])
        b_all.append((jx * W + jy)[ok])
    if not a_all:
        return np.zeros(0, np.int64), np.zeros(0, np.int64)
    return np.concatenate(a_all), np.concatenate(b_all)


def _unique_edges(a, b):
    a = np.asarray(a, np.int64)
    b = np.asarray(b, np.int64)
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    e = np.unique(np.stack([lo, hi], axis=1), axis=0) if lo.size else np.zeros((0, 2), np.int64)
    return e


# -- configurations -----------------------------------------------------------------

@dataclass
class ClusterStats:
    """Per-vertex cluster size n, furthest norm m and outward radius r = m - |u|."""

    n: np.ndarray
    m: np.ndarray
    r: np.ndarray


@dataclass
class PercConfig:
    """Open edges of a box (flat vertex indices, one row per unoriented edge)."""

    box: Box
    rho: float
    edges: np.ndarray
    seed: int | None = None
    family: CouplingFamily | None = field(default=None, repr=False)

    @cached_property
    def labels(self) -> np.ndarray:
        V = self.box.n_vertices
        e = self.edges
        g = coo_matrix((np.ones(len(e)), (e[:, 0], e[:, 1])), shape=(V, V))
        _, lab = connected_components(g, directed=False)
        return lab


def sample(box: Box, family: CouplingFamily, rho: float, seed: int) -> PercConfig:
    """Open each in-box pair independently with probability min(1, rho J)."""
    if family.cutoff_radius > 2 * box.M and box.M > 0:
        log.debug("cutoff %d exceeds the box diameter", family.cutoff_radius)
    dx, dy, cum, p, certain = _global_table(box, family, rho)
    seed32 = int(seed) & 0xFFFFFFFF
    if cum.size:
        a, b = K.sample_edges(seed32, box.width, dx, dy, cum)
    else:
        a = b = np.zeros(0, np.int64)
    if np.any(certain):
        ca, cb = _certain_edges(box, dx[certain], dy[certain])
        a, b = np.concatenate([a, ca]), np.concatenate([b, cb])
    return PercConfig(box, float(rho), _unique_edges(a, b), int(seed), family)


def cluster_stats(config: PercConfig) -> ClusterStats:
    """n_A, m_A and r_A for every box vertex."""
    lab = config.labels
    norms = config.box.norms
    sizes = np.bincount(lab)
    mx = np.zeros(sizes.size, dtype=np.int64)
    np.maximum.at(mx, lab, norms)
    n = sizes[lab]
    m = mx[lab]
    return ClusterStats(n, m, m - norms)


@dataclass
class GoodConfigReport:
    cond1: bool
    cond2: bool
    cond3_sum: float
    cond3: bool

    @property
    def is_good(self) -> bool:
        return self.cond1 and self.cond2 and self.cond3


def _check_good_box(box: Box, R: int):
    r0 = inner_radius(R)
    if R < 4:
        raise DomainError("R must be at least 4")
    if box.M < max(R, 2 * r0):
        raise BoxTooSmall(f"box M={box.M} too small for R={R}")
    return r0


def classify_good(config: PercConfig, R: int, C3: float) -> GoodConfigReport:
    """The three good-configuration conditions, evaluated literally."""
    r0 = _check_good_box(config.box, R)
    st = cluster_stats(config)
    lab = config.labels
    norms = config.box.norms
    lo = np.full(lab.max() + 1, np.iinfo(np.int64).max)
    np.minimum.at(lo, lab, norms)
    # condition 1: no cluster joins Lambda_{r0} to the outside of Lambda_{2 r0}
    cond1 = not np.any((lo[lab] <= r0) & (st.m > 2 * r0))
    ann = (norms > r0) & (norms <= R)
    cond2 = bool(np.all(st.m[ann] <= 2 * norms[ann]))
    s3 = float(math.fsum((st.r[ann] / norms[ann]) ** 2))
    return GoodConfigReport(bool(cond1), cond2, s3, s3 <= C3 * math.log(R))


# -- replica drivers -------------------------------------------------------------

def replica_seeds(master_seed: int, n: int, offset: int = 0) -> np.ndarray:
    return seed_block(master_seed, n, offset)


def cluster_samples(box: Box, family: CouplingFamily, rho: float, replicas: int,
                    master_seed: int, x=(0, 0)):
    """(n, m, R) of the cluster of ``x`` in independent replicas (lazy exploration)."""
    dx, dy, cum = _local_table(family, rho)
    seeds = replica_seeds(master_seed, replicas)
    start = int(box.index(*x))
    return K.cluster_replicas(seeds, start, box.width, box.M, dx, dy, cum)


def goodness_samples(R: int, family: CouplingFamily, rho: float, replicas: int,
                     master_seed: int, M: int | None = None):
    """Per replica (cond1 fails, cond2 fails, cond3 sum) on the box Lambda_M, M = 4R by default."""
    box = Box(M if M is not None else 4 * R)
    r0 = _check_good_box(box, R)
    dx, dy, cum, p, certain = _global_table(box, family, rho)
    if np.any(certain):
        raise DomainError("bulk goodness sampling needs edge probabilities below 1")
    seeds = replica_seeds(master_seed, replicas)
    return K.goodness_replicas(seeds, box.width, box.M, dx, dy, cum, r0, R)


# -- tail estimates ----------------------------------------------------------------

@dataclass
class TailReport:
    k: np.ndarray
    p_hat: np.ndarray
    ci_lo: np.ndarray
    ci_hi: np.ndarray
    slope: float
    slope_bound: float
    n_samples: int

    @property
    def passes(self) -> bool:
        return self.slope <= self.slope_bound


def _tail_table(values, ks, strict: bool):
    values = np.asarray(values)
    n = values.size
    counts = np.array([(values > k).sum() if strict else (values >= k).sum() for k in ks])
    p = counts / n
    ci = np.array([wilson_interval(c, n) for c in counts])
    return counts, p, ci


def tail_n(n_samples, epsilon: float, k_max: int = 8, k_min: int = 2, tol: float = 0.2) -> TailReport:
    """Empirical P(n_A(0) > k) and its log-linear slope against k.

    The slope is fitted over the k in [k_min, k_max] with at least one
    exceedance (a zero count has no logarithm) and compared with
    (1/2) log(epsilon) + tol.
    """
    ks = np.arange(1, k_max + 1)
    counts, p, ci = _tail_table(n_samples, ks, strict=True)
    sel = (ks >= k_min) & (counts > 0)
    if sel.sum() < 2:
        raise InsufficientData(f"fewer than two k in [{k_min}, {k_max}] with exceedances; "
                               "more samples are needed")
    # binomial weights: var(log p_hat) ~ (1 - p) / (n p)
    w = counts[sel] / (1.0 - p[sel])
    fit = fit_line(ks[sel], np.log(p[sel]), weights=w)
    bound = 0.5 * math.log(epsilon) + tol if epsilon > 0 else -math.inf
    return TailReport(ks, p, ci[:, 0], ci[:, 1], fit.slope, bound, int(np.size(n_samples)))


def bridge_constant(family: CouplingFamily, epsilon: float) -> float:
    """C1 = sum_{m>=1} (16 eps C_b)^m with C_b = J zeta(alpha-1)(2 + 2^alpha); inf if divergent."""
    cb = family.J * zeta(family.alpha - 1.0) * (2.0 + 2.0 ** family.alpha)
    q = 16.0 * epsilon * cb
    return q / (1.0 - q) if q < 1.0 else math.inf


@dataclass
class MTailReport:
    k: np.ndarray
    p_hat: np.ndarray
    ci_lo: np.ndarray
    ci_hi: np.ndarray
    bound: np.ndarray
    C1: float

    @property
    def vacuous(self) -> bool:
        return not math.isfinite(self.C1)

    @property
    def passes(self) -> bool:
        return bool(np.all(self.p_hat <= self.bound))


def tail_m(m_samples, x_norm: int, ks, family: CouplingFamily, epsilon: float) -> MTailReport:
    """Empirical P(m_A(x) = k) with Wilson intervals, next to C1/(k - |x|)^(alpha-1)."""
    ks = np.asarray(list(ks), dtype=np.int64)
    if np.any(ks <= x_norm):
        raise DomainError("every k must exceed |x|")
    m_samples = np.asarray(m_samples)
    n = m_samples.size
    counts = np.array([(m_samples == k).sum() for k in ks])
    ci = np.array([wilson_interval(c, n) for c in counts])
    C1 = bridge_constant(family, epsilon)
    with np.errstate(invalid="ignore"):
        bound = C1 / (ks - x_norm).astype(float) ** (family.alpha - 1.0)
    return MTailReport(ks, counts / n, ci[:, 0], ci[:, 1], bound, C1)


@dataclass
class PowerTailFit:
    exponent: float
    ci_lo: float
    ci_hi: float
    n_tail: int


def tail_exponent(samples, k_min: int, k_max: int) -> PowerTailFit:
    """Exponent g of P(X >= k) ~ k^-g on [k_min, k_max] by maximum likelihood.

    The exceedances X >= k_min are modelled as a discrete power law
    P(X >= k | X >= k_min) = (k - 1/2)^-g / (k_min - 1/2)^-g, values above
    k_max being right-censored at k_max.  The interval is the 95%
    likelihood-ratio interval.
    """
    x = np.asarray(samples)
    x = x[x >= k_min]
    if x.size < 5:
        raise InsufficientData(f"only {x.size} samples reach {k_min}")
    cens = x > k_max
    obs = x[~cens]
    base = k_min - 0.5

    def loglik(g):
        # pmf of k: S(k) - S(k+1) with S(k) = ((k - 1/2)/base)^-g
        s_k = ((obs - 0.5) / base) ** (-g)
        s_k1 = ((obs + 0.5) / base) ** (-g)
        ll = np.log(s_k - s_k1).sum()
        ll += cens.sum() * (-g) * math.log((k_max + 0.5) / base)
        return ll

    grid = np.linspace(0.05, 12.0, 2391)
    ll = np.array([loglik(g) for g in grid])
    i = int(np.argmax(ll))
    inside = grid[ll >= ll[i] - 1.920729]  # chi2(1) 95% / 2
    return PowerTailFit(float(grid[i]), float(inside.min()), float(inside.max()), int(x.size))


def conditional_reach_probabilities(box: Box, family: CouplingFamily, rho: float, ks,
                                    replicas: int, master_seed: int, x=(0, 0)) -> np.ndarray:
    """Per-replica conditional probabilities of r_A(x) >= k, shape (replicas, len(ks)).

    Their mean is an unbiased estimate of P(r_A(x) >= k) with far smaller
    variance than the raw indicator, because the last (independent) step
    of the event is integrated out exactly.
    """
    dx, dy, p = edge_probabilities(family, rho, half=False)
    if np.any(p >= 1.0):
        raise DomainError("conditional estimator needs edge probabilities below 1")
    h = _hazard(p)
    cum = np.cumsum(h)
    xn = max(abs(x[0]), abs(x[1]))
    levels = np.asarray(ks, dtype=np.int64) + xn
    seeds = replica_seeds(master_seed, replicas)
    return K.conditional_reach(seeds, int(box.index(*x)), levels, box.width, box.M,
                               dx, dy, cum, h, EDGE_BUFFER)


def fit_tail_exponent(ks, p_hat, stderr=None) -> PowerTailFit:
    """Slope of -log P(X >= k) against log k, with a 95% interval."""
    ks = np.asarray(ks, float)
    p_hat = np.asarray(p_hat, float)
    keep = p_hat > 0
    if keep.sum() < 3:
        raise InsufficientData("need three positive tail values")
    w = None
    if stderr is not None:
        rel = np.asarray(stderr, float)[keep] / p_hat[keep]
        w = 1.0 / np.maximum(rel, 1e-12) ** 2
    fit = fit_line(np.log(ks[keep]), np.log(p_hat[keep]), weights=w)
    lo, hi = fit.slope_interval()
    return PowerTailFit(-fit.slope, -hi, -lo, int(keep.sum()))


# -- cluster-by-cluster construction ---------------------------------------------

@dataclass
class DominationSample:
    config: PercConfig
    order: np.ndarray
    N: np.ndarray
    R_out: np.ndarray
    b: np.ndarray
    R: int

    def sums(self):
        """(sum r_A^2/|u|^2, sum N R^2/|u|^2) over Delta_R."""
        box = self.config.box
        st = cluster_stats(self.config)
        norms = box.norms[self.order]
        r0 = inner_radius(self.R) if self.R >= 4 else 0
        ann = (norms > r0) & (norms <= self.R)
        q = 1.0 / norms[ann].astype(float) ** 2
        lhs = math.fsum(st.r[self.order][ann] ** 2 * q)
        rhs = math.fsum(self.N[ann] * self.R_out[ann].astype(float) ** 2 * q)
        return lhs, rhs


def processing_order(box: Box, R: int) -> np.ndarray:
    """Vertices of Lambda_R by nondecreasing norm (ties in flat-index order)."""
    idx = np.flatnonzero(box.norms <= R)
    return idx[np.argsort(box.norms[idx], kind="stable")].astype(np.int64)


def domination_sample(box: Box, family: CouplingFamily, rho: float, seed: int,
                      R: int | None = None) -> DominationSample:
    """Build a configuration cluster by cluster from independent copies.

    Vertices of Lambda_R are handled by nondecreasing norm.  Edges never
    decided by the construction (both end points outside every assembled
    cluster) are filled from an independent whole-box sample.
    """
    R = box.M if R is None else int(R)
    if R > box.M:
        raise BoxTooSmall("R exceeds the box")
    dx, dy, cum = _local_table(family, rho)
    order = processing_order(box, R)
    seed32 = int(seed) & 0xFFFFFFFF
    N, Rr, b, oa, ob, explored, _ = K.assemble_once(seed32, order, box.width, box.M,
                                                    dx, dy, cum, EDGE_BUFFER)
    rest = sample(box, family, rho, derive_seed(seed, 1))
    e = rest.edges
    free = (explored[e[:, 0]] == 0) & (explored[e[:, 1]] == 0)
    a = np.concatenate([oa, e[free, 0]])
    bb = np.concatenate([ob, e[free, 1]])
    cfg = PercConfig(box, float(rho), _unique_edges(a, bb), int(seed), family)
    return DominationSample(cfg, order, N, Rr, b, R)


def domination_sums(box: Box, family: CouplingFamily, rho: float, R: int, replicas: int,
                    master_seed: int):
    """Bulk version of :meth:`DominationSample.sums`: arrays (lhs, rhs, rhs_all).

    No filling of undecided edges is needed since every vertex of
    Lambda_R ends up in an assembled cluster.  ``rhs_all`` extends the
    right-hand sum to all starts in Lambda_R (weights 1/max(|x|, 1)^2).
    """
    if R < 4 or R > box.M:
        raise BoxTooSmall("need 4 <= R <= M")
    dx, dy, cum = _local_table(family, rho)
    order = processing_order(box, R)
    seeds = replica_seeds(master_seed, replicas)
    return K.domination_sums(seeds, order, box.width, box.M, dx, dy, cum,
                             inner_radius(R), R, EDGE_BUFFER)


def assembled_size_vectors(box: Box, family: CouplingFamily, rho: float, replicas: int,
                           master_seed: int) -> np.ndarray:
    """Cluster sizes of all box vertices under the construction, one row per replica."""
    dx, dy, cum = _local_table(family, rho)
    order = np.arange(box.n_vertices, dtype=np.int64)
    order = order[np.argsort(box.norms, kind="stable")]
    seeds = replica_seeds(master_seed, replicas)
    rows = K.size_vectors(seeds, order, box.width, box.M, dx, dy, cum, EDGE_BUFFER)
    out = np.empty_like(rows)
    out[:, order] = rows
    return out


def domination_check(samples) -> bool:
    """True iff sum r_A^2/|u|^2 <= sum N R^2/|u|^2 on every sample.

    ``samples`` is an iterable of :class:`DominationSample` or of
    (lhs, rhs) pairs.
    """
    for s in samples:
        lhs, rhs = s.sums() if isinstance(s, DominationSample) else s
        if lhs > rhs:
            return False
    return True


# -- elementary inequalities ----------------------------------------------------------

def chernoff_bound(mu: float, epsilon: float) -> float:
    """exp(-((1 + eps) log(1 + eps) - eps) mu)."""
    if not (mu > 0 and epsilon > 0):
        raise DomainError("mu and epsilon must be positive")
    return math.exp(-((1.0 + epsilon) * math.log1p(epsilon) - epsilon) * mu)


def binomial_tail_exact(n: int, p: float, threshold: float) -> float:
    """P(S >= threshold) for S a sum of n Bernoulli(p), by enumerating all 2^n outcomes."""
    if n > 20:
        raise DomainError("exact enumeration limited to n <= 20")
    total = 0.0
    for bits in itertools.product((0, 1), repeat=n):
        s = sum(bits)
        if s >= threshold:
            total += p ** s * (1.0 - p) ** (n - s)
    return total


def convolution_bound_check(k: int, alpha: float):
    """(lhs, rhs) = (sum_{l=1}^{k-1} (k-l)^-a l^-a, 2^(a+1) zeta(a) / k^a)."""
    if k < 2 or not alpha > 1:
        raise DomainError("need k >= 2 and alpha > 1")
    l = np.arange(1, k, dtype=float)
    lhs = math.fsum((k - l) ** (-alpha) * l ** (-alpha))
    rhs = 2.0 ** (alpha + 1.0) * zeta(alpha) / float(k) ** alpha
    return lhs, rhs


def convolution_sweep(k_max: int = 10_000, alphas=(1.5, 2.0, 3.0, 5.0)) -> int:
    """Number of (k, alpha) with lhs > rhs for k in 2..k_max."""
    bad = 0
    for a in alphas:
        for k in range(2, k_max + 1):
            lhs, rhs = convolution_bound_check(k, a)
            bad += lhs > rhs
    return bad
