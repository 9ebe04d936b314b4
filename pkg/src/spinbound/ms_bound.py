"""Complex-rotation profiles and the log-ratio functional they bound.

A rotation profile assigns a real number a_z to every box vertex.  All the
profiles used here are a function of one integer "level" per vertex (the
vertex norm, or the norm of the furthest point of its cluster), so a
profile is stored as ``levels`` plus a lookup table ``phi``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from ._util import cosh_minus_one, harmonic_table, zeta
from .errors import ConstraintViolation, DivergedProfile, DomainError, VacuousBound
from .interaction import TrigApprox
from .lattice import Box, CouplingFamily, inner_radius

FLAVORS = ("abar_radial", "tilde_truncated", "cluster_constant")
COSH_LIMIT = 700.0


def abar(delta: float, n: int) -> np.ndarray:
    """abar_i = -delta * H_i for i = 0..n."""
    return -delta * harmonic_table(n)


def atilde(delta: float, R: int, n: int) -> np.ndarray:
    """The truncated profile: flat up to 2*ceil(sqrt R), harmonic up to R, flat after.

    When 2*ceil(sqrt R) exceeds R the profile is identically zero.
    """
    top = max(n, R)
    ab = abar(delta, top)
    lo = 2 * inner_radius(R)
    out = np.zeros(n + 1)
    if lo <= R:
        i = np.clip(np.arange(n + 1), lo, R)
        out = ab[i] - ab[lo]
    return out


@dataclass
class RotationProfile:
    """Profile a_u = phi[levels[u]] on a box."""

    box: Box
    flavor: str
    delta: float
    R: int
    levels: np.ndarray
    phi: np.ndarray

    @property
    def values(self) -> np.ndarray:
        return self.phi[self.levels]

    def at(self, x, y) -> float:
        return float(self.phi[self.levels[self.box.index(x, y)]])


def build_profile(flavor: str, delta: float, R: int, box: Box, cluster_stats=None) -> RotationProfile:
    """Build one of the three profile flavors.

    ``cluster_stats`` (anything with an ``m`` array of furthest-point norms
    indexed like the box) is required for ``cluster_constant`` only.
    """
    if flavor not in FLAVORS:
        raise DomainError(f"unknown flavor {flavor!r}")
    if not delta > 0:
        raise DomainError("delta must be positive")
    if not 1 <= R <= box.M:
        raise DomainError(f"need 1 <= R <= M, got R={R}, M={box.M}")
    if (flavor == "cluster_constant") != (cluster_stats is not None):
        raise DomainError("cluster_stats is required for, and only for, cluster_constant")
    M = box.M
    if flavor == "abar_radial":
        ab = abar(delta, M)
        phi = ab[np.minimum(np.arange(M + 1), R)] - ab[R]
        levels = box.norms
    else:
        at = atilde(delta, R, M)
        phi = at - at[R]
        if flavor == "tilde_truncated":
            levels = box.norms
        else:
            levels = np.asarray(cluster_stats.m, dtype=np.int64)
            if levels.shape != box.norms.shape or np.any(levels < box.norms):
                raise DomainError("cluster_stats does not match the box")
    return RotationProfile(box, flavor, float(delta), int(R), np.asarray(levels, np.int64), phi)


@numba.njit(cache=True)
def _edge_sum(levels, W, dx, dy, J, table):
    # row partial sums over unoriented edges (u, u + d), d in the half table
    rows = np.zeros(W)
    for ix in range(W):
        s = 0.0
        for iy in range(W):
            lu = levels[ix * W + iy]
            for t in range(dx.size):
                jx = ix + dx[t]
                jy = iy + dy[t]
                if jx < 0 or jx >= W or jy < 0 or jy >= W:
                    continue
                lv = levels[jx * W + jy]
                if lu != lv:
                    s += J[t] * table[lu, lv]
        rows[ix] = s
    return rows


def _pair_table(phi, approx: TrigApprox):
    ck = np.abs(approx.coefficients)
    diff = phi[:, None] - phi[None, :]
    table = np.zeros_like(diff)
    with np.errstate(over="ignore"):
        for kk, c in enumerate(ck, start=1):
            if c != 0.0:
                table += c * cosh_minus_one(kk * diff)
    return table


def edge_energy(profile: RotationProfile, family: CouplingFamily, approx: TrigApprox) -> float:
    """sum over unoriented in-box edges of J_uv sum_k |c_k| (cosh(k(a_v - a_u)) - 1)."""
    dx, dy, J = family.displacements(half=True)
    phi = profile.phi
    if approx.K * (phi.max() - phi.min()) > COSH_LIMIT:
        # only the gaps across actual edges matter
        span = _max_edge_gap(profile.levels, profile.box.width, dx, dy, phi)
        if approx.K * span > COSH_LIMIT:
            raise DivergedProfile(
                f"|k*grad a| reaches {approx.K * span:.1f} > {COSH_LIMIT}; delta too large")
    table = _pair_table(phi, approx)
    rows = _edge_sum(profile.levels, profile.box.width, dx, dy, J, table)
    # fixed-order exact reduction: bit-stable regardless of scheduling
    return math.fsum(rows)


@numba.njit(cache=True)
def _max_edge_gap(levels, W, dx, dy, phi):
    m = 0.0
    for ix in range(W):
        for iy in range(W):
            a = phi[levels[ix * W + iy]]
            for t in range(dx.size):
                jx = ix + dx[t]
                jy = iy + dy[t]
                if jx < 0 or jx >= W or jy < 0 or jy >= W:
                    continue
                g = abs(phi[levels[jx * W + jy]] - a)
                if g > m:
                    m = g
    return m


def evaluate_log_F(profile: RotationProfile, family: CouplingFamily, approx: TrigApprox, x) -> float:
    """log of the rotation functional: a_x - a_0 plus the coupling-weighted cosh sum."""
    box = profile.box
    if max(abs(x[0]), abs(x[1])) != profile.R:
        raise DomainError(f"target {tuple(x)} is not on the layer L_{profile.R}")
    if family.cutoff_radius > 2 * box.M:
        raise DomainError("cutoff exceeds the box diameter")
    val = profile.at(*x) - profile.at(0, 0) + edge_energy(profile, family, approx)
    if not math.isfinite(val):
        raise DivergedProfile("functional is not finite")
    return val


# -- closed-form bounds --------------------------------------------------------

def bound_constants(family: CouplingFamily):
    """(c_mult, c_add): the quadratic-term and constant-term factors.

    c_mult = (2/3) * 64 J 2^alpha zeta(alpha-3) and
    c_add = 72 J 2^alpha zeta(alpha-3).
    """
    base = family.J * 2.0 ** family.alpha * zeta(family.alpha - 3.0)
    return (2.0 / 3.0) * 64.0 * base, 72.0 * base


def _check_constraint(delta, K, constraint):
    if not delta > 0:
        raise DomainError("delta must be positive")
    if constraint == "warmup":
        if K * delta > 1.0:
            raise ConstraintViolation(f"K*delta = {K * delta:g} exceeds 1")
    elif constraint == "general":
        if not 3.0 * K * delta < 1.0:
            raise ConstraintViolation(f"3*K*delta = {3 * K * delta:g} is not below 1")
    else:
        raise DomainError(f"unknown constraint {constraint!r}")


def closed_form_bound(delta: float, R: int, approx: TrigApprox, family: CouplingFamily) -> float:
    """(-delta + delta^2 D_K c_mult) log R + c_add C_K, valid for K delta <= 1."""
    _check_constraint(delta, approx.K, "warmup")
    c_mult, c_add = bound_constants(family)
    return (-delta + delta * delta * approx.D_K * c_mult) * math.log(R) + c_add * approx.C_K


def good_set_exponent(delta: float, R: int, approx: TrigApprox, family: CouplingFamily,
                      C3: float) -> float:
    """log R coefficient of the good-set bound; negative means the estimate closes."""
    _check_constraint(delta, approx.K, "general")
    if C3 < 0:
        raise DomainError("C3 must be nonnegative")
    c_mult, _ = bound_constants(family)
    D = approx.D_K
    return -delta / 8.0 + c_mult * D * delta ** 2 + 9.0 * D * delta ** 2 * C3


def _golden_min(fn, lo, hi, tol):
    inv = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - inv * (b - a)
    d = a + inv * (b - a)
    fc, fd = fn(c), fn(d)
    while b - a > tol * max(1.0, abs(a) + abs(b)) * 0.5:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - inv * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv * (b - a)
            fd = fn(d)
    x = 0.5 * (a + b)
    # the constrained optimum may sit on the right end point
    return hi if fn(hi) <= fn(x) else x


@dataclass
class DeltaChoice:
    delta_star: float
    exponent_C: float
    upper: float


def optimize_delta(approx: TrigApprox, family: CouplingFamily, R: int | None = None,
                   constraint: str = "warmup", C3: float = 0.0, tol: float = 1e-12) -> DeltaChoice:
    """Golden-section search for the delta that makes the log R coefficient most negative.

    ``warmup`` uses the closed-form coefficient under K delta <= 1,
    ``general`` the good-set coefficient (with ``C3``) under 3 K delta < 1.
    ``R`` does not enter the coefficient and is accepted for symmetry with
    the other bound operations.
    """
    c_mult, _ = bound_constants(family)
    D = approx.D_K
    if constraint == "warmup":
        upper = 1.0 / approx.K
        coef = lambda d: -d + c_mult * D * d * d  # noqa: E731
    elif constraint == "general":
        upper = (1.0 - 1e-12) / (3.0 * approx.K)
        coef = lambda d: -d / 8.0 + (c_mult + 9.0 * C3) * D * d * d  # noqa: E731
    else:
        raise DomainError(f"unknown constraint {constraint!r}")
    d_star = _golden_min(coef, 0.0, upper, tol)
    C = -coef(d_star)
    if not C > 0:
        raise VacuousBound("no admissible delta gives a negative log R coefficient")
    return DeltaChoice(float(d_star), float(C), float(upper))


@dataclass
class BoundReport:
    log_F: float
    closed_form: float
    delta_star: float
    exponent_C: float
    C_K: float
    D_K: float
    c_mult: float
    c_add: float


def bound_report(approx: TrigApprox, family: CouplingFamily, R: int,
                 constraint: str = "warmup", C3: float = 0.0) -> BoundReport:
    """Optimize delta, then evaluate the radial functional and the closed form at it.

    The box is taken large enough (M = R + cutoff) that every edge touching
    the support of the radial profile is counted.
    """
    choice = optimize_delta(approx, family, R, constraint, C3)
    d = choice.delta_star
    box = Box(R + family.cutoff_radius)
    prof = build_profile("abar_radial", d, R, box)
    logF = evaluate_log_F(prof, family, approx, (R, 0))
    c_mult, c_add = bound_constants(family)
    return BoundReport(logF, closed_form_bound(d, R, approx, family), d, choice.exponent_C,
                       approx.C_K, approx.D_K, c_mult, c_add)


def predicted_correlation_bound(approx: TrigApprox, family: CouplingFamily, C3: float, norm_x):
    """c |x|^(-C) with c = exp(c_add C_K) and C from the good-set optimisation."""
    choice = optimize_delta(approx, family, constraint="general", C3=C3)
    _, c_add = bound_constants(family)
    logc = c_add * approx.C_K
    n = np.asarray(norm_x, dtype=float)
    with np.errstate(over="ignore"):
        return np.exp(logc - choice.exponent_C * np.log(n)), choice


def profile_split_inequality_check(n: int = 100_000, k_max: int = 8, seed: int = 0,
                                   scale: float = 2.0) -> bool:
    """Audit cosh(k(a+b+c)) - 1 <= sum of cosh(3k.) - 1 over random same-sign triples."""
    rng = np.random.default_rng(seed)
    t = rng.uniform(0.0, scale, size=(n, 3))
    t *= rng.choice([-1.0, 1.0], size=(n, 1))
    k = rng.integers(1, k_max + 1, size=n)[:, None]
    lhs = cosh_minus_one(k[:, 0] * t.sum(axis=1))
    rhs = cosh_minus_one(3 * k * t).sum(axis=1)
    return bool(np.all(lhs <= rhs * (1 + 1e-12) + 1e-12))
