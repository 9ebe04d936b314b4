"""Single-site Metropolis sampling of the finite-volume spin measure.

The box Lambda_M is surrounded by a frozen collar of thickness equal to
the coupling cutoff.  Configurations have weight exp(sum_e J_e f(dtheta_e))
over edges touching the box, so larger sum J f is more probable.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import curve_fit

from . import _mc_kernels as K
from ._util import batch_means_stderr, derive_seed, rng_for
from .errors import DomainError, InsufficientData
from .interaction import Interaction, builtin
from .lattice import CouplingFamily

TWO_PI = 2.0 * math.pi
TABLE_POINTS = 4096
MAX_HARMONICS = 16
MIN_BURN_IN = 1000


def _kernel_form(f: Interaction):
    """(kind, coef, table) for the kernels; exact cosine series when possible."""
    n = 8192
    x = TWO_PI * np.arange(n) / n
    vals = f(x)
    c = np.fft.rfft(vals).real * 2.0 / n
    coef = c[1:MAX_HARMONICS + 1].copy()
    rebuilt = c[0] / 2 + sum(coef[k] * np.cos((k + 1) * x) for k in range(coef.size))
    scale = max(1.0, float(np.max(np.abs(vals))))
    if np.max(np.abs(rebuilt - vals)) < 1e-11 * scale:
        nz = np.nonzero(np.abs(coef) > 1e-14 * scale)[0]
        kmax = int(nz[-1]) + 1 if nz.size else 1
        return 0, np.ascontiguousarray(coef[:kmax]), np.zeros(1)
    t = TWO_PI * np.arange(TABLE_POINTS) / TABLE_POINTS
    return 1, np.zeros(1), np.ascontiguousarray(f(t))


@dataclass
class SpinConfig:
    """Angles on Lambda_M plus a frozen collar.

    ``theta`` lists the interior sites first (``n_interior`` of them, in
    row-major order of Lambda_M) followed by the collar.
    """

    M: int
    family: CouplingFamily
    interaction: Interaction
    theta: np.ndarray
    n_interior: int
    coords: np.ndarray
    ptr: np.ndarray
    nbr: np.ndarray
    wts: np.ndarray
    boundary: str = "const"
    theta_bar: float = 0.0
    logweight_tracked: float = float("nan")
    _form: tuple = field(default=None, repr=False)

    def __post_init__(self):
        if self._form is None:
            self._form = _kernel_form(self.interaction)
        if math.isnan(self.logweight_tracked):
            self.logweight_tracked = log_weight(self)

    @property
    def beta(self) -> float:
        return self.interaction.beta

    @property
    def harmonic(self) -> bool:
        return self._form[0] == 0

    def site(self, x, y) -> int:
        if max(abs(x), abs(y)) > self.M:
            raise DomainError(f"({x}, {y}) is not an interior site")
        W = 2 * self.M + 1
        return (x + self.M) * W + (y + self.M)

    @property
    def origin(self) -> int:
        return self.site(0, 0)

    def interior_angles(self) -> np.ndarray:
        return self.theta[: self.n_interior]

    def boundary_angles(self) -> np.ndarray:
        return self.theta[self.n_interior:]


def make_config(M: int, family: CouplingFamily, interaction: Interaction | str = "xy",
                beta: float | None = None, boundary: str = "const", theta_bar: float = 0.0,
                seed: int = 0, init: str = "random") -> SpinConfig:
    """Build a configuration with a collar of thickness ``family.cutoff_radius``.

    ``boundary`` is ``"const"`` (every collar angle equal to ``theta_bar``)
    or ``"random"`` (independent uniform angles drawn from ``seed``).
    Interior angles start uniform (``init="random"``) or equal to the
    boundary value (``init="ordered"``).
    """
    if M < 1:
        raise DomainError("M must be at least 1")
    if isinstance(interaction, str):
        interaction = builtin(interaction, 1.0 if beta is None else beta)
    elif beta is not None:
        interaction = interaction.with_beta(beta)
    if boundary not in ("const", "random"):
        raise DomainError(f"unknown boundary {boundary!r}")
    c = family.cutoff_radius
    L = M + c
    r = np.arange(-L, L + 1)
    gx, gy = np.meshgrid(r, r, indexing="ij")
    gx, gy = gx.ravel(), gy.ravel()
    inside = np.maximum(np.abs(gx), np.abs(gy)) <= M
    coords = np.concatenate([np.stack([gx[inside], gy[inside]], 1),
                             np.stack([gx[~inside], gy[~inside]], 1)])
    n_int = int(inside.sum())
    # position of each extended-box site in ``coords``
    Wl = 2 * L + 1
    pos = np.empty(Wl * Wl, dtype=np.int64)
    pos[(coords[:, 0] + L) * Wl + coords[:, 1] + L] = np.arange(coords.shape[0])
    dx, dy, J = family.displacements()
    nx = coords[:n_int, 0:1] + dx[None, :]
    ny = coords[:n_int, 1:2] + dy[None, :]
    nbr = pos[(nx + L) * Wl + ny + L].ravel()
    ptr = np.arange(n_int + 1, dtype=np.int64) * dx.size
    wts = np.tile(J, n_int)
    rng = rng_for(seed, 0)
    theta = np.empty(coords.shape[0])
    if boundary == "const":
        theta[n_int:] = theta_bar % TWO_PI
    else:
        theta[n_int:] = rng.uniform(0.0, TWO_PI, coords.shape[0] - n_int)
    if init == "random":
        theta[:n_int] = rng.uniform(0.0, TWO_PI, n_int)
    elif init == "ordered":
        theta[:n_int] = theta_bar % TWO_PI
    else:
        raise DomainError(f"unknown init {init!r}")
    return SpinConfig(M, family, interaction, theta, n_int, coords, ptr,
                      np.ascontiguousarray(nbr), wts, boundary, theta_bar)


def pair_values(config: SpinConfig, d):
    """f(d) as the sampler sees it: the cosine series, or the interpolated table."""
    kind, coef, table = config._form
    d = np.asarray(d, dtype=float)
    if kind == 0:
        return sum(coef[k] * np.cos((k + 1) * d) for k in range(coef.size))
    n = table.size
    t = np.mod(d, TWO_PI) / TWO_PI * n
    i = t.astype(np.int64)
    fr = t - i
    return table[i % n] * (1.0 - fr) + table[(i + 1) % n] * fr


def log_weight(config: SpinConfig) -> float:
    """sum over edges touching the box of J f(theta_u - theta_v), i.e. minus the energy.

    f is evaluated through :func:`pair_values`, the same representation
    the sampler uses, up to an additive constant.
    """
    n = config.n_interior
    u = np.repeat(np.arange(n), np.diff(config.ptr))
    v = config.nbr
    vals = config.wts * pair_values(config, config.theta[u] - config.theta[v])
    # interior pairs are listed from both ends
    half = np.where(v < n, 0.5, 1.0)
    return float(math.fsum(vals * half))


def local_energy(config: SpinConfig, u, theta_new: float) -> float:
    """Change of sum J f when the interior site ``u`` is set to ``theta_new``.

    ``u`` is a site index or an (x, y) pair.  Collar neighbours count.
    """
    if not np.isscalar(u):
        u = config.site(*u)
    if not 0 <= u < config.n_interior:
        raise DomainError("local_energy needs an interior site")
    lo, hi = config.ptr[u], config.ptr[u + 1]
    v = config.nbr[lo:hi]
    w = config.wts[lo:hi]
    th = config.theta
    d = pair_values(config, theta_new - th[v]) - pair_values(config, th[u] - th[v])
    return float(math.fsum(w * d))


def _kargs(config):
    kind, coef, table = config._form
    return config.ptr, config.nbr, config.wts, kind, coef, table


def sweep(config: SpinConfig, proposal_width: float, seed: int, n_sweeps: int = 1) -> float:
    """Run sequential single-site sweeps in place; returns the acceptance fraction."""
    if not 0 < proposal_width <= math.pi:
        raise DomainError("proposal width must lie in (0, pi]")
    acc, dlw = K.sweeps(config.theta, config.n_interior, *_kargs(config),
                        float(proposal_width), 0, int(n_sweeps), _kseed(seed))
    config.logweight_tracked += dlw
    return acc / (n_sweeps * config.n_interior)


def _kseed(seed) -> int:
    return int(seed) & 0x7FFFFFFF


def tune_width(config: SpinConfig, burn_in: int, seed: int, width: float = 1.0,
               chunk: int = 50, target=(0.3, 0.6)) -> float:
    """Burn in while adapting the proposal width; returns the frozen width."""
    lo, hi = target
    done = 0
    i = 0
    while done < burn_in:
        n = min(chunk, burn_in - done)
        a = sweep(config, width, derive_seed(seed, i), n)
        done += n
        i += 1
        if not lo <= a <= hi:
            width = float(np.clip(width * max(a, 0.05) / 0.45, 1e-3, math.pi))
    return width


@dataclass
class CorrelationEstimate:
    x: tuple
    mean: float
    stderr: float
    samples: int
    estimator: str = "raw"


def _images(x):
    a, b = x
    return [(a, b), (-b, a), (-a, -b), (b, -a)]


def _as_vertex(x):
    if np.isscalar(x):
        return (int(x), 0)
    return (int(x[0]), int(x[1]))


def _pair_coupling(family, p):
    r = family.radius(*p)
    return float(family.amplitude * r ** (-family.alpha)) if 0 < r <= family.cutoff_radius else 0.0


def estimate_correlation(config: SpinConfig, x, sweeps: int, burn_in: int, seed: int,
                         n_batches: int = 32, estimator: str = "auto", images: bool = True,
                         min_burn_in: int = MIN_BURN_IN):
    """Time average of cos(theta_0 - theta_x) after a tuned burn-in.

    ``x`` is a vertex, a norm n (meaning (n, 0)) or a list of either; a
    list returns a list of estimates from one chain.  With ``images`` the
    four quarter-turn images of x are averaged, which is unbiased when the
    boundary law is invariant under quarter turns (constant or iid
    boundary).  ``estimator="conditional"`` integrates the end-point angles
    out analytically and needs the XY interaction.
    """
    single = np.isscalar(x) or (len(x) == 2 and all(np.isscalar(v) for v in x)
                                 and not isinstance(x, list))
    xs = [_as_vertex(x)] if single else [_as_vertex(v) for v in x]
    if burn_in < min_burn_in:
        raise InsufficientData(f"burn-in of {burn_in} sweeps is below {min_burn_in}")
    if sweeps < 2 * n_batches:
        raise InsufficientData(f"need at least {2 * n_batches} sweeps, got {sweeps}")
    kind, coef, _ = config._form
    xy = kind == 0 and coef.size == 1
    if estimator == "auto":
        estimator = "conditional" if xy else "raw"
    if estimator == "conditional" and not xy:
        raise DomainError("the conditional estimator needs a single-harmonic interaction")
    if estimator not in ("raw", "conditional"):
        raise DomainError(f"unknown estimator {estimator!r}")

    live = [v for v in xs if v != (0, 0)]
    width = tune_width(config, burn_in, derive_seed(seed, 0))
    results = {}
    if live:
        ims = [(_images(v) if images else [v]) for v in live]
        targets = np.array([[config.site(*p) for p in row] for row in ims], dtype=np.int64)
        wpair = np.array([[_pair_coupling(config.family, p) for p in row] for row in ims])
        series, acc = K.measure(config.theta, config.n_interior, *_kargs(config), width,
                                int(sweeps), _kseed(derive_seed(seed, 1)), config.origin,
                                targets, wpair, estimator == "conditional")
        config.logweight_tracked = log_weight(config)
        for i, v in enumerate(live):
            s = series[:, i]
            mean = float(np.clip(s.mean(), -1.0, 1.0))
            results[v] = CorrelationEstimate(v, mean, batch_means_stderr(s, n_batches),
                                             int(sweeps), estimator)
    out = [results.get(v, CorrelationEstimate(v, 1.0, 0.0, int(sweeps), "exact")) for v in xs]
    return out[0] if single else out


def fit_power_law(norms, means, stderrs=None):
    """Fit a n^(-p) to the estimates; returns (p, a, stderr of p)."""
    n = np.asarray(norms, dtype=float)
    y = np.asarray(means, dtype=float)
    if n.size < 2:
        raise InsufficientData("need at least two points for a power-law fit")
    sigma = None if stderrs is None else np.maximum(np.asarray(stderrs, dtype=float), 1e-12)
    pos = y > 0
    p0 = (1.0, max(float(y[pos][0]) if pos.any() else 1.0, 1e-6) * float(n[0]))
    popt, pcov = curve_fit(lambda t, a, p: a * t ** (-p), n, y, p0=(p0[1], p0[0]),
                           sigma=sigma, absolute_sigma=sigma is not None, maxfev=20000)
    return float(popt[1]), float(popt[0]), float(math.sqrt(max(pcov[1, 1], 0.0)))


def decay_is_monotone(estimates, n_sigma: float = 3.0) -> bool:
    """|mean| nonincreasing along the list within n_sigma combined stderr."""
    for a, b in zip(estimates, estimates[1:]):
        gap = abs(b.mean) - abs(a.mean)
        if gap > n_sigma * math.hypot(a.stderr, b.stderr):
            return False
    return True


@dataclass
class RotationReport:
    xs: list
    original: np.ndarray
    rotated: np.ndarray
    stderr: np.ndarray
    max_deviation: float
    max_z: float
    passed: bool


def rotation_invariance_check(M: int, family: CouplingFamily, interaction="xy", beta=None,
                              xs=(2, 4, 8), replicas: int = 4, sweeps: int = 2000,
                              burn_in: int = 1000, seed: int = 0, angle: float | None = None,
                              n_sigma: float = 3.0, **kw) -> RotationReport:
    """Compare correlations under a random boundary ensemble and its global rotation.

    Each replica draws a uniform random collar; the rotated arm uses the
    same collar turned by ``angle`` (random if None) with an independent
    chain.  Both arms are averaged over replicas and the per-x difference
    is compared with the combined batch-means stderr.
    """
    if angle is None:
        angle = float(rng_for(seed, 99).uniform(0.0, TWO_PI))
    xs = [_as_vertex(v) for v in xs]
    orig = np.zeros((replicas, len(xs)))
    rot = np.zeros_like(orig)
    var = np.zeros(len(xs))
    for r in range(replicas):
        base = make_config(M, family, interaction, beta, boundary="random",
                           seed=derive_seed(seed, 2 * r))
        turned = make_config(M, family, interaction, beta, boundary="random",
                             seed=derive_seed(seed, 2 * r))
        turned.theta[:] = (turned.theta + angle) % TWO_PI
        turned.logweight_tracked = log_weight(turned)
        ea = estimate_correlation(base, list(xs), sweeps, burn_in,
                                  derive_seed(seed, 2 * r + 1), **kw)
        eb = estimate_correlation(turned, list(xs), sweeps, burn_in,
                                  derive_seed(seed, 10**6 + 2 * r + 1), **kw)
        orig[r] = [e.mean for e in ea]
        rot[r] = [e.mean for e in eb]
        var += np.array([e.stderr ** 2 + f.stderr ** 2 for e, f in zip(ea, eb)])
    se = np.sqrt(var) / replicas
    dev = np.abs(orig.mean(0) - rot.mean(0))
    z = dev / np.maximum(se, 1e-300)
    return RotationReport(xs, orig.mean(0), rot.mean(0), se, float(dev.max()),
                          float(z.max()), bool(np.all(z <= n_sigma)))


@dataclass
class TwoSiteReport:
    tv: float
    empirical: np.ndarray
    exact: np.ndarray
    sweeps: int


def two_site_check(beta: float = 1.0, q: int = 8, sweeps: int = 1_000_000, seed: int = 0,
                   coupling: float = 1.0, boundary_coupling: float = 0.0,
                   interaction: Interaction | str = "xy") -> TwoSiteReport:
    """Discretised chain on two coupled sites against exact Gibbs weights.

    Angles live on q equally spaced values.  Each movable site may also be
    coupled to a frozen boundary spin at angle 0 with ``boundary_coupling``.
    Returns the total-variation distance between the occupation frequencies
    (one record per sweep) and the exact law.
    """
    f = builtin(interaction, beta) if isinstance(interaction, str) else interaction.with_beta(beta)
    kind, coef, table = _kernel_form(f)
    # sites: 0, 1 movable; 2 frozen at angle 0
    nb = [[1], [0]]
    w = [[coupling], [coupling]]
    if boundary_coupling:
        for i in range(2):
            nb[i].append(2)
            w[i].append(boundary_coupling)
    ptr = np.array([0, len(nb[0]), len(nb[0]) + len(nb[1])], dtype=np.int64)
    nbr = np.array(nb[0] + nb[1], dtype=np.int64)
    wts = np.array(w[0] + w[1], dtype=float)
    theta = np.zeros(3)
    hist = K.discrete_histogram(theta, 2, ptr, nbr, wts, kind, coef, table, int(q),
                                int(sweeps), _kseed(seed))
    a = TWO_PI * np.arange(q) / q
    t0, t1 = np.meshgrid(a, a, indexing="ij")
    lw = coupling * f(t0 - t1) + boundary_coupling * (f(t0) + f(t1))
    p = np.exp(lw - lw.max()).ravel()
    p /= p.sum()
    emp = hist / hist.sum()
    return TwoSiteReport(float(0.5 * np.abs(emp - p).sum()), emp, p, int(sweeps))
