"""Resistor networks with conductances J_uv, random shorts and effective resistance.

Shorted edges identify their end points; the surviving resistors between
two node classes combine by the parallel law when the class Laplacian is
assembled (duplicate sparse entries are summed).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from ._util import fit_line, parallel_map, seed_block, wilson_interval
from .errors import DomainError, SolverFailure
from .lattice import Box, CouplingFamily
from .percolation import sample as perc_sample


@dataclass
class ShortedNetwork:
    """Resistor graph on ``n_nodes`` vertices with node classes from shorts.

    ``a, b, g`` list the resistors (end points and conductance); ``labels``
    maps every vertex to its class.
    """

    n_nodes: int
    a: np.ndarray
    b: np.ndarray
    g: np.ndarray
    labels: np.ndarray
    shorted_pairs: np.ndarray = field(default_factory=lambda: np.zeros((0, 2), np.int64))
    box: Box | None = None
    family: CouplingFamily | None = None
    _lap: sp.csr_matrix | None = field(default=None, repr=False)

    @property
    def n_classes(self) -> int:
        return int(self.labels.max()) + 1 if self.labels.size else 0

    def class_of(self, v) -> int:
        return int(self.labels[v])

    @property
    def laplacian(self) -> sp.csr_matrix:
        """Class Laplacian; parallel resistors add, shorted self-loops drop out."""
        if self._lap is None:
            ca = self.labels[self.a]
            cb = self.labels[self.b]
            keep = ca != cb
            ca, cb, g = ca[keep], cb[keep], self.g[keep]
            C = self.n_classes
            off = sp.coo_matrix((np.concatenate([-g, -g]),
                                 (np.concatenate([ca, cb]), np.concatenate([cb, ca]))),
                                shape=(C, C)).tocsr()
            off.sum_duplicates()
            deg = -np.asarray(off.sum(axis=1)).ravel()
            self._lap = (off + sp.diags(deg)).tocsr()
        return self._lap

    def conductance(self, class_a: int, class_b: int) -> float:
        """Accumulated conductance between two distinct classes."""
        if class_a == class_b:
            raise DomainError("a class has no conductance to itself")
        return float(-self.laplacian[class_a, class_b])

    def vertex(self, x, y) -> int:
        if self.box is None:
            raise DomainError("network has no box geometry")
        return int(self.box.index(x, y))


def from_edges(n_nodes: int, a, b, g) -> ShortedNetwork:
    """Network on an arbitrary graph (no shorts)."""
    a = np.asarray(a, np.int64)
    b = np.asarray(b, np.int64)
    g = np.asarray(g, float)
    if np.any(g <= 0):
        raise DomainError("conductances must be positive")
    if np.any(a == b):
        raise DomainError("self-loops are not resistors")
    return ShortedNetwork(int(n_nodes), a, b, g, np.arange(n_nodes, dtype=np.int64))


def box_edges(box: Box, family: CouplingFamily):
    """All unoriented in-box pairs within the cutoff and their couplings."""
    W = box.width
    idx = np.arange(box.n_vertices, dtype=np.int64).reshape(W, W)
    dx, dy, J = family.displacements(half=True)
    A, B, G = [], [], []
    for ddx, ddy, j in zip(dx, dy, J):
        if ddx >= W or abs(ddy) >= W:
            continue
        y0, y1 = max(0, -ddy), W - max(0, ddy)
        A.append(idx[0:W - ddx, y0:y1].ravel())
        B.append(idx[ddx:W, y0 + ddy:y1 + ddy].ravel())
        G.append(np.full(A[-1].size, j))
    return np.concatenate(A), np.concatenate(B), np.concatenate(G)


def build(box: Box, family: CouplingFamily) -> ShortedNetwork:
    """Network with a resistor 1/J_uv between every in-box pair within the cutoff."""
    if family.cutoff_radius > 2 * box.M:
        raise DomainError("cutoff exceeds the box diameter")
    a, b, g = box_edges(box, family)
    net = ShortedNetwork(box.n_vertices, a, b, g, np.arange(box.n_vertices, dtype=np.int64))
    net.box = box
    net.family = family
    return net


def with_shorts(network: ShortedNetwork, pairs) -> ShortedNetwork:
    """Copy of ``network`` with the given vertex pairs (plus existing ones) shorted."""
    pairs = np.asarray(pairs, np.int64).reshape(-1, 2)
    allp = np.concatenate([network.shorted_pairs, pairs])
    n = network.n_nodes
    adj = sp.coo_matrix((np.ones(len(allp)), (allp[:, 0], allp[:, 1])), shape=(n, n))
    _, lab = connected_components(adj, directed=False)
    return ShortedNetwork(n, network.a, network.b, network.g, lab.astype(np.int64), allp,
                          network.box, network.family)


def apply_shorts(network: ShortedNetwork, epsilon: float, seed: int) -> ShortedNetwork:
    """Short each resistor independently with probability epsilon * J_uv.

    On box networks the shorts are a percolation sample with rho = epsilon
    (identical law, and the same generator as the percolation module);
    otherwise one uniform per resistor is drawn.
    """
    if epsilon < 0:
        raise DomainError("epsilon must be nonnegative")
    if epsilon == 0:
        return with_shorts(network, np.zeros((0, 2), np.int64))
    if np.any(epsilon * network.g > 1):
        raise DomainError("epsilon * J exceeds 1")
    if network.box is not None and network.family is not None:
        cfg = perc_sample(network.box, network.family, epsilon, seed)
        return with_shorts(network, cfg.edges)
    rng = np.random.default_rng(seed_block(seed, 1)[0])
    hit = rng.random(network.g.size) < epsilon * network.g
    return with_shorts(network, np.stack([network.a[hit], network.b[hit]], axis=1))


# -- solvers ---------------------------------------------------------------------

def pcg(A, rhs, precond, tol: float, maxiter: int):
    """Preconditioned conjugate gradient; stops when |r| <= tol |rhs|.

    Returns (x, relative residual, iterations).
    """
    x = np.zeros_like(rhs)
    r = rhs.copy()
    nb = np.linalg.norm(rhs)
    if nb == 0:
        return x, 0.0, 0
    z = precond(r)
    p = z.copy()
    rz = r @ z
    for it in range(1, maxiter + 1):
        Ap = A @ p
        alpha = rz / (p @ Ap)
        x += alpha * p
        r -= alpha * Ap
        res = np.linalg.norm(r) / nb
        if res <= tol:
            return x, res, it
        z = precond(r)
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    return x, res, maxiter


def _preconditioner(A, method: str):
    if method == "jacobi":
        inv = 1.0 / A.diagonal()
        return lambda r: inv * r
    if method == "amg":
        import pyamg
        # the setup estimates spectral radii from numpy's global generator;
        # pin it so that solves are reproducible, then restore it
        state = np.random.get_state()
        np.random.seed(0)
        try:
            ml = pyamg.smoothed_aggregation_solver(
                A, symmetry="symmetric", max_coarse=500,
                presmoother=("gauss_seidel", {"sweep": "symmetric"}),
                postsmoother=("gauss_seidel", {"sweep": "symmetric"}))
        finally:
            np.random.set_state(state)
        M = ml.aspreconditioner(cycle="V")
        return lambda r: M @ r
    raise DomainError(f"unknown preconditioner {method!r}")


def _iteration_cap(n):
    return max(50, int(50 * math.sqrt(max(n, 1))))


@dataclass
class PotentialSolution:
    g: np.ndarray
    energy: float
    residual: float
    iterations: int


def effective_resistance(network: ShortedNetwork, a: int, b: int, tol: float = 1e-8,
                         method: str = "jacobi"):
    """R(a, b) = 1 / E_eff with E_eff the least energy of potentials g(a)=1, g(b)=0.

    ``a`` and ``b`` are vertex indices.  Returns (R, PotentialSolution) with
    the potential indexed by class.
    """
    ca, cb = network.class_of(a), network.class_of(b)
    C = network.n_classes
    if ca == cb:
        g = np.zeros(C)
        g[ca] = 1.0
        return 0.0, PotentialSolution(g, math.inf, 0.0, 0)
    L = network.laplacian
    free = np.ones(C, bool)
    free[[ca, cb]] = False
    fi = np.flatnonzero(free)
    Lff = L[fi][:, fi].tocsr()
    rhs = -np.asarray(L[fi][:, [ca]].todense()).ravel()
    g = np.zeros(C)
    g[ca] = 1.0
    if fi.size:
        x, res, its = pcg(Lff, rhs, _preconditioner(Lff, method), tol, _iteration_cap(C))
        if res > tol:
            raise SolverFailure(f"CG stopped at residual {res:.3g} after {its} iterations", res, its)
        g[fi] = x
    else:
        res, its = 0.0, 0
    # energy as the current leaving a: (L g)_a
    energy = float((L[[ca]] @ g)[0])
    if not energy > 0:
        raise SolverFailure("a and b are not connected", res, its)
    return 1.0 / energy, PotentialSolution(g, energy, float(res), int(its))


class GroundedSolver:
    """Resistances R(a, x) for many x with one factorisation-free setup.

    The class of ``a`` is grounded; for each target x the system
    L_g phi = e_x is solved and R(a, x) = phi_x.
    """

    def __init__(self, network: ShortedNetwork, a: int, method: str = "amg", tol: float = 1e-8):
        self.network = network
        self.ca = network.class_of(a)
        C = network.n_classes
        keep = np.ones(C, bool)
        keep[self.ca] = False
        self.map = np.cumsum(keep) - 1
        fi = np.flatnonzero(keep)
        self.A = network.laplacian[fi][:, fi].tocsr()
        self.tol = tol
        self.M = _preconditioner(self.A, method)

    def resistance(self, x: int) -> float:
        cx = self.network.class_of(x)
        if cx == self.ca:
            return 0.0
        e = np.zeros(self.A.shape[0])
        e[self.map[cx]] = 1.0
        phi, res, its = pcg(self.A, e, self.M, self.tol, _iteration_cap(self.A.shape[0]))
        if res > self.tol:
            raise SolverFailure(f"CG stopped at residual {res:.3g}", res, its)
        return float(phi[self.map[cx]])


def dissipated_energy(network: ShortedNetwork, g) -> float:
    """sum over resistors of J_uv (g_u - g_v)^2, i.e. (1/2) of the double sum.

    ``g`` is indexed by class, or by vertex if it is constant on classes.
    """
    g = np.asarray(g, float)
    if g.size == network.n_nodes and g.size != network.n_classes:
        gc = np.zeros(network.n_classes)
        gc[network.labels] = g
        if np.any(np.abs(gc[network.labels] - g) > 1e-12):
            raise DomainError("vertex potential is not constant on shorted classes")
        g = gc
    elif g.size != network.n_classes:
        raise DomainError("potential has the wrong length")
    d = g[network.labels[network.a]] - g[network.labels[network.b]]
    return float(math.fsum(network.g * d * d))


# -- experiments -------------------------------------------------------------------

def clean_resistances(family: CouplingFamily, M: int, norms, tol: float = 1e-8,
                      method: str = "amg"):
    """R(0, (n, 0)) without shorts for each n in ``norms``."""
    net = build(Box(M), family)
    solver = GroundedSolver(net, net.vertex(0, 0), method, tol)
    return np.array([solver.resistance(net.vertex(n, 0)) for n in norms])


def log_slope(norms, resistances) -> float:
    """Slope of R against log |x|."""
    return fit_line(np.log(np.asarray(norms, float)), resistances).slope


@dataclass
class ShortedResistanceReport:
    norms: np.ndarray
    threshold: np.ndarray
    successes: np.ndarray
    replicas: int
    p_hat: np.ndarray
    ci_lo: np.ndarray
    ci_hi: np.ndarray
    R_mean: np.ndarray
    R_ci_lo: np.ndarray
    R_ci_hi: np.ndarray
    same_class: np.ndarray
    solver_failures: int
    resistances: np.ndarray = field(repr=False)


_BASE_CACHE = {}


def _base_network(family: CouplingFamily, M: int) -> ShortedNetwork:
    # one clean network per process, reused across replicas
    key = (family.alpha, family.amplitude, family.cutoff_radius, family.norm, M)
    if key not in _BASE_CACHE:
        _BASE_CACHE.clear()
        _BASE_CACHE[key] = build(Box(M), family)
    return _BASE_CACHE[key]


def _replica(args):
    family, M, epsilon, seed, norms, method, tol = args
    base = _base_network(family, M)
    net = apply_shorts(base, epsilon, seed)
    o = net.vertex(0, 0)
    solver = GroundedSolver(net, o, method, tol)
    out = np.full(len(norms), np.nan)
    same = np.zeros(len(norms), bool)
    failures = 0
    for j, n in enumerate(norms):
        x = net.vertex(int(n), 0)
        same[j] = net.class_of(x) == net.class_of(o)
        try:
            out[j] = solver.resistance(x)
        except SolverFailure:
            failures += 1
    return out, same, failures


def shorted_resistance_experiment(family: CouplingFamily, epsilon: float, norms, replicas: int,
                                  c_tilde: float, seed: int, M: int | None = None,
                                  tol: float = 1e-6, method: str = "amg", progress=None,
                                  workers: int = 1, chunk: int = 4) -> ShortedResistanceReport:
    """Monte Carlo over shorts of P(R(0, x) >= c_tilde log|x|) for x = (n, 0).

    Solver failures are counted (and the replica skipped for that x)
    rather than raised.  Replicas are cut into chunks of ``chunk`` and may
    run on several worker processes; the result does not depend on
    ``workers``.
    """
    norms = np.asarray(list(norms), dtype=np.int64)
    M = int(M if M is not None else 4 * norms.max())
    if M < 4 * norms.max():
        raise DomainError("need M >= 4 max|x|")
    if replicas < 1:
        raise DomainError("need at least one replica")
    seeds = seed_block(seed, replicas)
    jobs = [(family, M, epsilon, int(s), tuple(int(n) for n in norms), method, tol)
            for s in seeds]
    if workers <= 1:
        results = []
        for i, job in enumerate(jobs):
            results.append(_replica(job))
            if progress is not None:
                progress(i)
    else:
        results = parallel_map(_replica, jobs, workers, chunk)
    Rs = np.array([r[0] for r in results]).reshape(replicas, norms.size)
    same = np.sum([r[1] for r in results], axis=0).astype(np.int64)
    failures = int(sum(r[2] for r in results))
    thr = c_tilde * np.log(norms.astype(float))
    ok = ~np.isnan(Rs)
    succ = ((Rs >= thr) & ok).sum(axis=0)
    cnt = ok.sum(axis=0)
    ci = np.array([wilson_interval(s, c) for s, c in zip(succ, cnt)])
    mean = np.nanmean(Rs, axis=0)
    sd = np.nanstd(Rs, axis=0, ddof=1) if replicas > 1 else np.zeros(norms.size)
    half = 1.96 * sd / np.sqrt(np.maximum(cnt, 1))
    return ShortedResistanceReport(norms, thr, succ, replicas, succ / np.maximum(cnt, 1),
                                   ci[:, 0], ci[:, 1], mean, mean - half, mean + half,
                                   same, failures, Rs)


def rotation_test_potential(box: Box, R: int, labels=None) -> np.ndarray:
    """Unit potential from the truncated harmonic profile: 1 at 0, 0 on |u| >= R.

    With ``labels`` (cluster furthest norms per vertex) the profile is read
    at each vertex's furthest cluster point, which makes it constant on
    shorted classes.
    """
    from .ms_bound import atilde
    at = atilde(1.0, R, box.M)
    span = at[0] - at[R]
    if span == 0:
        raise DomainError("profile is flat for this R; need 2 ceil(sqrt R) < R")
    lev = box.norms if labels is None else np.asarray(labels)
    return (at[lev] - at[R]) / span
