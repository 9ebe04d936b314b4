"""numba Metropolis kernels on a graph given by neighbour lists (CSR).

Sites 0..n_mov-1 are updated; the remaining sites are frozen boundary
spins.  The pair weight is exp(+w f(theta_u - theta_v)) with f either a
cosine series (``kind == 0``: f = sum_k coef[k-1] cos(k x)) or a table on
a uniform grid of [0, 2pi) with linear interpolation (``kind == 1``).
"""
import math

import numba
import numpy as np

TWO_PI = 2.0 * math.pi


@numba.njit(cache=True)
def _f(kind, coef, table, d):
    if kind == 0:
        s = 0.0
        for k in range(coef.size):
            s += coef[k] * math.cos((k + 1) * d)
        return s
    n = table.size
    t = (d % TWO_PI) / TWO_PI * n
    i = int(t)
    fr = t - i
    i0 = i % n
    i1 = (i + 1) % n
    return table[i0] * (1.0 - fr) + table[i1] * fr


@numba.njit(cache=True)
def delta_logweight(theta, u, new, ptr, nbr, wts, kind, coef, table):
    old = theta[u]
    s = 0.0
    for j in range(ptr[u], ptr[u + 1]):
        v = nbr[j]
        s += wts[j] * (_f(kind, coef, table, new - theta[v]) - _f(kind, coef, table, old - theta[v]))
    return s


@numba.njit(cache=True)
def _delta_xy(theta, c, s, u, new, ptr, nbr, wts, c1):
    hc = 0.0
    hs = 0.0
    for j in range(ptr[u], ptr[u + 1]):
        v = nbr[j]
        hc += wts[j] * c[v]
        hs += wts[j] * s[v]
    return c1 * ((math.cos(new) - c[u]) * hc + (math.sin(new) - s[u]) * hs)


@numba.njit(cache=True)
def _run(theta, c, s, n_mov, ptr, nbr, wts, kind, coef, table, width, q, n_sweeps):
    xy = kind == 0 and coef.size == 1 and q == 0
    acc = 0
    dlw = 0.0
    for _ in range(n_sweeps):
        for u in range(n_mov):
            if q > 0:
                j = (int(round(theta[u] / TWO_PI * q)) + np.random.randint(1, q)) % q
                new = TWO_PI * j / q
            else:
                new = (theta[u] + width * (2.0 * np.random.random() - 1.0)) % TWO_PI
            if xy:
                d = _delta_xy(theta, c, s, u, new, ptr, nbr, wts, coef[0])
            else:
                d = delta_logweight(theta, u, new, ptr, nbr, wts, kind, coef, table)
            if d >= 0.0 or np.random.random() < math.exp(d):
                theta[u] = new
                c[u] = math.cos(new)
                s[u] = math.sin(new)
                acc += 1
                dlw += d
    return acc, dlw


@numba.njit(cache=True)
def sweeps(theta, n_mov, ptr, nbr, wts, kind, coef, table, width, q, n_sweeps, seed):
    """Run ``n_sweeps`` sequential sweeps; returns (accepted, logweight change).

    ``q > 0`` switches to the discrete mode: angles live on the grid
    2 pi j / q and a proposal moves to one of the other q - 1 states
    uniformly.
    """
    np.random.seed(seed)
    c = np.cos(theta)
    s = np.sin(theta)
    return _run(theta, c, s, n_mov, ptr, nbr, wts, kind, coef, table, width, q, n_sweeps)


@numba.njit(cache=True)
def discrete_histogram(theta, n_mov, ptr, nbr, wts, kind, coef, table, q, n_sweeps, seed):
    """Occupation counts of the joint state of the movable sites, one record per sweep."""
    np.random.seed(seed)
    c = np.cos(theta)
    s = np.sin(theta)
    hist = np.zeros(q ** n_mov, dtype=np.int64)
    for _ in range(n_sweeps):
        _run(theta, c, s, n_mov, ptr, nbr, wts, kind, coef, table, 0.0, q, 1)
        code = 0
        for u in range(n_mov):
            code = code * q + int(round(theta[u] / TWO_PI * q)) % q
        hist[code] += 1
    return hist


@numba.njit(cache=True)
def bessel_ratio(k):
    """I1(k)/I0(k) for k >= 0."""
    if k < 1e-300:
        return 0.0
    if k > 500.0:
        # asymptotic expansion, error below 1e-13 here
        r = 1.0 / k
        return 1.0 - 0.5 * r - 0.125 * r * r - 0.125 * r ** 3 - 0.1953125 * r ** 4
    # ratio of the two power series sum (k/2)^(2m) / (m! (m+n)!)
    x = 0.25 * k * k
    t0 = 1.0
    t1 = 0.5 * k
    s0 = t0
    s1 = t1
    m = 0
    while True:
        m += 1
        t0 *= x / (m * m)
        t1 *= x / (m * (m + 1))
        s0 += t0
        s1 += t1
        if t0 < 1e-17 * s0 and t1 < 1e-17 * s1:
            break
    return s1 / s0


@numba.njit(cache=True)
def _site_mean(theta, u, ptr, nbr, wts, c1):
    # E[exp(i theta_u) | all other spins] for the XY weight
    hc = 0.0
    hs = 0.0
    for j in range(ptr[u], ptr[u + 1]):
        v = nbr[j]
        hc += wts[j] * math.cos(theta[v])
        hs += wts[j] * math.sin(theta[v])
    hc *= c1
    hs *= c1
    k = math.hypot(hc, hs)
    if k == 0.0:
        return 0.0, 0.0
    r = bessel_ratio(k) / k
    return r * hc, r * hs


@numba.njit(cache=True)
def _pair_mean(theta, u, x, wux, ptr, nbr, wts, c1, gc, gs):
    # E[cos(theta_u - theta_x) | all other spins] for a coupled XY pair,
    # by the periodic trapezoid rule on len(gc) points per angle
    hu_c = 0.0
    hu_s = 0.0
    for j in range(ptr[u], ptr[u + 1]):
        v = nbr[j]
        if v != x:
            hu_c += wts[j] * math.cos(theta[v])
            hu_s += wts[j] * math.sin(theta[v])
    hx_c = 0.0
    hx_s = 0.0
    for j in range(ptr[x], ptr[x + 1]):
        v = nbr[j]
        if v != u:
            hx_c += wts[j] * math.cos(theta[v])
            hx_s += wts[j] * math.sin(theta[v])
    n = gc.size
    au = np.empty(n)
    ax = np.empty(n)
    for i in range(n):
        au[i] = c1 * (hu_c * gc[i] + hu_s * gs[i])
        ax[i] = c1 * (hx_c * gc[i] + hx_s * gs[i])
    shift = au.max() + ax.max() + abs(c1 * wux)
    num = 0.0
    den = 0.0
    for i in range(n):
        for j in range(n):
            # cos(t_i - t_j) on the grid
            cd = gc[i] * gc[j] + gs[i] * gs[j]
            w = math.exp(au[i] + ax[j] + c1 * wux * cd - shift)
            num += w * cd
            den += w
    return num / den


@numba.njit(cache=True)
def measure(theta, n_mov, ptr, nbr, wts, kind, coef, table, width, n_sweeps, seed,
            origin, targets, wpair, conditional, n_grid=64):
    """Sweep and record, after every sweep, the estimate of cos(theta_0 - theta_x).

    ``targets`` has shape (n_x, n_images); the recorded value for column
    i is the average over images.  With ``conditional`` (XY only) the
    angles of 0 and x are integrated out given the other spins:
    independently when they are not coupled (``wpair == 0``), jointly on
    a quadrature grid when they are.
    """
    g = 2.0 * np.pi * np.arange(n_grid) / n_grid
    gc = np.cos(g)
    gs = np.sin(g)
    n_x = targets.shape[0]
    n_im = targets.shape[1]
    out = np.empty((n_sweeps, n_x))
    np.random.seed(seed)
    c = np.cos(theta)
    s = np.sin(theta)
    acc_tot = 0
    m0c = 0.0
    m0s = 0.0
    for t in range(n_sweeps):
        a, _ = _run(theta, c, s, n_mov, ptr, nbr, wts, kind, coef, table, width, 0, 1)
        acc_tot += a
        if conditional:
            m0c, m0s = _site_mean(theta, origin, ptr, nbr, wts, coef[0])
        for i in range(n_x):
            acc = 0.0
            for k in range(n_im):
                x = targets[i, k]
                if not conditional:
                    acc += math.cos(theta[origin] - theta[x])
                elif wpair[i, k] > 0.0:
                    acc += _pair_mean(theta, origin, x, wpair[i, k], ptr, nbr, wts, coef[0], gc, gs)
                else:
                    mxc, mxs = _site_mean(theta, x, ptr, nbr, wts, coef[0])
                    acc += m0c * mxc + m0s * mxs
            out[t, i] = acc / n_im
    return out, acc_tot
