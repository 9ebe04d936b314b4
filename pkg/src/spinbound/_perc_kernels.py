"""numba kernels for bond percolation on a box.

Edges are sampled through their hazards h = -log(1 - p): a Poisson number
of events is drawn with total rate sum(h) and every event opens one edge
chosen proportionally to its hazard.  An edge is then open with
probability 1 - exp(-h) = p, independently of the others; repeated hits
of the same edge are harmless.

Every kernel reseeds numba's generator from the seed it is given, so
results depend only on that seed.
"""
import numba
import numpy as np


@numba.njit(cache=True)
def _pick(cum, total):
    return np.searchsorted(cum, np.random.random() * total, side="right")


@numba.njit(cache=True)
def sample_edges(seed, W, dx, dy, cum):
    """Open edges of the whole box.

    ``dx, dy`` is a half displacement table (dx >= 0) and ``cum`` the
    cumulative sum of N_t * h_t, with N_t the number of in-box pairs of
    displacement t.
    """
    np.random.seed(seed)
    total = cum[-1]
    n = np.random.poisson(total) if total > 0 else 0
    a = np.empty(n, np.int64)
    b = np.empty(n, np.int64)
    for e in range(n):
        t = _pick(cum, total)
        if t >= dx.size:
            t = dx.size - 1
        ddx = dx[t]
        ddy = dy[t]
        ix = np.random.randint(0, W - ddx)
        lo = -ddy if ddy < 0 else 0
        span = W - abs(ddy)
        iy = lo + np.random.randint(0, span)
        a[e] = ix * W + iy
        b[e] = (ix + ddx) * W + iy + ddy
    return a, b


@numba.njit(cache=True)
def _find(parent, v):
    root = v
    while parent[root] != root:
        root = parent[root]
    while parent[v] != root:
        nxt = parent[v]
        parent[v] = root
        v = nxt
    return root


@numba.njit(cache=True)
def explore(start, W, M, dx, dy, cum, total, stamp, mark, queue, ebuf_a, ebuf_b):
    """Lazy breadth-first exploration of the open cluster of ``start``.

    Edges of a vertex are queried when the vertex is processed, except
    those towards vertices already processed in this exploration (their
    state was decided earlier).  ``mark[v] == stamp`` flags vertices seen
    in this exploration; ``mark[v] == stamp + 1`` flags processed ones.

    Returns (size, max norm, max distance to start, number of recorded
    open edges).  Cluster vertices are left in ``queue[:size]`` and open
    edges in ``ebuf_a/ebuf_b``.
    """
    sx = start // W - M
    sy = start % W - M
    mark[start] = stamp
    queue[0] = start
    head = 0
    tail = 1
    ne = 0
    mmax = max(abs(sx), abs(sy))
    dmax = 0
    while head < tail:
        w = queue[head]
        head += 1
        mark[w] = stamp + 1
        wx = w // W
        wy = w % W
        k = np.random.poisson(total) if total > 0 else 0
        for _ in range(k):
            t = _pick(cum, total)
            if t >= dx.size:
                t = dx.size - 1
            jx = wx + dx[t]
            jy = wy + dy[t]
            if jx < 0 or jx >= W or jy < 0 or jy >= W:
                continue
            y = jx * W + jy
            if mark[y] == stamp + 1:
                continue
            if ne < ebuf_a.size:
                ebuf_a[ne] = w
                ebuf_b[ne] = y
                ne += 1
            if mark[y] != stamp:
                mark[y] = stamp
                queue[tail] = y
                tail += 1
                nx = jx - M
                ny = jy - M
                nrm = max(abs(nx), abs(ny))
                if nrm > mmax:
                    mmax = nrm
                d = max(abs(nx - sx), abs(ny - sy))
                if d > dmax:
                    dmax = d
    return tail, mmax, dmax, ne


@numba.njit(cache=True)
def cluster_replicas(seeds, start, W, M, dx, dy, cum):
    """(n, m, R) of the cluster of ``start`` for each seed."""
    V = W * W
    total = cum[-1]
    mark = np.full(V, -10, np.int64)
    queue = np.empty(V, np.int64)
    ea = np.empty(0, np.int64)
    eb = np.empty(0, np.int64)
    r = seeds.size
    n_out = np.empty(r, np.int64)
    m_out = np.empty(r, np.int64)
    d_out = np.empty(r, np.int64)
    for i in range(r):
        np.random.seed(seeds[i])
        n, m, d, _ = explore(start, W, M, dx, dy, cum, total, 2 * i, mark, queue, ea, eb)
        n_out[i] = n
        m_out[i] = m
        d_out[i] = d
    return n_out, m_out, d_out


@numba.njit(cache=True)
def assemble(order, W, M, dx, dy, cum, ws_mark, ws_queue, ws_ea, ws_eb,
             explored, cluster_of, touched, stamp0):
    """Cluster-by-cluster construction over the vertices in ``order``.

    For every x in ``order`` a fresh independent copy is explored to get
    its full cluster C_x (giving N and R).  The part of C_x reachable from
    x through open edges avoiding previously explored vertices is glued
    into the assembled configuration.

    ``explored`` and ``cluster_of`` must be 0 / -1 everywhere on entry;
    they are filled for the vertices listed in ``touched[:n_touched]`` and
    the caller resets exactly those.  Returns (N, R, b, open edge arrays,
    n_touched, next free stamp).  The generator must be seeded by the caller.
    """
    total = cum[-1]
    K = order.size
    N = np.empty(K, np.int64)
    Rr = np.empty(K, np.int64)
    b = np.zeros(K, np.int64)
    out_a = np.empty(16, np.int64)
    out_b = np.empty(16, np.int64)
    n_out = 0
    nt = 0
    stamp = stamp0
    for s in range(K):
        x = order[s]
        n, m, d, ne = explore(x, W, M, dx, dy, cum, total, stamp, ws_mark, ws_queue,
                              ws_ea, ws_eb)
        stamp += 2
        if ne >= ws_ea.size:
            raise ValueError("edge buffer overflow in assemble")
        N[s] = n
        Rr[s] = d
        if explored[x] == 1:
            continue
        b[s] = 1
        cluster_of[x] = s
        explored[x] = 1
        touched[nt] = x
        nt += 1
        changed = True
        while changed:
            changed = False
            for e in range(ne):
                u = ws_ea[e]
                v = ws_eb[e]
                cu = cluster_of[u] == s
                cv = cluster_of[v] == s
                if cu and not cv and explored[v] == 0:
                    cluster_of[v] = s
                    explored[v] = 1
                    touched[nt] = v
                    nt += 1
                    changed = True
                elif cv and not cu and explored[u] == 0:
                    cluster_of[u] = s
                    explored[u] = 1
                    touched[nt] = u
                    nt += 1
                    changed = True
        for e in range(ne):
            u = ws_ea[e]
            v = ws_eb[e]
            if cluster_of[u] == s and cluster_of[v] == s:
                if n_out >= out_a.size:
                    na = np.empty(2 * out_a.size, np.int64)
                    nb = np.empty(2 * out_a.size, np.int64)
                    na[:n_out] = out_a[:n_out]
                    nb[:n_out] = out_b[:n_out]
                    out_a = na
                    out_b = nb
                out_a[n_out] = u
                out_b[n_out] = v
                n_out += 1
    return N, Rr, b, out_a[:n_out], out_b[:n_out], nt, stamp


@numba.njit(cache=True)
def assemble_once(seed, order, W, M, dx, dy, cum, ebuf_size):
    """Single construction; returns (N, R, b, edges a, edges b, explored, cluster_of)."""
    np.random.seed(seed)
    V = W * W
    mark = np.full(V, -10, np.int64)
    queue = np.empty(V, np.int64)
    ea = np.empty(ebuf_size, np.int64)
    eb = np.empty(ebuf_size, np.int64)
    explored = np.zeros(V, np.int64)
    cluster_of = np.full(V, -1, np.int64)
    touched = np.empty(V, np.int64)
    N, Rr, b, oa, ob, nt, _ = assemble(order, W, M, dx, dy, cum, mark, queue, ea, eb,
                                       explored, cluster_of, touched, 0)
    return N, Rr, b, oa, ob, explored, cluster_of


@numba.njit(cache=True)
def domination_sums(seeds, order, W, M, dx, dy, cum, r0, R, ebuf_size):
    """Pathwise audit of the construction, one entry per seed.

    Returns (lhs, rhs, rhs_all): lhs and rhs are the sums of
    r_A(u)^2/|u|^2 and N(u)R(u)^2/|u|^2 over Delta_R; rhs_all sums
    N(x)R(x)^2/max(|x|, 1)^2 over every start x in Lambda_R.
    """
    V = W * W
    nrep = seeds.size
    K = order.size
    lhs = np.zeros(nrep)
    rhs = np.zeros(nrep)
    rhs_all = np.zeros(nrep)
    mark = np.full(V, -10, np.int64)
    queue = np.empty(V, np.int64)
    ea = np.empty(ebuf_size, np.int64)
    eb = np.empty(ebuf_size, np.int64)
    explored = np.zeros(V, np.int64)
    cluster_of = np.full(V, -1, np.int64)
    touched = np.empty(V, np.int64)
    mmax = np.zeros(K, np.int64)
    stamp = 0
    for i in range(nrep):
        np.random.seed(seeds[i])
        N, Rr, b, oa, ob, nt, stamp = assemble(order, W, M, dx, dy, cum, mark, queue, ea, eb,
                                               explored, cluster_of, touched, stamp)
        mmax[:] = 0
        for t in range(nt):
            u = touched[t]
            nrm = max(abs(u // W - M), abs(u % W - M))
            c = cluster_of[u]
            if nrm > mmax[c]:
                mmax[c] = nrm
        sl = 0.0
        sr = 0.0
        sa = 0.0
        for s in range(K):
            x = order[s]
            nrm = max(abs(x // W - M), abs(x % W - M))
            qa = 1.0 / max(nrm, 1) ** 2
            sa += N[s] * Rr[s] * Rr[s] * qa
            if nrm <= r0 or nrm > R:
                continue
            q = 1.0 / (nrm * nrm)
            sr += N[s] * Rr[s] * Rr[s] * q
            r = mmax[cluster_of[x]] - nrm
            sl += r * r * q
        lhs[i] = sl
        rhs[i] = sr
        rhs_all[i] = sa
        for t in range(nt):
            u = touched[t]
            explored[u] = 0
            cluster_of[u] = -1
    return lhs, rhs, rhs_all


@numba.njit(cache=True)
def size_vectors(seeds, order, W, M, dx, dy, cum, ebuf_size):
    """Assembled cluster size of every vertex of ``order``, one row per seed."""
    V = W * W
    nrep = seeds.size
    K = order.size
    out = np.empty((nrep, K), np.int64)
    mark = np.full(V, -10, np.int64)
    queue = np.empty(V, np.int64)
    ea = np.empty(ebuf_size, np.int64)
    eb = np.empty(ebuf_size, np.int64)
    explored = np.zeros(V, np.int64)
    cluster_of = np.full(V, -1, np.int64)
    touched = np.empty(V, np.int64)
    size = np.zeros(K, np.int64)
    stamp = 0
    for i in range(nrep):
        np.random.seed(seeds[i])
        N, Rr, b, oa, ob, nt, stamp = assemble(order, W, M, dx, dy, cum, mark, queue, ea, eb,
                                               explored, cluster_of, touched, stamp)
        size[:] = 0
        for t in range(nt):
            size[cluster_of[touched[t]]] += 1
        for s in range(K):
            out[i, s] = size[cluster_of[order[s]]]
        for t in range(nt):
            u = touched[t]
            explored[u] = 0
            cluster_of[u] = -1
    return out


@numba.njit(cache=True)
def goodness_replicas(seeds, W, M, dx, dy, cum, r0, R):
    """Per seed: (cond1 fails, cond2 fails, cond3 sum) of a whole-box sample.

    Union-find runs only over vertices touched by open edges; untouched
    vertices are singletons and cannot violate any condition.
    """
    V = W * W
    nrep = seeds.size
    f1 = np.zeros(nrep, np.bool_)
    f2 = np.zeros(nrep, np.bool_)
    s3 = np.zeros(nrep)
    parent = np.empty(V, np.int64)
    stamp = np.full(V, -1, np.int64)
    lo = np.empty(V, np.int64)
    hi = np.empty(V, np.int64)
    for i in range(nrep):
        a, b = sample_edges(seeds[i], W, dx, dy, cum)
        for e in range(a.size):
            for v in (a[e], b[e]):
                if stamp[v] != i:
                    stamp[v] = i
                    parent[v] = v
        for e in range(a.size):
            ra = _find(parent, a[e])
            rb = _find(parent, b[e])
            if ra != rb:
                parent[ra] = rb
        # per-root extreme norms; roots are touched vertices
        for e in range(a.size):
            for v in (a[e], b[e]):
                rt = _find(parent, v)
                lo[rt] = 1 << 40
                hi[rt] = -1
        for e in range(a.size):
            for v in (a[e], b[e]):
                rt = _find(parent, v)
                nrm = max(abs(v // W - M), abs(v % W - M))
                if nrm < lo[rt]:
                    lo[rt] = nrm
                if nrm > hi[rt]:
                    hi[rt] = nrm
        bad1 = False
        bad2 = False
        acc = 0.0
        for e in range(a.size):
            for v in (a[e], b[e]):
                if stamp[v] != i:
                    continue
                stamp[v] = -2 - i  # visit each touched vertex once
                rt = _find(parent, v)
                if lo[rt] <= r0 and hi[rt] > 2 * r0:
                    bad1 = True
                nrm = max(abs(v // W - M), abs(v % W - M))
                if r0 < nrm <= R:
                    if hi[rt] > 2 * nrm:
                        bad2 = True
                    r = hi[rt] - nrm
                    acc += r * r / (nrm * nrm)
        f1[i] = bad1
        f2[i] = bad2
        s3[i] = acc
    return f1, f2, s3


@numba.njit(cache=True)
def _norm_hazard_profile(w, W, M, dx, dy, h, out):
    # out[n] = total hazard from w towards in-box vertices of norm n
    out[:] = 0.0
    wx = w // W
    wy = w % W
    for t in range(dx.size):
        jx = wx + dx[t]
        jy = wy + dy[t]
        if jx < 0 or jx >= W or jy < 0 or jy >= W:
            continue
        n = max(abs(jx - M), abs(jy - M))
        out[n] += h[t]


@numba.njit(cache=True)
def conditional_reach(seeds, start, levels, W, M, dx, dy, cum, h, ebuf_size):
    """Conditional probabilities P(cluster of start reaches norm >= L | inner edges).

    For each level L the cluster C' of ``start`` using only edges inside
    Lambda_{L-1} is read off a lazily explored cluster; the edges leaving
    Lambda_{L-1} from C' are independent of C', so the conditional
    probability is 1 - exp(-sum of their hazards).  Returns an array of
    shape (n_seeds, n_levels).
    """
    V = W * W
    total = cum[-1]
    mark = np.full(V, -10, np.int64)
    queue = np.empty(V, np.int64)
    ea = np.empty(ebuf_size, np.int64)
    eb = np.empty(ebuf_size, np.int64)
    nl = levels.size
    out = np.empty((seeds.size, nl))
    prof = np.empty(M + 2)
    tail0 = np.zeros(M + 2)
    _norm_hazard_profile(start, W, M, dx, dy, h, prof)
    for n in range(M, -1, -1):
        tail0[n] = tail0[n + 1] + prof[n]
    inside = np.zeros(V, np.int64)
    for i in range(seeds.size):
        np.random.seed(seeds[i])
        size, mmax, d, ne = explore(start, W, M, dx, dy, cum, total, 2 * i, mark, queue, ea, eb)
        if ne >= ebuf_size:
            raise ValueError("edge buffer overflow in conditional_reach")
        if size == 1:
            for j in range(nl):
                L = levels[j]
                out[i, j] = -np.expm1(-tail0[L]) if L <= M else 0.0
            continue
        # tail hazards of every cluster vertex, indexed by queue position
        tails = np.zeros((size, M + 2))
        for q in range(size):
            _norm_hazard_profile(queue[q], W, M, dx, dy, h, prof)
            for n in range(M, -1, -1):
                tails[q, n] = tails[q, n + 1] + prof[n]
        pos = np.empty(size, np.int64)
        for j in range(nl):
            L = levels[j]
            if L > M:
                out[i, j] = 0.0
                continue
            # component of start through edges with both ends of norm < L
            for q in range(size):
                inside[queue[q]] = 0
            inside[start] = 1
            changed = True
            while changed:
                changed = False
                for e in range(ne):
                    u = ea[e]
                    v = eb[e]
                    nu = max(abs(u // W - M), abs(u % W - M))
                    nv = max(abs(v // W - M), abs(v % W - M))
                    if nu >= L or nv >= L:
                        continue
                    if inside[u] != inside[v]:
                        inside[u] = 1
                        inside[v] = 1
                        changed = True
            haz = 0.0
            for q in range(size):
                if inside[queue[q]] == 1:
                    haz += tails[q, L]
            out[i, j] = -np.expm1(-haz)
        for q in range(size):
            inside[queue[q]] = 0
    return out
