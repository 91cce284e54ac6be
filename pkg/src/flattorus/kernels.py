"""Hot numeric kernels, each with a numba loop version and a numpy version.

The module-level names (``polygon_masks``, ``grid_edges``, ``descent``,
``colorable``) are bound to one of the two implementations depending on
:data:`flattorus._accel.USE_NUMBA`.  Both variants take and return the same
arrays, so callers never need to know which one is active.
"""

import math

import numpy as np

from ._accel import USE_NUMBA, njit

# ---------------------------------------------------------------------------
# probe-grid membership of a lifted polygon
# ---------------------------------------------------------------------------


def _shift_range(lo, hi, tol):
    # integer translates a with [lo + a, hi + a] meeting [0, 1]
    return int(math.ceil(-hi - tol)), int(math.floor(1.0 - lo + tol))


@njit
def _polygon_masks_nb(vx, vy, n, tol, closed, interior):
    k = vx.shape[0]
    xmin, xmax = vx.min(), vx.max()
    ymin, ymax = vy.min(), vy.max()
    a0 = int(np.ceil(-xmax - tol))
    a1 = int(np.floor(1.0 - xmin + tol))
    b0 = int(np.ceil(-ymax - tol))
    b1 = int(np.floor(1.0 - ymin + tol))
    tol2 = tol * tol
    for a in range(a0, a1 + 1):
        i0 = max(0, int(np.ceil(n * (xmin + a - tol) - 0.5)))
        i1 = min(n - 1, int(np.floor(n * (xmax + a + tol) - 0.5)))
        for b in range(b0, b1 + 1):
            j0 = max(0, int(np.ceil(n * (ymin + b - tol) - 0.5)))
            j1 = min(n - 1, int(np.floor(n * (ymax + b + tol) - 0.5)))
            for i in range(i0, i1 + 1):
                px = (i + 0.5) / n - a
                for j in range(j0, j1 + 1):
                    py = (j + 0.5) / n - b
                    inside = False
                    dmin = np.inf
                    for e in range(k):
                        x1 = vx[e]
                        y1 = vy[e]
                        x2 = vx[(e + 1) % k]
                        y2 = vy[(e + 1) % k]
                        if (y1 > py) != (y2 > py):
                            xc = x1 + (py - y1) * (x2 - x1) / (y2 - y1)
                            if px < xc:
                                inside = not inside
                        dx = x2 - x1
                        dy = y2 - y1
                        ll = dx * dx + dy * dy
                        t = 0.0
                        if ll > 0.0:
                            t = ((px - x1) * dx + (py - y1) * dy) / ll
                            if t < 0.0:
                                t = 0.0
                            elif t > 1.0:
                                t = 1.0
                        ex = x1 + t * dx - px
                        ey = y1 + t * dy - py
                        d = ex * ex + ey * ey
                        if d < dmin:
                            dmin = d
                    near = dmin <= tol2
                    if inside or near:
                        closed[i, j] = True
                    if inside and not near:
                        interior[i, j] = True


def _polygon_masks_np(vx, vy, n, tol, closed, interior):
    k = vx.shape[0]
    xmin, xmax = vx.min(), vx.max()
    ymin, ymax = vy.min(), vy.max()
    a0, a1 = _shift_range(xmin, xmax, tol)
    b0, b1 = _shift_range(ymin, ymax, tol)
    x2s = np.roll(vx, -1)
    y2s = np.roll(vy, -1)
    for a in range(a0, a1 + 1):
        i0 = max(0, int(math.ceil(n * (xmin + a - tol) - 0.5)))
        i1 = min(n - 1, int(math.floor(n * (xmax + a + tol) - 0.5)))
        if i1 < i0:
            continue
        px = ((np.arange(i0, i1 + 1) + 0.5) / n - a)[:, None]
        for b in range(b0, b1 + 1):
            j0 = max(0, int(math.ceil(n * (ymin + b - tol) - 0.5)))
            j1 = min(n - 1, int(math.floor(n * (ymax + b + tol) - 0.5)))
            if j1 < j0:
                continue
            py = ((np.arange(j0, j1 + 1) + 0.5) / n - b)[None, :]
            inside = np.zeros((i1 - i0 + 1, j1 - j0 + 1), dtype=bool)
            dmin = np.full(inside.shape, np.inf)
            for e in range(k):
                x1, y1, x2, y2 = vx[e], vy[e], x2s[e], y2s[e]
                if y1 != y2:
                    spans = (y1 > py) != (y2 > py)
                    xc = x1 + (py - y1) * (x2 - x1) / (y2 - y1)
                    inside ^= spans & (px < xc)
                dx, dy = x2 - x1, y2 - y1
                ll = dx * dx + dy * dy
                if ll > 0.0:
                    t = np.clip(((px - x1) * dx + (py - y1) * dy) / ll, 0.0, 1.0)
                else:
                    t = np.zeros(inside.shape)
                d = (x1 + t * dx - px) ** 2 + (y1 + t * dy - py) ** 2
                np.minimum(dmin, d, out=dmin)
            near = dmin <= tol * tol
            closed[i0 : i1 + 1, j0 : j1 + 1] |= inside | near
            interior[i0 : i1 + 1, j0 : j1 + 1] |= inside & ~near


def polygon_masks(vx, vy, n, tol=1e-9, use_numba=None):
    """Closed and interior membership of the ``n x n`` probe grid.

    Probe ``(i, j)`` sits at ``((i + 0.5) / n, (j + 0.5) / n)``.  The polygon
    is given by lifted vertex coordinates; every integer translate that meets
    the unit square is tested.  A probe within ``tol`` of the boundary counts
    as covered but not interior.
    """
    vx = np.ascontiguousarray(vx, dtype=np.float64)
    vy = np.ascontiguousarray(vy, dtype=np.float64)
    closed = np.zeros((n, n), dtype=bool)
    interior = np.zeros((n, n), dtype=bool)
    fn = _polygon_masks_nb if _pick(use_numba) else _polygon_masks_np
    fn(vx, vy, n, tol, closed, interior)
    return closed, interior


# ---------------------------------------------------------------------------
# grid graph edges
# ---------------------------------------------------------------------------


@njit
def _grid_edges_nb(s, k):
    n = s * s
    count = 0
    for u in range(n):
        x1 = u // s
        y1 = u % s
        for v in range(u + 1, n):
            dx = abs(x1 - v // s)
            dy = abs(y1 - v % s)
            dx = min(dx, s - dx)
            dy = min(dy, s - dy)
            if dx * dx + dy * dy >= k:
                count += 1
    out = np.empty((count, 2), dtype=np.int64)
    c = 0
    for u in range(n):
        x1 = u // s
        y1 = u % s
        for v in range(u + 1, n):
            dx = abs(x1 - v // s)
            dy = abs(y1 - v % s)
            dx = min(dx, s - dx)
            dy = min(dy, s - dy)
            if dx * dx + dy * dy >= k:
                out[c, 0] = u
                out[c, 1] = v
                c += 1
    return out


def _grid_edges_np(s, k):
    d = np.arange(s)
    d = np.minimum(d, s - d)
    far = (d[:, None] ** 2 + d[None, :] ** 2) >= k  # indexed by (dx mod s, dy mod s)
    n = s * s
    xs, ys = np.divmod(np.arange(n), s)
    chunks = []
    for u in range(n - 1):
        v = np.arange(u + 1, n)
        hit = far[(xs[v] - xs[u]) % s, (ys[v] - ys[u]) % s]
        if hit.any():
            vv = v[hit]
            chunks.append(np.column_stack([np.full(vv.size, u), vv]))
    if not chunks:
        return np.empty((0, 2), dtype=np.int64)
    return np.concatenate(chunks).astype(np.int64)


def grid_edges(s, k, use_numba=None):
    """All pairs ``u < v`` of grid cells with toroidal squared distance >= k."""
    if _pick(use_numba):
        return _grid_edges_nb(int(s), int(k))
    return _grid_edges_np(int(s), int(k))


# ---------------------------------------------------------------------------
# exact colorability by backtracking
# ---------------------------------------------------------------------------


@njit
def _colorable_nb(adj, order, m):
    n = adj.shape[0]
    colors = np.full(n, -1, dtype=np.int64)
    nxt = np.zeros(n, dtype=np.int64)  # next color to try at each depth
    used = np.zeros(n + 1, dtype=np.int64)  # number of colors in use before depth
    depth = 0
    while depth >= 0:
        if depth == n:
            return True
        u = order[depth]
        limit = min(m, used[depth] + 1)  # new colors are interchangeable
        placed = False
        c = nxt[depth]
        while c < limit:
            ok = True
            for w in range(n):
                if adj[u, w] and colors[w] == c:
                    ok = False
                    break
            if ok:
                colors[u] = c
                nxt[depth] = c + 1
                used[depth + 1] = max(used[depth], c + 1)
                placed = True
                break
            c += 1
        if placed:
            depth += 1
            if depth < n:
                nxt[depth] = 0
        else:
            colors[u] = -1
            depth -= 1
            if depth >= 0:
                colors[order[depth]] = -1
    return False


def _colorable_py(adj, order, m):
    n = adj.shape[0]
    nbrs = [np.flatnonzero(adj[u]).tolist() for u in range(n)]
    colors = [-1] * n

    def place(depth, used):
        if depth == n:
            return True
        u = order[depth]
        for c in range(min(m, used + 1)):
            if all(colors[w] != c for w in nbrs[u]):
                colors[u] = c
                if place(depth + 1, max(used, c + 1)):
                    return True
                colors[u] = -1
        return False

    return place(0, 0)


def colorable(adj, m, use_numba=None):
    """True iff the graph with boolean adjacency matrix ``adj`` is m-colorable."""
    adj = np.ascontiguousarray(adj, dtype=np.bool_)
    order = np.argsort(-adj.sum(axis=1), kind="stable").astype(np.int64)
    if _pick(use_numba):
        return bool(_colorable_nb(adj, order, int(m)))
    return _colorable_py(adj, order.tolist(), int(m))


# ---------------------------------------------------------------------------
# max-diameter descent over mesh vertex positions
# ---------------------------------------------------------------------------
#
# Mesh arrays (all int64 unless stated):
#   cv (C,)      vertex index of each face corner
#   cs (C, 2)    float integer shift of the corner's lift
#   pa, pb (P,)  corner pairs within one face (all pairs)
#   ea, eb (E,)  face edges as corner pairs, ef (E,) owning face
#   qa, qb (Q,)  non-adjacent edge pairs within one face
#   nf           face count


@njit
def _pair_lengths_nb(X, cv, cs, pa, pb, out):
    phi = 0.0
    for p in range(pa.shape[0]):
        ia = pa[p]
        ib = pb[p]
        dx = X[cv[ia], 0] + cs[ia, 0] - X[cv[ib], 0] - cs[ib, 0]
        dy = X[cv[ia], 1] + cs[ia, 1] - X[cv[ib], 1] - cs[ib, 1]
        d = math.sqrt(dx * dx + dy * dy)
        out[p] = d
        if d > phi:
            phi = d
    return phi


@njit
def _subgradient_nb(X, cv, cs, pa, pb, lengths, phi, temperature, tie_tol, grad):
    grad[:, :] = 0.0
    window = temperature if temperature > 0.0 else tie_tol
    total = 0.0
    for p in range(pa.shape[0]):
        if lengths[p] >= phi - window:
            if temperature > 0.0:
                total += math.exp((lengths[p] - phi) / temperature)
            else:
                total += 1.0
    for p in range(pa.shape[0]):
        d = lengths[p]
        if d < phi - window or d <= 0.0:
            continue
        w = math.exp((d - phi) / temperature) if temperature > 0.0 else 1.0
        w /= total
        ia = pa[p]
        ib = pb[p]
        dx = X[cv[ia], 0] + cs[ia, 0] - X[cv[ib], 0] - cs[ib, 0]
        dy = X[cv[ia], 1] + cs[ia, 1] - X[cv[ib], 1] - cs[ib, 1]
        grad[cv[ia], 0] += w * dx / d
        grad[cv[ia], 1] += w * dy / d
        grad[cv[ib], 0] -= w * dx / d
        grad[cv[ib], 1] -= w * dy / d


@njit
def _orient(ax, ay, bx, by, cx, cy):
    v = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
    if v > 0.0:
        return 1
    if v < 0.0:
        return -1
    return 0


@njit
def _on_seg(ax, ay, bx, by, cx, cy):
    return min(ax, bx) <= cx <= max(ax, bx) and min(ay, by) <= cy <= max(ay, by)


@njit
def _segments_meet(ax, ay, bx, by, cx, cy, dx, dy):
    o1 = _orient(ax, ay, bx, by, cx, cy)
    o2 = _orient(ax, ay, bx, by, dx, dy)
    o3 = _orient(cx, cy, dx, dy, ax, ay)
    o4 = _orient(cx, cy, dx, dy, bx, by)
    if o1 != o2 and o3 != o4 and o1 * o2 <= 0 and o3 * o4 <= 0:
        if o1 != 0 or o2 != 0:
            return True
    if o1 == 0 and _on_seg(ax, ay, bx, by, cx, cy):
        return True
    if o2 == 0 and _on_seg(ax, ay, bx, by, dx, dy):
        return True
    if o3 == 0 and _on_seg(cx, cy, dx, dy, ax, ay):
        return True
    if o4 == 0 and _on_seg(cx, cy, dx, dy, bx, by):
        return True
    return False


@njit
def _faces_valid_nb(X, cv, cs, ea, eb, ef, qa, qb, nf):
    area = np.zeros(nf)
    for e in range(ea.shape[0]):
        ia = ea[e]
        ib = eb[e]
        ax = X[cv[ia], 0] + cs[ia, 0]
        ay = X[cv[ia], 1] + cs[ia, 1]
        bx = X[cv[ib], 0] + cs[ib, 0]
        by = X[cv[ib], 1] + cs[ib, 1]
        area[ef[e]] += ax * by - ay * bx
    for f in range(nf):
        if area[f] <= 0.0:
            return False
    for q in range(qa.shape[0]):
        e1 = qa[q]
        e2 = qb[q]
        c1 = ea[e1]
        c2 = eb[e1]
        c3 = ea[e2]
        c4 = eb[e2]
        if _segments_meet(
            X[cv[c1], 0] + cs[c1, 0], X[cv[c1], 1] + cs[c1, 1],
            X[cv[c2], 0] + cs[c2, 0], X[cv[c2], 1] + cs[c2, 1],
            X[cv[c3], 0] + cs[c3, 0], X[cv[c3], 1] + cs[c3, 1],
            X[cv[c4], 0] + cs[c4, 0], X[cv[c4], 1] + cs[c4, 1],
        ):
            return False
    return True


@njit
def _descent_nb(X, cv, cs, pa, pb, ea, eb, ef, qa, qb, nf, iters, lr, beta1,
                beta2, eps, temperature, tie_tol, min_step, m1, m2, state,
                history):
    lengths = np.empty(pa.shape[0])
    grad = np.zeros_like(X)
    Xn = np.empty_like(X)
    phi = _pair_lengths_nb(X, cv, cs, pa, pb, lengths)
    _subgradient_nb(X, cv, cs, pa, pb, lengths, phi, temperature, tie_tol, grad)
    t = state[0]
    scale = state[1]
    done = 0
    status = 0
    for it in range(iters):
        t += 1.0
        for i in range(X.shape[0]):
            for j in range(2):
                g = grad[i, j]
                m1[i, j] = beta1 * m1[i, j] + (1.0 - beta1) * g
                m2[i, j] = beta2 * m2[i, j] + (1.0 - beta2) * g * g
        bc1 = 1.0 - beta1 ** t
        bc2 = 1.0 - beta2 ** t
        while True:
            step = lr * scale
            if step < min_step:
                status = 1
                break
            for i in range(X.shape[0]):
                for j in range(2):
                    Xn[i, j] = X[i, j] - step * (m1[i, j] / bc1) / (
                        math.sqrt(m2[i, j] / bc2) + eps
                    )
            phin = _pair_lengths_nb(Xn, cv, cs, pa, pb, lengths)
            if phin <= phi and phin < 0.5 and _faces_valid_nb(
                Xn, cv, cs, ea, eb, ef, qa, qb, nf
            ):
                break
            scale *= 0.5
        if status != 0:
            break
        X[:, :] = Xn
        phi = _pair_lengths_nb(X, cv, cs, pa, pb, lengths)
        _subgradient_nb(X, cv, cs, pa, pb, lengths, phi, temperature, tie_tol, grad)
        history[it] = phi
        done += 1
        scale = min(1.0, 2.0 * scale)
    state[0] = t
    state[1] = scale
    return phi, done, status


def _pair_vectors_np(X, cv, cs, pa, pb):
    lift = X[cv] + cs
    diff = lift[pa] - lift[pb]
    return diff, np.sqrt((diff**2).sum(axis=1))


def _subgradient_np(X, cv, cs, pa, pb, temperature, tie_tol):
    diff, lengths = _pair_vectors_np(X, cv, cs, pa, pb)
    phi = lengths.max()
    window = temperature if temperature > 0.0 else tie_tol
    sel = (lengths >= phi - window) & (lengths > 0.0)
    if temperature > 0.0:
        w = np.exp((lengths[sel] - phi) / temperature)
    else:
        w = np.ones(sel.sum())
    w /= w.sum()
    g = diff[sel] / lengths[sel][:, None] * w[:, None]
    grad = np.zeros_like(X)
    np.add.at(grad, cv[pa[sel]], g)
    np.add.at(grad, cv[pb[sel]], -g)
    return phi, grad


def _faces_valid_np(X, cv, cs, ea, eb, ef, qa, qb, nf):
    lift = X[cv] + cs
    a = lift[ea]
    b = lift[eb]
    area = np.bincount(ef, weights=a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0], minlength=nf)
    if (area <= 0.0).any():
        return False
    if qa.size == 0:
        return True
    p1, p2, p3, p4 = a[qa], b[qa], a[qb], b[qb]

    def orient(p, q, r):
        return np.sign((q[:, 0] - p[:, 0]) * (r[:, 1] - p[:, 1])
                       - (q[:, 1] - p[:, 1]) * (r[:, 0] - p[:, 0]))

    def on_seg(p, q, r):
        return ((np.minimum(p[:, 0], q[:, 0]) <= r[:, 0]) & (r[:, 0] <= np.maximum(p[:, 0], q[:, 0]))
                & (np.minimum(p[:, 1], q[:, 1]) <= r[:, 1]) & (r[:, 1] <= np.maximum(p[:, 1], q[:, 1])))

    o1, o2 = orient(p1, p2, p3), orient(p1, p2, p4)
    o3, o4 = orient(p3, p4, p1), orient(p3, p4, p2)
    proper = (o1 != o2) & (o3 != o4) & (o1 * o2 <= 0) & (o3 * o4 <= 0) & ((o1 != 0) | (o2 != 0))
    touch = (((o1 == 0) & on_seg(p1, p2, p3)) | ((o2 == 0) & on_seg(p1, p2, p4))
             | ((o3 == 0) & on_seg(p3, p4, p1)) | ((o4 == 0) & on_seg(p3, p4, p2)))
    return not (proper | touch).any()


def _descent_np(X, cv, cs, pa, pb, ea, eb, ef, qa, qb, nf, iters, lr, beta1,
                beta2, eps, temperature, tie_tol, min_step, m1, m2, state,
                history):
    phi, grad = _subgradient_np(X, cv, cs, pa, pb, temperature, tie_tol)
    t, scale = state[0], state[1]
    done = status = 0
    for it in range(iters):
        t += 1.0
        m1 *= beta1
        m1 += (1.0 - beta1) * grad
        m2 *= beta2
        m2 += (1.0 - beta2) * grad * grad
        direction = (m1 / (1.0 - beta1**t)) / (np.sqrt(m2 / (1.0 - beta2**t)) + eps)
        while True:
            step = lr * scale
            if step < min_step:
                status = 1
                break
            Xn = X - step * direction
            phin = _pair_vectors_np(Xn, cv, cs, pa, pb)[1].max()
            if phin <= phi and phin < 0.5 and _faces_valid_np(Xn, cv, cs, ea, eb, ef, qa, qb, nf):
                break
            scale *= 0.5
        if status:
            break
        X[:] = Xn
        phi, grad = _subgradient_np(X, cv, cs, pa, pb, temperature, tie_tol)
        history[it] = phi
        done += 1
        scale = min(1.0, 2.0 * scale)
    state[0], state[1] = t, scale
    return phi, done, status


def descent(X, topo, iters, lr, beta1, beta2, eps, temperature, tie_tol,
            min_step, m1, m2, state, use_numba=None):
    """Run up to ``iters`` adaptive-moment steps on ``X`` in place.

    ``topo`` is the tuple ``(cv, cs, pa, pb, ea, eb, ef, qa, qb, nf)``.
    ``m1``, ``m2`` and ``state = [t, scale]`` are updated in place so a run
    can be resumed.  Returns ``(phi, history, status)`` where status 1 means
    the step size underflowed ``min_step``.
    """
    history = np.full(iters, np.nan)
    fn = _descent_nb if _pick(use_numba) else _descent_np
    phi, done, status = fn(X, *topo, iters, lr, beta1, beta2, eps, temperature,
                           tie_tol, min_step, m1, m2, state, history)
    return float(phi), history[:done], int(status)


def phi_and_subgradient(X, topo, temperature=0.0, tie_tol=1e-12, use_numba=None):
    cv, cs, pa, pb = topo[:4]
    if _pick(use_numba):
        lengths = np.empty(pa.shape[0])
        grad = np.zeros_like(X)
        phi = _pair_lengths_nb(X, cv, cs, pa, pb, lengths)
        _subgradient_nb(X, cv, cs, pa, pb, lengths, phi, temperature, tie_tol, grad)
        return float(phi), grad
    phi, grad = _subgradient_np(X, cv, cs, pa, pb, temperature, tie_tol)
    return float(phi), grad


def faces_valid(X, topo, use_numba=None):
    cv, cs, _, _, ea, eb, ef, qa, qb, nf = topo
    fn = _faces_valid_nb if _pick(use_numba) else _faces_valid_np
    return bool(fn(X, cv, cs, ea, eb, ef, qa, qb, nf))


def _pick(use_numba):
    return USE_NUMBA if use_numba is None else (use_numba and USE_NUMBA)
