"""Compiled inner loops for the sampled convexification engine.

Tree positions are encoded against a :class:`brunn.grid.Frame`: a vertex id
``v`` plus an offset ``t`` measured from ``parent[v]`` toward ``v``, with
``t == 0`` meaning the vertex ``v`` itself.  Pair endpoints use integer
units (``M`` units per edge); nearest-point searches use plain floats with
unit edge length.

The frame is passed as ``(parent, depth, child_ptr, child_idx)`` and a
search target as ``(bucket_ptr, bucket_idx, tv, tj, e)``, where a target
point on an edge is listed in the buckets of both endpoints.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit


@njit(cache=True)
def lca(parent, depth, a, b):
    while depth[a] > depth[b]:
        a = parent[a]
    while depth[b] > depth[a]:
        b = parent[b]
    while a != b:
        a = parent[a]
        b = parent[b]
    return a


@njit(cache=True)
def vertex_dist(parent, depth, a, b):
    c = lca(parent, depth, a, b)
    return depth[a] + depth[b] - 2 * depth[c]


@njit(cache=True)
def tree_dist(parent, depth, v1, t1, v2, t2):
    """Tree distance between two float-encoded positions (unit edges)."""
    if t1 > 0.0 and t2 > 0.0 and v1 == v2:
        return abs(t1 - t2)
    best = np.inf
    na = 2 if t1 > 0.0 else 1
    nb = 2 if t2 > 0.0 else 1
    for a in range(na):
        if t1 == 0.0:
            x = v1
            cx = 0.0
        elif a == 0:
            x = parent[v1]
            cx = t1
        else:
            x = v1
            cx = 1.0 - t1
        for b in range(nb):
            if t2 == 0.0:
                y = v2
                cy = 0.0
            elif b == 0:
                y = parent[v2]
                cy = t2
            else:
                y = v2
                cy = 1.0 - t2
            c = cx + cy + vertex_dist(parent, depth, x, y)
            if c < best:
                best = c
    return best


@njit(cache=True)
def n_samples(isq, M, p, q):
    """Least N >= 1 with N * (p/q) >= sqrt(isq) / M, decided in integers."""
    x = math.sqrt(isq) * q / (M * p)
    n = int(math.ceil(x))
    if n < 1:
        n = 1
    while n > 1 and ((n - 1) * M * p) ** 2 >= q * q * isq:
        n -= 1
    while (n * M * p) ** 2 < q * q * isq:
        n += 1
    return n


@njit(cache=True)
def route(parent, depth, M, v1, j1, v2, j2):
    """Cheapest way between two integer-encoded positions.

    Returns ``(same_edge, exit_cost, entry_cost, x, y, length)`` where the
    route leaves the first point's edge at vertex ``x`` and enters the
    second's at ``y``.
    """
    if j1 > 0 and j2 > 0 and v1 == v2:
        return 1, 0, 0, v1, v1, abs(j1 - j2)
    best = -1
    bx = by = bcx = bcy = 0
    na = 2 if j1 > 0 else 1
    nb = 2 if j2 > 0 else 1
    for a in range(na):
        if j1 == 0:
            x = v1
            cx = 0
        elif a == 0:
            x = parent[v1]
            cx = j1
        else:
            x = v1
            cx = M - j1
        for b in range(nb):
            if j2 == 0:
                y = v2
                cy = 0
            elif b == 0:
                y = parent[v2]
                cy = j2
            else:
                y = v2
                cy = M - j2
            c = cx + cy + M * vertex_dist(parent, depth, x, y)
            if best < 0 or c < best:
                best = c
                bx, by, bcx, bcy = x, y, cx, cy
    return 0, bcx, bcy, bx, by, best


@njit(cache=True)
def fill_path(parent, depth, x, y, buf):
    """Write the vertex path from ``x`` to ``y`` into ``buf``; return its size."""
    top = lca(parent, depth, x, y)
    nv = 0
    u = x
    while u != top:
        buf[nv] = u
        nv += 1
        u = parent[u]
    buf[nv] = top
    nv += 1
    start = nv
    u = y
    while u != top:
        buf[nv] = u
        nv += 1
        u = parent[u]
    lo, hi = start, nv - 1
    while lo < hi:
        buf[lo], buf[hi] = buf[hi], buf[lo]
        lo += 1
        hi -= 1
    return nv


@njit(cache=True)
def setup_path(parent, depth, M, v1, j1, v2, j2, buf):
    """Route plus vertex path: ``(same_edge, exit_cost, entry_cost, n_path, length)``."""
    same, cP, cQ, x, y, D = route(parent, depth, M, v1, j1, v2, j2)
    nv = 0
    if not same:
        nv = fill_path(parent, depth, x, y, buf)
    return same, cP, cQ, nv, D


@njit(cache=True)
def locate(A, parent, M, v1, j1, v2, j2, same, cP, nv, buf):
    """Position at arc length ``A`` (units) along a route from ``setup_path``.

    Generic over integer and float ``A``; the offset has the type of ``A``.
    """
    z = A - A
    if same:
        if j2 >= j1:
            return v1, j1 + A
        return v1, j1 - A
    if j1 > 0 and A <= cP:
        if buf[0] == v1:
            t = j1 + A
            if t >= M:
                return v1, z
            return v1, t
        t = j1 - A
        if t <= 0:
            return buf[0], z
        return v1, t
    B = A - cP
    span = (nv - 1) * M
    if B >= span:
        r = B - span
        y = buf[nv - 1]
        if r <= 0 or j2 == 0:
            return y, z
        if y == v2:
            return v2, M - r
        return v2, r
    idx = int(B // M)
    r = B - idx * M
    a = buf[idx]
    if r <= 0:
        return a, z
    b = buf[idx + 1]
    if parent[b] == a:
        return b, r
    return a, M - r


@njit(cache=True)
def nearest(v, t, ef, frame, target, stop_sq, stack_v, stack_from, stack_d):
    """Squared distance from a float position to the nearest target point.

    Returns ``(best_sq, index)``.  The search stops early once a target
    within ``sqrt(stop_sq)`` is found.
    """
    parent, depth, cptr, cidx = frame
    bptr, bidx, ztv, ztj, ze = target
    n = ef.shape[0]
    best = np.inf
    best_i = -1
    if t > 0.0:
        for q in range(bptr[v], bptr[v + 1]):
            y = bidx[q]
            if ztv[y] == v and ztj[y] > 0.0:
                td = abs(t - ztj[y])
                dsq = td * td
                for c in range(n):
                    dd = ef[c] - ze[y, c]
                    dsq += dd * dd
                if dsq < best:
                    best = dsq
                    best_i = y
        if best <= stop_sq:
            return best, best_i
        stack_v[0] = parent[v]
        stack_from[0] = v
        stack_d[0] = t
        stack_v[1] = v
        stack_from[1] = parent[v]
        stack_d[1] = 1.0 - t
        sp = 2
    else:
        stack_v[0] = v
        stack_from[0] = -1
        stack_d[0] = 0.0
        sp = 1
    while sp > 0:
        sp -= 1
        u = stack_v[sp]
        frm = stack_from[sp]
        d = stack_d[sp]
        if d * d >= best:
            continue
        for q in range(bptr[u], bptr[u + 1]):
            y = bidx[q]
            j = ztj[y]
            if j == 0.0:
                td = d
            elif ztv[y] == u:
                td = d + 1.0 - j
            else:
                td = d + j
            dsq = td * td
            if dsq >= best:
                continue
            for c in range(n):
                dd = ef[c] - ze[y, c]
                dsq += dd * dd
            if dsq < best:
                best = dsq
                best_i = y
                if best <= stop_sq:
                    return best, best_i
        nd = d + 1.0
        if nd * nd >= best:
            continue
        p = parent[u]
        if p >= 0 and p != frm:
            stack_v[sp] = p
            stack_from[sp] = u
            stack_d[sp] = nd
            sp += 1
        for q in range(cptr[u], cptr[u + 1]):
            c = cidx[q]
            if c != frm:
                stack_v[sp] = c
                stack_from[sp] = u
                stack_d[sp] = nd
                sp += 1
    return best, best_i


@njit(cache=True)
def point_dists(tv, tj, ef, frame, target):
    """Distance from every float-encoded point to the target set."""
    nv = frame[0].shape[0]
    sv = np.empty(nv + 2, np.int64)
    sf = np.empty(nv + 2, np.int64)
    sd = np.empty(nv + 2, np.float64)
    out = np.empty(tv.shape[0])
    for a in range(tv.shape[0]):
        bsq, _ = nearest(tv[a], tj[a], ef[a], frame, target, -1.0, sv, sf, sd)
        out[a] = math.sqrt(bsq)
    return out


@njit(cache=True)
def directed_max(tv, tj, ef, frame, target, floor):
    """``max(floor, max_a dist(a, target))`` and the index attaining it
    (``-1`` if nothing beats ``floor``)."""
    nv = frame[0].shape[0]
    sv = np.empty(nv + 2, np.int64)
    sf = np.empty(nv + 2, np.int64)
    sd = np.empty(nv + 2, np.float64)
    best = floor
    arg = -1
    for a in range(tv.shape[0]):
        bsq, _ = nearest(tv[a], tj[a], ef[a], frame, target, best * best, sv, sf, sd)
        if bsq > best * best:
            best = math.sqrt(bsq)
            arg = a
    return best, arg


@njit(cache=True)
def max_pair_dist(tv, tj, e, r0, M, p, q, frame, target, floor):
    """Largest distance to the target over the sampled geodesics of all pairs.

    Pairs are integer-encoded; samples sit at exact fractions k/N of each
    geodesic, N = ceil(length / (p/q)).  ``r0[i]`` is the distance of point
    ``i`` to the target.  The distance to a set is 1-Lipschitz, so samples
    that provably cannot beat the running maximum are skipped.

    Returns ``(best, i, j, k, N)``; ``i == -1`` if nothing beat ``floor``.
    """
    parent, depth, cptr, cidx = frame
    bptr, bidx, ztv, ztj, ze = target
    K = tv.shape[0]
    n = e.shape[1]
    nvert = parent.shape[0]
    buf = np.empty(2 * nvert + 2, np.int64)
    sv = np.empty(nvert + 2, np.int64)
    sf = np.empty(nvert + 2, np.int64)
    sd = np.empty(nvert + 2, np.float64)
    ef = np.empty(n)
    best = floor
    bi = bj = bk = bn = -1
    for i in range(K):
        for jj in range(i + 1, K):
            same, cP, cQ, x, y, D = route(parent, depth, M, tv[i], tj[i], tv[jj], tj[jj])
            isq = D * D
            for c in range(n):
                dd = e[jj, c] - e[i, c]
                isq += dd * dd
            if isq == 0:
                continue
            length = math.sqrt(isq) / M
            if 0.5 * (r0[i] + r0[jj] + length) <= best:
                continue
            nv = 0
            if not same:
                nv = fill_path(parent, depth, x, y, buf)
            N = n_samples(isq, M, p, q)
            step = length / N
            k = 1
            hint = -1
            while k < N:
                # upper bound from the segment ends, then from the last nearest point
                val = min(r0[i] + k * step, r0[jj] + (N - k) * step)
                if val > best:
                    A = k * D / N
                    v, t = locate(A, parent, M, tv[i], tj[i], tv[jj], tj[jj], same, cP, nv, buf)
                    t = t / M
                    for c in range(n):
                        ef[c] = (e[i, c] * (N - k) + e[jj, c] * k) / (N * M)
                    if hint >= 0:
                        hsq = tree_dist(parent, depth, v, t, ztv[hint], ztj[hint]) ** 2
                        for c in range(n):
                            dd = ef[c] - ze[hint, c]
                            hsq += dd * dd
                        val = min(val, math.sqrt(hsq))
                    if val > best:
                        bsq, y = nearest(v, t, ef, frame, target, best * best, sv, sf, sd)
                        val = math.sqrt(bsq)
                        if y >= 0:
                            hint = y
                        if val > best:
                            best = val
                            bi, bj, bk, bn = i, jj, k, N
                k += int((best - val) / step - 1e-9) + 1
    return best, bi, bj, bk, bn


@njit(cache=True)
def mark_pairs(tv, tj, e, M, p, q, frame, slot, tstride, lo, ext, strides, E, mask):
    """Snap every sample of every pair geodesic to the grid and set its cell.

    Returns the number of cells newly set, or -1 if a sample leaves the
    grid region.
    """
    parent, depth, cptr, cidx = frame
    K = tv.shape[0]
    n = e.shape[1]
    buf = np.empty(2 * parent.shape[0] + 2, np.int64)
    added = 0
    for i in range(K):
        for jj in range(i + 1, K):
            same, cP, cQ, nv, D = setup_path(parent, depth, M, tv[i], tj[i], tv[jj], tj[jj], buf)
            isq = D * D
            for c in range(n):
                dd = e[jj, c] - e[i, c]
                isq += dd * dd
            if isq == 0:
                continue
            N = n_samples(isq, M, p, q)
            for k in range(1, N):
                A = (2 * k * D + N) // (2 * N)
                v, t = locate(A, parent, M, tv[i], tj[i], tv[jj], tj[jj], same, cP, nv, buf)
                s = slot[v]
                if s < 0:
                    return -1
                cell = (s * tstride + t) * E
                for c in range(n):
                    val = (2 * (e[i, c] * (N - k) + e[jj, c] * k) + N) // (2 * N) - lo[c]
                    if val < 0 or val >= ext[c]:
                        return -1
                    cell += val * strides[c]
                if mask[cell] == 0:
                    mask[cell] = 1
                    added += 1
    return added
