"""Exact maximum-weight matching on general graphs (primal-dual blossom method).

The solver follows the classic O(n^3) Edmonds/Gabow scheme with integer
weights.  Dual variables are stored doubled so every slack stays integral.
All recursion of the textbook formulation is replaced by explicit stacks so
the routines compile under numba in nopython mode.

Minimum-weight perfect matching is obtained by negating weights against a
large constant and asking for a maximum-cardinality solution.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np
from numba import njit

# rows of the per-node state matrix
LABEL, LABELEND, PARENT, BASE, BEST, DUAL, CLEN, BBELEN, INB, MATE = range(10)
_ROWS = 10


@njit(cache=True)
def _slack(k, st, endpoint, ew):
    return st[DUAL, endpoint[2 * k]] + st[DUAL, endpoint[2 * k + 1]] - 2 * ew[k]


@njit(cache=True)
def _leaves(b, n, st, childs, out, stack):
    cnt = 0
    sp = 1
    stack[0] = b
    while sp > 0:
        sp -= 1
        x = stack[sp]
        if x < n:
            out[cnt] = x
            cnt += 1
        else:
            for i in range(st[CLEN, x] - 1, -1, -1):
                stack[sp] = childs[x, i]
                sp += 1
    return cnt


@njit(cache=True)
def _push(queue, ctr, v):
    queue[ctr[0]] = v
    ctr[0] += 1


@njit(cache=True)
def _assign_label(w, t, p, n, st, childs, endpoint, queue, ctr, leafbuf, stackbuf):
    while True:
        b = st[INB, w]
        st[LABEL, w] = t
        st[LABEL, b] = t
        st[LABELEND, w] = p
        st[LABELEND, b] = p
        st[BEST, w] = -1
        st[BEST, b] = -1
        if t == 1:
            cnt = _leaves(b, n, st, childs, leafbuf, stackbuf)
            for i in range(cnt):
                _push(queue, ctr, leafbuf[i])
            return
        base = st[BASE, b]
        mb = st[MATE, base]
        w = endpoint[mb]
        t = 1
        p = mb ^ 1


@njit(cache=True)
def _scan_blossom(v, w, st, endpoint, pathbuf):
    plen = 0
    base = -1
    while v != -1 or w != -1:
        b = st[INB, v]
        if st[LABEL, b] & 4:
            base = st[BASE, b]
            break
        pathbuf[plen] = b
        plen += 1
        st[LABEL, b] = 5
        if st[LABELEND, b] == -1:
            v = -1
        else:
            v = endpoint[st[LABELEND, b]]
            b = st[INB, v]
            v = endpoint[st[LABELEND, b]]
        if w != -1:
            v, w = w, v
    for i in range(plen):
        st[LABEL, pathbuf[i]] = 1
    return base


@njit(cache=True)
def _consider_best(k, b, st, endpoint, ew, bestedgeto):
    i = endpoint[2 * k]
    j = endpoint[2 * k + 1]
    if st[INB, j] == b:
        i, j = j, i
    bj = st[INB, j]
    if bj != b and st[LABEL, bj] == 1:
        cur = bestedgeto[bj]
        if cur == -1 or _slack(k, st, endpoint, ew) < _slack(cur, st, endpoint, ew):
            bestedgeto[bj] = k


@njit(cache=True)
def _add_blossom(base, k, n, st, childs, endps, bbe, endpoint, ew, nbstart, nbidx,
                 queue, ctr, unused, leafbuf, stackbuf, tmpc, tmpe, bestedgeto):
    v = endpoint[2 * k]
    w = endpoint[2 * k + 1]
    bb = st[INB, base]
    bv = st[INB, v]
    bw = st[INB, w]
    ctr[1] -= 1
    b = unused[ctr[1]]
    st[BASE, b] = base
    st[PARENT, b] = -1
    st[PARENT, bb] = b
    cnt = 0
    while bv != bb:
        st[PARENT, bv] = b
        tmpc[cnt] = bv
        tmpe[cnt] = st[LABELEND, bv]
        cnt += 1
        v = endpoint[st[LABELEND, bv]]
        bv = st[INB, v]
    L = 0
    childs[b, L] = bb
    L += 1
    for i in range(cnt - 1, -1, -1):
        childs[b, L] = tmpc[i]
        L += 1
    E = 0
    for i in range(cnt - 1, -1, -1):
        endps[b, E] = tmpe[i]
        E += 1
    endps[b, E] = 2 * k
    E += 1
    while bw != bb:
        st[PARENT, bw] = b
        childs[b, L] = bw
        L += 1
        endps[b, E] = st[LABELEND, bw] ^ 1
        E += 1
        w = endpoint[st[LABELEND, bw]]
        bw = st[INB, w]
    st[CLEN, b] = L
    st[LABEL, b] = 1
    st[LABELEND, b] = st[LABELEND, bb]
    st[DUAL, b] = 0
    cnt = _leaves(b, n, st, childs, leafbuf, stackbuf)
    for i in range(cnt):
        x = leafbuf[i]
        if st[LABEL, st[INB, x]] == 2:
            _push(queue, ctr, x)
        st[INB, x] = b
    bestedgeto[:] = -1
    for c in range(L):
        bv = childs[b, c]
        if st[BBELEN, bv] == -1:
            cnt = _leaves(bv, n, st, childs, leafbuf, stackbuf)
            for i in range(cnt):
                x = leafbuf[i]
                for a in range(nbstart[x], nbstart[x + 1]):
                    _consider_best(nbidx[a] // 2, b, st, endpoint, ew, bestedgeto)
        else:
            for i in range(st[BBELEN, bv]):
                _consider_best(bbe[bv, i], b, st, endpoint, ew, bestedgeto)
        st[BBELEN, bv] = -1
        st[BEST, bv] = -1
    cnt = 0
    for x in range(bestedgeto.shape[0]):
        if bestedgeto[x] != -1:
            bbe[b, cnt] = bestedgeto[x]
            cnt += 1
    st[BBELEN, b] = cnt
    st[BEST, b] = -1
    for i in range(cnt):
        k2 = bbe[b, i]
        if st[BEST, b] == -1 or _slack(k2, st, endpoint, ew) < _slack(st[BEST, b], st, endpoint, ew):
            st[BEST, b] = k2


@njit(cache=True)
def _expand_blossom(b0, endstage, n, st, childs, endps, endpoint, allowedge, queue, ctr,
                    unused, leafbuf, stackbuf, xstack):
    sp = 1
    xstack[0] = b0
    while sp > 0:
        sp -= 1
        b = xstack[sp]
        L = st[CLEN, b]
        for i in range(L):
            s = childs[b, i]
            st[PARENT, s] = -1
            if s < n:
                st[INB, s] = s
            elif endstage and st[DUAL, s] == 0:
                xstack[sp] = s
                sp += 1
            else:
                cnt = _leaves(s, n, st, childs, leafbuf, stackbuf)
                for a in range(cnt):
                    st[INB, leafbuf[a]] = s
        if (not endstage) and st[LABEL, b] == 2:
            entrychild = st[INB, endpoint[st[LABELEND, b] ^ 1]]
            j = 0
            for i in range(L):
                if childs[b, i] == entrychild:
                    j = i
                    break
            if j & 1:
                j -= L
                jstep = 1
                endptrick = 0
            else:
                jstep = -1
                endptrick = 1
            p = st[LABELEND, b]
            while j != 0:
                st[LABEL, endpoint[p ^ 1]] = 0
                q = endps[b, (j - endptrick) % L]
                st[LABEL, endpoint[q ^ endptrick ^ 1]] = 0
                _assign_label(endpoint[p ^ 1], 2, p, n, st, childs, endpoint, queue, ctr, leafbuf, stackbuf)
                allowedge[q // 2] = True
                j += jstep
                p = endps[b, (j - endptrick) % L] ^ endptrick
                allowedge[p // 2] = True
                j += jstep
            bv = childs[b, j % L]
            st[LABEL, endpoint[p ^ 1]] = 2
            st[LABEL, bv] = 2
            st[LABELEND, endpoint[p ^ 1]] = p
            st[LABELEND, bv] = p
            st[BEST, bv] = -1
            j += jstep
            while childs[b, j % L] != entrychild:
                bv = childs[b, j % L]
                if st[LABEL, bv] == 1:
                    j += jstep
                    continue
                cnt = _leaves(bv, n, st, childs, leafbuf, stackbuf)
                found = -1
                for a in range(cnt):
                    if st[LABEL, leafbuf[a]] != 0:
                        found = leafbuf[a]
                        break
                if found != -1:
                    st[LABEL, found] = 0
                    st[LABEL, endpoint[st[MATE, st[BASE, bv]]]] = 0
                    _assign_label(found, 2, st[LABELEND, found], n, st, childs, endpoint, queue, ctr,
                                  leafbuf, stackbuf)
                j += jstep
        st[LABEL, b] = -1
        st[LABELEND, b] = -1
        st[CLEN, b] = 0
        st[BASE, b] = -1
        st[BBELEN, b] = -1
        st[BEST, b] = -1
        unused[ctr[1]] = b
        ctr[1] += 1


@njit(cache=True)
def _augment_blossom(b0, v0, n, st, childs, endps, endpoint, wstack, rotbuf):
    sp = 1
    wstack[0, 0] = b0
    wstack[0, 1] = v0
    while sp > 0:
        sp -= 1
        b = wstack[sp, 0]
        v = wstack[sp, 1]
        t = v
        while st[PARENT, t] != b:
            t = st[PARENT, t]
        if t >= n:
            wstack[sp, 0] = t
            wstack[sp, 1] = v
            sp += 1
        L = st[CLEN, b]
        i = 0
        for a in range(L):
            if childs[b, a] == t:
                i = a
                break
        j = i
        if i & 1:
            j -= L
            jstep = 1
            endptrick = 0
        else:
            jstep = -1
            endptrick = 1
        while j != 0:
            j += jstep
            t = childs[b, j % L]
            p = endps[b, (j - endptrick) % L] ^ endptrick
            if t >= n:
                wstack[sp, 0] = t
                wstack[sp, 1] = endpoint[p]
                sp += 1
            j += jstep
            t = childs[b, j % L]
            if t >= n:
                wstack[sp, 0] = t
                wstack[sp, 1] = endpoint[p ^ 1]
                sp += 1
            st[MATE, endpoint[p]] = p ^ 1
            st[MATE, endpoint[p ^ 1]] = p
        for a in range(L):
            rotbuf[a] = childs[b, (a + i) % L]
        for a in range(L):
            childs[b, a] = rotbuf[a]
        for a in range(L):
            rotbuf[a] = endps[b, (a + i) % L]
        for a in range(L):
            endps[b, a] = rotbuf[a]
        st[BASE, b] = v


@njit(cache=True)
def _augment_matching(k, n, st, childs, endps, endpoint, wstack, rotbuf):
    for side in range(2):
        if side == 0:
            s = endpoint[2 * k]
            p = 2 * k + 1
        else:
            s = endpoint[2 * k + 1]
            p = 2 * k
        while True:
            bs = st[INB, s]
            if bs >= n:
                _augment_blossom(bs, s, n, st, childs, endps, endpoint, wstack, rotbuf)
            st[MATE, s] = p
            if st[LABELEND, bs] == -1:
                break
            t = endpoint[st[LABELEND, bs]]
            bt = st[INB, t]
            s = endpoint[st[LABELEND, bt]]
            j = endpoint[st[LABELEND, bt] ^ 1]
            if bt >= n:
                _augment_blossom(bt, j, n, st, childs, endps, endpoint, wstack, rotbuf)
            st[MATE, j] = st[LABELEND, bt]
            p = st[LABELEND, bt] ^ 1


@njit(cache=True)
def _solve(n, eu, ev, ew, maxcard):
    """Return ``mate`` (vertex -> partner or -1) of a maximum-weight matching."""
    m = eu.shape[0]
    mate_out = np.full(n, -1, dtype=np.int64)
    if m == 0 or n == 0:
        return mate_out
    nn = 2 * n
    endpoint = np.empty(2 * m, dtype=np.int64)
    for k in range(m):
        endpoint[2 * k] = eu[k]
        endpoint[2 * k + 1] = ev[k]
    deg = np.zeros(n + 1, dtype=np.int64)
    for k in range(m):
        deg[eu[k] + 1] += 1
        deg[ev[k] + 1] += 1
    nbstart = np.cumsum(deg)
    fill = nbstart[:n].copy()
    nbidx = np.empty(2 * m, dtype=np.int64)
    for k in range(m):
        nbidx[fill[eu[k]]] = 2 * k + 1
        fill[eu[k]] += 1
        nbidx[fill[ev[k]]] = 2 * k
        fill[ev[k]] += 1
    maxw = 0
    for k in range(m):
        if ew[k] > maxw:
            maxw = ew[k]

    st = np.full((_ROWS, nn), -1, dtype=np.int64)
    st[DUAL, :n] = maxw
    st[DUAL, n:] = 0
    st[CLEN, :] = 0
    for v in range(n):
        st[INB, v] = v
        st[BASE, v] = v
    childs = np.empty((nn, n + 1), dtype=np.int64)
    endps = np.empty((nn, n + 1), dtype=np.int64)
    bbe = np.empty((nn, nn), dtype=np.int64)
    allowedge = np.zeros(m, dtype=np.bool_)
    queue = np.empty(8 * n + 8, dtype=np.int64)
    unused = np.empty(n, dtype=np.int64)
    for i in range(n):
        unused[i] = n + i
    ctr = np.zeros(2, dtype=np.int64)  # queue length, unused-stack length
    ctr[1] = n
    leafbuf = np.empty(n, dtype=np.int64)
    stackbuf = np.empty(nn, dtype=np.int64)
    xstack = np.empty(nn, dtype=np.int64)
    pathbuf = np.empty(nn, dtype=np.int64)
    tmpc = np.empty(nn, dtype=np.int64)
    tmpe = np.empty(nn, dtype=np.int64)
    bestedgeto = np.empty(nn, dtype=np.int64)
    wstack = np.empty((nn, 2), dtype=np.int64)
    rotbuf = np.empty(n + 1, dtype=np.int64)

    for _stage in range(n):
        st[LABEL, :] = 0
        st[BEST, :] = -1
        st[BBELEN, n:] = -1
        allowedge[:] = False
        ctr[0] = 0
        for v in range(n):
            if st[MATE, v] == -1 and st[LABEL, st[INB, v]] == 0:
                _assign_label(v, 1, -1, n, st, childs, endpoint, queue, ctr, leafbuf, stackbuf)
        augmented = False
        while True:
            while ctr[0] > 0 and not augmented:
                ctr[0] -= 1
                v = queue[ctr[0]]
                for a in range(nbstart[v], nbstart[v + 1]):
                    p = nbidx[a]
                    k = p // 2
                    w = endpoint[p]
                    if st[INB, v] == st[INB, w]:
                        continue
                    kslack = 0
                    if not allowedge[k]:
                        kslack = _slack(k, st, endpoint, ew)
                        if kslack <= 0:
                            allowedge[k] = True
                    if allowedge[k]:
                        if st[LABEL, st[INB, w]] == 0:
                            _assign_label(w, 2, p ^ 1, n, st, childs, endpoint, queue, ctr, leafbuf, stackbuf)
                        elif st[LABEL, st[INB, w]] == 1:
                            base = _scan_blossom(v, w, st, endpoint, pathbuf)
                            if base >= 0:
                                _add_blossom(base, k, n, st, childs, endps, bbe, endpoint, ew, nbstart, nbidx,
                                             queue, ctr, unused, leafbuf, stackbuf, tmpc, tmpe, bestedgeto)
                            else:
                                _augment_matching(k, n, st, childs, endps, endpoint, wstack, rotbuf)
                                augmented = True
                                break
                        elif st[LABEL, w] == 0:
                            st[LABEL, w] = 2
                            st[LABELEND, w] = p ^ 1
                    elif st[LABEL, st[INB, w]] == 1:
                        b = st[INB, v]
                        if st[BEST, b] == -1 or kslack < _slack(st[BEST, b], st, endpoint, ew):
                            st[BEST, b] = k
                    elif st[LABEL, w] == 0:
                        if st[BEST, w] == -1 or kslack < _slack(st[BEST, w], st, endpoint, ew):
                            st[BEST, w] = k
            if augmented:
                break

            deltatype = -1
            delta = 0
            deltaedge = -1
            deltablossom = -1
            if not maxcard:
                deltatype = 1
                delta = st[DUAL, 0]
                for v in range(1, n):
                    if st[DUAL, v] < delta:
                        delta = st[DUAL, v]
            for v in range(n):
                if st[LABEL, st[INB, v]] == 0 and st[BEST, v] != -1:
                    d = _slack(st[BEST, v], st, endpoint, ew)
                    if deltatype == -1 or d < delta:
                        delta = d
                        deltatype = 2
                        deltaedge = st[BEST, v]
            for b in range(nn):
                if st[PARENT, b] == -1 and st[LABEL, b] == 1 and st[BEST, b] != -1:
                    kslack = _slack(st[BEST, b], st, endpoint, ew)
                    d = kslack // 2
                    if deltatype == -1 or d < delta:
                        delta = d
                        deltatype = 3
                        deltaedge = st[BEST, b]
            for b in range(n, nn):
                if st[BASE, b] >= 0 and st[PARENT, b] == -1 and st[LABEL, b] == 2 and \
                        (deltatype == -1 or st[DUAL, b] < delta):
                    delta = st[DUAL, b]
                    deltatype = 4
                    deltablossom = b
            if deltatype == -1:
                deltatype = 1
                delta = st[DUAL, 0]
                for v in range(1, n):
                    if st[DUAL, v] < delta:
                        delta = st[DUAL, v]
                if delta < 0:
                    delta = 0

            for v in range(n):
                lab = st[LABEL, st[INB, v]]
                if lab == 1:
                    st[DUAL, v] -= delta
                elif lab == 2:
                    st[DUAL, v] += delta
            for b in range(n, nn):
                if st[BASE, b] >= 0 and st[PARENT, b] == -1:
                    if st[LABEL, b] == 1:
                        st[DUAL, b] += delta
                    elif st[LABEL, b] == 2:
                        st[DUAL, b] -= delta

            if deltatype == 1:
                break
            elif deltatype == 2:
                allowedge[deltaedge] = True
                i = endpoint[2 * deltaedge]
                if st[LABEL, st[INB, i]] == 0:
                    i = endpoint[2 * deltaedge + 1]
                _push(queue, ctr, i)
            elif deltatype == 3:
                allowedge[deltaedge] = True
                _push(queue, ctr, endpoint[2 * deltaedge])
            else:
                _expand_blossom(deltablossom, False, n, st, childs, endps, endpoint, allowedge, queue, ctr,
                                unused, leafbuf, stackbuf, xstack)

        if not augmented:
            break
        for b in range(n, nn):
            if st[PARENT, b] == -1 and st[BASE, b] >= 0 and st[LABEL, b] == 1 and st[DUAL, b] == 0:
                _expand_blossom(b, True, n, st, childs, endps, endpoint, allowedge, queue, ctr,
                                unused, leafbuf, stackbuf, xstack)

    for v in range(n):
        if st[MATE, v] >= 0:
            mate_out[v] = endpoint[st[MATE, v]]
    return mate_out


def _as_arrays(edges: Iterable[Sequence[int]]):
    arr = np.asarray(list(edges), dtype=np.int64)
    if arr.size == 0:
        e = np.zeros(0, dtype=np.int64)
        return e, e.copy(), e.copy()
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise ValueError("edges must be (u, v, weight) triples")
    return arr[:, 0].copy(), arr[:, 1].copy(), arr[:, 2].copy()


def max_weight_matching(n: int, edges: Iterable[Sequence[int]], maxcardinality: bool = False) -> np.ndarray:
    """Partner array of a maximum-weight matching over integer-weighted edges.

    With ``maxcardinality`` the matching is maximum-weight among those of
    maximum size.  Unmatched vertices map to -1.
    """
    eu, ev, ew = _as_arrays(edges)
    if eu.size and (eu.min() < 0 or ev.min() < 0 or max(eu.max(), ev.max()) >= n):
        raise ValueError("edge endpoint out of range")
    if eu.size and np.any(eu == ev):
        raise ValueError("self-loops are not allowed")
    return _solve(n, eu, ev, ew, maxcardinality)


@njit(cache=True)
def min_weight_perfect_kernel(n, eu, ev, ew):
    """Minimum-weight perfect matching; returns mate array (-1 entries if none exists)."""
    big = 1
    for k in range(ew.shape[0]):
        if ew[k] + 1 > big:
            big = ew[k] + 1
    w2 = big - ew
    return _solve(n, eu, ev, w2, True)


def min_weight_perfect_matching(n: int, edges: Iterable[Sequence[int]]) -> list[tuple[int, int]]:
    """Pairs ``(u, v)`` with ``u < v`` of a minimum-weight perfect matching.

    Raises ``ValueError`` when the node count is odd or no perfect matching
    exists in the given edge set.
    """
    if n % 2:
        raise ValueError(f"perfect matching needs an even node count, got {n}")
    if n == 0:
        return []
    eu, ev, ew = _as_arrays(edges)
    if eu.size and ew.min() < 0:
        raise ValueError("weights must be non-negative")
    mate = min_weight_perfect_kernel(n, eu, ev, ew)
    if np.any(mate < 0):
        raise ValueError("graph has no perfect matching")
    return [(u, int(mate[u])) for u in range(n) if u < mate[u]]
