"""Minimum-weight perfect matching decoder, batch failure kernels, and an exact ML oracle.

Every defect gets a private virtual boundary node; boundary nodes are joined
to each other at zero cost, so any subset of defects may terminate on the
edge while the node count stays even.  Graph node order is: real defects in
ascending ``(round, stabilizer)`` order, then their boundary twins.

Two matching paths exist.  :func:`mwpm` / :func:`decode` return the
lexicographically smallest minimum-weight pairing and build explicit
correction frames.  The numba kernels used by Monte Carlo sweeps return only
the logical outcome and total weight, and break ties in whatever order the
blossom solver happens to visit them.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np
from numba import njit

from . import gf2
from .blossom import min_weight_perfect_kernel
from .geometry import CodeLayout, boundary_distance, species_graph, species_uv
from .noise import NoiseModel, Phenomenological
from .pauli import PauliFrame, Syndrome, _masks, syndrome_of

SPECIES = ("m", "e")


@dataclass(frozen=True)
class MatchingGraph:
    """Weighted defect graph for one species.

    ``nodes`` holds ``(species, stabilizer, round)`` records for real defects
    (``round`` is ``None`` without repeated measurement) followed by
    ``("boundary", i)`` twins, where ``i`` is the owning defect's position.
    """

    species: str
    nodes: tuple
    edges: tuple[tuple[int, int, int], ...]

    @property
    def n_defects(self) -> int:
        return sum(1 for nd in self.nodes if nd[0] != "boundary")

    def weight_map(self) -> dict[tuple[int, int], int]:
        return {(min(a, b), max(a, b)): w for a, b, w in self.edges}


@dataclass(frozen=True)
class Correction:
    frame: PauliFrame
    pairing: tuple
    total_weight: int

    def to_dict(self) -> dict:
        return {
            "pairing": [[_label_json(a), _label_json(b)] for a, b in self.pairing],
            "frame": self.frame.to_hex(),
            "total_weight": self.total_weight,
        }


def _label_json(node):
    if node[0] == "boundary":
        return {"boundary": True, "species": node[1]}
    out = {"species": node[0], "stabilizer": node[1]}
    if len(node) > 2 and node[2] is not None:
        out["round"] = node[2]
    return out


# ---------------------------------------------------------------- distances

class _SpeciesMetric:
    """Distances and shortest paths for one species on one layout."""

    def __init__(self, layout: CodeLayout, species: str):
        self.layout = layout
        self.species = species
        self.d = layout.distance
        self._bfs: dict[int, tuple[dict, dict]] = {}
        self._graph = species_graph(layout, species) if layout.holes else None

    def _cell(self, u: int, v: int) -> tuple[int, int]:
        return (2 * u, 2 * v + 1) if self.species == "m" else (2 * v + 1, 2 * u)

    def _qubit(self, a, b) -> int:
        return self.layout.qubit_index(((a[0] + b[0]) // 2, (a[1] + b[1]) // 2))

    def _search(self, src: int):
        if src not in self._bfs:
            dist, back = {src: 0}, {}
            todo = deque([src])
            while todo:
                s = todo.popleft()
                for q, t in self._graph[s]:
                    key = ("edge",) if t == -1 else t
                    if key in dist:
                        continue
                    dist[key] = dist[s] + 1
                    back[key] = (q, s)
                    if t != -1:
                        todo.append(t)
            self._bfs[src] = (dist, back)
        return self._bfs[src]

    def dist(self, i: int, j: int) -> int:
        if self._graph is None:
            ui, vi = species_uv(self.layout, self.species, i)
            uj, vj = species_uv(self.layout, self.species, j)
            return abs(ui - uj) + abs(vi - vj)
        dist, _ = self._search(i)
        if j not in dist:
            raise ValueError("defects are not connected")
        return dist[j]

    def bdist(self, i: int) -> int:
        if self._graph is None:
            return boundary_distance(self.d, species_uv(self.layout, self.species, i)[1])
        dist, _ = self._search(i)
        if ("edge",) not in dist:
            raise ValueError("defect cannot reach a matching edge")
        return dist[("edge",)]

    def _walk_back(self, i, key) -> list[int]:
        _, back = self._search(i)
        out = []
        while key != i:
            q, key = back[key]
            out.append(q)
        return out

    def path(self, i: int, j: int) -> list[int]:
        if i == j:
            return []
        if self._graph is not None:
            return self._walk_back(i, j)
        ui, vi = species_uv(self.layout, self.species, i)
        uj, vj = species_uv(self.layout, self.species, j)
        cells = [(ui, vi)]
        u, v = ui, vi
        while u != uj:
            u += 1 if uj > u else -1
            cells.append((u, v))
        while v != vj:
            v += 1 if vj > v else -1
            cells.append((u, v))
        return [self._qubit(self._cell(*a), self._cell(*b)) for a, b in zip(cells, cells[1:])]

    def bpath(self, i: int) -> list[int]:
        if self._graph is not None:
            return self._walk_back(i, ("edge",))
        u, v = species_uv(self.layout, self.species, i)
        if v + 1 <= self.d - 1 - v:
            steps = range(v, -1, -1)
            nxt = -1
        else:
            steps = range(v, self.d - 1)
            nxt = 1
        return [self._qubit(self._cell(u, s), self._cell(u, s + nxt)) for s in steps]


@lru_cache(maxsize=32)
def _metric(layout: CodeLayout, species: str) -> _SpeciesMetric:
    return _SpeciesMetric(layout, species)


# ---------------------------------------------------------------- graphs

def _detection_events(syndrome: Syndrome, species: str) -> list[tuple[int, Optional[int]]]:
    if syndrome.rounds is None:
        return [(s, None) for s in sorted(syndrome.defects(species))]
    pick = 0 if species == "m" else 1
    events = []
    prev: frozenset[int] = frozenset()
    for r, rnd in enumerate(syndrome.rounds):
        cur = frozenset(rnd[pick])
        events.extend((s, r) for s in sorted(cur ^ prev))
        prev = cur
    return events


def _graph_for(events, species, metric: _SpeciesMetric) -> MatchingGraph:
    k = len(events)
    nodes = tuple((species, s, r) for s, r in events) + tuple(("boundary", species, i) for i in range(k))
    edges = []
    for i in range(k):
        si, ri = events[i]
        for j in range(i + 1, k):
            sj, rj = events[j]
            w = metric.dist(si, sj) + (abs(ri - rj) if ri is not None else 0)
            edges.append((i, j, w))
    for i in range(k):
        edges.append((i, k + i, metric.bdist(events[i][0])))
    for i in range(k):
        for j in range(i + 1, k):
            edges.append((k + i, k + j, 0))
    return MatchingGraph(species, nodes, tuple(edges))


def build_graph(syndrome: Syndrome, layout: CodeLayout, model: Optional[NoiseModel] = None):
    """Matching graphs ``(graph_m, graph_e)``; repeated rounds add time-like weight."""
    rounds = syndrome if (syndrome.rounds is not None or not isinstance(model, Phenomenological)) \
        else Syndrome(syndrome.m_defects, syndrome.e_defects, ((syndrome.m_defects, syndrome.e_defects),))
    return tuple(_graph_for(_detection_events(rounds, sp), sp, _metric(layout, sp)) for sp in SPECIES)


# ---------------------------------------------------------------- matching

def _solve_subset(nodes: Sequence[int], wmap: dict) -> tuple[Optional[int], Optional[dict]]:
    """Min-weight perfect matching restricted to ``nodes``; ``(None, None)`` if infeasible."""
    if not nodes:
        return 0, {}
    local = {v: i for i, v in enumerate(nodes)}
    eu, ev, ew = [], [], []
    for (a, b), w in wmap.items():
        if a in local and b in local:
            eu.append(local[a])
            ev.append(local[b])
            ew.append(w)
    if len(nodes) % 2 or not eu:
        return None, None
    mate = min_weight_perfect_kernel(len(nodes), np.array(eu, dtype=np.int64), np.array(ev, dtype=np.int64),
                                     np.array(ew, dtype=np.int64))
    if np.any(mate < 0):
        return None, None
    partner = {nodes[i]: nodes[int(mate[i])] for i in range(len(nodes))}
    total = sum(wmap[(min(a, b), max(a, b))] for a, b in partner.items() if a < b)
    return total, partner


def _lex_min_matching(nodes: Sequence[int], wmap: dict) -> list[tuple[int, int]]:
    best, partner = _solve_subset(list(nodes), wmap)
    if best is None:
        raise ValueError("graph has no perfect matching")
    adj: dict[int, list[int]] = {v: [] for v in nodes}
    for a, b in wmap:
        if a in adj and b in adj:
            adj[a].append(b)
            adj[b].append(a)
    remaining = sorted(nodes)
    alive = set(remaining)
    pairs = []
    budget = best
    for a in remaining:
        if a not in alive:
            continue
        chosen = partner[a]
        for b in sorted(adj[a]):
            if b >= chosen:
                break
            if b not in alive:
                continue
            wab = wmap[(min(a, b), max(a, b))]
            if wab > budget:
                continue
            rest = sorted(alive - {a, b})
            sub, sub_partner = _solve_subset(rest, wmap)
            if sub is not None and sub + wab == budget:
                chosen = b
                partner.update(sub_partner)
                break
        partner[a], partner[chosen] = chosen, a
        pairs.append((a, chosen))
        budget -= wmap[(min(a, chosen), max(a, chosen))]
        alive -= {a, chosen}
    return pairs


def mwpm(graph: MatchingGraph) -> list[tuple[int, int]]:
    """Exact minimum-weight perfect matching, lexicographically smallest among optima.

    Pairs are ``(a, b)`` node indices with ``a < b`` in ascending order of ``a``.
    """
    n = len(graph.nodes)
    if n % 2:
        raise ValueError(f"matching graph has an odd node count ({n})")
    return _lex_min_matching(range(n), graph.weight_map())


def _component_pairing(graph: MatchingGraph) -> list[tuple[int, int]]:
    """Same result as :func:`mwpm` for graphs from :func:`build_graph`, solved per cluster.

    Defect-defect edges heavier than routing both ends to the boundary are never
    needed, so defects split into independent clusters; leftover boundary twins
    are paired in ascending order, which is what the global lexicographic rule
    would pick for zero-weight edges.
    """
    k = graph.n_defects
    wmap = graph.weight_map()
    bw = [wmap[(i, k + i)] for i in range(k)]
    root = list(range(k))

    def find(x):
        while root[x] != x:
            root[x] = root[root[x]]
            x = root[x]
        return x

    for i in range(k):
        for j in range(i + 1, k):
            if wmap[(i, j)] <= bw[i] + bw[j]:
                root[find(i)] = find(j)
    groups: dict[int, list[int]] = {}
    for i in range(k):
        groups.setdefault(find(i), []).append(i)
    pairs = []
    for members in groups.values():
        if len(members) == 1:
            i = members[0]
            pairs.append((i, k + i))
            continue
        nodes = members + [k + i for i in members]
        pairs.extend(p for p in _lex_min_matching(nodes, wmap) if p[0] < k)
    used = {v for p in pairs for v in p}
    spare = [v for v in range(k, 2 * k) if v not in used]
    pairs.extend(zip(spare[::2], spare[1::2]))
    return sorted(pairs)


def decode(syndrome: Syndrome, layout: CodeLayout, model: Optional[NoiseModel] = None) -> Correction:
    """Correction frame whose syndrome equals the input's final syndrome."""
    n = layout.n_qubits
    x = z = 0
    pairing = []
    total = 0
    for graph in build_graph(syndrome, layout, model):
        metric = _metric(layout, graph.species)
        k = graph.n_defects
        wmap = graph.weight_map()
        mask = 0
        for a, b in _component_pairing(graph):
            if a >= k:
                continue
            total += wmap[(a, b)]
            sa = graph.nodes[a][1]
            if b >= k:
                qubits = metric.bpath(sa)
                pairing.append((_short(graph.nodes[a]), ("boundary", graph.species)))
            else:
                qubits = metric.path(sa, graph.nodes[b][1])
                pairing.append((_short(graph.nodes[a]), _short(graph.nodes[b])))
            for q in qubits:
                mask ^= 1 << q
        if graph.species == "m":
            x = mask
        else:
            z = mask
    return Correction(PauliFrame(n, x, z), tuple(pairing), total)


def _short(node):
    return node if node[2] is not None else node[:2]


# ---------------------------------------------------------------- batch kernels

@njit(cache=True)
def _low_parity_and_weight(us, vs, ts, k, d):
    """Match ``k`` defects (species coordinates) and return
    ``(parity of defects sent to the low-side boundary, total weight)``."""
    if k == 0:
        return 0, 0
    bw = np.empty(k, dtype=np.int64)
    low = np.empty(k, dtype=np.int64)
    for i in range(k):
        lo = vs[i] + 1
        hi = d - 1 - vs[i]
        if lo <= hi:
            bw[i] = lo
            low[i] = 1
        else:
            bw[i] = hi
            low[i] = 0
    root = np.arange(k)
    for i in range(k):
        for j in range(i + 1, k):
            w = abs(us[i] - us[j]) + abs(vs[i] - vs[j]) + abs(ts[i] - ts[j])
            if w <= bw[i] + bw[j]:
                a = i
                while root[a] != a:
                    a = root[a]
                b = j
                while root[b] != b:
                    b = root[b]
                if a != b:
                    root[a] = b
    comp = np.empty(k, dtype=np.int64)
    for i in range(k):
        a = i
        while root[a] != a:
            a = root[a]
        comp[i] = a
    order = np.argsort(comp, kind="mergesort")
    parity = 0
    weight = 0
    members = np.empty(k, dtype=np.int64)
    start = 0
    while start < k:
        c = comp[order[start]]
        m = 0
        stop = start
        while stop < k and comp[order[stop]] == c:
            members[m] = order[stop]
            m += 1
            stop += 1
        start = stop
        if m == 1:
            i = members[0]
            parity ^= low[i]
            weight += bw[i]
            continue
        if m == 2:
            i = members[0]
            j = members[1]
            weight += abs(us[i] - us[j]) + abs(vs[i] - vs[j]) + abs(ts[i] - ts[j])
            continue
        cap = m * (m - 1) + m
        eu = np.empty(cap, dtype=np.int64)
        ev = np.empty(cap, dtype=np.int64)
        ew = np.empty(cap, dtype=np.int64)
        ne = 0
        for a in range(m):
            i = members[a]
            for b in range(a + 1, m):
                j = members[b]
                w = abs(us[i] - us[j]) + abs(vs[i] - vs[j]) + abs(ts[i] - ts[j])
                if w <= bw[i] + bw[j]:
                    # twins of a matched pair can always absorb each other,
                    # so twin edges are only needed alongside defect edges
                    eu[ne] = a
                    ev[ne] = b
                    ew[ne] = w
                    eu[ne + 1] = m + a
                    ev[ne + 1] = m + b
                    ew[ne + 1] = 0
                    ne += 2
            eu[ne] = a
            ev[ne] = m + a
            ew[ne] = bw[i]
            ne += 1
        mate = min_weight_perfect_kernel(2 * m, eu[:ne], ev[:ne], ew[:ne])
        for a in range(m):
            i = members[a]
            if mate[a] == m + a:
                parity ^= low[i]
                weight += bw[i]
            elif mate[a] < m and mate[a] > a:
                j = members[mate[a]]
                weight += abs(us[i] - us[j]) + abs(vs[i] - vs[j]) + abs(ts[i] - ts[j])
    return parity, weight


@njit(cache=True)
def batch_failures_2d(err, sup, su, sv, logical, d):
    """Per-trial logical flip and matching weight for one species with perfect syndromes.

    ``err`` is ``(trials, n_qubits)`` uint8; ``sup`` is ``(n_stab, 4)`` padded
    with -1; ``logical`` is a 0/1 vector of the logical string this species
    crosses.
    """
    trials, n = err.shape
    ns = sup.shape[0]
    fails = np.zeros(trials, dtype=np.uint8)
    weights = np.zeros(trials, dtype=np.int64)
    us = np.empty(ns, dtype=np.int64)
    vs = np.empty(ns, dtype=np.int64)
    ts = np.zeros(ns, dtype=np.int64)
    for t in range(trials):
        k = 0
        for s in range(ns):
            par = 0
            for a in range(4):
                q = sup[s, a]
                if q >= 0:
                    par ^= err[t, q]
            if par:
                us[k] = su[s]
                vs[k] = sv[s]
                k += 1
        cross = 0
        for q in range(n):
            if logical[q]:
                cross ^= err[t, q]
        par, w = _low_parity_and_weight(us, vs, ts, k, d)
        fails[t] = cross ^ par
        weights[t] = w
    return fails, weights


@njit(cache=True)
def batch_failures_3d(inc, flips, sup, su, sv, logical, d):
    """Like :func:`batch_failures_2d` for repeated noisy rounds.

    ``inc`` is ``(trials, rounds, n_qubits)`` data-error increments and
    ``flips`` ``(trials, rounds, n_stab)`` syndrome-bit flips; a noiseless
    round follows the last noisy one.
    """
    trials, rounds, n = inc.shape
    ns = sup.shape[0]
    fails = np.zeros(trials, dtype=np.uint8)
    weights = np.zeros(trials, dtype=np.int64)
    cap = ns * (rounds + 1)
    us = np.empty(cap, dtype=np.int64)
    vs = np.empty(cap, dtype=np.int64)
    ts = np.empty(cap, dtype=np.int64)
    acc = np.zeros(n, dtype=np.uint8)
    prev = np.zeros(ns, dtype=np.uint8)
    for t in range(trials):
        acc[:] = 0
        prev[:] = 0
        k = 0
        for r in range(rounds + 1):
            if r < rounds:
                for q in range(n):
                    acc[q] ^= inc[t, r, q]
            for s in range(ns):
                par = 0
                for a in range(4):
                    q = sup[s, a]
                    if q >= 0:
                        par ^= acc[q]
                if r < rounds:
                    par ^= flips[t, r, s]
                if par != prev[s]:
                    us[k] = su[s]
                    vs[k] = sv[s]
                    ts[k] = r
                    k += 1
                prev[s] = par
        cross = 0
        for q in range(n):
            if logical[q]:
                cross ^= acc[q]
        par, w = _low_parity_and_weight(us, vs, ts, k, d)
        fails[t] = cross ^ par
        weights[t] = w
    return fails, weights


@lru_cache(maxsize=32)
def kernel_tables(layout: CodeLayout, species: str):
    """Padded supports, species coordinates and logical mask for the batch kernels."""
    if layout.holes:
        raise ValueError("batch kernels support hole-free layouts only")
    supports = layout.supports(species)
    sup = np.full((len(supports), 4), -1, dtype=np.int64)
    for s, qs in enumerate(supports):
        sup[s, : len(qs)] = qs
    uv = np.array([species_uv(layout, species, s) for s in range(len(supports))], dtype=np.int64)
    logical = np.zeros(layout.n_qubits, dtype=np.uint8)
    logical[list(layout.logical_z if species == "m" else layout.logical_x)] = 1
    return sup, uv[:, 0].copy(), uv[:, 1].copy(), logical


# ---------------------------------------------------------------- maximum likelihood

_ML_MAX_DISTANCE = 3


@lru_cache(maxsize=8)
def _coset_table(layout: CodeLayout, species: str):
    """For every error pattern on this species: syndrome id, logical class and weight."""
    if layout.distance > _ML_MAX_DISTANCE or layout.holes:
        raise ValueError(f"exact enumeration limited to hole-free d <= {_ML_MAX_DISTANCE}")
    n = layout.n_qubits
    pm, vm, lz, lx = _masks(layout)
    stabs = pm if species == "m" else vm
    logical = lz if species == "m" else lx
    patterns = np.arange(1 << n, dtype=np.int64)
    bits = ((patterns[:, None] >> np.arange(n)) & 1).astype(np.int64)
    weight = bits.sum(axis=1)
    syn = np.zeros(1 << n, dtype=np.int64)
    for s, mk in enumerate(stabs):
        col = np.array([(mk >> q) & 1 for q in range(n)], dtype=np.int64)
        syn |= ((bits @ col) & 1) << s
    lvec = np.array([(logical >> q) & 1 for q in range(n)], dtype=np.int64)
    cls = (bits @ lvec) & 1
    return syn, cls, weight


def coset_polynomials(layout: CodeLayout, species: str) -> dict[int, list[list[int]]]:
    """``syndrome -> [counts_by_weight for class 0, for class 1]``."""
    syn, cls, weight = _coset_table(layout, species)
    n = layout.n_qubits
    table: dict[int, list[list[int]]] = {}
    for s, c, w in zip(syn.tolist(), cls.tolist(), weight.tolist()):
        entry = table.setdefault(s, [[0] * (n + 1), [0] * (n + 1)])
        entry[c][w] += 1
    return table


def _poly_value(counts: Sequence[int], p, n: int):
    return sum(c * p ** w * (1 - p) ** (n - w) for w, c in enumerate(counts) if c)


def _syndrome_key(defects, count: int) -> int:
    key = 0
    for s in defects:
        if not 0 <= s < count:
            raise ValueError(f"stabilizer index {s} out of range")
        key |= 1 << s
    return key


def _ml_species(layout: CodeLayout, species: str, defects, p) -> int:
    syn, cls, weight = _coset_table(layout, species)
    n = layout.n_qubits
    key = _syndrome_key(defects, len(layout.supports(species)))
    idx = np.flatnonzero(syn == key)
    if idx.size == 0:
        raise ValueError("syndrome is not reachable by any error pattern")
    best_cls = 0
    scores = []
    for c in (0, 1):
        counts = np.bincount(weight[idx[cls[idx] == c]], minlength=n + 1)
        scores.append(_poly_value(counts.tolist(), p, n))
    if scores[1] > scores[0]:
        best_cls = 1
    members = idx[cls[idx] == best_cls]
    rep = int(members[np.argmin(weight[members])])
    return rep


def ml_decode(syndrome: Syndrome, layout: CodeLayout, p, p_prime=None) -> Correction:
    """Most-probable-coset correction by exhaustive enumeration (d <= 3).

    Each species is scored independently: for each logical class, the total
    probability of all consistent error patterns under iid flips with
    probability ``p`` (``p_prime`` for phase flips, default ``p``).  The
    returned frame is the lightest pattern in the winning class; ties favour
    the class of even logical parity.
    """
    p_prime = p if p_prime is None else p_prime
    x = _ml_species(layout, "m", syndrome.m_defects, p)
    z = _ml_species(layout, "e", syndrome.e_defects, p_prime)
    frame = PauliFrame(layout.n_qubits, x, z)
    return Correction(frame, (), frame.weight)


def exact_failure_probabilities(layout: CodeLayout, p: Fraction, species: str = "m") -> dict[str, Fraction]:
    """Exact logical failure probability of ML and of MWPM decoding for one species.

    Enumerates every error pattern; MWPM is run once per reachable syndrome.
    """
    n = layout.n_qubits
    table = coset_polynomials(layout, species)
    _, _, lz, lx = _masks(layout)
    logical = lz if species == "m" else lx
    count = len(layout.supports(species))
    ml_fail = Fraction(0)
    mw_fail = Fraction(0)
    for key, (c0, c1) in table.items():
        v0 = _poly_value(c0, p, n)
        v1 = _poly_value(c1, p, n)
        ml_fail += min(v0, v1)
        defects = frozenset(i for i in range(count) if (key >> i) & 1)
        syn = Syndrome(defects, frozenset()) if species == "m" else Syndrome(frozenset(), defects)
        corr = decode(syn, layout)
        part = corr.frame.x if species == "m" else corr.frame.z
        cls = gf2.parity(part & logical)
        mw_fail += v1 if cls == 0 else v0
    return {"ml": ml_fail, "mwpm": mw_fail}


def residual_is_clean(error: PauliFrame, correction: Correction, layout: CodeLayout) -> bool:
    return syndrome_of(error ^ correction.frame, layout).is_empty
