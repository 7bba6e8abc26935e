"""Planar-code lattice construction.

Everything lives on a ``(2d-1) x (2d-1)`` grid of cells addressed ``(row, col)``:

* data qubits sit on cells with ``row + col`` even,
* plaquettes (``B_p``, products of sigma^z) sit on ``(even, odd)`` cells,
* vertices (``A_s``, products of sigma^x) sit on ``(odd, even)`` cells.

Each stabilizer acts on the grid neighbours (up/down/left/right) that exist,
so bulk stabilizers have four qubits and those along an edge have three.
Qubits, plaquettes and vertices are each numbered row-major over their own
cells.  The left and right edges are smooth: a sigma^x on a left-column qubit
flips only one plaquette, so ``m`` anyons can leave the lattice there.  The
top and bottom edges are rough and absorb ``e`` anyons.

The distance ``d`` counts vertices down the left edge; the two logical
representatives have weight ``d``:

* ``logical_z`` -- sigma^z on the left column (the left-edge ``m`` occupancy),
* ``logical_x`` -- sigma^x on the top row (the top-edge ``e`` occupancy).
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Iterable, Mapping, Sequence

from . import gf2

Coord = tuple[int, int]

SMOOTH = "smooth"
ROUGH = "rough"
BOUNDARY = "boundary"

BOUNDARY_CLASSES = {
    "left": SMOOTH,
    "right": SMOOTH,
    "top": ROUGH,
    "bottom": ROUGH,
}


class LayoutError(ValueError):
    """Raised for illegal lattice parameters or hole regions."""


@dataclass(frozen=True)
class HoleRegion:
    kind: str
    disabled_stabilizers: frozenset[int]
    removed_qubits: frozenset[int]
    internal_stabilizers: frozenset[int]
    perimeter: tuple[int, ...]
    logical_loop: frozenset[int]
    logical_string: frozenset[int]

    @property
    def footprint(self) -> frozenset[int]:
        """Qubits of the (unreduced) disabled stabilizers."""
        return self.removed_qubits | self.logical_loop


@dataclass(frozen=True, eq=False)
class CodeLayout:
    """Immutable description of one planar code, possibly with holes.

    ``plaquettes[i]`` / ``vertices[i]`` hold the current (possibly reduced)
    support of each stabilizer; a stabilizer that is not enforced has an empty
    support.  Indices never shift when holes are carved.
    """

    distance: int
    qubit_coords: tuple[Coord, ...]
    plaquette_coords: tuple[Coord, ...]
    vertex_coords: tuple[Coord, ...]
    plaquettes: tuple[tuple[int, ...], ...]
    vertices: tuple[tuple[int, ...], ...]
    logical_z: frozenset[int]
    logical_x: frozenset[int]
    holes: tuple[HoleRegion, ...] = ()
    boundary: Mapping[str, str] = field(default_factory=lambda: dict(BOUNDARY_CLASSES))
    base_plaquettes: tuple[tuple[int, ...], ...] = field(default=(), repr=False)
    base_vertices: tuple[tuple[int, ...], ...] = field(default=(), repr=False)

    @property
    def n_qubits(self) -> int:
        return len(self.qubit_coords)

    @property
    def removed_qubits(self) -> frozenset[int]:
        out: frozenset[int] = frozenset()
        for h in self.holes:
            out |= h.removed_qubits
        return out

    @property
    def active_qubits(self) -> list[int]:
        removed = self.removed_qubits
        return [q for q in range(self.n_qubits) if q not in removed]

    @property
    def active_plaquettes(self) -> list[int]:
        return [i for i, s in enumerate(self.plaquettes) if s]

    @property
    def active_vertices(self) -> list[int]:
        return [i for i, s in enumerate(self.vertices) if s]

    @property
    def stabilizer_count(self) -> int:
        return len(self.active_plaquettes) + len(self.active_vertices)

    @cached_property
    def _index_maps(self) -> dict[str, dict[Coord, int]]:
        return {
            "q": {c: i for i, c in enumerate(self.qubit_coords)},
            "m": {c: i for i, c in enumerate(self.plaquette_coords)},
            "e": {c: i for i, c in enumerate(self.vertex_coords)},
        }

    def qubit_index(self, coord: Coord) -> int:
        return self._index_maps["q"][coord]

    def plaquette_index(self, coord: Coord) -> int:
        return self._index_maps["m"][coord]

    def vertex_index(self, coord: Coord) -> int:
        return self._index_maps["e"][coord]

    def supports(self, species: str) -> tuple[tuple[int, ...], ...]:
        """Current supports of the stabilizers that detect ``species`` anyons."""
        if species == "m":
            return self.plaquettes
        if species == "e":
            return self.vertices
        raise ValueError(f"unknown anyon species {species!r}")

    def base_supports(self, species: str) -> tuple[tuple[int, ...], ...]:
        return self.base_plaquettes if species == "m" else self.base_vertices

    @cached_property
    def _qubit_nbrs(self) -> dict[str, list[list[int]]]:
        out = {}
        for species in ("m", "e"):
            nbrs: list[list[int]] = [[] for _ in range(self.n_qubits)]
            for s, sup in enumerate(self.base_supports(species)):
                for q in sup:
                    nbrs[q].append(s)
            out[species] = nbrs
        return out

    def qubit_neighbors(self, species: str) -> list[list[int]]:
        """For every qubit, the stabilizers of ``species`` type whose base support holds it."""
        return self._qubit_nbrs[species]


def build_planar(d: int) -> CodeLayout:
    """Hole-free planar code of distance ``d`` (``d**2 + (d-1)**2`` qubits)."""
    if not isinstance(d, int) or d < 2:
        raise LayoutError(f"distance must be an integer >= 2, got {d!r}")
    size = 2 * d - 1
    qubits = [(r, c) for r in range(size) for c in range(size) if (r + c) % 2 == 0]
    plaq = [(r, c) for r in range(0, size, 2) for c in range(1, size, 2)]
    vert = [(r, c) for r in range(1, size, 2) for c in range(0, size, 2)]
    qidx = {c: i for i, c in enumerate(qubits)}

    def support(cell: Coord) -> tuple[int, ...]:
        r, c = cell
        out = []
        for dr, dc in ((-1, 0), (0, -1), (0, 1), (1, 0)):
            q = qidx.get((r + dr, c + dc))
            if q is not None:
                out.append(q)
        return tuple(sorted(out))

    plaquettes = tuple(support(p) for p in plaq)
    vertices = tuple(support(v) for v in vert)
    logical_z = frozenset(qidx[(r, 0)] for r in range(0, size, 2))
    logical_x = frozenset(qidx[(0, c)] for c in range(0, size, 2))
    return CodeLayout(
        distance=d,
        qubit_coords=tuple(qubits),
        plaquette_coords=tuple(plaq),
        vertex_coords=tuple(vert),
        plaquettes=plaquettes,
        vertices=vertices,
        logical_z=logical_z,
        logical_x=logical_x,
        base_plaquettes=plaquettes,
        base_vertices=vertices,
    )


def _species_for_kind(kind: str) -> tuple[str, str]:
    """(species whose stabilizers a hole disables, the other species)."""
    if kind == SMOOTH:
        return "m", "e"
    if kind == ROUGH:
        return "e", "m"
    raise LayoutError(f"hole kind must be 'smooth' or 'rough', got {kind!r}")


def hole_geometry(layout: CodeLayout, kind: str, region: Iterable[int]) -> dict:
    """Removed qubits, internal stabilizers and loop for a candidate region.

    Pure helper shared by :func:`carve_hole` and the tableau hole operations;
    performs no validation.
    """
    own, other = _species_for_kind(kind)
    region = frozenset(region)
    base_own = layout.base_supports(own)
    base_other = layout.base_supports(other)
    own_nbrs = layout.qubit_neighbors(own)
    touched: dict[int, int] = {}
    for s in region:
        for q in base_own[s]:
            touched[q] = touched.get(q, 0) + 1
    removed = frozenset(q for q in touched if all(s in region for s in own_nbrs[q]))
    loop = frozenset(q for q, k in touched.items() if k % 2 == 1)
    internal = frozenset(
        s for s, sup in enumerate(base_other) if sup and all(q in removed for q in sup)
    )
    return {"removed": removed, "loop": loop, "internal": internal}


def _validate_region(layout: CodeLayout, kind: str, region: frozenset[int]) -> None:
    own, _ = _species_for_kind(kind)
    base_own = layout.base_supports(own)
    if not region:
        raise LayoutError("hole region is empty")
    for s in region:
        if not 0 <= s < len(base_own):
            raise LayoutError(f"stabilizer index {s} out of range for a {kind} hole")
    own_nbrs = layout.qubit_neighbors(own)
    for s in region:
        if len(base_own[s]) != 4 or any(len(own_nbrs[q]) < 2 for q in base_own[s]):
            raise LayoutError(f"{kind} hole touches the lattice boundary at stabilizer {s}")
    taken: set[int] = set()
    for h in layout.holes:
        taken |= h.footprint
    for s in region:
        if taken.intersection(base_own[s]):
            raise LayoutError(f"stabilizer {s} overlaps or abuts an existing hole")
    # connectivity through shared qubits
    start = next(iter(region))
    seen = {start}
    todo = [start]
    while todo:
        s = todo.pop()
        for q in base_own[s]:
            for t in own_nbrs[q]:
                if t in region and t not in seen:
                    seen.add(t)
                    todo.append(t)
    if seen != set(region):
        raise LayoutError("hole region is not connected")


def carve_hole(layout: CodeLayout, kind: str, region: Iterable[int]) -> CodeLayout:
    """Return a copy of ``layout`` with an extra static hole.

    A smooth hole stops enforcing the plaquettes in ``region``; a rough hole
    the vertices.  Qubits touched only by disabled stabilizers are removed,
    stabilizers of the other type lose those qubits, and any of them left with
    no support stop being enforced.
    """
    region = frozenset(int(s) for s in region)
    _species_for_kind(kind)
    _validate_region(layout, kind, region)
    geom = hole_geometry(layout, kind, region)
    hole = HoleRegion(
        kind=kind,
        disabled_stabilizers=region,
        removed_qubits=geom["removed"],
        internal_stabilizers=geom["internal"],
        perimeter=(),
        logical_loop=geom["loop"],
        logical_string=frozenset(),
    )
    return _rebuild(layout, layout.holes + (hole,))


def reshape_hole(layout: CodeLayout, index: int, region: Iterable[int]) -> CodeLayout:
    """Replace hole ``index`` by one of the same kind covering ``region``.

    An empty region deletes the hole.  The new region is validated against the
    lattice edge and the other holes exactly as in :func:`carve_hole`.
    """
    holes = list(layout.holes)
    if not 0 <= index < len(holes):
        raise LayoutError(f"no hole with index {index}")
    old = holes.pop(index)
    region = frozenset(int(s) for s in region)
    if not region:
        return _rebuild(layout, holes)
    _validate_region(replace(layout, holes=tuple(holes)), old.kind, region)
    geom = hole_geometry(layout, old.kind, region)
    holes.insert(
        index,
        HoleRegion(
            kind=old.kind,
            disabled_stabilizers=region,
            removed_qubits=geom["removed"],
            internal_stabilizers=geom["internal"],
            perimeter=(),
            logical_loop=geom["loop"],
            logical_string=frozenset(),
        ),
    )
    return _rebuild(layout, holes)


def _rebuild(layout: CodeLayout, holes: Sequence[HoleRegion]) -> CodeLayout:
    removed: set[int] = set()
    off_p: set[int] = set()
    off_v: set[int] = set()
    for h in holes:
        removed |= h.removed_qubits
        if h.kind == SMOOTH:
            off_p |= h.disabled_stabilizers
            off_v |= h.internal_stabilizers
        else:
            off_v |= h.disabled_stabilizers
            off_p |= h.internal_stabilizers
    plaquettes = tuple(
        () if i in off_p else tuple(q for q in sup if q not in removed)
        for i, sup in enumerate(layout.base_plaquettes)
    )
    vertices = tuple(
        () if i in off_v else tuple(q for q in sup if q not in removed)
        for i, sup in enumerate(layout.base_vertices)
    )
    staged = replace(layout, plaquettes=plaquettes, vertices=vertices, holes=tuple(holes))
    finished = []
    for h in holes:
        own, other = _species_for_kind(h.kind)
        perimeter = _order_cycle(h.logical_loop, staged.qubit_neighbors(other))
        string = _string_to_edge(staged, h)
        finished.append(replace(h, perimeter=perimeter, logical_string=string))
    return replace(staged, holes=tuple(finished))


def _order_cycle(loop: frozenset[int], nbrs: list[list[int]]) -> tuple[int, ...]:
    """Order loop qubits so consecutive ones share an endpoint stabilizer."""
    if not loop:
        return ()
    by_end: dict[int, list[int]] = {}
    for q in loop:
        for s in nbrs[q]:
            by_end.setdefault(s, []).append(q)
    start = min(loop)
    order = [start]
    used = {start}
    cur = start
    while len(order) < len(loop):
        nxt = None
        for s in nbrs[cur]:
            for q in sorted(by_end.get(s, ())):
                if q not in used:
                    nxt = q
                    break
            if nxt is not None:
                break
        if nxt is None:
            # disconnected pieces (pinched regions): append the rest in index order
            order.extend(sorted(loop - used))
            break
        order.append(nxt)
        used.add(nxt)
        cur = nxt
    return tuple(order)


def _string_to_edge(layout: CodeLayout, hole: HoleRegion) -> frozenset[int]:
    """Shortest open string from ``hole`` to an edge that can absorb its anyon."""
    own, _ = _species_for_kind(hole.kind)
    graph = species_graph(layout, own)
    region = hole.disabled_stabilizers
    dist = {s: 0 for s in region}
    back: dict[int, tuple[int, int]] = {}
    todo = deque(sorted(region))
    own_nbrs = layout.qubit_neighbors(own)
    removed = layout.removed_qubits
    while todo:
        s = todo.popleft()
        if s in region:
            steps = []
            for q in layout.base_supports(own)[s]:
                if q in removed:
                    continue
                others = [t for t in own_nbrs[q] if t != s]
                if not others:
                    steps.append((q, -1))
                else:
                    steps.extend((q, t) for t in others if t not in region)
        else:
            steps = graph.get(s, [])
        for q, t in steps:
            if t == -1:
                path = {q}
                while s not in region:
                    pq, s = back[s]
                    path.add(pq)
                return frozenset(path)
            if t in dist or (t not in region and not layout.supports(own)[t]):
                continue
            dist[t] = dist[s] + 1
            back[t] = (q, s)
            todo.append(t)
    raise LayoutError("no path from hole to a matching edge")


def species_graph(layout: CodeLayout, species: str) -> dict[int, list[tuple[int, int]]]:
    """Adjacency of enforced ``species`` stabilizers through surviving qubits.

    Maps stabilizer index -> list of ``(qubit, neighbour)``; neighbour ``-1`` is
    the outer boundary that absorbs this species.  Holes are obstacles.
    """
    supports = layout.supports(species)
    nbrs = layout.qubit_neighbors(species)
    removed = layout.removed_qubits
    graph: dict[int, list[tuple[int, int]]] = {s: [] for s, sup in enumerate(supports) if sup}
    for q in range(layout.n_qubits):
        if q in removed:
            continue
        ends = nbrs[q]
        if len(ends) == 1:
            s = ends[0]
            if supports[s]:
                graph[s].append((q, -1))
        elif len(ends) == 2:
            a, b = ends
            if supports[a] and supports[b]:
                graph[a].append((q, b))
                graph[b].append((q, a))
    return graph


def defect_species(defect) -> str:
    if isinstance(defect, tuple) and len(defect) == 2 and defect[0] in ("m", "e"):
        return defect[0]
    raise ValueError(f"not a defect: {defect!r}")


def lattice_distance(layout: CodeLayout, defect_a, defect_b) -> int:
    """Fewest single-qubit Paulis that move one defect onto another.

    Defects are ``("m", plaquette_index)`` or ``("e", vertex_index)``; either
    argument may be :data:`BOUNDARY`, meaning the nearest edge that absorbs
    that species.  Hole-free layouts use the closed Manhattan form, layouts
    with holes a breadth-first search that treats holes as walls.
    """
    if defect_a == BOUNDARY and defect_b == BOUNDARY:
        raise ValueError("at least one endpoint must be a defect")
    if defect_a == BOUNDARY:
        defect_a, defect_b = defect_b, defect_a
    sa = defect_species(defect_a)
    if defect_b != BOUNDARY and defect_species(defect_b) != sa:
        raise ValueError("cannot measure distance between an m and an e defect")
    supports = layout.supports(sa)
    for dfc in (defect_a, defect_b):
        if dfc != BOUNDARY and not (0 <= dfc[1] < len(supports) and supports[dfc[1]]):
            raise ValueError(f"{dfc!r} is not an enforced stabilizer")
    if not layout.holes:
        ua, va = species_uv(layout, sa, defect_a[1])
        if defect_b == BOUNDARY:
            return boundary_distance(layout.distance, va)
        ub, vb = species_uv(layout, sa, defect_b[1])
        return abs(ua - ub) + abs(va - vb)
    graph = species_graph(layout, sa)
    target = -1 if defect_b == BOUNDARY else defect_b[1]
    src = defect_a[1]
    if src == target:
        return 0
    dist = {src: 0}
    todo = deque([src])
    while todo:
        s = todo.popleft()
        for _, t in graph[s]:
            if t == target:
                return dist[s] + 1
            if t == -1 or t in dist:
                continue
            dist[t] = dist[s] + 1
            todo.append(t)
    raise ValueError("defects are not connected")


def species_uv(layout: CodeLayout, species: str, index: int) -> tuple[int, int]:
    """Species-local coordinates ``(u, v)``.

    ``v`` runs towards the absorbing edges (``0 .. d-2``) and ``u`` along them
    (``0 .. d-1``), so both species share one distance formula.
    """
    if species == "m":
        r, c = layout.plaquette_coords[index]
        return r // 2, (c - 1) // 2
    r, c = layout.vertex_coords[index]
    return c // 2, (r - 1) // 2


def boundary_distance(d: int, v: int) -> int:
    return min(v + 1, d - 1 - v)


def logical_qubit_count(layout: CodeLayout) -> int:
    """Active qubits minus the GF(2) rank of the enforced stabilizers."""
    z_rows = [gf2.mask_of(s) for s in layout.plaquettes if s]
    x_rows = [gf2.mask_of(s) for s in layout.vertices if s]
    return len(layout.active_qubits) - gf2.rank(z_rows) - gf2.rank(x_rows)


def layout_to_dict(layout: CodeLayout) -> dict:
    """JSON-ready description of a layout."""
    return {
        "distance": layout.distance,
        "indexing": "row-major over (2d-1)x(2d-1) cells; qubits at row+col even, "
        "plaquettes at (even, odd), vertices at (odd, even)",
        "boundary": dict(layout.boundary),
        "qubits": [{"index": i, "row": r, "col": c} for i, (r, c) in enumerate(layout.qubit_coords)],
        "plaquettes": [
            {"index": i, "row": r, "col": c, "support": list(layout.plaquettes[i])}
            for i, (r, c) in enumerate(layout.plaquette_coords)
        ],
        "vertices": [
            {"index": i, "row": r, "col": c, "support": list(layout.vertices[i])}
            for i, (r, c) in enumerate(layout.vertex_coords)
        ],
        "logical_z": sorted(layout.logical_z),
        "logical_x": sorted(layout.logical_x),
        "holes": [
            {
                "kind": h.kind,
                "disabled_stabilizers": sorted(h.disabled_stabilizers),
                "removed_qubits": sorted(h.removed_qubits),
                "perimeter": list(h.perimeter),
                "logical_loop": sorted(h.logical_loop),
                "logical_string": sorted(h.logical_string),
            }
            for h in layout.holes
        ],
    }
