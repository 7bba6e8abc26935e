from collections import deque
import json

import pytest
from hypothesis import given, settings, strategies as st

from planar_code_lab import gf2
from planar_code_lab.geometry import (
    BOUNDARY,
    LayoutError,
    build_planar,
    carve_hole,
    lattice_distance,
    layout_to_dict,
    logical_qubit_count,
)


def edge_enumeration(d):
    """Independent count of lattice edges around a (d-1) x d array of vertices."""
    horizontal = (d - 1) * (d - 1)  # between neighbours within each vertex row
    vertical = d * d  # d columns, each with d-2 inner edges plus one dangling at each rough edge
    return horizontal + vertical


@pytest.mark.parametrize("d, qubits, stabs", [(2, 5, 2), (3, 13, 6)])
def test_small_counts(d, qubits, stabs):
    lay = build_planar(d)
    assert lay.n_qubits == qubits
    assert len(lay.plaquettes) == stabs
    assert len(lay.vertices) == stabs


@pytest.mark.parametrize("d", range(2, 11))
def test_counts_and_commutation(d):
    lay = build_planar(d)
    assert lay.n_qubits == d * d + (d - 1) ** 2 == edge_enumeration(d)
    assert len(lay.plaquettes) == len(lay.vertices) == d * (d - 1)
    assert lay.stabilizer_count == lay.n_qubits - 1
    for sup in lay.plaquettes + lay.vertices:
        assert len(sup) in (3, 4)
    for p in lay.plaquettes:
        ps = set(p)
        for v in lay.vertices:
            assert len(ps & set(v)) % 2 == 0
    lz, lx = set(lay.logical_z), set(lay.logical_x)
    assert len(lz) == len(lx) == d
    # a sigma^z string commutes with plaquettes trivially; it must meet vertices evenly
    for v in lay.vertices:
        assert len(lz & set(v)) % 2 == 0
    for p in lay.plaquettes:
        assert len(lx & set(p)) % 2 == 0
    assert len(lz & lx) % 2 == 1


@pytest.mark.parametrize("d", range(2, 11))
def test_rank_leaves_one_logical(d):
    lay = build_planar(d)
    z_rows = [gf2.mask_of(s) for s in lay.plaquettes]
    x_rows = [gf2.mask_of(s) for s in lay.vertices]
    assert gf2.rank(z_rows) + gf2.rank(x_rows) == lay.n_qubits - 1
    assert logical_qubit_count(lay) == 1


def test_bulk_vs_edge_weights():
    d = 5
    lay = build_planar(d)
    for sup, (r, _) in zip(lay.plaquettes, lay.plaquette_coords):
        assert len(sup) == (3 if r in (0, 2 * d - 2) else 4)
    for sup, (_, c) in zip(lay.vertices, lay.vertex_coords):
        assert len(sup) == (3 if c in (0, 2 * d - 2) else 4)


def test_rejects_small_distance():
    with pytest.raises(ValueError):
        build_planar(1)


def _bfs_oracle(lay, species):
    """Shortest paths on the dual graph built straight from supports."""
    supports = lay.plaquettes if species == "m" else lay.vertices
    touching = {}
    for s, sup in enumerate(supports):
        for q in sup:
            touching.setdefault(q, []).append(s)
    adj = {s: set() for s in range(len(supports))}
    adj["B"] = set()
    for q, ss in touching.items():
        if len(ss) == 2:
            a, b = ss
            adj[a].add(b)
            adj[b].add(a)
        else:
            adj[ss[0]].add("B")
            adj["B"].add(ss[0])
    dist = {}
    for src in adj:
        seen = {src: 0}
        todo = deque([src])
        while todo:
            x = todo.popleft()
            if x == "B" and x != src:
                continue  # the edge is an endpoint, never a shortcut
            for y in adj[x]:
                if y not in seen:
                    seen[y] = seen[x] + 1
                    todo.append(y)
        dist[src] = seen
    return dist


@pytest.mark.parametrize("d", [2, 3, 4, 5])
@pytest.mark.parametrize("species", ["m", "e"])
def test_distance_matches_bfs(d, species):
    lay = build_planar(d)
    oracle = _bfs_oracle(lay, species)
    n = len(lay.plaquettes)
    for a in range(n):
        assert lattice_distance(lay, (species, a), BOUNDARY) == oracle[a]["B"]
        assert lattice_distance(lay, BOUNDARY, (species, a)) == oracle[a]["B"]
        for b in range(n):
            assert lattice_distance(lay, (species, a), (species, b)) == oracle[a][b]


def test_distance_examples():
    lay = build_planar(5)
    a = lay.plaquette_index((2, 3))
    assert lattice_distance(lay, ("m", a), ("m", lay.plaquette_index((2, 5)))) == 1
    # plaquette column c (odd) is (c+1)/2 steps from the left edge
    for col in (1, 3, 5, 7):
        p = lay.plaquette_index((4, col))
        assert lattice_distance(lay, ("m", p), BOUNDARY) == min((col + 1) // 2, 5 - (col + 1) // 2)
    with pytest.raises(ValueError):
        lattice_distance(lay, ("m", 0), ("e", 0))


@settings(max_examples=200, deadline=None)
@given(st.integers(3, 7), st.data())
def test_distance_is_metric(d, data):
    lay = build_planar(d)
    n = len(lay.plaquettes)
    a, b, c = (data.draw(st.integers(0, n - 1)) for _ in range(3))
    dist = lambda x, y: lattice_distance(lay, ("m", x), ("m", y))
    assert dist(a, b) == dist(b, a)
    assert dist(a, c) <= dist(a, b) + dist(b, c)
    assert (dist(a, b) == 0) == (a == b)


def test_single_plaquette_hole_removes_nothing():
    lay = build_planar(5)
    p = lay.plaquette_index((4, 3))
    holed = carve_hole(lay, "smooth", {p})
    hole = holed.holes[0]
    assert hole.removed_qubits == frozenset()
    assert holed.plaquettes[p] == ()
    assert logical_qubit_count(holed) == 2


def test_two_by_two_smooth_hole():
    lay = build_planar(7)
    block = {lay.plaquette_index((r, c)) for r in (4, 6) for c in (5, 7)}
    holed = carve_hole(lay, "smooth", block)
    hole = holed.holes[0]
    # spins interior to the block: the four edges meeting at the central vertex (5, 6)
    interior = {lay.qubit_index(c) for c in [(4, 6), (6, 6), (5, 5), (5, 7)]}
    assert hole.removed_qubits == interior
    assert hole.internal_stabilizers == frozenset({lay.vertex_index((5, 6))})
    reduced = [
        v for v in range(len(lay.vertices))
        if v not in hole.internal_stabilizers and len(holed.vertices[v]) != len(lay.vertices[v])
    ]
    assert len(reduced) == 4 and all(len(lay.vertices[v]) == 4 and len(holed.vertices[v]) == 3 for v in reduced)
    for sup in holed.plaquettes + holed.vertices:
        assert not set(sup) & hole.removed_qubits
    # loop is a closed sigma^z cycle: commutes with every enforced vertex
    for sup in holed.vertices:
        assert len(set(sup) & hole.logical_loop) % 2 == 0
    # string reaches the left or right edge and anticommutes with the loop
    for sup in holed.plaquettes:
        assert len(set(sup) & hole.logical_string) % 2 == 0
    assert len(hole.logical_loop & hole.logical_string) % 2 == 1
    assert logical_qubit_count(holed) == 2


def test_two_holes_add_two_logicals():
    lay = build_planar(9)
    smooth = carve_hole(lay, "smooth", {lay.plaquette_index((4, 5)), lay.plaquette_index((4, 7))})
    both = carve_hole(smooth, "rough", {lay.vertex_index((11, 10))})
    assert logical_qubit_count(both) == 1 + 2
    assert len(both.holes) == 2
    rough = both.holes[1]
    for sup in both.vertices:
        assert len(set(sup) & rough.logical_string) % 2 == 0
    for sup in both.plaquettes:
        assert len(set(sup) & rough.logical_loop) % 2 == 0


@pytest.mark.parametrize(
    "kind, cells",
    [
        ("smooth", [(0, 1)]),  # touches the rough edge
        ("rough", [(1, 0)]),  # touches the smooth edge
        ("smooth", [(4, 3), (4, 7)]),  # disconnected
    ],
)
def test_carve_rejects_bad_regions(kind, cells):
    lay = build_planar(7)
    index = lay.plaquette_index if kind == "smooth" else lay.vertex_index
    with pytest.raises(LayoutError):
        carve_hole(lay, kind, {index(c) for c in cells})


def test_carve_rejects_overlap_and_wrong_kind():
    lay = build_planar(7)
    p = lay.plaquette_index((4, 5))
    holed = carve_hole(lay, "smooth", {p})
    with pytest.raises(LayoutError):
        carve_hole(holed, "smooth", {p})
    with pytest.raises(LayoutError):
        carve_hole(lay, "corner", {p})


def test_distance_routes_around_holes():
    lay = build_planar(7)
    block = {lay.plaquette_index((r, c)) for r in (4, 6) for c in (5, 7)}
    holed = carve_hole(lay, "smooth", block)
    left = holed.plaquette_index((6, 3))
    right = holed.plaquette_index((6, 9))
    assert lattice_distance(lay, ("m", left), ("m", right)) == 3
    assert lattice_distance(holed, ("m", left), ("m", right)) == 5


def test_layout_json_dump():
    lay = build_planar(3)
    data = json.loads(json.dumps(layout_to_dict(lay)))
    assert data["distance"] == 3
    assert len(data["qubits"]) == 13
    assert data["boundary"]["left"] == "smooth"
    assert sorted(data["logical_z"]) == sorted(lay.logical_z)
    for entry in data["plaquettes"]:
        assert tuple(entry["support"]) == lay.plaquettes[entry["index"]]


def test_coordinates_are_row_major():
    lay = build_planar(4)
    coords = list(lay.qubit_coords)
    assert coords == sorted(coords)
    assert all((r + c) % 2 == 0 for r, c in coords)
    assert all(lay.qubit_index(c) == i for i, c in enumerate(coords))
    assert list(lay.plaquette_coords) == sorted(lay.plaquette_coords)
