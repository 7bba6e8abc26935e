"""Circuit-level routines on top of :class:`Tableau`.

Data qubit ``q`` of a layout is tableau qubit ``q``; ancillas come after them.
"""

from __future__ import annotations

from typing import Mapping, Optional, Union

from .geometry import CodeLayout
from .pauli import PauliFrame, Syndrome
from .tableau import Tableau

# 9-qubit code ---------------------------------------------------------------

SHOR_STABILIZERS: tuple[str, ...] = (
    "XXIIIIIII",
    "IXXIIIIII",
    "IIIXXIIII",
    "IIIIXXIII",
    "IIIIIIXXI",
    "IIIIIIIXX",
    "ZZZZZZIII",
    "IIIZZZZZZ",
)
SHOR_LOGICAL_Z = "ZZZIIIIII"
SHOR_LOGICAL_X = "XIIXIIXII"


def prepare_code_state(layout: CodeLayout, extra_qubits: int = 0, rng=None) -> Tableau:
    """Tableau holding the planar code in logical ``|0>`` plus ``extra_qubits`` in ``|0>``.

    Starting from all zeros every plaquette already reads +1.  Each vertex is
    then measured and a -1 is fixed with a sigma^z string running straight up
    to the rough top edge, which touches no other vertex an odd number of
    times and commutes with ``logical_z``.
    """
    if layout.holes:
        raise ValueError("prepare the hole-free code first and create holes dynamically")
    t = Tableau(layout.n_qubits + extra_qubits, rng=rng)
    for s, sup in enumerate(layout.vertices):
        outcome, _ = t.measure_pauli({q: "X" for q in sup})
        if outcome == -1:
            row, col = layout.vertex_coords[s]
            for k in range(0, row, 2):
                t.pauli_z(layout.qubit_index((k, col)))
    return t


def apply_frame(t: Tableau, frame: PauliFrame) -> None:
    """Apply a phase-free error record to the data qubits."""
    t.apply_pauli(frame)


def extract_syndrome_via_ancilla(t: Tableau, layout: CodeLayout, ancilla: Optional[int] = None) -> Syndrome:
    """Measure every enforced stabilizer through one reusable ancilla.

    Plaquettes: ancilla reset to ``|0>``, CNOT from each support qubit onto it,
    then a Z measurement.  Vertices: the same with each CNOT sandwiched
    between Hadamards on the data qubit, which copies X parity instead.
    """
    anc = layout.n_qubits if ancilla is None else ancilla
    if not layout.n_qubits <= anc < t.n:
        raise ValueError("ancilla must be a tableau qubit outside the data block")
    m_defects, e_defects = set(), set()
    for p, sup in enumerate(layout.plaquettes):
        if not sup:
            continue
        t.reset(anc)
        for q in sup:
            t.cnot(q, anc)
        if t.measure(anc)[0] == -1:
            m_defects.add(p)
    for v, sup in enumerate(layout.vertices):
        if not sup:
            continue
        t.reset(anc)
        for q in sup:
            t.h(q)
            t.cnot(q, anc)
            t.h(q)
        if t.measure(anc)[0] == -1:
            e_defects.add(v)
    return Syndrome(frozenset(m_defects), frozenset(e_defects))


def stabilizer_readout(t: Tableau, layout: CodeLayout) -> dict[str, list[int]]:
    """Expectation of every enforced stabilizer (``0`` marks a random one)."""
    out: dict[str, list[int]] = {"plaquettes": [], "vertices": []}
    for key, letter, sups in (("plaquettes", "Z", layout.plaquettes), ("vertices", "X", layout.vertices)):
        for sup in sups:
            out[key].append(t.expectation({q: letter for q in sup}) if sup else 1)
    return out


def shor_encode(t: Tableau, state: str = "0", offset: int = 0) -> None:
    """Encode one logical qubit of the 9-qubit code on qubits ``offset..offset+8``."""
    q = offset
    if state not in ("0", "1", "+", "-"):
        raise ValueError(f"unknown logical state {state!r}")
    if state in ("1", "-"):
        t.pauli_x(q)
    if state in ("+", "-"):
        t.h(q)
    t.cnot(q, q + 3)
    t.cnot(q, q + 6)
    for lead in (q, q + 3, q + 6):
        t.h(lead)
        t.cnot(lead, lead + 1)
        t.cnot(lead, lead + 2)
        for k in range(3):
            t.h(lead + k)


def _anticommute(a: str, b: str) -> bool:
    clash = sum(1 for p, r in zip(a, b) if p != "I" and r != "I" and p != r)
    return clash % 2 == 1


def shor_lookup_table() -> dict[tuple[int, ...], dict[int, str]]:
    """Syndrome bits (1 = stabilizer reads -1) -> single-qubit correction."""
    table: dict[tuple[int, ...], dict[int, str]] = {(0,) * len(SHOR_STABILIZERS): {}}
    for q in range(9):
        for letter in "XZY":
            err = "".join(letter if k == q else "I" for k in range(9))
            key = tuple(int(_anticommute(err, s)) for s in SHOR_STABILIZERS)
            table.setdefault(key, {q: letter})
    return table


ErrorSpec = Union[None, tuple, Mapping[int, str]]


def shor_code_demo(error: ErrorSpec, state: str = "0", rng=None, details: bool = False):
    """Encode, corrupt, diagnose and repair one 9-qubit codeword.

    ``error`` is ``(qubit, letter)``, a ``{qubit: letter}`` mapping or ``None``.
    Returns whether the logical observable and every stabilizer read their
    original values afterwards; with ``details=True`` a dict with the syndrome
    and applied correction is returned instead.
    """
    if error is None:
        error = {}
    elif isinstance(error, tuple):
        error = {error[0]: error[1]}
    for q, letter in error.items():
        if not 0 <= q < 9 or letter not in ("X", "Y", "Z"):
            raise ValueError(f"bad error {letter!r} on qubit {q}")
    t = Tableau(9, rng=rng)
    shor_encode(t, state)
    t.apply_pauli(dict(error))
    syndrome = tuple(int(t.measure_pauli(s)[0] == -1) for s in SHOR_STABILIZERS)
    correction = shor_lookup_table().get(syndrome)
    if correction is None:
        # outside the table: weight-two patterns the code cannot resolve
        correction = {}
    if correction:
        t.apply_pauli(correction)
    observable = SHOR_LOGICAL_Z if state in ("0", "1") else SHOR_LOGICAL_X
    expected = 1 if state in ("0", "+") else -1
    restored = t.expectation(observable) == expected and all(t.expectation(s) == 1 for s in SHOR_STABILIZERS)
    if details:
        return {"recovered": restored, "syndrome": syndrome, "correction": correction}
    return restored


# braiding interference ------------------------------------------------------

_REACH = 2  # half-width, in grid cells, of the square whose stabilizers make the loop


def _species_cell(layout: CodeLayout, species: str, shift: int = 0) -> tuple[int, int]:
    h = layout.distance // 2
    if species == "e":
        return 2 * h + 1, 2 * h - shift
    if species == "m":
        return 2 * h - shift, 2 * h + 1
    raise ValueError(f"unknown anyon species {species!r}")


def _pair_string(layout: CodeLayout, species: str, cell: tuple[int, int]) -> dict[int, str]:
    """Short string creating ``species`` at ``cell`` and a partner well away from it.

    An ``e`` pair comes from sigma^z running up the column, an ``m`` pair from
    sigma^x running left along the row.
    """
    steps = _REACH + 1
    row, col = cell
    if species == "e":
        coords = [(row - 1 - 2 * k, col) for k in range(steps)]
        letter = "Z"
    else:
        coords = [(row, col - 1 - 2 * k) for k in range(steps)]
        letter = "X"
    partner = (row - 2 * steps, col) if species == "e" else (row, col - 2 * steps)
    top = 2 * layout.distance - 2
    if min(partner) < 0 or max(row, col) > top:
        raise ValueError("lattice too small to hold the fixed anyon pair")
    return {layout.qubit_index(c): letter for c in coords}


def braiding_loop(layout: CodeLayout, species_moved: str, centre: tuple[int, int]) -> dict[int, str]:
    """Closed string carrying ``species_moved`` once around ``centre``.

    Built as the product of the stabilizers of the loop's own type inside a
    square around ``centre``, so it is the boundary of that square.
    """
    if species_moved == "m":
        coords, sups, letter = layout.vertex_coords, layout.base_vertices, "X"
    elif species_moved == "e":
        coords, sups, letter = layout.plaquette_coords, layout.base_plaquettes, "Z"
    else:
        raise ValueError(f"unknown anyon species {species_moved!r}")
    top = 2 * layout.distance - 2
    r0, c0 = centre
    if r0 - _REACH - 1 < 0 or c0 - _REACH - 1 < 0 or r0 + _REACH + 1 > top or c0 + _REACH + 1 > top:
        raise ValueError("braiding loop would touch the lattice boundary")
    counts: dict[int, int] = {}
    for (r, c), sup in zip(coords, sups):
        if abs(r - r0) <= _REACH and abs(c - c0) <= _REACH:
            if len(sup) != 4:
                raise ValueError("braiding loop would touch the lattice boundary")
            for q in sup:
                counts[q] = counts.get(q, 0) + 1
    return {q: letter for q, k in counts.items() if k % 2}


def braiding_phase_test(
    layout: CodeLayout,
    species_moved: str,
    species_fixed: str,
    enclose: bool = True,
    rng=None,
) -> int:
    """Interference readout of the phase picked up by a full monodromy.

    A pair of ``species_fixed`` anyons is created with one member at the
    lattice centre.  An ancilla in ``|+>`` controls the closed string that
    drags ``species_moved`` around the centre; measuring the ancilla in the X
    basis then returns the loop's phase deterministically.  With
    ``enclose=False`` the fixed pair is shifted so that the loop surrounds
    nothing.
    """
    centre = _species_cell(layout, species_fixed)
    loop = braiding_loop(layout, species_moved, centre)
    pair_cell = centre if enclose else _species_cell(layout, species_fixed, shift=4)
    string = _pair_string(layout, species_fixed, pair_cell)
    t = prepare_code_state(layout, extra_qubits=1, rng=rng)
    anc = layout.n_qubits
    t.apply_pauli(string)
    t.h(anc)
    for q, letter in loop.items():
        if letter == "X":
            t.cnot(anc, q)
        else:
            t.cz(anc, q)
    outcome, deterministic = t.measure(anc, "X")
    if not deterministic:
        raise RuntimeError("interference readout was not deterministic")
    return outcome
