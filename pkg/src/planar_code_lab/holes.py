"""Holes on a live code state: creation, growth, shrinking and braiding.

A :class:`LatticeSession` owns a tableau, the current layout and a
:class:`LogicalRegister`.  Every hole operation is a transition between two
static layouts:

* qubits that leave the code are measured in the basis of the stabilizers
  that stay enforced (sigma^x for a smooth hole) and reset to its +1 state;
* stabilizers of the other type that lost qubits are measured; the -1
  outcomes are the spare anyons, which are paired up by a string confined to
  the newly exposed perimeter;
* stabilizers switched back on are measured and any -1 is pushed into what
  remains of the hole (or paired locally when the hole closes completely).

Growth is refused when the perimeter correction would be ambiguous, i.e.
when the new perimeter alone could carry a closed string that is not a
product of stabilizers.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Optional, TextIO

import numpy as np

from . import gf2
from .circuits import prepare_code_state
from .geometry import CodeLayout, _species_for_kind, build_planar, carve_hole, reshape_hole
from .tableau import Tableau, _phase_exponent


class HoleOperationError(ValueError):
    """A hole operation that would damage stored logical information."""


@dataclass
class SignedPauli:
    """Pauli string with an explicit sign, used for logical representatives."""

    x: np.ndarray
    z: np.ndarray
    minus: bool = False

    @classmethod
    def from_letters(cls, n: int, letters: dict[int, str], minus: bool = False) -> "SignedPauli":
        x = np.zeros(n, dtype=bool)
        z = np.zeros(n, dtype=bool)
        for q, p in letters.items():
            x[q] ^= p in "XY"
            z[q] ^= p in "ZY"
        return cls(x, z, minus)

    def __mul__(self, other: "SignedPauli") -> "SignedPauli":
        if not self.commutes(other):
            raise ValueError("product of anticommuting Paulis is not Hermitian")
        exponent = 2 * self.minus + 2 * other.minus + int(_phase_exponent(self.x, self.z, other.x, other.z).sum())
        return SignedPauli(self.x ^ other.x, self.z ^ other.z, exponent % 4 == 2)

    def commutes(self, other: "SignedPauli") -> bool:
        return (int((self.x & other.z).sum()) + int((self.z & other.x).sum())) % 2 == 0

    def letters(self) -> dict[int, str]:
        code = self.x.astype(int) + 2 * self.z.astype(int)
        return {int(q): "IXZY"[code[q]] for q in np.flatnonzero(code)}

    def support(self) -> frozenset[int]:
        return frozenset(int(q) for q in np.flatnonzero(self.x | self.z))

    def expectation(self, t: Tableau) -> int:
        value = t.expectation((self.x, self.z))
        return -value if self.minus else value

    def to_dict(self) -> dict:
        return {"sign": "-" if self.minus else "+", "paulis": {str(q): p for q, p in sorted(self.letters().items())}}


def _masks(p: SignedPauli) -> tuple[int, int]:
    return gf2.mask_of(np.flatnonzero(p.x).tolist()), gf2.mask_of(np.flatnonzero(p.z).tolist())


def _commute_masks(a: tuple[int, int], b: tuple[int, int]) -> int:
    return gf2.parity(a[0] & b[1]) ^ gf2.parity(a[1] & b[0])


def stabilizer_generators(layout: CodeLayout) -> list[tuple[int, int]]:
    """Generators ``(x_mask, z_mask)`` of the state's stabilizer group.

    Enforced plaquettes and vertices, plus the single-qubit operator that
    pins every qubit removed by a hole (sigma^x for smooth holes, sigma^z for
    rough ones).
    """
    gens = [(0, gf2.mask_of(sup)) for sup in layout.plaquettes if sup]
    gens += [(gf2.mask_of(sup), 0) for sup in layout.vertices if sup]
    for hole in layout.holes:
        for q in sorted(hole.removed_qubits):
            gens.append((1 << q, 0) if hole.kind == "smooth" else (0, 1 << q))
    return gens


class LogicalRegister:
    """Labelled X/Z representatives of the logical qubits of a session."""

    def __init__(self, n: int):
        self.n = n
        self.reps: dict[str, dict[str, SignedPauli]] = {}

    def set(self, label: str, x: dict[int, str], z: dict[int, str]) -> None:
        self.reps[label] = {"X": SignedPauli.from_letters(self.n, x), "Z": SignedPauli.from_letters(self.n, z)}

    def orthogonalize(self, label: str, basis: str) -> None:
        """Make ``label``'s ``basis`` representative commute with every other logical.

        The edge string of a fresh hole may cross the other logicals'
        representatives; multiplying by their partners removes the overlap.
        The sign is reset, which only relabels a basis whose value is random
        at creation anyway.
        """
        rep = self.reps[label][basis]
        x, z = rep.x.copy(), rep.z.copy()
        probe = SignedPauli(x, z)
        for other, pair in self.reps.items():
            if other == label:
                continue
            hit_z = not probe.commutes(pair["Z"])
            hit_x = not probe.commutes(pair["X"])
            if hit_z:
                x ^= pair["X"].x
                z ^= pair["X"].z
            if hit_x:
                x ^= pair["Z"].x
                z ^= pair["Z"].z
            probe = SignedPauli(x, z)
        self.reps[label][basis] = probe

    def drop(self, label: str) -> None:
        self.reps.pop(label, None)

    def __getitem__(self, label: str) -> dict[str, SignedPauli]:
        return self.reps[label]

    def labels(self) -> list[str]:
        return list(self.reps)

    def validate(self, layout: CodeLayout) -> None:
        """Raise unless every representative is a valid logical for ``layout``."""
        gens = stabilizer_generators(layout)
        for label, pair in self.reps.items():
            for basis, rep in pair.items():
                m = _masks(rep)
                if any(_commute_masks(m, g) for g in gens):
                    raise HoleOperationError(f"{label} {basis} representative anticommutes with a stabilizer")
            if pair["X"].commutes(pair["Z"]):
                raise HoleOperationError(f"{label} X and Z representatives commute")

    def follow(self, old: CodeLayout, new: CodeLayout) -> None:
        """Deform each representative by old stabilizers until it suits ``new``.

        The result commutes with every generator of the new stabilizer group
        and still equals the old representative on the pre-step state, so its
        value carries through the transition.
        """
        old_gens = stabilizer_generators(old)
        new_gens = stabilizer_generators(new)
        old_set, new_set = set(old_gens), set(new_gens)
        fresh = [g for g in new_gens if g not in old_set]
        usable = [g for g in old_gens if g not in new_set]
        patterns = [gf2.mask_of(j for j, f in enumerate(fresh) if _commute_masks(g, f)) for g in usable]
        reducer = gf2.Reducer(patterns)
        for label, pair in self.reps.items():
            for basis, rep in list(pair.items()):
                m = _masks(rep)
                target = gf2.mask_of(j for j, f in enumerate(fresh) if _commute_masks(m, f))
                residual, combo = reducer.reduce(target)
                if residual:
                    raise HoleOperationError(f"{label} {basis} representative cannot follow the hole move")
                for i in gf2.bits_of(combo):
                    gx, gz = usable[i]
                    rep = rep * SignedPauli(_unpack(gx, self.n), _unpack(gz, self.n))
                pair[basis] = rep

    def values(self, t: Tableau) -> dict[str, dict[str, int]]:
        return {label: {b: rep.expectation(t) for b, rep in pair.items()} for label, pair in self.reps.items()}

    def to_dict(self) -> dict:
        return {label: {b: rep.to_dict() for b, rep in pair.items()} for label, pair in self.reps.items()}


def _unpack(mask: int, n: int) -> np.ndarray:
    out = np.zeros(n, dtype=bool)
    for q in gf2.bits_of(mask):
        out[q] = True
    return out


_LETTERS = {"m": "Z", "e": "X"}  # Pauli type of the stabilizers detecting each species


class LatticeSession:
    """A hole-free planar code in logical ``|0>`` that holes can be cut into."""

    def __init__(self, layout: CodeLayout, rng=None):
        if layout.holes:
            raise ValueError("start from a hole-free layout")
        self.rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
        self.layout = layout
        self.tableau = prepare_code_state(layout, rng=self.rng)
        self.register = LogicalRegister(layout.n_qubits)
        self.register.set(
            "outer",
            x={q: "X" for q in layout.logical_x},
            z={q: "Z" for q in layout.logical_z},
        )
        self.hole_labels: list[str] = []
        self.events: list[dict] = []

    # public operations -------------------------------------------------

    def create_hole(self, kind: str, region: Iterable[int], label: Optional[str] = None) -> dict:
        """Stop enforcing ``region`` (plaquettes for smooth, vertices for rough)."""
        report = self._transition(None, kind, frozenset(region), "create")
        hole = self.layout.holes[-1]
        label = label or f"hole{len(self.layout.holes) - 1}"
        loop = {q: _LETTERS[_species_for_kind(kind)[0]] for q in hole.logical_loop}
        string = {q: _LETTERS[_species_for_kind(kind)[1]] for q in hole.logical_string}
        if kind == "smooth":
            self.register.set(label, x=string, z=loop)
            self.register.orthogonalize(label, "X")
        else:
            self.register.set(label, x=loop, z=string)
            self.register.orthogonalize(label, "Z")
        self.hole_labels.append(label)
        report["label"] = label
        return report

    def expand_hole(self, index: int, add: Iterable[int]) -> dict:
        hole = self._hole(index)
        add = frozenset(add)
        if add & hole.disabled_stabilizers:
            raise ValueError("expansion region overlaps the hole")
        return self._transition(index, hole.kind, hole.disabled_stabilizers | add, "expand")

    def contract_hole(self, index: int, remove: Iterable[int]) -> dict:
        hole = self._hole(index)
        remove = frozenset(remove)
        if not remove <= hole.disabled_stabilizers:
            raise ValueError("can only give back stabilizers the hole disables")
        if remove == hole.disabled_stabilizers:
            # the hole's logical qubit is read out and ceases to exist
            self.register.drop(self.hole_labels.pop(index))
        return self._transition(index, hole.kind, hole.disabled_stabilizers - remove, "contract")

    def move_hole(self, index: int, path: Iterable[int], step: int = 1) -> list[dict]:
        """Slide a hole along ``path`` by growing ``step`` stabilizers ahead and
        releasing the same number behind."""
        if step < 1:
            raise ValueError("step must be positive")
        path = list(path)
        reports = []
        trail = deque(sorted(self._hole(index).disabled_stabilizers))
        for k in range(0, len(path), step):
            ahead = path[k : k + step]
            reports.append(self.expand_hole(index, ahead))
            trail.extend(ahead)
            behind = [trail.popleft() for _ in range(len(ahead))]
            reports.append(self.contract_hole(index, behind))
        return reports

    def write_events(self, stream: TextIO) -> None:
        for event in self.events:
            stream.write(json.dumps(event) + "\n")

    # internals -----------------------------------------------------------

    def _hole(self, index: int):
        if not 0 <= index < len(self.layout.holes):
            raise ValueError(f"no hole with index {index}")
        return self.layout.holes[index]

    def _transition(self, index: Optional[int], kind: str, region: frozenset[int], action: str) -> dict:
        old = self.layout
        if index is None:
            new = carve_hole(old, kind, region)
            index = len(new.holes) - 1
            old_region: frozenset[int] = frozenset()
        else:
            old_region = old.holes[index].disabled_stabilizers
            new = reshape_hole(old, index, region)
        own, other = _species_for_kind(kind)
        own_letter, other_letter = _LETTERS[own], _LETTERS[other]
        grown = region - old_region
        shrunk = old_region - region
        if grown:
            allowed, qcols = self._perimeter_system(old, new, own, other, grown)
        t = self.tableau
        report: dict = {"seq": len(self.events), "action": action, "hole": index, "kind": kind,
                        "region": sorted(region)}

        # qubits leaving the code
        removed_out = {}
        for q in sorted(new.removed_qubits - old.removed_qubits):
            outcome, _ = t.measure_pauli({q: other_letter})
            removed_out[q] = outcome
            if outcome == -1:
                t.apply_pauli({q: own_letter})
        report["removed_measured"] = removed_out

        # stabilizers that lost qubits: spare anyons
        other_old, other_new = old.supports(other), new.supports(other)
        reduced = [s for s, sup in enumerate(other_new) if sup and other_old[s] and set(sup) < set(other_old[s])]
        spare = []
        for s in reduced:
            if t.measure_pauli({q: other_letter for q in other_new[s]})[0] == -1:
                spare.append(s)
        report["spare_anyons"] = spare
        correction: list[int] = []
        if spare:
            residual, combo = gf2.Reducer(qcols).reduce(gf2.mask_of(spare))
            if residual:
                raise HoleOperationError("spare anyons cannot be paired along the new perimeter")
            correction = [allowed[i] for i in gf2.bits_of(combo)]
            t.apply_pauli({q: own_letter for q in correction})
        report["correction"] = correction

        # stabilizers switched back on
        own_new = new.supports(own)
        restored_out = {}
        for s in sorted(shrunk):
            restored_out[s] = t.measure_pauli({q: own_letter for q in own_new[s]})[0]
        report["reenabled_measured"] = restored_out
        minus = [s for s, o in restored_out.items() if o == -1]
        pushed, unpaired = self._push_charges(new, own, minus, shrunk, region, other_letter)
        report["pushed"] = pushed
        report["unpaired"] = unpaired
        regrown = [
            s for s, sup in enumerate(other_new)
            if sup and (not other_old[s] or set(sup) > set(other_old[s]))
        ]
        report["regrown_measured"] = {
            s: t.measure_pauli({q: other_letter for q in other_new[s]})[0] for s in regrown
        }

        self.layout = new
        self.register.follow(old, new)
        self.events.append(report)
        return report

    @staticmethod
    def _perimeter_system(old: CodeLayout, new: CodeLayout, own: str, other: str, grown: frozenset[int]):
        """Qubits a spare-anyon correction may use, with their syndrome columns.

        Two corrections differ by a closed string inside those qubits.  That is
        harmless when the string is a product of stabilizers from before or
        after the move; otherwise it is the hole's logical operator and the
        pairing is ambiguous, so the move is refused.
        """
        n = new.n_qubits
        removed = new.removed_qubits
        allowed = sorted({q for s in grown for q in new.base_supports(own)[s]} - removed)
        other_sup = new.supports(other)
        nbrs = new.qubit_neighbors(other)
        qcols = [gf2.mask_of(s for s in nbrs[q] if q in other_sup[s]) for q in allowed]
        reducer = gf2.Reducer(qcols)
        if reducer.kernel:
            shift = 0 if _LETTERS[own] == "X" else n
            gens = stabilizer_generators(old) + stabilizer_generators(new)
            span = gf2.Reducer([gx | (gz << n) for gx, gz in gens])
            for combo in reducer.kernel:
                cycle = gf2.mask_of(allowed[i] for i in gf2.bits_of(combo)) << shift
                if not span.contains(cycle):
                    raise HoleOperationError(
                        "expansion leaves no part of the old boundary; anyon pairing would be ambiguous"
                    )
        return allowed, qcols

    def _push_charges(self, new, own, minus, shrunk, region, letter):
        """Move each -1 outcome into the hole, or pair them if the hole closed."""
        if not minus:
            return [], []
        nodes = set(shrunk) | set(region)
        nbrs = new.qubit_neighbors(own)
        removed = new.removed_qubits
        sup = new.base_supports(own)

        def path_from(start, goals):
            back = {start: None}
            todo = deque([start])
            while todo:
                s = todo.popleft()
                if s in goals and s != start:
                    out = []
                    while back[s] is not None:
                        q, s = back[s]
                        out.append(q)
                    return out
                for q in sup[s]:
                    if q in removed:
                        continue
                    for u in nbrs[q]:
                        if u in nodes and u not in back:
                            back[u] = (q, s)
                            todo.append(u)
            return None

        pushed, unpaired = [], []
        if region:
            for s in minus:
                path = path_from(s, set(region))
                if path is None:
                    unpaired.append(s)
                    continue
                self.tableau.apply_pauli({q: letter for q in path})
                pushed.append({"from": s, "path": path})
            return pushed, unpaired
        todo = list(minus)
        while todo:
            s = todo.pop(0)
            path = path_from(s, set(todo)) if todo else None
            if path is None:
                unpaired.append(s)
                continue
            self.tableau.apply_pauli({q: letter for q in path})
            # the partner is whichever remaining charge the path ended on
            end = self._path_end(new, own, s, path)
            todo.remove(end)
            pushed.append({"from": s, "to": end, "path": path})
        return pushed, unpaired

    @staticmethod
    def _path_end(layout, own, start, path):
        nbrs = layout.qubit_neighbors(own)
        count: dict[int, int] = {}
        for q in path:
            for s in nbrs[q]:
                count[s] = count.get(s, 0) + 1
        ends = [s for s, k in count.items() if k % 2 and s != start]
        return ends[0]


# hole-braiding CNOT -----------------------------------------------------------

STATES = ("0", "1", "+", "-")


def _cnot_geometry(d: int) -> dict:
    """Coordinates for the braid: rough hole in the middle, smooth hole on a ring."""
    if d < 8:
        raise ValueError("holes too close: the braid needs distance >= 8")
    h = d // 2
    top = 2 * d - 2
    rows = range(2 * h - 2, 2 * h + 5, 2)
    cols = range(2 * h - 3, 2 * h + 4, 2)
    ring = [(r, cols[0]) for r in reversed(rows)]
    ring += [(rows[0], c) for c in cols[1:]]
    ring += [(r, cols[-1]) for r in rows[1:]]
    ring += [(rows[-1], c) for c in reversed(cols[1:-1])]
    start = (2 * h, cols[0])
    k = ring.index(start)
    ring = ring[k:] + ring[:k]
    return {
        "rough": (2 * h + 1, 2 * h),
        "ring": ring,
        # sigma^x from the smooth hole to the right edge, along its row
        "smooth_x": [(2 * h, c) for c in range(cols[0] + 1, top + 1, 2)],
        # sigma^z from the rough hole down to the bottom edge
        "rough_z": [(r, 2 * h) for r in range(2 * h + 2, top + 1, 2)],
    }


def _prepare(t: Tableau, state: str, pair: dict[str, SignedPauli], natural: str) -> None:
    """Bring one hole qubit from its creation state into ``state``.

    ``natural`` is the basis the hole starts in (``"Z"`` for smooth, ``"X"``
    for rough), with eigenvalue +1.
    """
    basis = "Z" if state in ("0", "1") else "X"
    sign = 1 if state in ("0", "+") else -1
    flip = pair["X"] if basis == "Z" else pair["Z"]
    rep = pair[basis]
    if basis == natural:
        if sign == -1:
            t.apply_pauli((flip.x, flip.z))
        return
    outcome, _ = t.measure_pauli((rep.x, rep.z))
    if rep.minus:
        outcome = -outcome
    if outcome != sign:
        t.apply_pauli((flip.x, flip.z))


def _conjugate_by_cnot(observable: tuple[str, str]) -> tuple[str, str]:
    """Image of a (control, target) Pauli pair under CNOT, letters in {I, X, Z}."""
    c, tg = observable
    cx, cz = c in "XY", c in "ZY"
    tx, tz = tg in "XY", tg in "ZY"
    tx ^= cx
    cz ^= tz
    letter = lambda x, z: "IXZY"[int(x) + 2 * int(z)]
    return letter(cx, cz), letter(tx, tz)


def braid_cnot_demo(
    lattice_size: int = 9,
    control: str = "0",
    target: str = "+",
    rng=None,
    step: int = 1,
    log: Optional[TextIO] = None,
) -> dict:
    """Move a smooth hole once around a rough hole and read off the logical map.

    The smooth hole is the control, the rough hole the target.  The entry
    returned compares, for each observable fixed by the input state, its
    expected image under CNOT with what the tableau reports after the braid.
    Observables the CNOT leaves undetermined are checked to be random.
    """
    if control not in STATES or target not in STATES:
        raise ValueError(f"states must be among {STATES}")
    geo = _cnot_geometry(lattice_size)
    layout = build_planar(lattice_size)
    session = LatticeSession(layout, rng=rng)
    n = layout.n_qubits
    ring = [layout.plaquette_index(c) for c in geo["ring"]]
    session.create_hole("rough", {layout.vertex_index(geo["rough"])}, label="target")
    session.create_hole("smooth", {ring[0]}, label="control")
    smooth_hole = 1
    reg = session.register
    reg.set(
        "control",
        x={layout.qubit_index(c): "X" for c in geo["smooth_x"]},
        z={q: "Z" for q in layout.base_plaquettes[ring[0]]},
    )
    reg.set(
        "target",
        x={q: "X" for q in layout.base_vertices[layout.vertex_index(geo["rough"])]},
        z={layout.qubit_index(c): "Z" for c in geo["rough_z"]},
    )
    reg.validate(session.layout)
    fixed = {"control": {b: SignedPauli(r.x.copy(), r.z.copy(), r.minus) for b, r in reg["control"].items()},
             "target": {b: SignedPauli(r.x.copy(), r.z.copy(), r.minus) for b, r in reg["target"].items()}}
    t = session.tableau
    _prepare(t, control, fixed["control"], "Z")
    _prepare(t, target, fixed["target"], "X")

    def observable(pair: tuple[str, str]) -> SignedPauli:
        out = SignedPauli(np.zeros(n, bool), np.zeros(n, bool))
        for label, letter in zip(("control", "target"), pair):
            if letter != "I":
                out = out * fixed[label][letter]
        return out

    c_basis = "Z" if control in "01" else "X"
    t_basis = "Z" if target in "01" else "X"
    c_sign = 1 if control in "0+" else -1
    t_sign = 1 if target in "0+" else -1

    def predicted(pair: tuple[str, str]) -> int:
        # CNOT is its own inverse, so the output value of O is the input value of CNOT O CNOT
        c, tg = _conjugate_by_cnot(pair)
        if c not in ("I", c_basis) or tg not in ("I", t_basis):
            return 0
        return (c_sign if c != "I" else 1) * (t_sign if tg != "I" else 1)

    probes = [("Z", "I"), ("X", "I"), ("I", "Z"), ("I", "X"), ("Z", "Z"), ("X", "X")]
    before = {"".join(k): observable(k).expectation(t) for k in probes}
    outer_before = reg["outer"]["Z"].expectation(t)
    session.events.append({"seq": len(session.events), "action": "prepared", "control": control,
                           "target": target, "logical": before})
    session.move_hole(smooth_hole, ring[1:] + ring[:1], step=step)

    expected = {"".join(k): predicted(k) for k in probes}
    observed = {"".join(k): observable(k).expectation(t) for k in probes}
    outer_after = reg["outer"]["Z"].expectation(t)
    passed = expected == observed and outer_before == outer_after == 1
    entry = {
        "control": control,
        "target": target,
        "before": before,
        "expected": expected,
        "observed": observed,
        "outer_logical_z": outer_after,
        "tracked": reg.values(t),
        "passed": passed,
        "steps": len(session.events),
    }
    session.events.append({"seq": len(session.events), "action": "result", **entry})
    if log is not None:
        session.write_events(log)
    entry["session"] = session
    return entry
