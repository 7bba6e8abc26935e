"""Phase-free Pauli frames over the data qubits of a layout, and their syndromes."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Optional, Sequence

import numpy as np

from . import gf2
from .geometry import CodeLayout


@dataclass(frozen=True)
class PauliFrame:
    """Error record as two bit-packed integers (bit ``q`` = qubit ``q``).

    ``x`` holds the sigma^x component and ``z`` the sigma^z component; a qubit
    with both bits set carries sigma^y.  Phases are not tracked.
    """

    n: int
    x: int = 0
    z: int = 0

    @classmethod
    def empty(cls, n: int) -> "PauliFrame":
        return cls(n)

    @classmethod
    def from_indices(cls, n: int, x: Iterable[int] = (), z: Iterable[int] = ()) -> "PauliFrame":
        xm, zm = gf2.mask_of(x), gf2.mask_of(z)
        if (xm | zm) >> n:
            raise ValueError("qubit index out of range")
        return cls(n, xm, zm)

    @classmethod
    def from_arrays(cls, x_bits, z_bits) -> "PauliFrame":
        x_bits = np.asarray(x_bits, dtype=bool)
        z_bits = np.asarray(z_bits, dtype=bool)
        if x_bits.shape != z_bits.shape or x_bits.ndim != 1:
            raise ValueError("x and z parts must be equal-length vectors")
        return cls(len(x_bits), _pack(x_bits), _pack(z_bits))

    @classmethod
    def from_paulis(cls, n: int, paulis: dict[int, str]) -> "PauliFrame":
        x = z = 0
        for q, p in paulis.items():
            p = p.upper()
            if p not in "IXYZ" or len(p) != 1:
                raise ValueError(f"bad Pauli label {p!r}")
            if p in "XY":
                x |= 1 << q
            if p in "ZY":
                z |= 1 << q
        return cls.from_indices(n, gf2.bits_of(x), gf2.bits_of(z))

    def __xor__(self, other: "PauliFrame") -> "PauliFrame":
        return compose(self, other)

    def __bool__(self) -> bool:
        return bool(self.x or self.z)

    @property
    def weight(self) -> int:
        return (self.x | self.z).bit_count()

    def x_bits(self) -> np.ndarray:
        return _unpack(self.x, self.n)

    def z_bits(self) -> np.ndarray:
        return _unpack(self.z, self.n)

    def pauli_at(self, q: int) -> str:
        return "IXZY"[((self.x >> q) & 1) | (((self.z >> q) & 1) << 1)]

    def to_hex(self) -> str:
        width = max(1, (self.n + 3) // 4)
        return f"{self.n}:{self.x:0{width}x}:{self.z:0{width}x}"

    @classmethod
    def from_hex(cls, text: str) -> "PauliFrame":
        n, x, z = text.split(":")
        frame = cls(int(n), int(x, 16), int(z, 16))
        if (frame.x | frame.z) >> frame.n:
            raise ValueError("hex frame has bits beyond its length")
        return frame


def _pack(bits: np.ndarray) -> int:
    if not bits.any():
        return 0
    return int.from_bytes(np.packbits(bits, bitorder="little").tobytes(), "little")


def _unpack(mask: int, n: int) -> np.ndarray:
    raw = np.frombuffer(mask.to_bytes((n + 7) // 8 or 1, "little"), dtype=np.uint8)
    return np.unpackbits(raw, bitorder="little")[:n].astype(bool)


def compose(a: PauliFrame, b: PauliFrame) -> PauliFrame:
    """Product of two frames up to phase (bitwise XOR of both parts)."""
    if a.n != b.n:
        raise ValueError(f"frame lengths differ: {a.n} vs {b.n}")
    return PauliFrame(a.n, a.x ^ b.x, a.z ^ b.z)


@dataclass(frozen=True)
class Syndrome:
    """Defected plaquettes (``m``) and vertices (``e``).

    For repeated noisy measurement ``rounds`` holds the measured outcome sets
    ``(m_set, e_set)`` of every round, the last one noiseless; ``m_defects`` and
    ``e_defects`` then describe that final round.
    """

    m_defects: frozenset[int] = frozenset()
    e_defects: frozenset[int] = frozenset()
    rounds: Optional[tuple[tuple[frozenset[int], frozenset[int]], ...]] = None

    @property
    def is_empty(self) -> bool:
        return not self.m_defects and not self.e_defects

    def symmetric_difference(self, other: "Syndrome") -> "Syndrome":
        return Syndrome(self.m_defects ^ other.m_defects, self.e_defects ^ other.e_defects)

    def defects(self, species: str) -> frozenset[int]:
        return self.m_defects if species == "m" else self.e_defects

    def to_dict(self) -> dict:
        out = {"m_defects": sorted(self.m_defects), "e_defects": sorted(self.e_defects)}
        if self.rounds is not None:
            out["rounds"] = [{"m": sorted(m), "e": sorted(e)} for m, e in self.rounds]
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "Syndrome":
        rounds = data.get("rounds")
        if rounds is not None:
            rounds = tuple((frozenset(r.get("m", ())), frozenset(r.get("e", ()))) for r in rounds)
            if not rounds:
                raise ValueError("rounds must be non-empty when given")
            m, e = rounds[-1]
            return cls(m, e, rounds)
        return cls(frozenset(data.get("m_defects", ())), frozenset(data.get("e_defects", ())))


@lru_cache(maxsize=64)
def _masks(layout: CodeLayout) -> tuple[tuple[int, ...], tuple[int, ...], int, int]:
    return (
        tuple(gf2.mask_of(s) for s in layout.plaquettes),
        tuple(gf2.mask_of(s) for s in layout.vertices),
        gf2.mask_of(layout.logical_z),
        gf2.mask_of(layout.logical_x),
    )


def syndrome_of(frame: PauliFrame, layout: CodeLayout) -> Syndrome:
    """Plaquettes with odd sigma^x overlap and vertices with odd sigma^z overlap."""
    if frame.n != layout.n_qubits:
        raise ValueError(f"frame has {frame.n} qubits, layout has {layout.n_qubits}")
    pmasks, vmasks, _, _ = _masks(layout)
    x, z = frame.x, frame.z
    m = frozenset(i for i, mk in enumerate(pmasks) if mk and (mk & x).bit_count() & 1)
    e = frozenset(i for i, mk in enumerate(vmasks) if mk and (mk & z).bit_count() & 1)
    return Syndrome(m, e)


def logical_effect(frame: PauliFrame, layout: CodeLayout) -> tuple[bool, bool]:
    """``(flips_logical_z, flips_logical_x)`` of a syndrome-free frame.

    ``flips_logical_z`` is set when the frame's sigma^x part crosses the
    left-column sigma^z string an odd number of times, i.e. a logical X was
    applied; dually for the sigma^z part against the top-row sigma^x string.
    """
    if not syndrome_of(frame, layout).is_empty:
        raise ValueError("frame leaves a residual syndrome; logical effect is undefined")
    _, _, lz, lx = _masks(layout)
    return bool((frame.x & lz).bit_count() & 1), bool((frame.z & lx).bit_count() & 1)


def stabilizer_product(layout: CodeLayout, plaquettes: Sequence[int] = (), vertices: Sequence[int] = ()) -> PauliFrame:
    """Frame equal to a product of stabilizers (sigma^z for plaquettes, sigma^x for vertices)."""
    pmasks, vmasks, _, _ = _masks(layout)
    z = 0
    for p in plaquettes:
        z ^= pmasks[p]
    x = 0
    for v in vertices:
        x ^= vmasks[v]
    return PauliFrame(layout.n_qubits, x, z)


def parity_check_matrices(layout: CodeLayout) -> tuple[np.ndarray, np.ndarray]:
    """Dense 0/1 matrices ``(H_plaquette, H_vertex)`` with one row per stabilizer."""
    hp = np.zeros((len(layout.plaquettes), layout.n_qubits), dtype=np.uint8)
    for i, s in enumerate(layout.plaquettes):
        hp[i, list(s)] = 1
    hv = np.zeros((len(layout.vertices), layout.n_qubits), dtype=np.uint8)
    for i, s in enumerate(layout.vertices):
        hv[i, list(s)] = 1
    return hp, hv
