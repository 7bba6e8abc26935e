"""Small GF(2) linear-algebra helpers on Python-int bit rows."""

from __future__ import annotations

from typing import Iterable, Sequence


def mask_of(indices: Iterable[int]) -> int:
    m = 0
    for i in indices:
        m |= 1 << i
    return m


def bits_of(mask: int) -> list[int]:
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


def parity(mask: int) -> int:
    return mask.bit_count() & 1


def rank(rows: Iterable[int]) -> int:
    """Rank over GF(2) of the given bit rows."""
    basis: dict[int, int] = {}
    r = 0
    for row in rows:
        while row:
            top = row.bit_length() - 1
            if top in basis:
                row ^= basis[top]
            else:
                basis[top] = row
                r += 1
                break
    return r


class Reducer:
    """Incremental echelon basis that also remembers how each basis row was formed.

    ``reduce(v)`` returns ``(residual, combo)`` where ``combo`` is a bitmask over the
    original generators whose XOR, together with ``residual``, reproduces ``v``.
    ``kernel`` lists generator combinations that XOR to zero (a basis of them).
    """

    def __init__(self, generators: Sequence[int]):
        self._basis: dict[int, tuple[int, int]] = {}
        self.kernel: list[int] = []
        for k, g in enumerate(generators):
            row, combo = g, 1 << k
            while row:
                top = row.bit_length() - 1
                if top in self._basis:
                    brow, bcombo = self._basis[top]
                    row ^= brow
                    combo ^= bcombo
                else:
                    self._basis[top] = (row, combo)
                    break
            if not row:
                self.kernel.append(combo)

    def reduce(self, v: int) -> tuple[int, int]:
        combo = 0
        residual = 0
        while v:
            top = v.bit_length() - 1
            if top in self._basis:
                brow, bcombo = self._basis[top]
                v ^= brow
                combo ^= bcombo
            else:
                residual |= 1 << top
                v ^= 1 << top
        return residual, combo

    def contains(self, v: int) -> bool:
        return self.reduce(v)[0] == 0
