"""Stabilizer-state simulator in the destabilizer/stabilizer tableau form.

Rows ``0..n-1`` hold destabilizers and rows ``n..2n-1`` the stabilizers of the
current state.  Each row is a Pauli string stored as boolean x and z parts plus
a sign bit (``True`` means a leading minus).  A qubit with both bits set
carries Y.
"""

from __future__ import annotations

import copy
from typing import Mapping, Optional, Union

import numpy as np

from .pauli import PauliFrame

PauliSpec = Union[str, Mapping[int, str], PauliFrame, tuple]


def _phase_exponent(x1, z1, x2, z2) -> np.ndarray:
    """Power of i picked up by the single-qubit products ``P1 * P2``, per qubit.

    Broadcasts; the result is an int array with entries in {-1, 0, 1}.
    """
    x1 = np.asarray(x1, dtype=np.int8)
    z1 = np.asarray(z1, dtype=np.int8)
    x2 = np.asarray(x2, dtype=np.int8)
    z2 = np.asarray(z2, dtype=np.int8)
    y = x1 & z1
    xo = x1 & (1 - z1)
    zo = (1 - x1) & z1
    return y * (z2 - x2) + xo * z2 * (2 * x2 - 1) + zo * x2 * (1 - 2 * z2)


def parse_pauli(spec: PauliSpec, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Turn a Pauli description into boolean ``(x, z)`` vectors of length ``n``.

    Accepted forms: a string such as ``"XIZY"`` (one letter per qubit), a
    mapping ``{qubit: letter}``, a :class:`PauliFrame`, or an ``(x, z)`` pair
    of arrays.
    """
    x = np.zeros(n, dtype=bool)
    z = np.zeros(n, dtype=bool)
    if isinstance(spec, PauliFrame):
        if spec.n > n:
            raise ValueError(f"frame acts on {spec.n} qubits, tableau has {n}")
        x[: spec.n] = spec.x_bits()
        z[: spec.n] = spec.z_bits()
        return x, z
    if isinstance(spec, str):
        if len(spec) != n:
            raise ValueError(f"Pauli string has length {len(spec)}, expected {n}")
        items = enumerate(spec)
    elif isinstance(spec, Mapping):
        items = spec.items()
    elif isinstance(spec, tuple) and len(spec) == 2:
        xs = np.asarray(spec[0], dtype=bool)
        zs = np.asarray(spec[1], dtype=bool)
        if xs.shape != (n,) or zs.shape != (n,):
            raise ValueError("x and z parts must both have length n")
        return xs.copy(), zs.copy()
    else:
        raise TypeError(f"cannot interpret {type(spec).__name__} as a Pauli")
    for q, letter in items:
        letter = str(letter).upper()
        if letter not in ("I", "X", "Y", "Z"):
            raise ValueError(f"bad Pauli letter {letter!r}")
        if not 0 <= q < n:
            raise ValueError(f"qubit {q} out of range")
        x[q] ^= letter in "XY"
        z[q] ^= letter in "ZY"
    return x, z


class Tableau:
    """Mutable stabilizer state on ``n`` qubits, initialised to ``|0...0>``.

    Random measurement outcomes come from ``rng`` (a seed or a numpy
    ``Generator``), so runs are reproducible.
    """

    def __init__(self, n: int, rng=None):
        if n < 1:
            raise ValueError("a tableau needs at least one qubit")
        self.n = n
        self.x = np.zeros((2 * n, n), dtype=bool)
        self.z = np.zeros((2 * n, n), dtype=bool)
        self.r = np.zeros(2 * n, dtype=bool)
        idx = np.arange(n)
        self.x[idx, idx] = True
        self.z[n + idx, idx] = True
        self.rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)

    def copy(self) -> "Tableau":
        out = Tableau.__new__(Tableau)
        out.n = self.n
        out.x = self.x.copy()
        out.z = self.z.copy()
        out.r = self.r.copy()
        out.rng = copy.deepcopy(self.rng)
        return out

    def same_state(self, other: "Tableau") -> bool:
        """True when both tableaux stabilize the same state (signs included)."""
        if other.n != self.n:
            return False
        n = self.n
        for row in range(n, 2 * n):
            if other.expectation((self.x[row], self.z[row])) != (-1 if self.r[row] else 1):
                return False
        return True

    # gates -------------------------------------------------------------

    def _check(self, *qubits: int) -> None:
        for q in qubits:
            if not 0 <= q < self.n:
                raise ValueError(f"qubit {q} out of range for {self.n} qubits")
        if len(set(qubits)) != len(qubits):
            raise ValueError("two-qubit gate needs distinct qubits")

    def h(self, q: int) -> None:
        self._check(q)
        xa, za = self.x[:, q].copy(), self.z[:, q].copy()
        self.r ^= xa & za
        self.x[:, q] = za
        self.z[:, q] = xa

    def s(self, q: int) -> None:
        self._check(q)
        self.r ^= self.x[:, q] & self.z[:, q]
        self.z[:, q] ^= self.x[:, q]

    def s_dag(self, q: int) -> None:
        self._check(q)
        self.z[:, q] ^= self.x[:, q]
        self.r ^= self.x[:, q] & self.z[:, q]

    def cnot(self, control: int, target: int) -> None:
        self._check(control, target)
        xa, za = self.x[:, control], self.z[:, control]
        xb, zb = self.x[:, target], self.z[:, target]
        self.r ^= xa & zb & ~(xb ^ za)
        xb ^= xa
        za ^= zb

    def cz(self, a: int, b: int) -> None:
        self.h(b)
        self.cnot(a, b)
        self.h(b)

    def pauli_x(self, q: int) -> None:
        self._check(q)
        self.r ^= self.z[:, q]

    def pauli_z(self, q: int) -> None:
        self._check(q)
        self.r ^= self.x[:, q]

    def pauli_y(self, q: int) -> None:
        self._check(q)
        self.r ^= self.x[:, q] ^ self.z[:, q]

    def apply_pauli(self, pauli: PauliSpec) -> None:
        """Apply a Pauli operator; global phase is irrelevant here."""
        px, pz = parse_pauli(pauli, self.n)
        # a row flips sign when it anticommutes with the operator
        self.r ^= ((self.x & pz).sum(axis=1) + (self.z & px).sum(axis=1)) % 2 == 1

    # measurement -------------------------------------------------------

    def _anticommuting(self, px: np.ndarray, pz: np.ndarray) -> np.ndarray:
        return ((self.x & pz).sum(axis=1) + (self.z & px).sum(axis=1)) % 2 == 1

    def _multiply_rows_into(self, targets: np.ndarray, source: int) -> None:
        """Replace each target row ``R`` by ``P_source * R``."""
        if targets.size == 0:
            return
        sx, sz = self.x[source], self.z[source]
        tx, tz = self.x[targets], self.z[targets]
        g = _phase_exponent(sx[None, :], sz[None, :], tx, tz).sum(axis=1)
        total = 2 * self.r[targets].astype(np.int64) + 2 * int(self.r[source]) + g
        self.r[targets] = (total % 4) == 2
        self.x[targets] = tx ^ sx
        self.z[targets] = tz ^ sz

    def _stabilizer_sign(self, px: np.ndarray, pz: np.ndarray) -> int:
        """Sign of ``P`` in the stabilizer group; ``P`` must commute with it."""
        n = self.n
        hits = np.flatnonzero(self._anticommuting(px, pz)[:n])
        ax = np.zeros(n, dtype=bool)
        az = np.zeros(n, dtype=bool)
        exponent = 0
        for j in hits:
            row = n + j
            exponent += 2 * int(self.r[row]) + int(_phase_exponent(self.x[row], self.z[row], ax, az).sum())
            ax ^= self.x[row]
            az ^= self.z[row]
        # the accumulated product equals P up to the sign we are after
        return -1 if exponent % 4 == 2 else 1

    def expectation(self, pauli: PauliSpec) -> int:
        """``+1``/``-1`` if the observable is stabilized with that sign, else 0."""
        px, pz = parse_pauli(pauli, self.n)
        if self._anticommuting(px, pz)[self.n :].any():
            return 0
        return self._stabilizer_sign(px, pz)

    def measure_pauli(self, pauli: PauliSpec, forced: Optional[int] = None) -> tuple[int, bool]:
        """Projectively measure a Pauli observable.

        Returns ``(outcome, deterministic)``.  ``forced`` (``+1`` or ``-1``)
        fixes the outcome of a random measurement, which tests use to steer
        branches; it is ignored when the outcome is determined.
        """
        px, pz = parse_pauli(pauli, self.n)
        n = self.n
        anti = self._anticommuting(px, pz)
        stab_hits = np.flatnonzero(anti[n:])
        if stab_hits.size == 0:
            return self._stabilizer_sign(px, pz), True
        p = n + int(stab_hits[0])
        others = np.flatnonzero(anti)
        others = others[others != p]
        self._multiply_rows_into(others, p)
        self.x[p - n] = self.x[p]
        self.z[p - n] = self.z[p]
        self.r[p - n] = self.r[p]
        if forced is None:
            minus = bool(self.rng.integers(2))
        else:
            if forced not in (1, -1):
                raise ValueError("forced outcome must be +1 or -1")
            minus = forced == -1
        self.x[p] = px
        self.z[p] = pz
        self.r[p] = minus
        return (-1 if minus else 1), False

    def measure(self, q: int, basis: str = "Z", forced: Optional[int] = None) -> tuple[int, bool]:
        """Single-qubit measurement in the ``"Z"`` or ``"X"`` basis."""
        basis = basis.upper()
        if basis not in ("X", "Y", "Z"):
            raise ValueError(f"unknown basis {basis!r}")
        self._check(q)
        return self.measure_pauli({q: basis}, forced=forced)

    def reset(self, q: int, basis: str = "Z") -> tuple[int, bool]:
        """Measure and flip into the ``+1`` eigenstate (``|0>`` or ``|+>``)."""
        outcome, det = self.measure(q, basis)
        if outcome == -1:
            if basis.upper() == "Z":
                self.pauli_x(q)
            else:
                self.pauli_z(q)
        return outcome, det

    def stabilizer_strings(self) -> list[str]:
        """Current stabilizer rows as signed strings such as ``"+XZI"``."""
        letters = np.array(["I", "X", "Z", "Y"])
        out = []
        for row in range(self.n, 2 * self.n):
            code = self.x[row].astype(int) + 2 * self.z[row].astype(int)
            out.append(("-" if self.r[row] else "+") + "".join(letters[code]))
        return out

    def is_consistent(self) -> bool:
        """Check the symplectic structure: stabilizers commute, pairs anticommute."""
        n = self.n
        x = self.x.astype(np.int64)
        z = self.z.astype(np.int64)
        form = (x @ z.T + z @ x.T) % 2
        expected = np.zeros((2 * n, 2 * n), dtype=np.int64)
        idx = np.arange(n)
        expected[idx, n + idx] = 1
        expected[n + idx, idx] = 1
        return bool(np.array_equal(form, expected))
