"""Finite-temperature classical dynamics for the self-correction comparison.

Every model here is a sum of products of Ising spins,

    H = - sum_t J_t * prod_{i in t} s_i ,

stored as two sparse incidence lists (term -> spins, spin -> terms).  The
ferromagnetic sign is used throughout so that the all-up and all-down
configurations are the degenerate ground states of the chains and planes.

Three families are provided:

* ``ising_1d``: nearest-neighbour chain, open or closed into a ring;
* ``ising_2d``: square lattice, periodic by default;
* ``toric_code``: the Pauli-diagonal content of the toric-code Hamiltonian on
  an ``L x L`` torus.  Spin ``-1`` on an edge marks a sigma^x (first block of
  ``2 L^2`` spins) or sigma^z (second block) error; plaquette terms (``J_p``)
  multiply the sigma^x block and star terms (``J_s``) the sigma^z block, so a
  term at -1 is an anyon.

Dynamics are continuous-time single-spin Metropolis: spin ``i`` flips at
rate ``min(1, exp(-beta * dE_i))``.  The simulation is rejection-free: a
segment tree over the rates picks the next flip and the waiting time is
exponential in the total rate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from numba import njit

from .blossom import min_weight_perfect_kernel

# Onsager's exact inverse critical temperature of the square-lattice Ising model
BETA_CRITICAL_2D = 0.5 * math.log(1.0 + math.sqrt(2.0))

ISING_1D = "ising_1d"
ISING_2D = "ising_2d"
TORIC = "toric_code"


@dataclass(eq=False)
class ClassicalSystem:
    """A spin configuration together with the Hamiltonian it is scored against."""

    kind: str
    size: int
    periodic: bool
    term_ptr: np.ndarray
    term_spins: np.ndarray
    term_coupling: np.ndarray
    spins: np.ndarray
    couplings: dict = field(default_factory=dict)

    def __post_init__(self):
        n = self.spins.size
        counts = np.zeros(n, dtype=np.int64)
        np.add.at(counts, self.term_spins, 1)
        self.spin_ptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(counts, out=self.spin_ptr[1:])
        self.spin_terms = np.empty(self.term_spins.size, dtype=np.int64)
        fill = self.spin_ptr[:-1].copy()
        for t in range(self.n_terms):
            for i in self.term_spins[self.term_ptr[t] : self.term_ptr[t + 1]]:
                self.spin_terms[fill[i]] = t
                fill[i] += 1

    @property
    def n_spins(self) -> int:
        return int(self.spins.size)

    @property
    def n_terms(self) -> int:
        return int(self.term_ptr.size - 1)

    def term_values(self, spins: Optional[np.ndarray] = None) -> np.ndarray:
        s = self.spins if spins is None else spins
        return _term_values(s.astype(np.int64), self.term_ptr, self.term_spins)

    def energy(self, spins: Optional[np.ndarray] = None) -> float:
        return float(-(self.term_coupling * self.term_values(spins)).sum())

    def delta_energy(self, spin: int, spins: Optional[np.ndarray] = None) -> float:
        """Energy change from flipping ``spin`` in the current configuration."""
        if not 0 <= spin < self.n_spins:
            raise IndexError(f"spin {spin} out of range for {self.n_spins} spins")
        s = self.spins if spins is None else spins
        total = 0.0
        for t in self.spin_terms[self.spin_ptr[spin] : self.spin_ptr[spin + 1]]:
            prod = 1
            for j in self.term_spins[self.term_ptr[t] : self.term_ptr[t + 1]]:
                prod *= int(s[j])
            total += 2.0 * self.term_coupling[t] * prod
        return total

    def flip(self, spin: int) -> None:
        if not 0 <= spin < self.n_spins:
            raise IndexError(f"spin {spin} out of range for {self.n_spins} spins")
        self.spins[spin] = -self.spins[spin]

    def reset(self) -> None:
        """Return to the all-up ground state."""
        self.spins[:] = 1

    def ground_energy(self) -> float:
        return float(-np.abs(self.term_coupling).sum())

    def copy(self) -> "ClassicalSystem":
        return ClassicalSystem(
            self.kind, self.size, self.periodic, self.term_ptr, self.term_spins,
            self.term_coupling, self.spins.copy(), dict(self.couplings),
        )


def _from_terms(kind, size, periodic, terms: Sequence[Sequence[int]], couplings: Sequence[float], n_spins, meta):
    ptr = np.zeros(len(terms) + 1, dtype=np.int64)
    ptr[1:] = np.cumsum([len(t) for t in terms])
    flat = np.fromiter((i for t in terms for i in t), dtype=np.int64, count=int(ptr[-1]))
    return ClassicalSystem(
        kind, size, periodic, ptr, flat, np.asarray(couplings, dtype=np.float64),
        np.ones(n_spins, dtype=np.int8), meta,
    )


def ising_1d(length: int, coupling: float = 1.0, periodic: bool = False) -> ClassicalSystem:
    if length < 2:
        raise ValueError("chain needs at least two spins")
    bonds = [(i, i + 1) for i in range(length - 1)]
    if periodic and length > 2:
        bonds.append((length - 1, 0))
    return _from_terms(ISING_1D, length, periodic, bonds, [coupling] * len(bonds), length, {"J": coupling})


def ising_2d(side: int, coupling: float = 1.0, periodic: bool = True) -> ClassicalSystem:
    if side < 2:
        raise ValueError("lattice side must be at least 2")
    idx = lambda r, c: r * side + c
    bonds = []
    for r in range(side):
        for c in range(side):
            if c + 1 < side or (periodic and side > 2):
                bonds.append((idx(r, c), idx(r, (c + 1) % side)))
            if r + 1 < side or (periodic and side > 2):
                bonds.append((idx(r, c), idx((r + 1) % side, c)))
    return _from_terms(ISING_2D, side, periodic, bonds, [coupling] * len(bonds), side * side, {"J": coupling})


def toric_edge(side: int, orientation: str, r: int, c: int) -> int:
    """Index of the horizontal (``"h"``, vertex (r,c)-(r,c+1)) or vertical
    (``"v"``, vertex (r,c)-(r+1,c)) edge within one error block."""
    r, c = r % side, c % side
    return r * side + c + (0 if orientation == "h" else side * side)


def toric_code(side: int, star_coupling: float = 1.0, plaquette_coupling: float = 1.0) -> ClassicalSystem:
    if side < 2:
        raise ValueError("torus side must be at least 2")
    e = lambda o, r, c: toric_edge(side, o, r, c)
    block = 2 * side * side
    terms, couplings = [], []
    for r in range(side):
        for c in range(side):
            terms.append((e("h", r, c), e("h", r + 1, c), e("v", r, c), e("v", r, c + 1)))
            couplings.append(plaquette_coupling)
    for r in range(side):
        for c in range(side):
            star = (e("h", r, c), e("h", r, c - 1), e("v", r, c), e("v", r - 1, c))
            terms.append(tuple(block + i for i in star))
            couplings.append(star_coupling)
    return _from_terms(
        TORIC, side, True, terms, couplings, 2 * block, {"J_s": star_coupling, "J_p": plaquette_coupling}
    )


# barriers ---------------------------------------------------------------------


def path_energies(system: ClassicalSystem, path: Sequence[int]) -> np.ndarray:
    """Energy above the ground state after each prefix of ``path`` (first entry 0)."""
    s = np.ones(system.n_spins, dtype=np.int8)
    e0 = system.energy(s)
    out = [0.0]
    current = e0
    for i in path:
        if not 0 <= i < system.n_spins:
            raise IndexError(f"spin {i} out of range")
        current += system.delta_energy(int(i), s)
        s[i] = -s[i]
        out.append(current - e0)
    return np.asarray(out)


def barrier(system: ClassicalSystem, path: Sequence[int]) -> float:
    """Highest energy above the ground state met along a spin-by-spin path."""
    return float(path_energies(system, path).max())


def chain_sweep_path(length: int, start: int = 0) -> list[int]:
    """Flip ``start..L-1`` and then ``start-1`` down to 0."""
    return list(range(start, length)) + list(range(start - 1, -1, -1))


def raster_path(side: int) -> list[int]:
    return list(range(side * side))


def toric_loop_path(side: int, row: int = 0) -> list[int]:
    """sigma^x on the vertical edges of one row, in order: an ``m`` pair is
    created, one partner walks round the torus and they annihilate."""
    return [toric_edge(side, "v", row, c) for c in range(side)]


# dynamics kernels ---------------------------------------------------------------


@njit(cache=True)
def _seed(seed):
    np.random.seed(seed)


@njit(cache=True)
def _term_values(spins, term_ptr, term_spins):
    nt = term_ptr.shape[0] - 1
    vals = np.empty(nt, dtype=np.int64)
    for t in range(nt):
        p = 1
        for k in range(term_ptr[t], term_ptr[t + 1]):
            p *= spins[term_spins[k]]
        vals[t] = p
    return vals


@njit(cache=True)
def _rate(beta, de):
    if de <= 0.0:
        return 1.0
    return np.exp(-beta * de)


@njit(cache=True)
def _local_delta(i, vals, coupling, spin_ptr, spin_terms):
    total = 0.0
    for k in range(spin_ptr[i], spin_ptr[i + 1]):
        t = spin_terms[k]
        total += 2.0 * coupling[t] * vals[t]
    return total


@njit(cache=True)
def _tree_set(tree, size, i, value):
    pos = size + i
    tree[pos] = value
    pos //= 2
    while pos >= 1:
        tree[pos] = tree[2 * pos] + tree[2 * pos + 1]
        pos //= 2


@njit(cache=True)
def _tree_pick(tree, size, u):
    node = 1
    while node < size:
        left = tree[2 * node]
        if u < left:
            node = 2 * node
        else:
            u -= left
            node = 2 * node + 1
    return node - size


@njit(cache=True)
def _init(spins, term_ptr, term_spins, coupling, spin_ptr, spin_terms, beta):
    n = spins.shape[0]
    vals = _term_values(spins, term_ptr, term_spins)
    de = np.empty(n, dtype=np.float64)
    size = 1
    while size < n:
        size *= 2
    tree = np.zeros(2 * size, dtype=np.float64)
    for i in range(n):
        de[i] = _local_delta(i, vals, coupling, spin_ptr, spin_terms)
        tree[size + i] = _rate(beta, de[i])
    for pos in range(size - 1, 0, -1):
        tree[pos] = tree[2 * pos] + tree[2 * pos + 1]
    return vals, de, tree, size


@njit(cache=True)
def _next_event(tree, size, de):
    """Spin chosen for the next flip, or -1 if nothing can move."""
    total = tree[1]
    if total <= 0.0:
        return -1
    for _ in range(8):
        i = _tree_pick(tree, size, np.random.random() * total)
        if i < de.shape[0] and tree[size + i] > 0.0:
            return i
    # rounding put the draw on an empty leaf repeatedly; fall back to a scan
    u = np.random.random() * total
    for i in range(de.shape[0]):
        u -= tree[size + i]
        if u < 0.0 and tree[size + i] > 0.0:
            return i
    return -1


@njit(cache=True)
def _apply_flip(i, spins, vals, de, tree, size, term_ptr, term_spins, coupling, spin_ptr, spin_terms, beta):
    spins[i] = -spins[i]
    for k in range(spin_ptr[i], spin_ptr[i + 1]):
        vals[spin_terms[k]] = -vals[spin_terms[k]]
    for k in range(spin_ptr[i], spin_ptr[i + 1]):
        t = spin_terms[k]
        for m in range(term_ptr[t], term_ptr[t + 1]):
            j = term_spins[m]
            de[j] = _local_delta(j, vals, coupling, spin_ptr, spin_terms)
            _tree_set(tree, size, j, _rate(beta, de[j]))


@njit(cache=True)
def _trajectory(spins, term_ptr, term_spins, coupling, spin_ptr, spin_terms, beta, n_events, seed):
    """Run ``n_events`` flips; returns (waiting times, flipped spins, energy changes)."""
    _seed(seed)
    vals, de, tree, size = _init(spins, term_ptr, term_spins, coupling, spin_ptr, spin_terms, beta)
    waits = np.zeros(n_events, dtype=np.float64)
    flipped = np.full(n_events, -1, dtype=np.int64)
    deltas = np.zeros(n_events, dtype=np.float64)
    for ev in range(n_events):
        i = _next_event(tree, size, de)
        if i < 0:
            break
        waits[ev] = -np.log(1.0 - np.random.random()) / tree[1]
        flipped[ev] = i
        deltas[ev] = de[i]
        _apply_flip(i, spins, vals, de, tree, size, term_ptr, term_spins, coupling, spin_ptr, spin_terms, beta)
    return waits, flipped, deltas


@njit(cache=True)
def _torus_step(a, b, side):
    """Signed shortest displacement from ``a`` to ``b`` around a ring."""
    d = (b - a) % side
    if d > side - d:
        return d - side
    return d


@njit(cache=True)
def _toric_species_fails(spins, vals, side, species):
    """Decode one species by matching on the torus and test the residual's winding."""
    n2 = side * side
    block = 2 * n2
    offset = species * block
    k = 0
    for t in range(n2):
        if vals[species * n2 + t] < 0:
            k += 1
    residual = np.zeros(block, dtype=np.uint8)
    for e in range(block):
        if spins[offset + e] < 0:
            residual[e] = 1
    if k > 0:
        where = np.empty(k, dtype=np.int64)
        j = 0
        for t in range(n2):
            if vals[species * n2 + t] < 0:
                where[j] = t
                j += 1
        m = k * (k - 1) // 2
        eu = np.empty(m, dtype=np.int64)
        ev = np.empty(m, dtype=np.int64)
        ew = np.empty(m, dtype=np.int64)
        j = 0
        for a in range(k):
            ra, ca = where[a] // side, where[a] % side
            for b in range(a + 1, k):
                rb, cb = where[b] // side, where[b] % side
                eu[j] = a
                ev[j] = b
                ew[j] = abs(_torus_step(ra, rb, side)) + abs(_torus_step(ca, cb, side))
                j += 1
        mate = min_weight_perfect_kernel(k, eu, ev, ew)
        for a in range(k):
            b = mate[a]
            if b < a:
                continue
            r, c = where[a] // side, where[a] % side
            rb, cb = where[b] // side, where[b] % side
            dr = _torus_step(r, rb, side)
            dc = _torus_step(c, cb, side)
            step = 1 if dr > 0 else -1
            for _ in range(abs(dr)):
                if species == 0:
                    # plaquette (r,c) -> (r+1,c) crosses h(r+1,c); -> (r-1,c) crosses h(r,c)
                    row = r + 1 if step > 0 else r
                    residual[(row % side) * side + c] ^= 1
                else:
                    # vertex (r,c) -> (r+1,c) along v(r,c); -> (r-1,c) along v(r-1,c)
                    row = r if step > 0 else r - 1
                    residual[n2 + (row % side) * side + c] ^= 1
                r = (r + step) % side
            step = 1 if dc > 0 else -1
            for _ in range(abs(dc)):
                if species == 0:
                    col = c + 1 if step > 0 else c
                    residual[n2 + r * side + (col % side)] ^= 1
                else:
                    col = c if step > 0 else c - 1
                    residual[r * side + (col % side)] ^= 1
                c = (c + step) % side
    # winding parities against the two conjugate logical supports
    w1 = 0
    w2 = 0
    for c in range(side):
        if species == 0:
            w1 ^= residual[c]  # h(0, c)
        else:
            w1 ^= residual[n2 + c]  # v(0, c)
    for r in range(side):
        if species == 0:
            w2 ^= residual[n2 + r * side]  # v(r, 0)
        else:
            w2 ^= residual[r * side]  # h(r, 0)
    return w1 == 1 or w2 == 1


@njit(cache=True)
def _lifetime(spins, term_ptr, term_spins, coupling, spin_ptr, spin_terms, beta, horizon, mode, side,
              checkpoints, seed):
    """Time of the first failed readout (or ``horizon``) and whether it failed.

    ``mode`` 0: majority vote, evaluated after every flip.  ``mode`` 1: toric
    decoding at the ``checkpoints`` times.
    """
    _seed(seed)
    vals, de, tree, size = _init(spins, term_ptr, term_spins, coupling, spin_ptr, spin_terms, beta)
    magnet = 0
    for i in range(spins.shape[0]):
        magnet += spins[i]
    t = 0.0
    cp = 0
    while True:
        total = tree[1]
        if total > 0.0:
            t_next = t - np.log(1.0 - np.random.random()) / total
        else:
            t_next = np.inf
        if mode == 1:
            while cp < checkpoints.shape[0] and checkpoints[cp] <= t_next and checkpoints[cp] <= horizon:
                if _toric_species_fails(spins, vals, side, 0) or _toric_species_fails(spins, vals, side, 1):
                    return checkpoints[cp], True
                cp += 1
        if t_next >= horizon:
            return horizon, False
        t = t_next
        i = _next_event(tree, size, de)
        if i < 0:
            return horizon, False
        _apply_flip(i, spins, vals, de, tree, size, term_ptr, term_spins, coupling, spin_ptr, spin_terms, beta)
        magnet += 2 * spins[i]
        if mode == 0 and magnet <= 0:
            return t, True


# public dynamics API ---------------------------------------------------------------


def _arrays(system: ClassicalSystem):
    return (
        system.term_ptr, system.term_spins, system.term_coupling, system.spin_ptr, system.spin_terms,
    )


def _check_beta(beta: float) -> float:
    beta = float(beta)
    if not beta > 0:
        raise ValueError("beta must be positive")
    return beta


def trajectory(system: ClassicalSystem, beta: float, n_events: int, seed: int) -> dict:
    """Evolve ``system`` in place for ``n_events`` flips and return the record.

    Keys: ``waits`` (exponential waiting times), ``flipped`` (spin indices,
    -1 once the system froze), ``deltas`` (energy change of each flip).
    """
    beta = _check_beta(beta)
    spins = system.spins.astype(np.int64)
    waits, flipped, deltas = _trajectory(spins, *_arrays(system), beta, int(n_events), int(seed))
    system.spins[:] = spins
    return {"waits": waits, "flipped": flipped, "deltas": deltas}


def checkpoint_times(horizon: float, per_octave: int = 4) -> np.ndarray:
    """Readout times ``2**(k / per_octave)`` from 1 up to the horizon."""
    if per_octave < 1:
        raise ValueError("need at least one checkpoint per octave")
    top = int(math.floor(per_octave * math.log2(max(horizon, 1.0))))
    return np.array([2.0 ** (k / per_octave) for k in range(top + 1)], dtype=np.float64)


@dataclass(frozen=True)
class LifetimeResult:
    time: float
    failed: bool  # False means the run reached the horizon (censored)


def lifetime_trial(
    system: ClassicalSystem,
    beta: float,
    seed: int,
    horizon: float = 2.0**20,
    per_octave: int = 4,
) -> LifetimeResult:
    """Start from the all-up ground state and run until the stored bit is lost.

    Ising systems are read out by majority vote after every flip (a tie
    counts as a failure).  The toric code is decoded by matching on the
    torus at geometrically spaced checkpoints; failure means either species'
    residual wraps the torus.
    """
    beta = _check_beta(beta)
    spins = np.ones(system.n_spins, dtype=np.int64)
    mode = 1 if system.kind == TORIC else 0
    cps = checkpoint_times(horizon, per_octave) if mode == 1 else np.zeros(0)
    # infinite beta is passed through: exp(-inf) = 0 freezes every uphill move
    time, failed = _lifetime(spins, *_arrays(system), beta, float(horizon), mode, system.size, cps, int(seed))
    return LifetimeResult(float(time), bool(failed))


def system_from_spec(kind: str, size: int, **couplings) -> ClassicalSystem:
    """Build a system from a config-style description."""
    if kind == ISING_1D:
        return ising_1d(size, couplings.get("J", 1.0), couplings.get("periodic", True))
    if kind == ISING_2D:
        return ising_2d(size, couplings.get("J", 1.0), couplings.get("periodic", True))
    if kind == TORIC:
        return toric_code(size, couplings.get("J_s", 1.0), couplings.get("J_p", 1.0))
    raise ValueError(f"unknown system kind {kind!r}")
