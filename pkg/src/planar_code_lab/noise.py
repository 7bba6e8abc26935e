"""Noise channels: iid bit/phase flips, depolarizing, and phenomenological rounds."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .geometry import CodeLayout
from .pauli import PauliFrame, Syndrome, syndrome_of


def _check_prob(name: str, value: float) -> None:
    if not (isinstance(value, (int, float)) and 0.0 <= value <= 1.0):
        raise ValueError(f"{name} must be a probability in [0, 1], got {value!r}")


@dataclass(frozen=True)
class IndependentXZ:
    """sigma^x with probability ``p`` and, independently, sigma^z with ``p_prime``."""

    p: float
    p_prime: float = 0.0

    def __post_init__(self):
        _check_prob("p", self.p)
        _check_prob("p_prime", self.p_prime)


@dataclass(frozen=True)
class Depolarizing:
    """Each of sigma^x, sigma^y, sigma^z with probability ``p / 3``."""

    p: float

    def __post_init__(self):
        _check_prob("p", self.p)


@dataclass(frozen=True)
class Phenomenological:
    """Per-round bit and phase flips (each ``p``) plus syndrome-bit flips ``q``.

    ``q`` defaults to ``p``.  A noiseless round is appended after ``rounds``
    noisy ones so the final syndrome is trustworthy.
    """

    p: float
    q: Optional[float] = None
    rounds: int = 1

    def __post_init__(self):
        _check_prob("p", self.p)
        if self.q is None:
            object.__setattr__(self, "q", self.p)
        _check_prob("q", self.q)
        if not isinstance(self.rounds, int) or self.rounds < 1:
            raise ValueError(f"rounds must be a positive integer, got {self.rounds!r}")


NoiseModel = Union[IndependentXZ, Depolarizing, Phenomenological]


def model_from_dict(spec: dict) -> NoiseModel:
    kind = spec.get("kind")
    args = {k: v for k, v in spec.items() if k != "kind"}
    try:
        if kind == "independent_xz":
            return IndependentXZ(**args)
        if kind == "depolarizing":
            return Depolarizing(**args)
        if kind == "phenomenological":
            return Phenomenological(**args)
    except TypeError as exc:
        raise ValueError(f"bad parameters for noise model {kind!r}: {exc}") from None
    raise ValueError(f"unknown noise model kind {kind!r}")


def model_to_dict(model: NoiseModel) -> dict:
    if isinstance(model, IndependentXZ):
        return {"kind": "independent_xz", "p": model.p, "p_prime": model.p_prime}
    if isinstance(model, Depolarizing):
        return {"kind": "depolarizing", "p": model.p}
    return {"kind": "phenomenological", "p": model.p, "q": model.q, "rounds": model.rounds}


def flip_probability(gamma: float, t: float) -> float:
    """Probability of an odd number of flips after time ``t`` at rate ``gamma``."""
    if gamma < 0 or t < 0:
        raise ValueError("rate and time must be non-negative")
    return -0.5 * math.expm1(-gamma * t)


def sample_bits(model: NoiseModel, n_qubits: int, trials: int, rng: np.random.Generator):
    """Vectorised draw of ``trials`` error patterns.

    Returns ``(x, z)`` uint8 arrays of shape ``(trials, n_qubits)`` for the
    memory channels.  For :class:`Phenomenological` the arrays gain a round
    axis, ``(trials, rounds, n_qubits)``, holding per-round increments.
    """
    if isinstance(model, IndependentXZ):
        x = rng.random((trials, n_qubits)) < model.p
        z = rng.random((trials, n_qubits)) < model.p_prime
    elif isinstance(model, Depolarizing):
        u = rng.random((trials, n_qubits))
        third = model.p / 3.0
        x = u < 2.0 * third
        z = (u >= third) & (u < model.p)
    elif isinstance(model, Phenomenological):
        shape = (trials, model.rounds, n_qubits)
        x = rng.random(shape) < model.p
        z = rng.random(shape) < model.p
    else:
        raise TypeError(f"unsupported noise model {model!r}")
    return x.astype(np.uint8), z.astype(np.uint8)


def sample_measurement_flips(model: Phenomenological, n_plaq: int, n_vert: int, trials: int, rng: np.random.Generator):
    """Syndrome-bit flip masks ``(m_flips, e_flips)`` of shape ``(trials, rounds, n)``."""
    m = rng.random((trials, model.rounds, n_plaq)) < model.q
    e = rng.random((trials, model.rounds, n_vert)) < model.q
    return m.astype(np.uint8), e.astype(np.uint8)


@dataclass(frozen=True)
class RoundRecord:
    increments: tuple[PauliFrame, ...]
    m_flips: np.ndarray
    e_flips: np.ndarray


def sample(model: NoiseModel, layout: CodeLayout, rng: np.random.Generator):
    """One error configuration: ``(frame, measurement_flips)``.

    ``measurement_flips`` is ``None`` except for :class:`Phenomenological`,
    where it is a :class:`RoundRecord`; ``frame`` is then the accumulated
    error after all rounds.
    """
    n = layout.n_qubits
    x, z = sample_bits(model, n, 1, rng)
    if not isinstance(model, Phenomenological):
        return PauliFrame.from_arrays(x[0], z[0]), None
    m, e = sample_measurement_flips(model, len(layout.plaquettes), len(layout.vertices), 1, rng)
    incs = tuple(PauliFrame.from_arrays(x[0, r], z[0, r]) for r in range(model.rounds))
    total = PauliFrame.empty(n)
    for inc in incs:
        total = total ^ inc
    return total, RoundRecord(incs, m[0].astype(bool), e[0].astype(bool))


def noisy_syndrome(record: RoundRecord, layout: CodeLayout) -> Syndrome:
    """Measured syndromes of every round (flips applied) plus a final perfect round."""
    n = layout.n_qubits
    acc = PauliFrame.empty(n)
    rounds = []
    for r, inc in enumerate(record.increments):
        acc = acc ^ inc
        true = syndrome_of(acc, layout)
        m = true.m_defects ^ frozenset(np.flatnonzero(record.m_flips[r]).tolist())
        e = true.e_defects ^ frozenset(np.flatnonzero(record.e_flips[r]).tolist())
        rounds.append((frozenset(m), frozenset(e)))
    final = syndrome_of(acc, layout)
    rounds.append((final.m_defects, final.e_defects))
    return Syndrome(final.m_defects, final.e_defects, tuple(rounds))
