import math

import numpy as np
import pytest

from planar_code_lab.geometry import build_planar
from planar_code_lab.noise import (
    Depolarizing,
    IndependentXZ,
    Phenomenological,
    flip_probability,
    model_from_dict,
    model_to_dict,
    noisy_syndrome,
    sample,
    sample_bits,
    sample_measurement_flips,
)
from planar_code_lab.pauli import syndrome_of


def test_flip_probability():
    assert flip_probability(1.0, 0.0) == 0.0
    assert flip_probability(1.0, math.log(2)) == pytest.approx(0.25)
    assert flip_probability(3.0, 50.0) == pytest.approx(0.5)
    ts = np.linspace(0, 5, 50)
    vals = [flip_probability(0.7, t) for t in ts]
    assert all(a <= b for a, b in zip(vals, vals[1:])) and max(vals) < 0.5
    with pytest.raises(ValueError):
        flip_probability(-1, 1)
    with pytest.raises(ValueError):
        flip_probability(1, -1)


@pytest.mark.parametrize("bad", [-0.1, 1.5, float("nan")])
def test_probability_validation(bad):
    with pytest.raises(ValueError):
        IndependentXZ(bad)
    with pytest.raises(ValueError):
        Depolarizing(bad)
    with pytest.raises(ValueError):
        Phenomenological(0.1, bad)


def test_phenomenological_defaults():
    m = Phenomenological(0.03, rounds=4)
    assert m.q == 0.03
    with pytest.raises(ValueError):
        Phenomenological(0.1, rounds=0)


def test_extreme_channels():
    lay = build_planar(3)
    rng = np.random.default_rng(0)
    for _ in range(10):
        f, flips = sample(IndependentXZ(0.0, 0.0), lay, rng)
        assert not f and flips is None
    f, _ = sample(IndependentXZ(1.0, 0.0), lay, rng)
    assert f.x_bits().all() and not f.z


def test_seed_determinism():
    lay = build_planar(5)
    for model in (IndependentXZ(0.1, 0.05), Depolarizing(0.2), Phenomenological(0.05, rounds=3)):
        a = sample(model, lay, np.random.default_rng(42))
        b = sample(model, lay, np.random.default_rng(42))
        assert a[0] == b[0]
        if a[1] is not None:
            assert a[1].increments == b[1].increments
            assert np.array_equal(a[1].m_flips, b[1].m_flips)


def _within(count, trials, prob, k=4.0):
    se = math.sqrt(prob * (1 - prob) / trials)
    return abs(count / trials - prob) <= k * se + 1e-12


def test_depolarizing_marginals():
    rng = np.random.default_rng(7)
    p = 0.3
    x, z = sample_bits(Depolarizing(p), 1, 100_000, rng)
    x, z = x[:, 0].astype(bool), z[:, 0].astype(bool)
    assert _within(x.sum(), len(x), 2 * p / 3)
    assert _within(z.sum(), len(z), 2 * p / 3)
    for pattern, prob in [((1, 0), p / 3), ((1, 1), p / 3), ((0, 1), p / 3), ((0, 0), 1 - p)]:
        hits = ((x == bool(pattern[0])) & (z == bool(pattern[1]))).sum()
        assert _within(hits, len(x), prob)


def test_independent_marginals():
    rng = np.random.default_rng(8)
    x, z = sample_bits(IndependentXZ(0.12, 0.07), 4, 25_000, rng)
    assert _within(x.sum(), x.size, 0.12)
    assert _within(z.sum(), z.size, 0.07)
    both = (x & z).sum()
    assert _within(both, x.size, 0.12 * 0.07)


def test_phenomenological_marginals():
    rng = np.random.default_rng(9)
    m = Phenomenological(0.04, 0.09, rounds=5)
    x, z = sample_bits(m, 2, 10_000, rng)
    mf, ef = sample_measurement_flips(m, 2, 2, 10_000, rng)
    assert x.shape == (10_000, 5, 2)
    assert _within(x.sum(), x.size, 0.04)
    assert _within(z.sum(), z.size, 0.04)
    assert _within(mf.sum(), mf.size, 0.09)
    assert _within(ef.sum(), ef.size, 0.09)


def test_noisy_syndrome_rounds():
    lay = build_planar(5)
    model = Phenomenological(0.05, rounds=4)
    frame, record = sample(model, lay, np.random.default_rng(2))
    syn = noisy_syndrome(record, lay)
    assert len(syn.rounds) == 5
    assert syn.rounds[-1] == (syndrome_of(frame, lay).m_defects, syndrome_of(frame, lay).e_defects)
    noiseless = Phenomenological(0.05, 0.0, rounds=4)
    frame, record = sample(noiseless, lay, np.random.default_rng(2))
    syn = noisy_syndrome(record, lay)
    acc = None
    for r, inc in enumerate(record.increments):
        acc = inc if acc is None else acc ^ inc
        assert syn.rounds[r][0] == syndrome_of(acc, lay).m_defects


def test_model_dict_round_trip():
    for m in (IndependentXZ(0.1, 0.2), Depolarizing(0.15), Phenomenological(0.02, 0.03, 7)):
        assert model_from_dict(model_to_dict(m)) == m
    with pytest.raises(ValueError):
        model_from_dict({"kind": "mystery"})
    with pytest.raises(ValueError):
        model_from_dict({"kind": "depolarizing", "p": 0.1, "extra": 1})
