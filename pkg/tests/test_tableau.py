import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from planar_code_lab.pauli import PauliFrame
from planar_code_lab.tableau import Tableau, parse_pauli
from statevector import StateVector

GATES_1 = ["h", "s", "s_dag", "pauli_x", "pauli_y", "pauli_z"]
GATES_2 = ["cnot", "cz"]


def random_letters(rng, n):
    return "".join(rng.choice(list("IXYZ"), size=n))


def test_basic_measurements():
    t = Tableau(1, rng=0)
    assert t.measure(0, "Z") == (1, True)
    out, det = t.measure(0, "X")
    assert out in (1, -1) and not det
    assert t.measure(0, "X") == (out, True)
    t = Tableau(3, rng=1)
    t.pauli_x(1)
    assert t.measure_pauli("IZI") == (-1, True)
    assert t.measure_pauli("ZZZ") == (-1, True)
    assert t.expectation("XII") == 0


def test_bell_pair():
    t = Tableau(2, rng=3)
    t.h(0)
    t.cnot(0, 1)
    assert t.expectation("XX") == 1
    assert t.expectation("ZZ") == 1
    assert t.expectation("YY") == -1
    assert t.expectation("ZI") == 0
    a, _ = t.measure(0)
    assert t.measure(1) == (a, True)


def test_parse_forms_agree():
    n = 4
    forms = ["XIYZ", {0: "X", 2: "Y", 3: "Z"}, PauliFrame.from_paulis(4, {0: "X", 2: "Y", 3: "Z"})]
    parsed = [parse_pauli(f, n) for f in forms]
    for x, z in parsed[1:]:
        assert np.array_equal(x, parsed[0][0]) and np.array_equal(z, parsed[0][1])
    with pytest.raises(ValueError):
        parse_pauli("XQ", 2)
    with pytest.raises(ValueError):
        parse_pauli("XX", 3)


def test_forced_outcome():
    t = Tableau(1, rng=0)
    assert t.measure(0, "X", forced=-1) == (-1, False)
    assert t.expectation("X") == -1
    with pytest.raises(ValueError):
        Tableau(1).measure(0, "X", forced=0)


def scramble(t, rng, depth):
    n = t.n
    for _ in range(depth):
        if n > 1 and rng.random() < 0.4:
            a, b = rng.choice(n, size=2, replace=False)
            getattr(t, GATES_2[rng.integers(2)])(int(a), int(b))
        else:
            getattr(t, GATES_1[rng.integers(len(GATES_1))])(int(rng.integers(n)))


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_gate_algebra(n, seed):
    rng = np.random.default_rng(seed)
    t = Tableau(n, rng=seed)
    scramble(t, rng, 20)
    ref = t.copy()
    q = int(rng.integers(n))
    t.h(q)
    t.h(q)
    assert t.same_state(ref)
    t.s(q)
    t.s_dag(q)
    assert t.same_state(ref)
    if n > 1:
        a, b = (int(v) for v in rng.choice(n, size=2, replace=False))
        t.cnot(a, b)
        t.cnot(a, b)
        assert t.same_state(ref)
        u = t.copy()
        t.cz(a, b)
        u.cz(b, a)
        assert t.same_state(u)
    assert t.is_consistent()


def test_against_state_vector_oracle():
    """500 random circuits: identical expectations and branch probabilities."""
    rng = np.random.default_rng(2024)
    for circuit in range(500):
        n = int(rng.integers(1, 11))
        t = Tableau(n, rng=circuit)
        sv = StateVector(n)
        for _ in range(int(rng.integers(5, 40))):
            roll = rng.random()
            if roll < 0.15:
                letters = random_letters(rng, n)
                if set(letters) == {"I"}:
                    continue
                outcome, det = t.measure_pauli(letters)
                prob = sv.project(letters, outcome)
                assert prob == pytest.approx(1.0 if det else 0.5, abs=1e-9)
            elif n > 1 and roll < 0.5:
                a, b = (int(v) for v in rng.choice(n, size=2, replace=False))
                name = GATES_2[rng.integers(2)]
                getattr(t, name)(a, b)
                sv.gate(name, a, b)
            else:
                name = GATES_1[rng.integers(len(GATES_1))]
                q = int(rng.integers(n))
                getattr(t, name)(q)
                sv.gate(name, q)
        assert t.is_consistent()
        for _ in range(8):
            letters = random_letters(rng, n)
            assert t.expectation(letters) == pytest.approx(sv.expectation(letters), abs=1e-9)


def test_apply_pauli_matches_gates():
    rng = np.random.default_rng(5)
    t = Tableau(5, rng=5)
    scramble(t, rng, 30)
    u = t.copy()
    t.apply_pauli("XYZIX")
    u.pauli_x(0)
    u.pauli_y(1)
    u.pauli_z(2)
    u.pauli_x(4)
    assert t.same_state(u)


def test_reset():
    t = Tableau(2, rng=9)
    t.h(0)
    t.cnot(0, 1)
    t.reset(0)
    assert t.expectation("ZI") == 1
    t.reset(1, "X")
    assert t.expectation("IX") == 1
