import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from steaneqec.pauli import PauliString
from steaneqec.tableau import Tableau

from oracle import H as HMAT
from oracle import P0, P1, PAULIS, cnot, embed

S = np.diag([1, 1j])


def gate_lists(n):
    one = st.tuples(st.sampled_from("hsXYZ"), st.integers(0, n - 1))
    if n == 1:
        return st.lists(one, max_size=30)
    two = st.tuples(st.just("cx"), st.integers(0, n - 1), st.integers(0, n - 2))
    return st.lists(st.one_of(one, two), max_size=30)


def run_both(n, gates):
    tab = Tableau(n)
    psi = np.zeros(2**n, complex)
    psi[0] = 1
    for g in gates:
        if g[0] == "cx":
            a, t = g[1], g[2] + (g[2] >= g[1])
            tab.cnot(a, t)
            psi = cnot(n, a, t) @ psi
        else:
            kind, q = g
            if kind == "h":
                tab.h(q)
                U = HMAT
            elif kind == "s":
                tab.s(q)
                U = S
            else:
                tab.pauli(q, kind)
                U = PAULIS[kind]
            psi = embed(n, {q: U}) @ psi
    return tab, psi


def dense(p: PauliString):
    return p.sign * embed(p.n, {q: PAULIS[p.letter(q)] for q in range(p.n)})


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 4).flatmap(lambda n: st.tuples(st.just(n), gate_lists(n))))
def test_stabilizers_fix_the_statevector(case):
    n, gates = case
    tab, psi = run_both(n, gates)
    for p in tab.stabilizers():
        assert np.allclose(dense(p) @ psi, psi)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 4).flatmap(lambda n: st.tuples(st.just(n), gate_lists(n), st.integers(0, 3))))
def test_measurement_statistics_match(case):
    n, gates, q = case
    q %= n
    tab, psi = run_both(n, gates)
    p1 = float(np.real(psi.conj() @ embed(n, {q: P1}) @ psi))
    if tab.is_deterministic(q):
        assert math.isclose(p1, float(tab.copy().measure(q)), abs_tol=1e-9)
    else:
        assert math.isclose(p1, 0.5, abs_tol=1e-9)
        for forced in (0, 1):
            t = tab.copy()
            assert t.measure(q, forced=forced) == forced
            assert t.is_deterministic(q) and t.measure(q) == forced


def test_reset_and_x_measurement():
    t = Tableau(2)
    t.h(0)
    t.cnot(0, 1)
    t.reset(0)
    assert t.measure(0) == 0
    # the reset collapsed the pair, so qubit 1 is now a Z eigenstate
    assert t.is_deterministic(1)
    t.reset(1)
    t.h(1)
    assert t.measure_x(1) == 0
    assert t.measure_x(0, forced=1) == 1
    assert t.measure_x(0) == 1


def test_expectation_of_bell_stabilizers():
    t = Tableau(2)
    t.h(0)
    t.cnot(0, 1)
    assert t.expectation(PauliString.parse("X1 X2", 2)) == 1
    assert t.expectation(PauliString.parse("Z1 Z2", 2)) == 1
    assert t.expectation(PauliString.parse("Y1 Y2", 2)) == -1
    assert t.expectation(PauliString.parse("Z1", 2)) == 0


def test_canonical_form_identifies_states():
    a, b = Tableau(2), Tableau(2)
    a.h(0)
    a.cnot(0, 1)
    b.h(1)
    b.cnot(1, 0)
    assert a.canonical_form() == b.canonical_form()
    b.pauli(0, "Z")
    assert a.canonical_form() != b.canonical_form()


def test_rng_draws_random_outcomes():
    rng = np.random.default_rng(3)
    outs = []
    for _ in range(400):
        t = Tableau(1)
        t.h(0)
        outs.append(t.measure(0, rng))
    assert 150 < sum(outs) < 250
