from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from idconv.rmt_sampler import haar_unitary
from idconv.symcomb import CapExceeded, Permutation, all_permutations, symmetric_group
from idconv.weingarten import (
    GroupAlgebraElement,
    central_multiply,
    class_structure_constants,
    conditional_expectation,
    kron_all,
    partitions,
    permutation_operator,
    phi_identity,
    phi_of_operator,
    phi_of_tensor,
    represent,
    wg_class_values,
    wg_element,
)

P = Permutation.from_cycles


def random_matrix(rng, N):
    return rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))


def random_element(rng, n):
    return GroupAlgebraElement(n, rng.standard_normal(symmetric_group(n).order) + 1j * rng.standard_normal(symmetric_group(n).order))


def test_group_algebra_axioms():
    rng = np.random.default_rng(1)
    for n in (1, 2, 3, 4):
        x, y, z = (random_element(rng, n) for _ in range(3))
        one = GroupAlgebraElement.unit(n)
        assert ((x * y) * z).allclose(x * (y * z), 1e-10)
        assert (one * x).allclose(x) and (x * one).allclose(x)
        assert (x * (y + z)).allclose(x * y + x * z, 1e-10)


def test_convolution_matches_permutation_product():
    for a in all_permutations(3):
        for b in all_permutations(3):
            prod = GroupAlgebraElement.basis(a) * GroupAlgebraElement.basis(b)
            assert prod.terms() == {a * b: 1}


@pytest.mark.parametrize("n", range(1, 7))
def test_centre_dimension_and_commutativity(n):
    c = class_structure_constants(n)
    p = len(list(partitions(n)))
    assert c.shape == (p, p, p)
    assert np.array_equal(c, c.transpose(1, 0, 2))
    rng = np.random.default_rng(n)
    x = rng.standard_normal(p)
    y = rng.standard_normal(p)
    X = GroupAlgebraElement.from_class_values(n, x)
    Y = GroupAlgebraElement.from_class_values(n, y)
    XY = X * Y
    assert XY.is_central(1e-10)
    assert np.allclose(XY.class_values(), central_multiply(n, x, y))


def test_json_round_trip():
    x = GroupAlgebraElement.from_terms(3, {P(3, (1, 2)): 1.5 - 2j, Permutation.identity(3): 0.25})
    back = GroupAlgebraElement.from_json(3, x.to_json())
    assert back.allclose(x, 0)
    assert x.to_json()[0] == {"perm": [1, 2, 3], "re": 0.25, "im": 0.0}


# Φ


def test_phi_examples():
    rng = np.random.default_rng(2)
    N = 3
    A, B = random_matrix(rng, N), random_matrix(rng, N)
    assert phi_of_tensor([np.eye(N)] * 3).allclose(phi_identity(3, N))
    assert phi_identity(3, N)[P(3, (1, 2))] == N ** 2
    one = phi_of_tensor([A])
    assert abs(one[Permutation.identity(1)] - np.trace(A)) < 1e-12
    two = phi_of_tensor([A, B])
    assert abs(two[Permutation.identity(2)] - np.trace(A) * np.trace(B)) < 1e-12
    assert abs(two[P(2, (1, 2))] - np.trace(A @ B)) < 1e-12


def test_phi_dimension_mismatch():
    with pytest.raises(ValueError):
        phi_of_tensor([np.eye(2), np.eye(3)])
    with pytest.raises(CapExceeded):
        phi_of_tensor([np.eye(1)] * 9)


@pytest.mark.parametrize("n,N", [(2, 2), (3, 2), (2, 3), (3, 3)])
def test_phi_closed_form_matches_operator_trace(n, N):
    rng = np.random.default_rng(10 * n + N)
    mats = [random_matrix(rng, N) for _ in range(n)]
    assert phi_of_tensor(mats).allclose(phi_of_operator(kron_all(mats), n, N), 1e-9)


@given(st.integers(0, 2**32 - 1))
def test_cycle_trace_rotation_invariant(seed):
    rng = np.random.default_rng(seed)
    mats = [random_matrix(rng, 3) for _ in range(3)]
    rotated = mats[1:] + mats[:1]
    x, y = phi_of_tensor(mats), phi_of_tensor(rotated)
    # rotating the factors conjugates by the shift, which preserves the cycle (1 2 3)
    c = P(3, (1, 2, 3))
    assert abs(x[c] - y[c]) < 1e-9 * max(1.0, abs(x[c]))


def test_permutation_operator_is_representation():
    N = 2
    for a in all_permutations(3):
        for b in all_permutations(3):
            lhs = permutation_operator(a * b, N)
            rhs = permutation_operator(a, N) @ permutation_operator(b, N)
            assert np.array_equal(lhs, rhs)


# Wg


def test_wg_closed_forms():
    for N in range(1, 7):
        w1 = wg_element(1, N)
        assert abs(w1[Permutation.identity(1)] - 1 / N) < 1e-15
    for N in range(2, 7):
        w2 = wg_element(2, N)
        assert abs(w2[Permutation.identity(2)] - 1 / (N * N - 1)) < 1e-15
        assert abs(w2[P(2, (1, 2))] + 1 / (N * (N * N - 1))) < 1e-15


@pytest.mark.parametrize("N", range(1, 6))
def test_wg_inverts_phi(N):
    for n in range(1, N + 1):
        vals, method = wg_class_values(n, N)
        assert method == "inverse"
        assert all(isinstance(v, Fraction) for v in vals)
        phi = [N ** len(t) for t in symmetric_group(n).class_types]
        prod = central_multiply(n, phi, list(vals))
        ident = [Fraction(1) if t == (1,) * n else Fraction(0) for t in symmetric_group(n).class_types]
        assert prod == ident
        w = wg_element(n, N)
        assert (phi_identity(n, N) * w).allclose(GroupAlgebraElement.unit(n), 1e-12)
        assert w.is_central()
        assert w.metadata == {"N": N, "method": "inverse"}


@pytest.mark.parametrize("n,N", [(2, 1), (3, 1), (3, 2), (4, 2), (4, 3), (5, 2), (5, 4)])
def test_pseudo_inverse(n, N):
    phi = phi_identity(n, N)
    w = wg_element(n, N)
    assert w.metadata["method"] == "spectral-pseudo-inverse"
    assert (phi * w * phi).allclose(phi, 1e-9 * phi.l1_norm())
    assert (w * phi * w).allclose(w, 1e-9)
    assert w.is_central()


def test_wg_is_inverse_on_small_representation():
    # for N < n the represented product ρ(Φ(Id) Wg) is still the identity operator
    for n, N in [(3, 2), (4, 2)]:
        op = represent(phi_identity(n, N) * wg_element(n, N), N)
        assert np.allclose(op, np.eye(N ** n), atol=1e-10)


def test_wg_asymptotics():
    n = 3
    for sigma in [Permutation.identity(3), P(3, (1, 2)), P(3, (1, 2, 3))]:
        scaled = [N ** (n + sigma.norm()) * wg_element(n, N)[sigma] for N in range(n, n + 7)]
        assert max(abs(v) for v in scaled) < 10
    lead = [N ** 3 * wg_element(3, N)[Permutation.identity(3)] for N in range(3, 9)]
    gaps = [abs(v - 1) for v in lead]
    assert all(a > b for a, b in zip(gaps, gaps[1:]))
    assert all(3 < g * N * N < 6 for g, N in zip(gaps, range(3, 9)))
    for N in range(3, 9):
        closed = Fraction(N * N - 2, N * (N * N - 1) * (N * N - 4))
        assert wg_class_values(3, N)[0][symmetric_group(3).class_types.index((1, 1, 1))] == closed


def test_wg_cap():
    with pytest.raises(CapExceeded):
        wg_element(9, 9)


# conditional expectation


def test_expectation_examples():
    rng = np.random.default_rng(3)
    N = 3
    A, B = random_matrix(rng, N), random_matrix(rng, N)
    e1 = conditional_expectation([A])
    assert abs(e1[Permutation.identity(1)] - np.trace(A) / N) < 1e-12
    e2 = conditional_expectation([A, B])
    tA, tB, tAB = np.trace(A), np.trace(B), np.trace(A @ B)
    assert abs(e2[Permutation.identity(2)] - (tA * tB - tAB / N) / (N * N - 1)) < 1e-12
    assert abs(e2[P(2, (1, 2))] - (tAB - tA * tB / N) / (N * N - 1)) < 1e-12


def test_expectation_fixes_commutant():
    rng = np.random.default_rng(4)
    for n, N in [(2, 2), (2, 3), (3, 3)]:
        x = random_element(rng, n)
        got = conditional_expectation_of_operator(represent(x, N), n, N)
        assert got.allclose(x, 1e-9)


def conditional_expectation_of_operator(A, n, N):
    return phi_of_operator(A, n, N) * wg_element(n, N)


@pytest.mark.parametrize("n,N", [(1, 2), (2, 2), (2, 3), (3, 2), (3, 4)])
def test_expectation_is_projection(n, N):
    rng = np.random.default_rng(n * 7 + N)
    A = random_matrix(rng, N ** n)
    once = represent(conditional_expectation_of_operator(A, n, N), N)
    twice = represent(conditional_expectation_of_operator(once, n, N), N)
    assert np.allclose(once, twice, atol=1e-10)


def test_expectation_matches_haar_average():
    rng = np.random.default_rng(5)
    N, n, S = 2, 2, 40000
    mats = [random_matrix(rng, N) for _ in range(n)]
    A = kron_all(mats)
    U = haar_unitary(rng, S, N)
    G = np.einsum("sij,skl->sikjl", U, U).reshape(S, N * N, N * N)
    avg = np.einsum("sij,jk,slk->il", G, A, G.conj()) / S
    exact = represent(conditional_expectation(mats), N)
    assert np.max(np.abs(avg - exact)) < 0.1
