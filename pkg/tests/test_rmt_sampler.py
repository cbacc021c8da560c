from __future__ import annotations

import cmath
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from idconv.finiten import HermitianModel, UnitaryModel, gamma_n, normalized_exact, pi_n
from idconv.infdiv import AtomicMeasure, free_poisson_mult, free_unitary_bm, semicircle
from idconv.rmt_sampler import (
    EmpiricalMoments,
    SampleConfig,
    empirical_spectral_moments,
    empirical_trace_products,
    expi_eigh,
    expi_hermitian,
    haar_unitary,
    polar_unitary,
    sample,
    sample_hermitian,
    sample_unitary,
    split_trace,
    standard_hermitian,
    step_doubling_trace_products,
    trace_products,
)
from idconv.symcomb import Permutation

P = Permutation.from_cycles

UNITARY_MODELS = [
    UnitaryModel(3, 0.4, 0.3, 0.8),
    UnitaryModel(4, 0.0, 0.0, 0.0, AtomicMeasure.circle((2.0, 1.5), (-0.5, 0.7))),
    UnitaryModel(3, -1.0, 0.5, 0.2, AtomicMeasure.circle((math.pi, 1.0))),
    UnitaryModel(5, haar=True),
]


def within(est: complex, se: float, want: complex, k: float = 4.0) -> bool:
    return abs(est - want) <= k * se + 1e-12


def ks_statistic(x: np.ndarray, y: np.ndarray) -> float:
    grid = np.sort(np.concatenate([x, y]))
    fx = np.searchsorted(np.sort(x), grid, side="right") / len(x)
    fy = np.searchsorted(np.sort(y), grid, side="right") / len(y)
    return float(np.max(np.abs(fx - fy)))


def tr_basis(N: int) -> list[np.ndarray]:
    """An orthonormal basis of ℋ_N for ⟨X, Y⟩ = Tr(XY)."""
    out = []
    for i in range(N):
        for j in range(i + 1, N):
            E = np.zeros((N, N), dtype=complex)
            E[i, j] = E[j, i] = 1 / math.sqrt(2)
            out.append(E)
            F = np.zeros((N, N), dtype=complex)
            F[i, j], F[j, i] = -1j / math.sqrt(2), 1j / math.sqrt(2)
            out.append(F)
        D = np.zeros((N, N), dtype=complex)
        D[i, i] = 1
        out.append(D)
    return out


# building blocks


def test_standard_hermitian_covariance():
    rng = np.random.default_rng(0)
    for N in (1, 2, 3, 4):
        H = standard_hermitian(rng, 40000, N)
        coords = np.stack([np.einsum("sij,ji->s", H, E).real for E in tr_basis(N)], axis=1)
        cov = coords.T @ coords / len(coords)
        assert np.max(np.abs(cov - np.eye(N * N))) < 0.04


def test_split_trace():
    rng = np.random.default_rng(1)
    H = standard_hermitian(rng, 5, 3)
    H0, t = split_trace(H)
    assert np.allclose(np.trace(H0, axis1=1, axis2=2), 0)
    assert np.allclose(H0 + t[:, None, None] * np.eye(3), H)


@given(st.integers(0, 2**32 - 1), st.floats(0.01, 3.0), st.integers(1, 6))
def test_taylor_exponential_matches_eigh(seed, scale, N):
    rng = np.random.default_rng(seed)
    X = standard_hermitian(rng, 4, N)
    X *= scale / np.sqrt(np.max(np.sum(np.abs(X) ** 2, axis=(1, 2))))
    assert np.max(np.abs(expi_hermitian(X) - expi_eigh(X))) < 1e-13


def test_haar_and_polar_are_unitary():
    rng = np.random.default_rng(2)
    U = haar_unitary(rng, 50, 4)
    eye = np.eye(4)
    assert np.max(np.abs(np.conj(np.swapaxes(U, 1, 2)) @ U - eye)) < 1e-12
    A = U + 1e-6 * rng.standard_normal(U.shape)
    W = polar_unitary(A)
    assert np.max(np.abs(np.conj(np.swapaxes(W, 1, 2)) @ W - eye)) < 1e-12


def test_empirical_moments_of_constant():
    vals = np.full((7, 2), 0.1 + 0.3j)
    em = EmpiricalMoments.from_values(vals, ("a", "b"))
    assert np.all(em.estimates == 0.1 + 0.3j) and np.all(em.stderr == 0)
    js = em.to_json()
    assert js["n_samples"] == 7 and js["rows"][0] == {"label": "a", "re": 0.1, "im": 0.3, "stderr": 0.0}


def test_config_validation():
    with pytest.raises(ValueError):
        SampleConfig(UnitaryModel(2), 0)
    with pytest.raises(ValueError):
        SampleConfig(UnitaryModel(2), 5, brownian_steps=0)
    with pytest.raises(TypeError):
        sample_hermitian(SampleConfig(UnitaryModel(2), 5))
    with pytest.raises(TypeError):
        sample_unitary(SampleConfig(HermitianModel(2), 5))


# structural invariants


@pytest.mark.parametrize("model", UNITARY_MODELS, ids=["brownian", "jumps", "mixed", "haar"])
def test_samples_are_unitary(model):
    U = sample_unitary(SampleConfig(model, 64, brownian_steps=50, seed=3))
    N = model.N
    assert U.shape == (64, N, N)
    assert np.max(np.abs(np.conj(np.swapaxes(U, 1, 2)) @ U - np.eye(N))) <= 1e-10


def test_samples_are_hermitian():
    m = HermitianModel(5, 0.3, 1.2, AtomicMeasure.real((0.5, 0.8), (-3.0, 0.4)))
    H = sample_hermitian(SampleConfig(m, 64, seed=4))
    assert np.array_equal(H, np.conj(np.swapaxes(H, 1, 2)))


def test_deterministic_models():
    assert np.array_equal(sample_hermitian(SampleConfig(HermitianModel(3), 4)), np.zeros((4, 3, 3)))
    y0 = 0.7
    U = sample_unitary(SampleConfig(UnitaryModel(4, y0), 6, brownian_steps=17))
    assert np.max(np.abs(U - cmath.exp(1j * y0) * np.eye(4))) < 1e-15
    em = empirical_trace_products(SampleConfig(UnitaryModel(4, y0), 50), (2,))
    assert abs(em.estimates[0] - cmath.exp(2j * y0)) < 1e-15 and em.stderr[0] < 1e-15
    em = empirical_spectral_moments(SampleConfig(UnitaryModel(3), 20), 3)
    assert np.all(em.estimates == 1)


def test_single_dimension_semicircle_is_normal():
    H = sample_hermitian(SampleConfig(pi_n(semicircle(1.0), 1), 40000, seed=5))[:, 0, 0].real
    se = 1 / math.sqrt(len(H))
    assert abs(H.mean()) < 4 * se
    assert abs(np.mean(H**2) - 1) < 4 * math.sqrt(2) * se
    assert abs(np.mean(H**4) - 3) < 4 * math.sqrt(96) * se


def test_hermitian_covariance_quadratic_form():
    N, a, S = 3, 1.5, 40000
    H = sample_hermitian(SampleConfig(HermitianModel(N, 0.0, a), S, seed=6))
    rng = np.random.default_rng(7)
    for _ in range(3):
        X = standard_hermitian(rng, 1, N)[0]
        t = np.trace(X).real / N
        X0 = X - t * np.eye(N)
        want = a / (N + 1) * np.sum(np.abs(X0) ** 2) + a * N * t * t
        got = np.var(np.einsum("sij,ji->s", H, X).real)
        assert abs(got - want) < 0.05 * want


def test_gaussian_hermitian_moments_at_finite_n():
    N, a = 6, 1.0
    em = empirical_spectral_moments(SampleConfig(HermitianModel(N, 0.0, a), 20000, seed=8), 4)
    assert within(em.estimates[1], em.stderr[1], a)
    assert within(em.estimates[3], em.stderr[3], 2 * a * a * (N + 2) / (N + 1))


def test_hermitian_jump_mean():
    # E[H] = (η + Σ_{|x|>1} w x) I, since small jumps are compensated
    m = HermitianModel(3, 0.2, 0.0, AtomicMeasure.real((0.5, 0.8), (-3.0, 0.4)))
    em = empirical_spectral_moments(SampleConfig(m, 20000, seed=9), 1)
    assert within(em.estimates[0], em.stderr[0], 0.2 - 3.0 * 0.4)


# agreement with the exact engine


def test_unitary_bm_first_moment():
    model = gamma_n(free_unitary_bm(1.0), 8)
    em = empirical_trace_products(SampleConfig(model, 10000, brownian_steps=200, seed=10), (1,))
    assert within(em.estimates[0], em.stderr[0], math.exp(-0.5))


def test_poisson_atom_at_minus_one():
    model = gamma_n(free_poisson_mult(1.0, AtomicMeasure.circle((math.pi, 1.0))), 2)
    em = empirical_trace_products(SampleConfig(model, 40000, seed=11), [(1,), (2,), (1, 1)])
    for row, sigma in enumerate([Permutation.identity(1), P(2, (1, 2)), Permutation.identity(2)]):
        assert within(em.estimates[row], em.stderr[row], normalized_exact(model, sigma))


def test_mixed_model_against_exact():
    model = UNITARY_MODELS[2]
    em = empirical_trace_products(SampleConfig(model, 20000, brownian_steps=100, seed=12), [(1,), (2,), (1, 1)])
    for row, sigma in enumerate([Permutation.identity(1), P(2, (1, 2)), Permutation.identity(2)]):
        assert within(em.estimates[row], em.stderr[row], normalized_exact(model, sigma))


def test_haar_moments():
    em = empirical_trace_products(SampleConfig(UnitaryModel(4, haar=True), 20000, seed=13), [(1,), (2,)])
    assert within(em.estimates[0], em.stderr[0], 0) and within(em.estimates[1], em.stderr[1], 0)
    U = sample_unitary(SampleConfig(UnitaryModel(4, haar=True), 20000, seed=14))
    t = np.abs(np.trace(U, axis1=1, axis2=2)) ** 2
    assert abs(t.mean() - 1) < 4 * t.std() / math.sqrt(len(t))


def test_step_doubling_without_diffusion_is_exact():
    sd = step_doubling_trace_products(SampleConfig(UNITARY_MODELS[1], 200, seed=15), [(1,), (2, 1)])
    assert np.all(sd.difference.estimates == 0) and np.all(sd.difference.stderr == 0)
    sd = step_doubling_trace_products(SampleConfig(UNITARY_MODELS[0], 500, brownian_steps=40, seed=16), [(1,)])
    assert abs(sd.difference.estimates[0]) < max(sd.coarse.stderr[0], 1e-12)
    with pytest.raises(TypeError):
        step_doubling_trace_products(SampleConfig(UnitaryModel(2, haar=True), 5), [(1,)])


# reproducibility and invariance


def test_reproducible_and_worker_independent():
    cfg = SampleConfig(UNITARY_MODELS[2], 300, brownian_steps=20, seed=17, block_size=64)
    a = sample(cfg)
    b = sample(cfg)
    c = sample(SampleConfig(UNITARY_MODELS[2], 300, brownian_steps=20, seed=17, block_size=64, workers=4))
    assert np.array_equal(a, b) and np.array_equal(a, c)
    d = sample(SampleConfig(UNITARY_MODELS[2], 300, brownian_steps=20, seed=18, block_size=64))
    assert not np.array_equal(a, d)


def test_blocks_are_prefix_stable():
    cfg = SampleConfig(HermitianModel(3, 0.0, 1.0), 100, seed=19, block_size=32)
    longer = SampleConfig(HermitianModel(3, 0.0, 1.0), 160, seed=19, block_size=32)
    assert np.array_equal(sample(cfg)[:96], sample(longer)[:96])


@pytest.mark.parametrize("model", UNITARY_MODELS[:3], ids=["brownian", "jumps", "mixed"])
def test_conjugation_invariance(model):
    S = 4000
    U = sample_unitary(SampleConfig(model, S, brownian_steps=20, seed=20))
    W = sample_unitary(SampleConfig(model, S, brownian_steps=20, seed=21))
    V = haar_unitary(np.random.default_rng(22), S, model.N)
    Wc = V @ W @ np.conj(np.swapaxes(V, 1, 2))
    threshold = 1.95 * math.sqrt(2 / S)  # two-sample KS at the 0.1% level
    for k in (1, 2):
        x = trace_products(U, [(k,)])[:, 0].real
        y = trace_products(Wc, [(k,)])[:, 0].real
        assert ks_statistic(x, y) < threshold
    # a single matrix entry is not invariant pathwise, only in law
    assert ks_statistic(U[:, 0, 0].real, Wc[:, 0, 0].real) < threshold
    assert ks_statistic(U[:, 0, 1].imag, Wc[:, 0, 1].imag) < threshold
