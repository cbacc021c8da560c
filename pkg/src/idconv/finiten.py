"""Finite-N conjugation-invariant matrix models and their exact trace moments.

A unitary model is the time-one law of a Lévy process on U(N) with scalar drift,
Gaussian part (α on su(N), β on the identity direction) and rank-one jumps
h·diag(ζ, 1, ..., 1)·h* arriving at rate N·υ(𝕌).  Its moments are read from
e^{L̃} ∈ ℂ[S_n], where L̃ is the generator acting on g^{⊗n}.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations

import numpy as np

from .infdiv import (
    CIRCLE,
    REAL,
    AddFreeTriplet,
    AtomicMeasure,
    HaarLaw,
    MultFreeTriplet,
    _wrapped_drift,
    log_cumulants,
    wrap_angle,
)
from .symcomb import CapExceeded, Permutation, cycles_below, symmetric_group
from .weingarten import GroupAlgebraElement, class_structure_constants, convolve, wg_element

DEFAULT_CAP = 7
TAYLOR_SCALE = 8.0
TAYLOR_MAX_TERMS = 400


class TaylorDivergence(ArithmeticError):
    pass


@dataclass(frozen=True)
class HermitianModel:
    N: int
    eta: float = 0.0
    a: float = 0.0
    jump_law: AtomicMeasure = field(default_factory=lambda: AtomicMeasure(REAL))

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be positive")
        if self.a < 0:
            raise ValueError("Gaussian weight must be non-negative")
        if self.jump_law.space != REAL or self.jump_law.has_atom_at_identity():
            raise ValueError("jump law must live on ℝ without an atom at 0")

    def to_json(self) -> dict:
        return {"type": "hermitian", "N": self.N, "eta": self.eta, "a": self.a, "levy": self.jump_law.to_json()}


@dataclass(frozen=True)
class UnitaryModel:
    N: int
    y0: float = 0.0
    alpha: float = 0.0
    beta: float = 0.0
    jump_law: AtomicMeasure = field(default_factory=lambda: AtomicMeasure(CIRCLE))
    haar: bool = False

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be positive")
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("covariances must be non-negative")
        if self.jump_law.space != CIRCLE or self.jump_law.has_atom_at_identity():
            raise ValueError("jump law must live on the circle without an atom at 1")

    @property
    def brownian(self) -> bool:
        return self.alpha > 0 or self.beta > 0

    def to_json(self) -> dict:
        return {"type": "unitary", "N": self.N, "y0": self.y0, "alpha": self.alpha, "beta": self.beta,
                "levy": self.jump_law.to_json(), "haar": self.haar}


def model_from_json(obj: dict) -> HermitianModel | UnitaryModel:
    atoms = tuple((float(l), float(w)) for l, w in obj.get("levy", []))
    if obj.get("type") == "hermitian":
        return HermitianModel(int(obj["N"]), float(obj.get("eta", 0.0)), float(obj.get("a", 0.0)),
                              AtomicMeasure(REAL, atoms))
    if obj.get("type") == "unitary":
        return UnitaryModel(int(obj["N"]), float(obj.get("y0", 0.0)), float(obj.get("alpha", 0.0)),
                            float(obj.get("beta", 0.0)), AtomicMeasure(CIRCLE, atoms), bool(obj.get("haar", False)))
    raise ValueError(f"unknown model type {obj.get('type')!r}")


def gamma_n(t: MultFreeTriplet, N: int) -> UnitaryModel:
    if t.haar:
        return UnitaryModel(N, haar=True)
    return UnitaryModel(N, wrap_angle(t.omega_angle), t.b / (N + 1), t.b, t.levy)


def pi_n(t: AddFreeTriplet, N: int) -> HermitianModel:
    return HermitianModel(N, t.eta, t.a, t.levy)


def stochastic_exponential(h: HermitianModel) -> UnitaryModel:
    """Triplet of e^{iX} for the Hermitian Lévy process X with law ``h``.

    For rank-one jumps x·uu* the matrix integral of sin(x) − 1_B(x)x against
    N·ρ⊗Haar is the scalar Σ w (sin x − 1_{|x|≤1} x) times I_N.
    """
    drift = _wrapped_drift(AddFreeTriplet(h.eta, h.a, h.jump_law))
    return UnitaryModel(h.N, wrap_angle(drift), h.a / (h.N + 1), h.a, h.jump_law.wrap())


# --------------------------------------------------------------------------
# the generator L̃


def rising_factorial(N: int, m: int) -> int:
    return math.prod(range(N, N + m))


def _embedded_sum(n: int, subset: tuple[int, ...]) -> np.ndarray:
    """Σ_{π ∈ S_m} ι_K(π) as a coefficient vector, where ι_K sends k_i to k_{π(i)}."""
    G = symmetric_group(n)
    m = len(subset)
    base = np.arange(n)
    S = symmetric_group(m)
    rows = np.tile(base, (S.order, 1))
    k = np.array(subset) - 1
    rows[:, k] = k[S.perms.astype(np.int64)]
    out = np.zeros(G.order)
    out[G.rank_array(rows)] = 1.0
    return out


def _transposition_sum(n: int) -> np.ndarray:
    G = symmetric_group(n)
    return (G.class_of == G.class_types.index(tuple([2] + [1] * (n - 2)))).astype(float) if n >= 2 else np.zeros(1)


def jump_weight(m: UnitaryModel, k: int) -> complex:
    """Coefficient of every π ∈ S_k in the rank-one jump contribution.

    With g − 1 of rank one, Φ((g−1)^{⊗k}) = (ζ−1)^k Σ_σ σ, and Σ_σ σ · Wg equals
    aug(Wg) Σ_σ σ.
    """
    if not m.jump_law.atoms:
        return 0j
    z, w = m.jump_law.points, m.jump_law.weights
    integral = m.N * np.sum(w * (z - 1) ** k)
    return complex(integral * wg_element(k, m.N).augmentation())


def ltilde(m: UnitaryModel, n: int, cap: int = DEFAULT_CAP) -> GroupAlgebraElement:
    """L̃ ∈ ℂ[S_n] with E[g^{⊗n}] = ρ(e^{L̃}) for the law ``m``."""
    if m.haar:
        raise HaarLaw("the Haar model has no generator")
    if n < 1 or n > cap:
        raise CapExceeded(f"need 1 ≤ n ≤ {cap}")
    return _ltilde_cached(m, n)


@lru_cache(maxsize=256)
def _ltilde_cached(m: UnitaryModel, n: int) -> GroupAlgebraElement:
    G = symmetric_group(n)
    N = m.N
    c = np.zeros(G.order, dtype=complex)
    jumps = 0j
    if m.jump_law.atoms:
        jumps = complex(np.sum(m.jump_law.weights * (m.jump_law.points.real - 1)))
    c[G.identity_rank] = (n * 1j * m.y0 - (n * n / N) * m.beta / 2
                          + (n * n / N - n * N) * m.alpha / 2 + n * jumps)
    if n >= 2:
        c -= m.alpha * _transposition_sum(n)
    if m.jump_law.atoms:
        for k in range(2, n + 1):
            jk = jump_weight(m, k)
            for subset in combinations(range(1, n + 1), k):
                c += jk * _embedded_sum(n, subset)
    return GroupAlgebraElement(n, c, {"N": N})


def _taylor_action(mult, x: np.ndarray, a: float, steps: int, tol: float) -> np.ndarray:
    """(e^{B})^{steps} x for a linear map ``mult`` = B with operator norm ≤ a."""
    for _ in range(steps):
        term = x
        acc = x.copy()
        k = 0
        # bound on the tail after k terms, relative to ‖x‖: e^a a^{k+1}/(k+1)!
        tail = math.exp(a) * a
        while tail > tol and a > 0:
            k += 1
            if k > TAYLOR_MAX_TERMS:
                raise TaylorDivergence("Taylor series did not converge")
            term = mult(term) / k
            acc += term
            tail *= a / (k + 1)
        x = acc
    return x


def apply_exponential(A: GroupAlgebraElement, v: GroupAlgebraElement, tol: float = 1e-16,
                      method: str = "auto") -> GroupAlgebraElement:
    """e^{A}·v by truncated Taylor series of left multiplication by A.

    The identity component of A is split off as a scalar; the rest is cut into
    ``steps`` equal pieces of ℓ¹ norm ≤ 8, each summed to the remainder bound.
    ``method="central"`` runs the series on class-sum coordinates (valid when A
    is central) and finishes with one product by v; ``"direct"`` multiplies
    dense n!-vectors throughout.  ``"auto"`` picks central when A is central.
    """
    n = A.n
    if v.n != n:
        raise ValueError("degree mismatch")
    G = symmetric_group(n)
    c0 = complex(A.coeffs[G.identity_rank])
    rest = A.coeffs.copy()
    rest[G.identity_rank] = 0
    norm = float(np.abs(rest).sum())
    steps = max(1, math.ceil(norm / TAYLOR_SCALE))
    rest /= steps
    a = norm / steps
    if method == "auto":
        method = "central" if A.is_central() else "direct"
    if method == "direct":
        x = _taylor_action(lambda y: convolve(n, rest, y), v.coeffs.astype(complex), a, steps, tol)
    elif method == "central":
        if not A.is_central():
            raise ValueError("central evaluation needs a central generator")
        rest_el = GroupAlgebraElement(n, rest)
        c = class_structure_constants(n)
        M = np.einsum("l,lmn->nm", rest_el.class_values(), c)
        one = np.zeros(len(G.class_types), dtype=complex)
        one[G.class_of[G.identity_rank]] = 1
        E = _taylor_action(lambda y: M @ y, one, a, steps, tol)
        expo = E[G.class_of]
        if len(v.terms()) == 1:
            (sigma, coeff), = v.terms().items()
            # (E·σ)(τ) = E(τσ^{-1})
            shifted = G.compose_ranks(np.arange(G.order), G.inverse[G.rank(sigma)])
            x = coeff * expo[shifted]
        else:
            x = convolve(n, expo, v.coeffs)
    else:
        raise ValueError(f"unknown method {method!r}")
    return GroupAlgebraElement(n, cmath.exp(c0) * x)


def evaluate_traces(x: GroupAlgebraElement, N: int) -> complex:
    """Σ_τ x_τ N^{ℓ(τ)}, the trace of ρ(x) on (ℂ^N)^{⊗n}."""
    G = symmetric_group(x.n)
    return complex(np.sum(x.coeffs * float(N) ** G.cycle_counts))


def exact_trace_moments(m: UnitaryModel, sigma: Permutation, cap: int = DEFAULT_CAP,
                        method: str = "auto") -> complex:
    """E[Π_{c ∈ σ} Tr(U^{♯c})] for U with law ``m``."""
    n = sigma.n
    if n > cap:
        raise CapExceeded(f"degree {n} exceeds cap {cap}")
    if m.haar:
        # U and e^{iθ}U have the same Haar law and the product is homogeneous of degree n
        return 0j
    L = ltilde(m, n, cap)
    return evaluate_traces(apply_exponential(L, GroupAlgebraElement.basis(sigma), method=method), m.N)


def normalized_exact(m: UnitaryModel, sigma: Permutation, cap: int = DEFAULT_CAP) -> complex:
    return exact_trace_moments(m, sigma, cap) / m.N ** sigma.cycle_count()


# --------------------------------------------------------------------------
# N → ∞ limit operator


@dataclass(frozen=True)
class LimitOperator:
    """T(σ) = n Lκ_1 σ + Σ_m Σ_{c ∈ cycles_below(σ, m)} Lκ_m cσ on ℂ[S_n]."""

    triplet: MultFreeTriplet
    n: int

    def __post_init__(self):
        if self.triplet.haar:
            raise HaarLaw("no limit operator for the Haar law")

    @property
    def lk(self):
        return log_cumulants(self.triplet, max(self.n, 2))

    def image(self, sigma: Permutation, include_diagonal: bool = True) -> dict[Permutation, complex]:
        lk = self.lk
        out: dict[Permutation, complex] = {}
        if include_diagonal:
            out[sigma] = self.n * lk.lk1
        for k in range(2, self.n + 1):
            for c in cycles_below(sigma, k):
                rho = c * sigma
                out[rho] = out.get(rho, 0j) + lk[k]
        return out

    def apply_sparse(self, x: dict[Permutation, complex], include_diagonal: bool = True) -> dict[Permutation, complex]:
        out: dict[Permutation, complex] = {}
        for sigma, v in x.items():
            for rho, w in self.image(sigma, include_diagonal).items():
                out[rho] = out.get(rho, 0j) + v * w
        return out

    def apply(self, x: GroupAlgebraElement) -> GroupAlgebraElement:
        if x.n != self.n:
            raise ValueError("degree mismatch")
        return GroupAlgebraElement.from_terms(self.n, self.apply_sparse(x.terms()))


def limit_operator_T(t: MultFreeTriplet, n: int, cap: int = DEFAULT_CAP) -> LimitOperator:
    if n > cap:
        raise CapExceeded(f"n={n} exceeds cap {cap}")
    return LimitOperator(t, n)


def limit_trace_moments(t: MultFreeTriplet, sigma: Permutation, cap: int = DEFAULT_CAP) -> complex:
    """φ(e^{T} σ) with φ(τ) = 1 for every permutation.

    T − nLκ_1 strictly lowers |·|, so the exponential series is finite.
    """
    T = limit_operator_T(t, sigma.n, cap)
    x = {sigma: 1 + 0j}
    total = 1 + 0j
    k = 0
    while x:
        k += 1
        x = {p: v / k for p, v in T.apply_sparse(x, include_diagonal=False).items()}
        total += sum(x.values())
    return complex(cmath.exp(sigma.n * T.lk.lk1) * total)
