"""Group algebra of S_n, the Φ map, Weingarten elements and Haar conditional expectation.

Elements of ℂ[S_n] are dense coefficient vectors indexed by the lexicographic
rank of permutations (see ``symcomb.SymmetricGroup``).
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Mapping, Sequence

import numpy as np

from .symcomb import CapExceeded, Permutation, symmetric_group

DEFAULT_CAP = 8


@dataclass(eq=False)
class GroupAlgebraElement:
    n: int
    coeffs: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex).ravel()
        if len(c) != math.factorial(self.n):
            raise ValueError("coefficient vector has the wrong length")
        c = c.copy()
        c.setflags(write=False)
        self.coeffs = c

    @property
    def group(self):
        return symmetric_group(self.n)

    @classmethod
    def zero(cls, n: int) -> "GroupAlgebraElement":
        return cls(n, np.zeros(math.factorial(n), dtype=complex))

    @classmethod
    def unit(cls, n: int) -> "GroupAlgebraElement":
        return cls.basis(Permutation.identity(n))

    @classmethod
    def basis(cls, sigma: Permutation, coeff: complex = 1.0) -> "GroupAlgebraElement":
        c = np.zeros(math.factorial(sigma.n), dtype=complex)
        c[symmetric_group(sigma.n).rank(sigma)] = coeff
        return cls(sigma.n, c)

    @classmethod
    def from_terms(cls, n: int, terms: Mapping[Permutation, complex]) -> "GroupAlgebraElement":
        G = symmetric_group(n)
        c = np.zeros(G.order, dtype=complex)
        for p, v in terms.items():
            c[G.rank(p)] += v
        return cls(n, c)

    @classmethod
    def from_class_values(cls, n: int, values: Sequence[complex]) -> "GroupAlgebraElement":
        G = symmetric_group(n)
        return cls(n, np.asarray(values, dtype=complex)[G.class_of])

    def __getitem__(self, sigma: Permutation) -> complex:
        return complex(self.coeffs[self.group.rank(sigma)])

    def terms(self, tol: float = 0.0) -> dict[Permutation, complex]:
        G = self.group
        return {G.element(int(r)): complex(self.coeffs[r]) for r in np.flatnonzero(np.abs(self.coeffs) > tol)}

    def __add__(self, other: "GroupAlgebraElement") -> "GroupAlgebraElement":
        _same(self, other)
        return GroupAlgebraElement(self.n, self.coeffs + other.coeffs)

    def __sub__(self, other: "GroupAlgebraElement") -> "GroupAlgebraElement":
        _same(self, other)
        return GroupAlgebraElement(self.n, self.coeffs - other.coeffs)

    def __neg__(self):
        return GroupAlgebraElement(self.n, -self.coeffs)

    def __mul__(self, other):
        if isinstance(other, GroupAlgebraElement):
            _same(self, other)
            return GroupAlgebraElement(self.n, convolve(self.n, self.coeffs, other.coeffs))
        return GroupAlgebraElement(self.n, self.coeffs * complex(other), dict(self.metadata))

    def __rmul__(self, other):
        return GroupAlgebraElement(self.n, self.coeffs * complex(other), dict(self.metadata))

    def augmentation(self) -> complex:
        """Sum of all coefficients (the trivial character)."""
        return complex(self.coeffs.sum())

    def class_values(self) -> np.ndarray:
        """Coefficient on each conjugacy class; meaningful for central elements."""
        G = self.group
        first = np.array([np.flatnonzero(G.class_of == k)[0] for k in range(len(G.class_types))])
        return self.coeffs[first]

    def is_central(self, tol: float = 1e-12) -> bool:
        G = self.group
        vals = self.class_values()
        return bool(np.max(np.abs(self.coeffs - vals[G.class_of])) <= tol * max(1.0, np.max(np.abs(vals))))

    def allclose(self, other: "GroupAlgebraElement", tol: float = 1e-12) -> bool:
        _same(self, other)
        return bool(np.max(np.abs(self.coeffs - other.coeffs)) <= tol)

    def l1_norm(self) -> float:
        return float(np.abs(self.coeffs).sum())

    def to_json(self, tol: float = 0.0) -> list[dict]:
        return [{"perm": list(p.images), "re": v.real, "im": v.imag} for p, v in sorted(self.terms(tol).items())]

    @classmethod
    def from_json(cls, n: int, rows: list[dict]) -> "GroupAlgebraElement":
        return cls.from_terms(n, {Permutation(tuple(r["perm"])): complex(r["re"], r["im"]) for r in rows})


def _same(a: GroupAlgebraElement, b: GroupAlgebraElement) -> None:
    if a.n != b.n:
        raise ValueError(f"degree mismatch: {a.n} vs {b.n}")


def convolve(n: int, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Coefficients of x·y in ℂ[S_n]: (x·y)(g) = Σ_h x(h) y(h^{-1}g)."""
    G = symmetric_group(n)
    out = np.zeros(G.order, dtype=complex)
    nz = np.flatnonzero(x)
    if n <= G.TABLE_CAP:
        mul = G.mul
        for h in nz:
            out[mul[h]] += x[h] * y
    else:
        idx = np.arange(G.order)
        for h in nz:
            out[G.compose_ranks(np.full(G.order, h), idx)] += x[h] * y
    return out


# --------------------------------------------------------------------------
# class algebra


@lru_cache(maxsize=None)
def class_structure_constants(n: int) -> np.ndarray:
    """c[λ, μ, ν] = #{(a, b) ∈ C_λ × C_μ : ab = g} for a fixed g ∈ C_ν.

    Then C_λ C_μ = Σ_ν c[λ, μ, ν] C_ν for class sums C_λ.
    """
    G = symmetric_group(n)
    p = len(G.class_types)
    c = np.zeros((p, p, p), dtype=np.int64)
    allr = np.arange(G.order)
    for nu in range(p):
        g = int(np.flatnonzero(G.class_of == nu)[0])
        b = G.compose_ranks(G.inverse[allr], np.full(G.order, g))
        np.add.at(c[:, :, nu], (G.class_of[allr], G.class_of[b]), 1)
    c.setflags(write=False)
    return c


def central_multiply(n: int, x: Sequence, y: Sequence) -> list:
    """Product of two central elements given by class values (exact for Fractions)."""
    c = class_structure_constants(n)
    p = c.shape[0]
    out = [0] * p
    for lam in range(p):
        if x[lam] == 0:
            continue
        for mu in range(p):
            if y[mu] == 0:
                continue
            for nu in range(p):
                k = int(c[lam, mu, nu])
                if k:
                    out[nu] += x[lam] * y[mu] * k
    return out


def _phi_identity_class_values(n: int, N: int) -> list[int]:
    G = symmetric_group(n)
    return [N ** len(t) for t in G.class_types]


def _multiplication_matrix(n: int, z: Sequence) -> list[list]:
    """Matrix of y ↦ z·y on class values (columns indexed by μ, rows by ν)."""
    c = class_structure_constants(n)
    p = c.shape[0]
    M = [[0] * p for _ in range(p)]
    for lam in range(p):
        if z[lam] == 0:
            continue
        for mu in range(p):
            for nu in range(p):
                k = int(c[lam, mu, nu])
                if k:
                    M[nu][mu] += z[lam] * k
    return M


def _solve_fraction(M: list[list], rhs: list) -> list[Fraction]:
    p = len(M)
    A = [[Fraction(v) for v in row] + [Fraction(r)] for row, r in zip(M, rhs)]
    for col in range(p):
        piv = next((r for r in range(col, p) if A[r][col] != 0), None)
        if piv is None:
            raise ZeroDivisionError("singular system")
        A[col], A[piv] = A[piv], A[col]
        inv = 1 / A[col][col]
        A[col] = [v * inv for v in A[col]]
        for r in range(p):
            if r != col and A[r][col] != 0:
                f = A[r][col]
                A[r] = [a - f * b for a, b in zip(A[r], A[col])]
    return [A[r][p] for r in range(p)]


def partitions(n: int, largest: int | None = None):
    if largest is None:
        largest = n
    if n == 0:
        yield ()
        return
    for k in range(min(n, largest), 0, -1):
        for rest in partitions(n - k, k):
            yield (k,) + rest


def content_polynomial(shape: Sequence[int], N: int) -> int:
    """Π over boxes (i, j) of (N + j - i): the eigenvalue of Φ(Id) on the isotypic block."""
    out = 1
    for i, row in enumerate(shape):
        for j in range(row):
            out *= N + j - i
    return out


def _identity_class(n: int) -> int:
    G = symmetric_group(n)
    return G.class_types.index(tuple([1] * n))


@lru_cache(maxsize=None)
def wg_class_values(n: int, N: int) -> tuple[tuple[Fraction, ...], str]:
    """Exact class values of Wg and the inversion method used.

    For n ≤ N: the inverse of Φ(Id^{⊗n}) by an exact linear solve in the centre.
    For N < n: the spectral pseudo-inverse, inverting Φ(Id) on the isotypic blocks
    where its eigenvalue Π(N + content) is non-zero and zeroing it elsewhere.
    """
    if n < 1 or N < 1:
        raise ValueError("n and N must be positive")
    p = len(symmetric_group(n).class_types)
    phi = _phi_identity_class_values(n, N)
    e = [0] * p
    e[_identity_class(n)] = 1
    if n <= N:
        return tuple(_solve_fraction(_multiplication_matrix(n, phi), e)), "inverse"
    # Lagrange interpolation of f ↦ 1/f (and 0 ↦ 0) on the distinct eigenvalues of Φ(Id)
    eig = sorted({content_polynomial(s, N) for s in partitions(n)})
    out = [Fraction(0)] * p
    for f in eig:
        if f == 0:
            continue
        # projector onto the f-eigenspace applied to 1: Π_{g≠f} (Φ - g)/(f - g)
        v: list = [Fraction(x) for x in e]
        for g in eig:
            if g == f:
                continue
            w = central_multiply(n, phi, v)
            v = [(a - g * b) / (f - g) for a, b in zip(w, v)]
        out = [o + x / f for o, x in zip(out, v)]
    return tuple(out), "spectral-pseudo-inverse"


_wg_lock = threading.Lock()
_wg_cache: dict[tuple[int, int], GroupAlgebraElement] = {}


def wg_element(n: int, N: int, cap: int = DEFAULT_CAP) -> GroupAlgebraElement:
    """Weingarten element Wg ∈ ℂ[S_n] for U(N).  Cached per (n, N)."""
    if n > cap:
        raise CapExceeded(f"n={n} exceeds cap {cap}")
    key = (n, N)
    hit = _wg_cache.get(key)
    if hit is not None:
        return hit
    vals, method = wg_class_values(n, N)
    el = GroupAlgebraElement.from_class_values(n, [float(v) for v in vals])
    el.metadata = {"N": N, "method": method}
    with _wg_lock:
        _wg_cache.setdefault(key, el)
    return _wg_cache[key]


def phi_identity(n: int, N: int) -> GroupAlgebraElement:
    """Φ(Id^{⊗n}) = Σ_σ N^{ℓ(σ)} σ."""
    G = symmetric_group(n)
    return GroupAlgebraElement(n, float(N) ** G.cycle_counts)


def phi_of_tensor(mats: Sequence[np.ndarray], cap: int = DEFAULT_CAP) -> GroupAlgebraElement:
    """Φ(A_1 ⊗ ... ⊗ A_n): coefficient of σ is Π over cycles (i_1 → i_2 → ...) of Tr(A_{i_1} A_{i_2} ...)."""
    mats = [np.asarray(m, dtype=complex) for m in mats]
    n = len(mats)
    if n == 0 or n > cap:
        raise CapExceeded(f"need 1 ≤ n ≤ {cap}")
    N = mats[0].shape[0]
    for m in mats:
        if m.shape != (N, N):
            raise ValueError("all matrices must be square of the same dimension")
    G = symmetric_group(n)
    cache: dict[tuple[int, ...], complex] = {}

    def cyc_trace(cyc: tuple[int, ...]) -> complex:
        if cyc not in cache:
            prod = mats[cyc[0] - 1]
            for i in cyc[1:]:
                prod = prod @ mats[i - 1]
            cache[cyc] = complex(np.trace(prod))
        return cache[cyc]

    coeffs = np.empty(G.order, dtype=complex)
    for r in range(G.order):
        sigma = G.element(r)
        v = 1 + 0j
        for cyc in sigma.cycles():
            v *= cyc_trace(cyc)
        coeffs[r] = v
    return GroupAlgebraElement(n, coeffs)


def conditional_expectation(mats: Sequence[np.ndarray], cap: int = DEFAULT_CAP) -> GroupAlgebraElement:
    """Φ(A)·Wg, whose image under the tensor representation is ∫ g^{⊗n} A g^{*⊗n} dg."""
    phi = phi_of_tensor(mats, cap)
    N = np.asarray(mats[0]).shape[0]
    wg = wg_element(len(mats), N, cap)
    out = phi * wg
    out.metadata = dict(wg.metadata)
    return out


# --------------------------------------------------------------------------
# tiny materialisations for tests


def permutation_operator(sigma: Permutation, N: int) -> np.ndarray:
    """Matrix of x_1⊗...⊗x_n ↦ x_{σ^{-1}(1)}⊗...⊗x_{σ^{-1}(n)} on (ℂ^N)^{⊗n}."""
    n = sigma.n
    dim = N ** n
    if dim > 4096:
        raise CapExceeded("materialisation limited to N^n ≤ 4096")
    # output slot k carries input slot σ^{-1}(k)
    inv = sigma.inverse().images
    axes = [i - 1 for i in inv]
    eye = np.eye(dim).reshape([N] * n + [dim])
    return eye.transpose(axes + [n]).reshape(dim, dim)


def represent(x: GroupAlgebraElement, N: int) -> np.ndarray:
    dim = N ** x.n
    out = np.zeros((dim, dim), dtype=complex)
    for p, v in x.terms().items():
        out += v * permutation_operator(p, N)
    return out


def kron_all(mats: Sequence[np.ndarray]) -> np.ndarray:
    out = np.eye(1)
    for m in mats:
        out = np.kron(out, m)
    return out


def phi_of_operator(A: np.ndarray, n: int, N: int) -> GroupAlgebraElement:
    """Φ for a general operator on (ℂ^N)^{⊗n}: coefficient Tr(A ρ(σ^{-1}))."""
    G = symmetric_group(n)
    coeffs = np.array([np.trace(A @ permutation_operator(G.element(r).inverse(), N)) for r in range(G.order)])
    return GroupAlgebraElement(n, coeffs)
