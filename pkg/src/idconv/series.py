"""Truncated power series and the moment / S-transform / cumulant dictionary.

All series are formal.  ``TruncatedSeries(order=K)`` keeps coefficients of
z^0..z^K and every operation is exact through z^K.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

DEFAULT_ORDER = 16
DIVISION_FLOOR = 1e-13


class SeriesError(ValueError):
    pass


def _as_coeffs(coeffs, order: int) -> np.ndarray:
    c = np.zeros(order + 1, dtype=complex)
    arr = np.asarray(coeffs, dtype=complex).ravel()[: order + 1]
    c[: len(arr)] = arr
    return c


@dataclass(frozen=True, eq=False)
class TruncatedSeries:
    coeffs: np.ndarray
    order: int = field(default=-1)

    def __post_init__(self):
        order = self.order
        if order < 0:
            order = len(np.asarray(self.coeffs).ravel()) - 1
        if order < 0:
            raise SeriesError("empty series")
        c = _as_coeffs(self.coeffs, order)
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "order", order)

    # constructors
    @classmethod
    def constant(cls, value: complex, order: int = DEFAULT_ORDER) -> "TruncatedSeries":
        return cls([value], order)

    @classmethod
    def z(cls, order: int = DEFAULT_ORDER) -> "TruncatedSeries":
        return cls([0, 1], order)

    def __getitem__(self, k: int) -> complex:
        return complex(self.coeffs[k]) if 0 <= k <= self.order else 0j

    def truncate(self, order: int) -> "TruncatedSeries":
        return TruncatedSeries(self.coeffs[: order + 1], order)

    def _other(self, other) -> tuple[np.ndarray, int]:
        if isinstance(other, TruncatedSeries):
            k = min(self.order, other.order)
            return other.coeffs[: k + 1], k
        return _as_coeffs([other], self.order), self.order

    def __add__(self, other):
        c, k = self._other(other)
        return TruncatedSeries(self.coeffs[: k + 1] + c, k)

    __radd__ = __add__

    def __neg__(self):
        return TruncatedSeries(-self.coeffs, self.order)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, TruncatedSeries):
            return TruncatedSeries(self.coeffs * complex(other), self.order)
        k = min(self.order, other.order)
        prod = np.convolve(self.coeffs[: k + 1], other.coeffs[: k + 1])[: k + 1]
        return TruncatedSeries(prod, k)

    __rmul__ = __mul__

    def reciprocal(self) -> "TruncatedSeries":
        c0 = self.coeffs[0]
        if abs(c0) <= DIVISION_FLOOR:
            raise SeriesError(f"division by a series with |c0| = {abs(c0):.3g}")
        K = self.order
        out = np.zeros(K + 1, dtype=complex)
        out[0] = 1 / c0
        for k in range(1, K + 1):
            out[k] = -np.dot(self.coeffs[1 : k + 1], out[k - 1 :: -1][:k]) / c0
        return TruncatedSeries(out, K)

    def __truediv__(self, other):
        if isinstance(other, TruncatedSeries):
            return self * other.reciprocal()
        return self * (1 / complex(other))

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, k: int) -> "TruncatedSeries":
        if k < 0:
            return self.reciprocal() ** (-k)
        out = TruncatedSeries.constant(1, self.order)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def shift_down(self) -> "TruncatedSeries":
        """f(z)/z for a series with f(0) = 0; loses one order."""
        if abs(self.coeffs[0]) > 1e-12:
            raise SeriesError("f(0) must vanish to divide by z")
        return TruncatedSeries(self.coeffs[1:], self.order - 1)

    def shift_up(self) -> "TruncatedSeries":
        """z·f(z); gains one order."""
        return TruncatedSeries(np.concatenate([[0], self.coeffs]), self.order + 1)

    def derivative(self) -> "TruncatedSeries":
        k = np.arange(1, self.order + 1)
        return TruncatedSeries(self.coeffs[1:] * k, max(self.order - 1, 0))

    def integral(self) -> "TruncatedSeries":
        """Antiderivative vanishing at 0; gains one order."""
        k = np.arange(1, self.order + 2)
        return TruncatedSeries(np.concatenate([[0], self.coeffs / k]), self.order + 1)

    def compose(self, inner: "TruncatedSeries") -> "TruncatedSeries":
        """self(inner(z)); requires inner(0) = 0."""
        if abs(inner.coeffs[0]) > 1e-12:
            raise SeriesError("inner series must vanish at 0")
        K = min(self.order, inner.order)
        out = TruncatedSeries.constant(self.coeffs[K], K)
        g = inner.truncate(K)
        for k in range(K - 1, -1, -1):  # Horner
            out = out * g + self.coeffs[k]
        return out

    def __call__(self, x: complex) -> complex:
        return complex(np.polyval(self.coeffs[::-1], x))

    def exp(self) -> "TruncatedSeries":
        # f' = f·g'  solved coefficient by coefficient
        K = self.order
        g = self.coeffs.copy()
        out = np.zeros(K + 1, dtype=complex)
        out[0] = cmath.exp(g[0])
        kg = g * np.arange(K + 1)
        for k in range(1, K + 1):
            out[k] = np.dot(kg[1 : k + 1], out[k - 1 :: -1][:k]) / k
        return TruncatedSeries(out, K)

    def log(self) -> "TruncatedSeries":
        """Principal logarithm of the constant term plus the formal log of the rest."""
        c0 = self.coeffs[0]
        if abs(c0) <= DIVISION_FLOOR:
            raise SeriesError("log of a series with vanishing constant term")
        lg = (self.derivative() / self).integral().truncate(self.order)
        return lg + cmath.log(c0)

    def compositional_inverse(self, iterations: int | None = None) -> "TruncatedSeries":
        """g with self(g(z)) = z, by Newton iteration on series."""
        c = self.coeffs
        if abs(c[0]) > 1e-12:
            raise SeriesError("compositional inverse requires c0 = 0")
        if abs(c[1]) <= DIVISION_FLOOR:
            raise SeriesError("compositional inverse requires c1 != 0")
        K = self.order
        g = TruncatedSeries([0, 1 / c[1]], K)
        z = TruncatedSeries.z(K)
        d = self.derivative()
        d = TruncatedSeries(d.coeffs, K)
        max_iter = iterations if iterations is not None else int(np.ceil(np.log2(K + 1))) + 2
        for _ in range(max_iter):
            resid = self.compose(g) - z
            g = g - resid / d.compose(g)
        return g

    def allclose(self, other: "TruncatedSeries", tol: float = 1e-10) -> bool:
        k = min(self.order, other.order)
        return bool(np.max(np.abs(self.coeffs[: k + 1] - other.coeffs[: k + 1])) <= tol)

    def to_json(self) -> dict:
        return {"order": self.order, "coeffs": [[float(x.real), float(x.imag)] for x in self.coeffs]}

    @classmethod
    def from_json(cls, obj: dict) -> "TruncatedSeries":
        return cls([complex(a, b) for a, b in obj["coeffs"]], int(obj["order"]))

    def __repr__(self) -> str:
        return f"TruncatedSeries(order={self.order}, coeffs={np.array2string(self.coeffs, precision=6)})"


def lagrange_inverse(f: TruncatedSeries) -> TruncatedSeries:
    """Compositional inverse by Lagrange reversion, [z^n] g = (1/n)[w^{n-1}] (w/f(w))^n.

    Quadratic cost per coefficient; used as an independent check of the Newton path.
    """
    K = f.order
    h = f.shift_down().reciprocal()  # w/f(w), order K-1
    out = np.zeros(K + 1, dtype=complex)
    p = TruncatedSeries.constant(1, K - 1)
    for n in range(1, K + 1):
        p = p * h
        out[n] = p[n - 1] / n
    return TruncatedSeries(out, K)


# --------------------------------------------------------------------------
# moment sequences


@dataclass(frozen=True, eq=False)
class MomentSequence:
    """Moments (m_0 = 1, m_1, ..., m_K)."""

    m: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.m, dtype=complex).ravel().copy()
        if len(arr) < 2:
            raise SeriesError("need at least m_0 and m_1")
        if abs(arr[0] - 1) > 1e-12:
            raise SeriesError("m_0 must equal 1")
        arr.setflags(write=False)
        object.__setattr__(self, "m", arr)

    @classmethod
    def from_moments(cls, moments: Sequence[complex]) -> "MomentSequence":
        """Build from (m_1, ..., m_K), prepending m_0 = 1."""
        return cls(np.concatenate([[1], np.asarray(moments, dtype=complex)]))

    @property
    def order(self) -> int:
        return len(self.m) - 1

    @property
    def first_moment_nonzero(self) -> bool:
        return abs(self.m[1]) > DIVISION_FLOOR

    def __getitem__(self, k: int) -> complex:
        return complex(self.m[k])

    def truncate(self, order: int) -> "MomentSequence":
        return MomentSequence(self.m[: order + 1])

    def psi(self) -> TruncatedSeries:
        """M(z) - 1 = Σ_{k≥1} m_k z^k."""
        c = self.m.copy()
        c[0] = 0
        return TruncatedSeries(c, self.order)

    def max_error(self, other: "MomentSequence", orders: Sequence[int] | None = None) -> float:
        if orders is None:
            orders = range(1, min(self.order, other.order) + 1)
        return float(max(abs(self.m[k] - other.m[k]) for k in orders))

    def to_json(self) -> dict:
        return {"order": self.order, "coeffs": [[float(x.real), float(x.imag)] for x in self.m]}

    @classmethod
    def from_json(cls, obj: dict) -> "MomentSequence":
        return cls([complex(a, b) for a, b in obj["coeffs"]])


@dataclass(frozen=True, eq=False)
class LogCumulantSequence:
    lk1: complex
    lk: np.ndarray  # (Lκ_2, ..., Lκ_K)

    def __post_init__(self):
        arr = np.asarray(self.lk, dtype=complex).ravel().copy()
        arr.setflags(write=False)
        object.__setattr__(self, "lk", arr)
        object.__setattr__(self, "lk1", complex(self.lk1))

    def __getitem__(self, n: int) -> complex:
        """Lκ_n for n ≥ 1 (zero beyond the stored order)."""
        if n == 1:
            return self.lk1
        if n < 1:
            raise IndexError(n)
        return complex(self.lk[n - 2]) if n - 2 < len(self.lk) else 0j

    @property
    def order(self) -> int:
        return len(self.lk) + 1

    def __add__(self, other: "LogCumulantSequence") -> "LogCumulantSequence":
        k = min(len(self.lk), len(other.lk))
        return LogCumulantSequence(self.lk1 + other.lk1, self.lk[:k] + other.lk[:k])

    def series(self, order: int | None = None) -> TruncatedSeries:
        """LS(z) = Σ_{n≥2} Lκ_n z^n."""
        K = self.order if order is None else order
        c = np.zeros(K + 1, dtype=complex)
        for n in range(2, K + 1):
            c[n] = self[n]
        return TruncatedSeries(c, K)


def _require_m1(m: MomentSequence) -> None:
    if not m.first_moment_nonzero:
        raise SeriesError("first moment vanishes: the law has no S-transform")


def s_from_moments(m: MomentSequence) -> TruncatedSeries:
    """S-transform through order K-1, from moments through order K."""
    _require_m1(m)
    chi = m.psi().compositional_inverse()
    return (chi.shift_down() * TruncatedSeries([1, 1], m.order - 1))


def moments_from_s(S: TruncatedSeries) -> MomentSequence:
    """Moments through order K from an S-transform of order K."""
    if abs(S[0]) <= DIVISION_FLOOR:
        raise SeriesError("S(0) vanishes")
    K = S.order
    chi = (S / TruncatedSeries([1, 1], K)).shift_up().truncate(K + 1)
    psi = chi.compositional_inverse()
    c = psi.coeffs.copy()
    c[0] = 1
    return MomentSequence(c[: K + 1])


def free_cumulants_from_moments(m: MomentSequence) -> np.ndarray:
    """(κ_1, ..., κ_K) from C(z) = M(W(z)), W the compositional inverse of zM(z)."""
    K = m.order
    M = TruncatedSeries(m.m, K)
    W = M.shift_up().truncate(K).compositional_inverse()
    C = M.compose(W)
    return C.coeffs[1:].copy()


def moments_from_free_cumulants(kappa: Sequence[complex]) -> MomentSequence:
    """Inverse of free_cumulants_from_moments: zM = (z/C(z))^{<-1>}."""
    kappa = np.asarray(kappa, dtype=complex)
    K = len(kappa)
    C = TruncatedSeries(np.concatenate([[1], kappa]), K)
    W = (C.reciprocal().shift_up()).truncate(K + 1)
    zM = W.compositional_inverse()
    return MomentSequence(zM.shift_down().coeffs[: K + 1])


def log_cumulants_from_s(S: TruncatedSeries, m1: complex, tol: float = 1e-9) -> LogCumulantSequence:
    """Lκ_1 = Log m1, and Lκ_n = [z^n](-z log(m1 S(z))) for n ≥ 2."""
    m1 = complex(m1)
    if abs(m1) <= DIVISION_FLOOR:
        raise SeriesError("m1 vanishes")
    if abs(S[0] * m1 - 1) > tol:
        raise SeriesError(f"inconsistent m1: S(0)·m1 = {S[0] * m1}")
    lg = (S * m1).log()
    # remove the constant term, which is zero up to rounding
    lg = lg - lg[0]
    LS = -lg.shift_up()
    return LogCumulantSequence(cmath.log(m1), LS.coeffs[2:].copy())


def log_cumulants_from_moments(m: MomentSequence) -> LogCumulantSequence:
    return log_cumulants_from_s(s_from_moments(m), m[1])


def boxtimes(a: MomentSequence, b: MomentSequence) -> MomentSequence:
    """Moments of the free multiplicative convolution, through order K-1."""
    _require_m1(a)
    _require_m1(b)
    return moments_from_s(s_from_moments(a) * s_from_moments(b))


def boxtimes_power(m: MomentSequence, n: int) -> MomentSequence:
    """n-fold free multiplicative power via S^n = S(0)^n exp(n log(S/S(0)))."""
    _require_m1(m)
    S = s_from_moments(m)
    s0 = S[0]
    Sn = (s0 ** n) * ((S / s0).log() * n).exp()
    return moments_from_s(Sn)


def boxplus(a: MomentSequence, b: MomentSequence) -> MomentSequence:
    K = min(a.order, b.order)
    ka = free_cumulants_from_moments(a.truncate(K))
    kb = free_cumulants_from_moments(b.truncate(K))
    return moments_from_free_cumulants(ka + kb)


def dirac_moments(omega: complex, order: int = DEFAULT_ORDER) -> MomentSequence:
    return MomentSequence(complex(omega) ** np.arange(order + 1))
