"""Characteristic triplets for the four convolution semigroups and the maps between them.

Semigroups: (ℝ, ∗), (ℝ, ⊞), (𝕌, ⊛), (𝕌, ⊠).  Lévy measures are finite atomic.
Angles on the circle are stored as real numbers; ``omega_angle`` fixes the
branch of Log ω for a given instance.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .series import (
    DEFAULT_ORDER,
    LogCumulantSequence,
    MomentSequence,
    SeriesError,
    TruncatedSeries,
    boxtimes_power,
    moments_from_s,
)
from .symcomb import CapExceeded, DEFAULT_CHAIN_CAP, Permutation, simple_predecessors

MERGE_TOL = 1e-12
TWO_PI = 2 * math.pi

REAL = "real"
CIRCLE = "circle"


def wrap_angle(x: float) -> float:
    """Representative of x modulo 2π in (-π, π]."""
    r = math.remainder(x, TWO_PI)
    return math.pi if r == -math.pi else r


def angles_close(a: float, b: float, tol: float = 1e-12) -> bool:
    return abs(math.remainder(a - b, TWO_PI)) <= tol


def _is_multiple_of_2pi(x: float) -> bool:
    return abs(math.remainder(x, TWO_PI)) <= MERGE_TOL * max(1.0, abs(x))


@dataclass(frozen=True)
class AtomicMeasure:
    """Finite atomic measure.  On the circle, locations are angles in (-π, π]."""

    space: str = REAL
    atoms: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        if self.space not in (REAL, CIRCLE):
            raise ValueError(f"unknown space {self.space!r}")
        merged: list[list[float]] = []
        for loc, w in sorted(((float(l), float(w)) for l, w in self.atoms),
                             key=lambda a: wrap_angle(a[0]) if self.space == CIRCLE else a[0]):
            if w < 0 or not math.isfinite(w):
                raise ValueError(f"atom weight must be finite and non-negative, got {w}")
            if not math.isfinite(loc):
                raise ValueError("atom location must be finite")
            if self.space == CIRCLE:
                loc = wrap_angle(loc)
            if w == 0:
                continue
            for m in merged:
                close = angles_close(m[0], loc, MERGE_TOL) if self.space == CIRCLE else abs(m[0] - loc) <= MERGE_TOL
                if close:
                    m[1] += w
                    break
            else:
                merged.append([loc, w])
        object.__setattr__(self, "atoms", tuple((l, w) for l, w in merged))

    @classmethod
    def real(cls, *atoms: tuple[float, float]) -> "AtomicMeasure":
        return cls(REAL, tuple(atoms))

    @classmethod
    def circle(cls, *atoms: tuple[float, float]) -> "AtomicMeasure":
        return cls(CIRCLE, tuple(atoms))

    @property
    def locations(self) -> np.ndarray:
        return np.array([l for l, _ in self.atoms], dtype=float)

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for _, w in self.atoms], dtype=float)

    @property
    def points(self) -> np.ndarray:
        """Complex unit points for a circle measure."""
        if self.space != CIRCLE:
            raise ValueError("points only defined on the circle")
        return np.exp(1j * self.locations)

    def total_mass(self) -> float:
        return float(self.weights.sum()) if self.atoms else 0.0

    def has_atom_at_identity(self) -> bool:
        if self.space == REAL:
            return any(abs(l) <= MERGE_TOL for l, _ in self.atoms)
        return any(angles_close(l, 0.0, MERGE_TOL) for l, _ in self.atoms)

    def integrate(self, f: Callable[[np.ndarray], np.ndarray]) -> complex:
        if not self.atoms:
            return 0.0
        x = self.points if self.space == CIRCLE else self.locations
        return complex(np.sum(self.weights * f(x)))

    def __add__(self, other: "AtomicMeasure") -> "AtomicMeasure":
        if self.space != other.space:
            raise ValueError("cannot add measures on different spaces")
        return AtomicMeasure(self.space, self.atoms + other.atoms)

    def scale(self, c: float) -> "AtomicMeasure":
        return AtomicMeasure(self.space, tuple((l, c * w) for l, w in self.atoms))

    def wrap(self) -> "AtomicMeasure":
        """Push-forward x ↦ e^{ix} to the circle, dropping atoms landing on 1."""
        if self.space != REAL:
            raise ValueError("wrap expects a measure on the real line")
        return AtomicMeasure(CIRCLE, tuple((l, w) for l, w in self.atoms if not _is_multiple_of_2pi(l)))

    def close_to(self, other: "AtomicMeasure", tol: float = 1e-12) -> bool:
        if self.space != other.space or len(self.atoms) != len(other.atoms):
            return False
        for (l1, w1), (l2, w2) in zip(self.atoms, other.atoms):
            same = angles_close(l1, l2, tol) if self.space == CIRCLE else abs(l1 - l2) <= tol
            if not same or abs(w1 - w2) > tol * max(1.0, abs(w1)):
                return False
        return True

    def to_json(self) -> list[list[float]]:
        return [[l, w] for l, w in self.atoms]


def _levy_check(levy: AtomicMeasure, space: str) -> AtomicMeasure:
    if levy.space != space:
        raise ValueError(f"Lévy measure must live on the {space}")
    if levy.has_atom_at_identity():
        where = "0" if space == REAL else "1"
        raise ValueError(f"Lévy measure may not charge {where}")
    return levy


# --------------------------------------------------------------------------
# triplets


@dataclass(frozen=True)
class AddClassicalTriplet:
    eta: float = 0.0
    a: float = 0.0
    levy: AtomicMeasure = field(default_factory=lambda: AtomicMeasure(REAL))

    kind = "add-classical"

    def __post_init__(self):
        if self.a < 0:
            raise ValueError("Gaussian weight must be non-negative")
        _levy_check(self.levy, REAL)

    def __add__(self, other):
        return type(self)(self.eta + other.eta, self.a + other.a, self.levy + other.levy)


@dataclass(frozen=True)
class AddFreeTriplet(AddClassicalTriplet):
    kind = "add-free"


@dataclass(frozen=True)
class MultClassicalTriplet:
    omega_angle: float = 0.0
    b: float = 0.0
    levy: AtomicMeasure = field(default_factory=lambda: AtomicMeasure(CIRCLE))
    idempotent: float = 1  # m in {1, 2, ...} or math.inf

    kind = "mult-classical"

    def __post_init__(self):
        if self.b < 0:
            raise ValueError("Gaussian weight must be non-negative")
        _levy_check(self.levy, CIRCLE)
        m = self.idempotent
        if not (m == math.inf or (float(m).is_integer() and m >= 1)):
            raise ValueError(f"idempotent index must be a positive integer or inf, got {m}")
        if m != math.inf:
            object.__setattr__(self, "idempotent", int(m))

    @property
    def omega(self) -> complex:
        return cmath.exp(1j * self.omega_angle)

    def __add__(self, other: "MultClassicalTriplet") -> "MultClassicalTriplet":
        m1, m2 = self.idempotent, other.idempotent
        m = math.inf if math.inf in (m1, m2) else math.lcm(int(m1), int(m2))
        return MultClassicalTriplet(self.omega_angle + other.omega_angle, self.b + other.b,
                                    self.levy + other.levy, m)


@dataclass(frozen=True)
class MultFreeTriplet:
    omega_angle: float = 0.0
    b: float = 0.0
    levy: AtomicMeasure = field(default_factory=lambda: AtomicMeasure(CIRCLE))
    haar: bool = False

    kind = "mult-free"

    def __post_init__(self):
        if self.b < 0:
            raise ValueError("Gaussian weight must be non-negative")
        _levy_check(self.levy, CIRCLE)

    @property
    def omega(self) -> complex:
        return cmath.exp(1j * self.omega_angle)

    @classmethod
    def haar_law(cls) -> "MultFreeTriplet":
        return cls(haar=True)

    def __add__(self, other: "MultFreeTriplet") -> "MultFreeTriplet":
        if self.haar or other.haar:
            return MultFreeTriplet.haar_law()
        return MultFreeTriplet(self.omega_angle + other.omega_angle, self.b + other.b, self.levy + other.levy)


Triplet = AddClassicalTriplet | AddFreeTriplet | MultClassicalTriplet | MultFreeTriplet


def triplet_to_json(t: Triplet) -> dict:
    if isinstance(t, AddClassicalTriplet):
        return {"kind": t.kind, "drift": t.eta, "gauss": t.a, "levy": t.levy.to_json()}
    if isinstance(t, MultClassicalTriplet):
        m = "inf" if t.idempotent == math.inf else int(t.idempotent)
        return {"kind": t.kind, "drift": t.omega_angle, "gauss": t.b, "levy": t.levy.to_json(), "idempotent": m}
    return {"kind": t.kind, "drift": t.omega_angle, "gauss": t.b, "levy": t.levy.to_json(), "haar": bool(t.haar)}


def triplet_from_json(obj: dict) -> Triplet:
    kind = obj.get("kind")
    drift = float(obj.get("drift", 0.0))
    gauss = float(obj.get("gauss", 0.0))
    atoms = tuple((float(l), float(w)) for l, w in obj.get("levy", []))
    if kind == "add-classical":
        return AddClassicalTriplet(drift, gauss, AtomicMeasure(REAL, atoms))
    if kind == "add-free":
        return AddFreeTriplet(drift, gauss, AtomicMeasure(REAL, atoms))
    if kind == "mult-classical":
        m = obj.get("idempotent", 1)
        if isinstance(m, str):
            m = math.inf if m.lower() in ("inf", "infinity") else int(m)
        return MultClassicalTriplet(drift, gauss, AtomicMeasure(CIRCLE, atoms), m)
    if kind == "mult-free":
        return MultFreeTriplet(drift, gauss, AtomicMeasure(CIRCLE, atoms), bool(obj.get("haar", False)))
    raise ValueError(f"unknown triplet kind {kind!r}")


# standard families


def dirac_add(eta: float, free: bool = True) -> AddClassicalTriplet:
    cls = AddFreeTriplet if free else AddClassicalTriplet
    return cls(eta, 0.0, AtomicMeasure(REAL))


def gaussian(a: float) -> AddClassicalTriplet:
    return AddClassicalTriplet(0.0, a, AtomicMeasure(REAL))


def semicircle(a: float) -> AddFreeTriplet:
    return AddFreeTriplet(0.0, a, AtomicMeasure(REAL))


def compound_poisson_add(lam: float, jumps: AtomicMeasure, free: bool = False) -> AddClassicalTriplet:
    """Rate λ, jump law ``jumps`` (a probability measure on ℝ); atoms at 0 are discarded."""
    eta = lam * sum(w * x for x, w in jumps.atoms if abs(x) <= 1)
    levy = AtomicMeasure(REAL, tuple((x, lam * w) for x, w in jumps.atoms if abs(x) > MERGE_TOL))
    cls = AddFreeTriplet if free else AddClassicalTriplet
    return cls(eta, 0.0, levy)


def dirac_mult(theta: float) -> MultFreeTriplet:
    return MultFreeTriplet(theta, 0.0, AtomicMeasure(CIRCLE))


def free_unitary_bm(b: float) -> MultFreeTriplet:
    """ℬ_b, with ⊠-triplet (1, b, 0)."""
    return MultFreeTriplet(0.0, b, AtomicMeasure(CIRCLE))


def free_poisson_mult(lam: float, jumps: AtomicMeasure) -> MultFreeTriplet:
    """Free compound Poisson on 𝕌 with rate λ and jump law ``jumps``."""
    drift = lam * sum(w * math.sin(l) for l, w in jumps.atoms)
    levy = AtomicMeasure(CIRCLE, tuple((l, lam * w) for l, w in jumps.atoms if not angles_close(l, 0.0)))
    return MultFreeTriplet(drift, 0.0, levy)


# --------------------------------------------------------------------------
# pairs and maps


def pair_to_triplet(gamma: float, sigma: AtomicMeasure, free: bool = False) -> AddClassicalTriplet:
    """(γ, σ) ↦ (η, a, ρ) with a = σ({0}), ρ = (1+x²)/x² σ off 0."""
    if sigma.space != REAL:
        raise ValueError("σ must be a measure on ℝ")
    a = sum(w for x, w in sigma.atoms if abs(x) <= MERGE_TOL)
    rho = tuple((x, (1 + x * x) / (x * x) * w) for x, w in sigma.atoms if abs(x) > MERGE_TOL)
    eta = gamma + sum(x * ((1.0 if abs(x) <= 1 else 0.0) - 1 / (1 + x * x)) * w for x, w in rho)
    cls = AddFreeTriplet if free else AddClassicalTriplet
    return cls(eta, a, AtomicMeasure(REAL, rho))


def triplet_to_pair(t: AddClassicalTriplet) -> tuple[float, AtomicMeasure]:
    rho = t.levy.atoms
    gamma = t.eta - sum(x * ((1.0 if abs(x) <= 1 else 0.0) - 1 / (1 + x * x)) * w for x, w in rho)
    atoms = [(x, x * x / (1 + x * x) * w) for x, w in rho]
    if t.a > 0:
        atoms.append((0.0, t.a))
    return gamma, AtomicMeasure(REAL, tuple(atoms))


def lambda_map(t: AddClassicalTriplet) -> AddFreeTriplet:
    """Bercovici-Pata bijection: identity on the triplet data."""
    return AddFreeTriplet(t.eta, t.a, t.levy)


def lambda_inverse(t: AddFreeTriplet) -> AddClassicalTriplet:
    return AddClassicalTriplet(t.eta, t.a, t.levy)


def _wrapped_drift(t: AddClassicalTriplet) -> float:
    return t.eta + sum(w * (math.sin(x) - (x if abs(x) <= 1 else 0.0)) for x, w in t.levy.atoms)


def estar_map(t: AddClassicalTriplet) -> MultClassicalTriplet:
    """Wrapping x ↦ e^{ix} at the level of ∗-triplets."""
    return MultClassicalTriplet(_wrapped_drift(t), t.a, t.levy.wrap(), 1)


def eboxplus_map(t: AddFreeTriplet) -> MultFreeTriplet:
    """Free analogue of wrapping, from ⊞-triplets to ⊠-triplets."""
    return MultFreeTriplet(_wrapped_drift(t), t.a, t.levy.wrap())


def gamma_map(t: MultFreeTriplet) -> MultClassicalTriplet:
    if t.haar:
        return MultClassicalTriplet(0.0, 0.0, AtomicMeasure(CIRCLE), math.inf)
    return MultClassicalTriplet(t.omega_angle, t.b, t.levy, 1)


def mult_triplets_close(x: MultClassicalTriplet, y: MultClassicalTriplet, tol: float = 1e-12) -> bool:
    if x.idempotent != y.idempotent:
        return False
    if x.idempotent == math.inf:
        return True
    return (angles_close(x.omega_angle, y.omega_angle, tol)
            and abs(x.b - y.b) <= tol * max(1.0, abs(x.b))
            and x.levy.close_to(y.levy, tol))


def diagram_check(t: AddClassicalTriplet, tol: float = 1e-12) -> bool:
    """Γ∘e_⊞∘Λ(t) equals e_∗(t) at triplet level."""
    return mult_triplets_close(gamma_map(eboxplus_map(lambda_map(t))), estar_map(t), tol)


# --------------------------------------------------------------------------
# characteristic functions


def char_function(t: MultClassicalTriplet, k: int) -> complex:
    """μ̂(k) = λ̂_m(k) ω^k exp(-bk²/2 + ∫(ζ^k - 1 - ik Im ζ) dυ)."""
    k = int(k)
    m = t.idempotent
    if m == math.inf:
        if k != 0:
            return 0j
    elif k % int(m) != 0:
        return 0j
    integral = t.levy.integrate(lambda z: z ** k - 1 - 1j * k * z.imag)
    return cmath.exp(1j * k * t.omega_angle - 0.5 * t.b * k * k + integral)


def additive_char_function(t: AddClassicalTriplet, theta: float) -> complex:
    """Fourier transform of the ∗-ID law with triplet t, at θ."""
    integral = t.levy.integrate(lambda x: np.exp(1j * theta * x) - 1 - 1j * theta * x * (np.abs(x) <= 1))
    return cmath.exp(1j * theta * t.eta - 0.5 * t.a * theta * theta + integral)


# --------------------------------------------------------------------------
# free log-cumulants and moments


class HaarLaw(ValueError):
    """The Haar measure has no S-transform and no log-cumulants."""


def _require_not_haar(t: MultFreeTriplet) -> None:
    if t.haar:
        raise HaarLaw("the Haar law has vanishing first moment")


def log_cumulants(t: MultFreeTriplet, n_max: int = DEFAULT_ORDER) -> LogCumulantSequence:
    _require_not_haar(t)
    z = t.levy.points if t.levy.atoms else np.zeros(0, dtype=complex)
    w = t.levy.weights if t.levy.atoms else np.zeros(0)
    lk1 = 1j * t.omega_angle - t.b / 2 + np.sum(w * (z.real - 1))
    lk = [np.sum(w * (z - 1) ** n) for n in range(2, n_max + 1)]
    if n_max >= 2:
        lk[0] -= t.b
    return LogCumulantSequence(lk1, np.array(lk, dtype=complex))


def s_transform(t: MultFreeTriplet, order: int = DEFAULT_ORDER) -> TruncatedSeries:
    """S(z) = ω^{-1} exp(b/2 + bz + ∫ i Im ζ + (1-ζ)/(1+z(1-ζ)) dυ)."""
    _require_not_haar(t)
    c = np.zeros(order + 1, dtype=complex)
    c[0] = -1j * t.omega_angle + t.b / 2
    if order >= 1:
        c[1] = t.b
    for zeta, w in zip(t.levy.points if t.levy.atoms else [], t.levy.weights):
        c[0] += w * 1j * zeta.imag
        u = 1 - zeta
        # geometric expansion of u/(1+zu)
        c += w * u * (-u) ** np.arange(order + 1)
    return TruncatedSeries(c, order).exp()


def moments_by_series(t: MultFreeTriplet, order: int = DEFAULT_ORDER) -> MomentSequence:
    return moments_from_s(s_transform(t, order))


def moments_from_triplet(t: MultFreeTriplet, sigma: Permutation, cap: int = DEFAULT_CHAIN_CAP) -> complex:
    """Π_c m_{♯c} via the simple-chain expansion ending at σ.

    Chains are aggregated by their lowest element level by level; the weight of
    a step by an m-cycle is Lκ_m and a chain of length l carries 1/l!.
    """
    _require_not_haar(t)
    n = sigma.n
    if n > cap:
        raise CapExceeded(f"degree {n} exceeds chain cap {cap}")
    lc = log_cumulants(t, max(n, 2))
    level = {sigma: 1 + 0j}
    total = 1 + 0j
    fact = 1.0
    l = 0
    while level:
        l += 1
        fact *= l
        nxt: dict[Permutation, complex] = {}
        for tau, w in level.items():
            for rho, m in simple_predecessors(tau):
                nxt[rho] = nxt.get(rho, 0j) + w * lc[m]
        total += sum(nxt.values()) / fact
        level = nxt
    return complex(cmath.exp(n * lc.lk1) * total)


def moments_by_chains(t: MultFreeTriplet, order: int) -> MomentSequence:
    """(m_0, ..., m_order) with m_k evaluated on the cycle (1 ... k)."""
    out = [1 + 0j]
    for k in range(1, order + 1):
        out.append(moments_from_triplet(t, Permutation.from_cycles(k, tuple(range(1, k + 1)))))
    return MomentSequence(out)


# --------------------------------------------------------------------------
# limit experiment


def boxtimes_power_limit_experiment(
    base: MomentSequence | Callable[[int], MomentSequence],
    powers: Iterable[int],
    target: MomentSequence,
    orders: Sequence[int] = (1, 2, 3, 4, 5, 6),
) -> list[tuple[int, float]]:
    """Max moment error of base^{⊠n} against target, for each n in ``powers``.

    ``base`` may depend on n (a triangular array μ_n), hence the callable form.
    """
    rows = []
    for n in powers:
        mu = base(n) if callable(base) else base
        if not mu.first_moment_nonzero:
            raise SeriesError(f"base at n={n} has vanishing first moment")
        power = mu if n == 1 else boxtimes_power(mu, n)
        rows.append((int(n), power.max_error(target, orders)))
    return rows


def wrapped_gaussian_moments(b: float, order: int = DEFAULT_ORDER) -> MomentSequence:
    """Moments e^{-k²b/2} of e_∗(𝒩_b)."""
    k = np.arange(order + 1)
    return MomentSequence(np.exp(-0.5 * b * k * k))


def bernoulli_circle_moments(lam_over_n: float, zeta: complex, order: int = DEFAULT_ORDER) -> MomentSequence:
    """Moments of (1-p)δ_1 + pδ_ζ."""
    k = np.arange(order + 1)
    return MomentSequence((1 - lam_over_n) + lam_over_n * complex(zeta) ** k)
