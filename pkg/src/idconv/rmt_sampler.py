"""Monte Carlo samplers for the Hermitian and unitary matrix models.

Randomness is organised in fixed-size blocks of samples.  Block b draws from
``PCG64(SeedSequence(seed, spawn_key=(b,)))``, so the sample stream depends only
on (seed, config) and never on the number of worker threads.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .finiten import HermitianModel, UnitaryModel

REUNITARIZE_EVERY = 32
DEFAULT_STEPS = 200
BLOCK_BUDGET = 1 << 22  # complex entries per block


@dataclass(frozen=True)
class SampleConfig:
    model: HermitianModel | UnitaryModel
    n_samples: int
    brownian_steps: int = DEFAULT_STEPS
    seed: int = 0
    block_size: int | None = None
    workers: int = 1

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValueError("n_samples must be positive")
        if self.brownian_steps < 1:
            raise ValueError("brownian_steps must be positive")
        if self.workers < 1:
            raise ValueError("workers must be positive")

    @property
    def block(self) -> int:
        if self.block_size is not None:
            return self.block_size
        return int(max(1, min(4096, BLOCK_BUDGET // (self.model.N ** 2))))

    def blocks(self) -> list[tuple[int, int]]:
        """(block index, samples in block)."""
        B = self.block
        nb = -(-self.n_samples // B)
        return [(b, min(B, self.n_samples - b * B)) for b in range(nb)]


@dataclass(frozen=True)
class EmpiricalMoments:
    estimates: np.ndarray
    stderr: np.ndarray
    n_samples: int
    labels: tuple = ()

    @classmethod
    def from_values(cls, values: np.ndarray, labels: Sequence = ()) -> "EmpiricalMoments":
        """values: (n_samples, k) complex per-sample statistics."""
        values = np.asarray(values, dtype=complex)
        n = values.shape[0]
        # exactly rounded sums: a constant statistic gets a bit-exact mean
        est = np.array([complex(math.fsum(c.real), math.fsum(c.imag)) / n for c in values.T])
        if n > 1:
            dev = values - est
            var = (np.sum(dev.real ** 2, axis=0) + np.sum(dev.imag ** 2, axis=0)) / (n - 1)
            se = np.sqrt(var / n)
        else:
            se = np.zeros(values.shape[1])
        return cls(est, se, n, tuple(labels))

    def to_json(self) -> dict:
        return {
            "n_samples": self.n_samples,
            "rows": [{"label": _label(l), "re": float(e.real), "im": float(e.imag), "stderr": float(s)}
                     for l, e, s in zip(self.labels or range(1, len(self.estimates) + 1), self.estimates, self.stderr)],
        }


def _label(l):
    return list(l) if isinstance(l, tuple) else l


def block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(block,))))


def _run_blocks(cfg: SampleConfig, fn: Callable[[np.random.Generator, int], np.ndarray]) -> np.ndarray:
    """Evaluate fn on every block and concatenate in block order."""
    jobs = cfg.blocks()

    def one(job):
        b, size = job
        return fn(block_rng(cfg.seed, b), size)

    if cfg.workers == 1 or len(jobs) == 1:
        parts = [one(j) for j in jobs]
    else:
        with ThreadPoolExecutor(max_workers=cfg.workers) as ex:
            parts = list(ex.map(one, jobs))
    return np.concatenate(parts, axis=0)


# --------------------------------------------------------------------------
# Gaussian building blocks


def standard_hermitian(rng: np.random.Generator, B: int, N: int) -> np.ndarray:
    """Standard Gaussian on ℋ_N for the inner product Tr(XY): unit variance on
    every coordinate of a Tr-orthonormal basis."""
    g = rng.standard_normal((B, N, N, 2))
    A = (g[..., 0] + 1j * g[..., 1]) / math.sqrt(2)
    return (A + np.conj(np.swapaxes(A, -1, -2))) / math.sqrt(2)


def split_trace(H: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """H = H0 + t I with H0 traceless; returns (H0, t)."""
    N = H.shape[-1]
    t = np.trace(H, axis1=-2, axis2=-1).real / N
    H0 = H.copy()
    idx = np.arange(N)
    H0[:, idx, idx] -= t[:, None]
    return H0, t


def haar_unitary(rng: np.random.Generator, B: int, N: int) -> np.ndarray:
    """QR of complex Ginibre with the phases of diag(R) moved into Q."""
    g = rng.standard_normal((B, N, N, 2))
    Z = g[..., 0] + 1j * g[..., 1]
    Q, R = np.linalg.qr(Z)
    d = np.diagonal(R, axis1=-2, axis2=-1)
    return Q * (d / np.abs(d))[:, None, :]


def uniform_unit_vectors(rng: np.random.Generator, k: int, N: int) -> np.ndarray:
    g = rng.standard_normal((k, N, 2))
    u = g[..., 0] + 1j * g[..., 1]
    return u / np.linalg.norm(u, axis=1, keepdims=True)


def expi_eigh(X: np.ndarray) -> np.ndarray:
    """exp(iX) for a batch of Hermitian matrices via eigendecomposition."""
    w, V = np.linalg.eigh(X)
    return (V * np.exp(1j * w)[:, None, :]) @ np.conj(np.swapaxes(V, -1, -2))


def taylor_degree(r: float, tol: float = 1e-15) -> int:
    """Smallest d with e^r r^{d+1}/(d+1)! ≤ tol."""
    d = 0
    tail = math.exp(r) * r
    while tail > tol:
        d += 1
        tail *= r / (d + 1)
    return max(d, 1)


def expi_hermitian(X: np.ndarray, tol: float = 1e-15) -> np.ndarray:
    """exp(iX) for a batch of Hermitian matrices.

    Horner-form Taylor series when the largest Frobenius norm is below 1,
    eigendecomposition otherwise.
    """
    r = float(np.sqrt(np.max(np.sum(np.abs(X) ** 2, axis=(-2, -1))))) if len(X) else 0.0
    if r >= 1:
        return expi_eigh(X)
    d = taylor_degree(r, tol)
    n = X.shape[-1]
    diag = (..., np.arange(n), np.arange(n))
    iX = 1j * X
    out = iX / d
    out[diag] += 1
    for k in range(d - 1, 0, -1):
        out = np.matmul(iX, out)
        out *= 1.0 / k
        out[diag] += 1
    return out


def polar_unitary(U: np.ndarray) -> np.ndarray:
    W, _, Vh = np.linalg.svd(U)
    return W @ Vh


def _hermitize(H: np.ndarray) -> np.ndarray:
    return (H + np.conj(np.swapaxes(H, -1, -2))) / 2


# --------------------------------------------------------------------------
# Hermitian model


def _hermitian_block(model: HermitianModel, rng: np.random.Generator, B: int) -> np.ndarray:
    N = model.N
    H = np.zeros((B, N, N), dtype=complex)
    if model.a > 0:
        H0, t = split_trace(standard_hermitian(rng, B, N))
        H += math.sqrt(model.a / (N + 1)) * H0
        H += (math.sqrt(model.a) * t)[:, None, None] * np.eye(N)
    law = model.jump_law
    # the truncated first moment of N·ρ⊗Haar over the unit ball is Σ_{|x|≤1} w x · I_N
    comp = sum(w * x for x, w in law.atoms if abs(x) <= 1)
    H += (model.eta - comp) * np.eye(N)
    mass = law.total_mass()
    if mass > 0:
        counts = rng.poisson(N * mass, size=B)
        k = int(counts.sum())
        if k:
            owner = np.repeat(np.arange(B), counts)
            x = law.locations[rng.choice(len(law.atoms), size=k, p=law.weights / mass)]
            u = uniform_unit_vectors(rng, k, N)
            jumps = x[:, None, None] * (u[:, :, None] * np.conj(u[:, None, :]))
            np.add.at(H, owner, jumps)
    return _hermitize(H)


def sample_hermitian(cfg: SampleConfig) -> np.ndarray:
    """(n_samples, N, N) draws from the Hermitian model."""
    if not isinstance(cfg.model, HermitianModel):
        raise TypeError("sample_hermitian needs a HermitianModel")
    return _run_blocks(cfg, lambda rng, B: _hermitian_block(cfg.model, rng, B))


# --------------------------------------------------------------------------
# unitary model


@dataclass
class _Jumps:
    owner: np.ndarray     # sample index of each jump
    times: np.ndarray     # arrival times in [0, 1)
    factors: np.ndarray   # I + (ζ − 1) u u*


def _draw_jumps(model: UnitaryModel, rng: np.random.Generator, B: int) -> _Jumps:
    N = model.N
    law = model.jump_law
    mass = law.total_mass()
    if mass == 0:
        return _Jumps(np.zeros(0, dtype=int), np.zeros(0), np.zeros((0, N, N), dtype=complex))
    counts = rng.poisson(N * mass, size=B)
    k = int(counts.sum())
    owner = np.repeat(np.arange(B), counts)
    times = rng.random(k)
    zeta = law.points[rng.choice(len(law.atoms), size=k, p=law.weights / mass)]
    u = uniform_unit_vectors(rng, k, N)
    factors = np.eye(N) + (zeta - 1)[:, None, None] * (u[:, :, None] * np.conj(u[:, None, :]))
    order = np.lexsort((times, owner))
    return _Jumps(owner[order], times[order], factors[order])


def _apply_jumps(U: np.ndarray, J: _Jumps, mask: np.ndarray) -> None:
    """Right-multiply U[owner] by the selected jump factors, earliest first."""
    idx = np.flatnonzero(mask)
    while len(idx):
        # jumps are sorted by (owner, time): the first of each owner goes now
        owners, first = np.unique(J.owner[idx], return_index=True)
        take = idx[first]
        U[owners] = U[owners] @ J.factors[take]
        idx = np.delete(idx, first)


def _scalar_phase(model: UnitaryModel, rng: np.random.Generator, B: int) -> np.ndarray:
    """Drift plus the identity-direction Brownian motion, both central and hence exact."""
    law = model.jump_law
    # compensator of the jump part: i Σ w Im ζ sits in the triplet drift
    comp = float(np.sum(law.weights * law.points.imag)) if law.atoms else 0.0
    phase = np.full(B, model.y0 - comp)
    if model.beta > 0:
        phase = phase + math.sqrt(model.beta / model.N) * rng.standard_normal(B)
    return np.exp(1j * phase)


def _unitary_paths(model: UnitaryModel, rng: np.random.Generator, B: int, steps: int,
                   coupled: bool) -> tuple[np.ndarray, np.ndarray | None]:
    """Time-one samples on a grid of ``steps`` intervals.

    With ``coupled`` the same randomness also drives a path on 2·steps
    intervals (returned second): fine increments are summed in pairs for the
    coarse path and jumps share their arrival times.
    """
    N = model.N
    phase = _scalar_phase(model, rng, B)
    J = _draw_jumps(model, rng, B)
    U = np.broadcast_to(np.eye(N, dtype=complex), (B, N, N)).copy()
    Uf = U.copy() if coupled else None
    if model.alpha > 0:
        sub = 2 if coupled else 1
        dt = 1.0 / (steps * sub)
        scale = math.sqrt(model.alpha * dt)
        for k in range(steps):
            incs = [scale * split_trace(standard_hermitian(rng, B, N))[0] for _ in range(sub)]
            U = U @ expi_hermitian(sum(incs))
            in_step = (J.times * steps).astype(int) == k
            _apply_jumps(U, J, in_step)
            if coupled:
                for h, X in enumerate(incs):
                    Uf = Uf @ expi_hermitian(X)
                    _apply_jumps(Uf, J, (J.times * 2 * steps).astype(int) == 2 * k + h)
            if (k + 1) % REUNITARIZE_EVERY == 0:
                U = polar_unitary(U)
                if coupled:
                    Uf = polar_unitary(Uf)
        U = polar_unitary(U)
        if coupled:
            Uf = polar_unitary(Uf)
    else:
        # no su(N) diffusion: the path is the ordered product of jumps
        _apply_jumps(U, J, np.ones(len(J.owner), dtype=bool))
        if coupled:
            Uf = U.copy()
    U *= phase[:, None, None]
    if coupled:
        Uf *= phase[:, None, None]
    return U, Uf


def _unitary_block(model: UnitaryModel, rng: np.random.Generator, B: int, steps: int) -> np.ndarray:
    if model.haar:
        return haar_unitary(rng, B, model.N)
    return _unitary_paths(model, rng, B, steps, coupled=False)[0]


def sample_unitary(cfg: SampleConfig) -> np.ndarray:
    """(n_samples, N, N) draws from the unitary model."""
    if not isinstance(cfg.model, UnitaryModel):
        raise TypeError("sample_unitary needs a UnitaryModel")
    return _run_blocks(cfg, lambda rng, B: _unitary_block(cfg.model, rng, B, cfg.brownian_steps))


def sample(cfg: SampleConfig) -> np.ndarray:
    return sample_hermitian(cfg) if isinstance(cfg.model, HermitianModel) else sample_unitary(cfg)


# --------------------------------------------------------------------------
# statistics


def trace_products(U: np.ndarray, cycle_types: Sequence[Sequence[int]]) -> np.ndarray:
    """(B, len(cycle_types)) values of Π_j (1/N) Tr(U^{k_j})."""
    N = U.shape[-1]
    kmax = max((max(c) for c in cycle_types if len(c)), default=0)
    traces = {}
    P = None
    for k in range(1, kmax + 1):
        P = U if P is None else P @ U
        traces[k] = np.trace(P, axis1=-2, axis2=-1) / N
    out = np.ones((U.shape[0], len(cycle_types)), dtype=complex)
    for j, c in enumerate(cycle_types):
        for k in c:
            out[:, j] *= traces[k]
    return out


def spectral_moments(M: np.ndarray, k_max: int, hermitian: bool) -> np.ndarray:
    """(B, k_max) values of (1/N) Σ λ_i^k from eigenvalues."""
    lam = np.linalg.eigvalsh(M) if hermitian else np.linalg.eigvals(M)
    k = np.arange(1, k_max + 1)
    return np.mean(lam[:, :, None].astype(complex) ** k, axis=1)


def _block_stats(cfg: SampleConfig, stat: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    m = cfg.model
    if isinstance(m, HermitianModel):
        return _run_blocks(cfg, lambda rng, B: stat(_hermitian_block(m, rng, B)))
    return _run_blocks(cfg, lambda rng, B: stat(_unitary_block(m, rng, B, cfg.brownian_steps)))


def empirical_trace_products(cfg: SampleConfig, cycle_type: Sequence[int] | Sequence[Sequence[int]]) -> EmpiricalMoments:
    """Mean and stderr of Π_j (1/N)Tr(U^{k_j}); a list of cycle types gives one row each."""
    types = [tuple(c) for c in cycle_type] if cycle_type and isinstance(cycle_type[0], (list, tuple)) else [tuple(cycle_type)]
    vals = _block_stats(cfg, lambda U: trace_products(U, types))
    return EmpiricalMoments.from_values(vals, types)


def empirical_spectral_moments(cfg: SampleConfig, k_max: int) -> EmpiricalMoments:
    herm = isinstance(cfg.model, HermitianModel)
    vals = _block_stats(cfg, lambda M: spectral_moments(M, k_max, herm))
    return EmpiricalMoments.from_values(vals, tuple(range(1, k_max + 1)))


@dataclass(frozen=True)
class StepDoubling:
    coarse: EmpiricalMoments
    fine: EmpiricalMoments
    difference: EmpiricalMoments  # per-sample fine − coarse

    def to_json(self) -> dict:
        return {"coarse": self.coarse.to_json(), "fine": self.fine.to_json(), "difference": self.difference.to_json()}


def step_doubling_trace_products(cfg: SampleConfig, cycle_types: Sequence[Sequence[int]]) -> StepDoubling:
    """Trace products on ``brownian_steps`` and on twice as many steps, driven by
    the same Brownian increments and jump times."""
    m = cfg.model
    if not isinstance(m, UnitaryModel) or m.haar:
        raise TypeError("step doubling needs a non-Haar unitary model")
    types = [tuple(c) for c in cycle_types]
    k = len(types)

    def fn(rng, B):
        U, Uf = _unitary_paths(m, rng, B, cfg.brownian_steps, coupled=True)
        return np.concatenate([trace_products(U, types), trace_products(Uf, types)], axis=1)

    vals = _run_blocks(cfg, fn)
    return StepDoubling(EmpiricalMoments.from_values(vals[:, :k], types),
                        EmpiricalMoments.from_values(vals[:, k:], types),
                        EmpiricalMoments.from_values(vals[:, k:] - vals[:, :k], types))
