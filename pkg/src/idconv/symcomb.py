"""Permutations, the geodesic order on S_n, non-crossing partitions and simple chains.

Permutations use one-line notation with 1-based labels.  The product ``a * b``
is composition with ``b`` applied first, so ``(a * b)(i) == a(b(i))``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Iterator, Sequence

import numpy as np

DEFAULT_CHAIN_CAP = 8
DEFAULT_NC_CAP = 12


class CapExceeded(ValueError):
    """Raised when a degree exceeds the configured enumeration cap."""


class DegreeMismatch(ValueError):
    pass


@dataclass(frozen=True, order=True)
class Permutation:
    images: tuple[int, ...]

    def __post_init__(self):
        imgs = tuple(int(i) for i in self.images)
        if len(imgs) == 0 or sorted(imgs) != list(range(1, len(imgs) + 1)):
            raise ValueError(f"not a bijection of 1..n: {self.images!r}")
        object.__setattr__(self, "images", imgs)

    @property
    def n(self) -> int:
        return len(self.images)

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(tuple(range(1, n + 1)))

    @classmethod
    def from_cycles(cls, n: int, *cycles: Sequence[int]) -> "Permutation":
        """Build from disjoint cycles, e.g. ``from_cycles(4, (1, 2), (3, 4))``."""
        imgs = list(range(1, n + 1))
        seen: set[int] = set()
        for cyc in cycles:
            for k, a in enumerate(cyc):
                if a in seen or not 1 <= a <= n:
                    raise ValueError(f"bad cycle {cyc!r}")
                seen.add(a)
                imgs[a - 1] = cyc[(k + 1) % len(cyc)]
        return cls(tuple(imgs))

    def __call__(self, i: int) -> int:
        return self.images[i - 1]

    def __mul__(self, other: "Permutation") -> "Permutation":
        _check_degree(self, other)
        return Permutation(tuple(self.images[j - 1] for j in other.images))

    def inverse(self) -> "Permutation":
        inv = [0] * self.n
        for i, j in enumerate(self.images, start=1):
            inv[j - 1] = i
        return Permutation(tuple(inv))

    @cached_property
    def _cycles(self) -> tuple[tuple[int, ...], ...]:
        seen = [False] * (self.n + 1)
        out = []
        for start in range(1, self.n + 1):
            if seen[start]:
                continue
            cyc = []
            i = start
            while not seen[i]:
                seen[i] = True
                cyc.append(i)
                i = self.images[i - 1]
            out.append(tuple(cyc))
        return tuple(out)

    def cycles(self, include_fixed: bool = True) -> tuple[tuple[int, ...], ...]:
        """Cycles with the minimal element first, sorted by minimal element."""
        if include_fixed:
            return self._cycles
        return tuple(c for c in self._cycles if len(c) > 1)

    def cycle_count(self) -> int:
        return len(self._cycles)

    def norm(self) -> int:
        """|σ| = n - ℓ(σ), the minimal number of transpositions."""
        return self.n - len(self._cycles)

    def cycle_type(self) -> tuple[int, ...]:
        return tuple(sorted((len(c) for c in self._cycles), reverse=True))

    def is_cycle(self) -> bool:
        """True for a single non-trivial cycle."""
        return len(self.cycles(include_fixed=False)) == 1

    def support(self) -> tuple[int, ...]:
        return tuple(i for i, j in enumerate(self.images, start=1) if i != j)

    def to_json(self) -> dict:
        return {"n": self.n, "images": list(self.images)}

    @classmethod
    def from_json(cls, obj: dict) -> "Permutation":
        p = cls(tuple(obj["images"]))
        if "n" in obj and int(obj["n"]) != p.n:
            raise ValueError("field n disagrees with images")
        return p

    def __str__(self) -> str:
        cyc = self.cycles(include_fixed=False)
        if not cyc:
            return "()"
        return "".join("(" + " ".join(map(str, c)) + ")" for c in cyc)


def _check_degree(a: Permutation, b: Permutation) -> None:
    if a.n != b.n:
        raise DegreeMismatch(f"degree mismatch: {a.n} vs {b.n}")


def cayley_distance(a: Permutation, b: Permutation) -> int:
    _check_degree(a, b)
    return (a.inverse() * b).norm()


def geodesic_leq(a: Permutation, b: Permutation) -> bool:
    """a ≼ b, i.e. a lies on a geodesic from the identity to b."""
    _check_degree(a, b)
    return a.norm() + cayley_distance(a, b) == b.norm()


# --------------------------------------------------------------------------
# Symmetric group tables


class SymmetricGroup:
    """Dense tables for S_n with elements ranked in lexicographic order.

    Rows of ``perms`` are 0-based images.  Multiplication tables are built on
    demand (n ≤ 7); rank lookups use a base-n code and binary search.
    """

    TABLE_CAP = 7

    def __init__(self, n: int):
        if n < 1:
            raise ValueError("n must be positive")
        self.n = n
        self.order = math.factorial(n)
        self.perms = np.array(list(itertools.permutations(range(n))), dtype=np.int8).reshape(self.order, n)
        self._weights = n ** np.arange(n - 1, -1, -1, dtype=np.int64)
        self.codes = self.perms.astype(np.int64) @ self._weights
        inv = np.argsort(self.perms, axis=1).astype(np.int8)
        self.inverse = self.rank_array(inv)
        self.cycle_counts = np.array([_count_cycles(p) for p in self.perms], dtype=np.int64)
        types = [tuple(sorted(_cycle_lengths(p), reverse=True)) for p in self.perms]
        self.class_types = sorted(set(types), reverse=True)
        index = {t: k for k, t in enumerate(self.class_types)}
        self.class_of = np.array([index[t] for t in types], dtype=np.int64)
        self.class_sizes = np.bincount(self.class_of, minlength=len(self.class_types))
        self.identity_rank = 0
        self._mul: np.ndarray | None = None

    def rank_array(self, rows: np.ndarray) -> np.ndarray:
        codes = np.asarray(rows, dtype=np.int64) @ self._weights
        return np.searchsorted(self.codes, codes)

    def rank(self, p: Permutation) -> int:
        if p.n != self.n:
            raise DegreeMismatch(f"degree mismatch: {p.n} vs {self.n}")
        return int(self.rank_array(np.array(p.images, dtype=np.int64)[None, :] - 1)[0])

    def element(self, r: int) -> Permutation:
        return Permutation(tuple(int(x) + 1 for x in self.perms[r]))

    def compose_ranks(self, a: np.ndarray | int, b: np.ndarray | int) -> np.ndarray:
        """Ranks of a∘b for broadcastable rank arrays a and b."""
        a = np.asarray(a)
        b = np.asarray(b)
        a, b = np.broadcast_arrays(a, b)
        pa = self.perms[a.ravel()].astype(np.int64)
        pb = self.perms[b.ravel()].astype(np.int64)
        prod = np.take_along_axis(pa, pb, axis=1)
        return self.rank_array(prod).reshape(a.shape)

    @property
    def mul(self) -> np.ndarray:
        """mul[i, j] = rank(perm_i ∘ perm_j)."""
        if self._mul is None:
            if self.n > self.TABLE_CAP:
                raise CapExceeded(f"multiplication table only for n ≤ {self.TABLE_CAP}")
            idx = np.arange(self.order)
            table = np.empty((self.order, self.order), dtype=np.int32)
            for i in range(self.order):
                table[i] = self.compose_ranks(np.full(self.order, i), idx)
            self._mul = table
        return self._mul


def _count_cycles(p: np.ndarray) -> int:
    return len(_cycle_lengths(p))


def _cycle_lengths(p: np.ndarray) -> list[int]:
    n = len(p)
    seen = [False] * n
    out = []
    for s in range(n):
        if seen[s]:
            continue
        k = 0
        i = s
        while not seen[i]:
            seen[i] = True
            i = int(p[i])
            k += 1
        out.append(k)
    return out


@lru_cache(maxsize=None)
def symmetric_group(n: int) -> SymmetricGroup:
    return SymmetricGroup(n)


# --------------------------------------------------------------------------
# Non-crossing partitions


@dataclass(frozen=True)
class NoncrossingPartition:
    n: int
    blocks: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        blocks = tuple(sorted(tuple(sorted(int(x) for x in b)) for b in self.blocks))
        flat = sorted(x for b in blocks for x in b)
        if flat != list(range(1, self.n + 1)) or any(len(b) == 0 for b in blocks):
            raise ValueError("blocks must partition 1..n")
        if _has_crossing(blocks):
            raise ValueError(f"partition is crossing: {blocks}")
        object.__setattr__(self, "blocks", blocks)

    @classmethod
    def from_permutation(cls, sigma: Permutation) -> "NoncrossingPartition":
        return cls(sigma.n, sigma.cycles())

    @cached_property
    def permutation(self) -> Permutation:
        """Image under the block-to-cycle map (increasing cyclic order)."""
        return Permutation.from_cycles(self.n, *self.blocks)

    def leq(self, other: "NoncrossingPartition") -> bool:
        """Refinement order: every block of self sits inside a block of other."""
        if self.n != other.n:
            raise DegreeMismatch("degree mismatch")
        where = {}
        for k, b in enumerate(other.blocks):
            for x in b:
                where[x] = k
        return all(len({where[x] for x in b}) == 1 for b in self.blocks)

    def block_sizes(self) -> tuple[int, ...]:
        return tuple(sorted((len(b) for b in self.blocks), reverse=True))

    def to_json(self) -> list[list[int]]:
        return [list(b) for b in self.blocks]

    @classmethod
    def zero(cls, n: int) -> "NoncrossingPartition":
        return cls(n, tuple((i,) for i in range(1, n + 1)))

    @classmethod
    def one(cls, n: int) -> "NoncrossingPartition":
        return cls(n, (tuple(range(1, n + 1)),))


def _has_crossing(blocks: Sequence[Sequence[int]]) -> bool:
    owner = {}
    lo, hi = [], []
    for k, b in enumerate(blocks):
        lo.append(min(b))
        hi.append(max(b))
        for x in b:
            owner[x] = k
    for b in blocks:
        for i, j in zip(b, b[1:]):
            for x in range(i + 1, j):
                k = owner[x]
                if lo[k] < i or hi[k] > j:
                    return True
    return False


def _trusted_nc(n: int, blocks: tuple[tuple[int, ...], ...]) -> NoncrossingPartition:
    obj = object.__new__(NoncrossingPartition)
    object.__setattr__(obj, "n", n)
    object.__setattr__(obj, "blocks", blocks)
    return obj


@lru_cache(maxsize=None)
def _nc_shapes(k: int) -> tuple[tuple[tuple[int, ...], ...], ...]:
    """All non-crossing partitions of 0..k-1 as tuples of blocks."""
    if k == 0:
        return ((),)
    out = []
    rest = k - 1
    # the block of 0 takes positions p_1 < ... < p_r from 1..k-1; gaps are independent
    for r in range(rest + 1):
        for picks in itertools.combinations(range(1, k), r):
            bounds = (0,) + picks + (k,)
            gaps = [(bounds[t] + 1, bounds[t + 1]) for t in range(len(bounds) - 1)]
            parts = [[tuple(tuple(x + lo for x in b) for b in shape) for shape in _nc_shapes(hi - lo)]
                     for lo, hi in gaps]
            for combo in itertools.product(*parts):
                blocks = [(0,) + picks]
                for c in combo:
                    blocks.extend(c)
                out.append(tuple(sorted(blocks)))
    return tuple(sorted(out))


def enumerate_noncrossing(n: int, cap: int = DEFAULT_NC_CAP) -> list[NoncrossingPartition]:
    """All of NC(n); each partition exposes its permutation via ``.permutation``."""
    if n < 1:
        raise ValueError("n must be positive")
    if n > cap:
        raise CapExceeded(f"n={n} exceeds cap {cap}")
    return [_trusted_nc(n, tuple(tuple(x + 1 for x in b) for b in shape)) for shape in _nc_shapes(n)]


def catalan(n: int) -> int:
    return math.comb(2 * n, n) // (n + 1)


def kreweras(pi: NoncrossingPartition, top: NoncrossingPartition) -> NoncrossingPartition:
    """Complement of ``pi`` inside ``[0_n, top]``: the cycles of σ_pi^{-1} σ_top."""
    if pi.n != top.n:
        raise DegreeMismatch("degree mismatch")
    if not pi.leq(top):
        raise ValueError("pi is not below top")
    k = pi.permutation.inverse() * top.permutation
    return NoncrossingPartition.from_permutation(k)


# --------------------------------------------------------------------------
# Intervals, cycles below, simple chains


@lru_cache(maxsize=4096)
def _interval(images: tuple[int, ...]) -> tuple[Permutation, ...]:
    sigma = Permutation(images)
    n = sigma.n
    per_cycle = []
    for cyc in sigma.cycles():
        k = len(cyc)
        # transport NC(k) along the cycle: position j ↦ cyc[j]
        per_cycle.append([[tuple(cyc[j] for j in b) for b in shape] for shape in _nc_shapes(k)])
    out = []
    for combo in itertools.product(*per_cycle):
        cycles = [c for blocks in combo for c in blocks]
        out.append(Permutation.from_cycles(n, *cycles))
    return tuple(sorted(out))


def interval_below(sigma: Permutation) -> tuple[Permutation, ...]:
    """All ρ with ρ ≼ σ, in lexicographic order."""
    return _interval(sigma.images)


def cycles_below(sigma: Permutation, m: int) -> list[Permutation]:
    """All m-cycles c with c·σ ≼ σ."""
    if not 2 <= m <= sigma.n:
        raise ValueError(f"m={m} out of range 2..{sigma.n}")
    inv = sigma.inverse()
    out = []
    for rho in interval_below(sigma):
        c = rho * inv
        if c.is_cycle() and len(c.support()) == m:
            out.append(c)
    return sorted(out)


@lru_cache(maxsize=4096)
def _predecessors(images: tuple[int, ...]) -> tuple[tuple[Permutation, int], ...]:
    sigma = Permutation(images)
    out = []
    for rho in _interval(images):
        q = rho.inverse() * sigma
        if q.is_cycle():
            out.append((rho, len(q.support())))
    return tuple(out)


def simple_predecessors(sigma: Permutation) -> tuple[tuple[Permutation, int], ...]:
    """Pairs (ρ, m) with ρ ≺ σ and ρ^{-1}σ a single m-cycle, lexicographic in ρ."""
    return _predecessors(sigma.images)


@dataclass(frozen=True)
class SimpleChain:
    steps: tuple[Permutation, ...]

    @property
    def length(self) -> int:
        return len(self.steps) - 1

    def step_sizes(self) -> tuple[int, ...]:
        """Lengths of the cycles σ_{i-1}^{-1}σ_i."""
        return tuple(cayley_distance(a, b) + 1 for a, b in zip(self.steps, self.steps[1:]))


def simple_chains_ending_at(sigma: Permutation, cap: int = DEFAULT_CHAIN_CAP) -> Iterator[SimpleChain]:
    """Yield every simple chain (σ_0 ≺ ... ≺ σ_l = σ), including the chain (σ).

    Depth-first from σ downward; predecessors are visited in lexicographic
    order, so the stream order is reproducible.
    """
    if sigma.n > cap:
        raise CapExceeded(f"degree {sigma.n} exceeds chain cap {cap}")

    def walk(tail: tuple[Permutation, ...]) -> Iterator[SimpleChain]:
        yield SimpleChain(tail)
        for rho, _ in _predecessors(tail[0].images):
            yield from walk((rho,) + tail)

    yield from walk((sigma,))


def count_simple_chains(sigma: Permutation, cap: int = DEFAULT_CHAIN_CAP) -> int:
    """Number of simple chains ending at σ, by dynamic programming over predecessors."""
    if sigma.n > cap:
        raise CapExceeded(f"degree {sigma.n} exceeds chain cap {cap}")

    @lru_cache(maxsize=None)
    def count(images):
        return 1 + sum(count(r.images) for r, _ in _predecessors(images))

    return count(sigma.images)


def all_permutations(n: int) -> Iterator[Permutation]:
    for p in itertools.permutations(range(1, n + 1)):
        yield Permutation(p)
