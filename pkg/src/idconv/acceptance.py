"""Acceptance checks shared by ``idconv verify`` and the test-suite.

Each check returns a ``CriterionResult`` whose ``metrics`` are plain JSON
values.  Wall-clock time is kept apart from the metrics so that reports from
different runs can be compared for equality.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from . import infdiv as inf
from .finiten import (
    gamma_n,
    limit_trace_moments,
    normalized_exact,
    pi_n,
    stochastic_exponential,
)
from .rmt_sampler import (
    SampleConfig,
    empirical_spectral_moments,
    step_doubling_trace_products,
)
from .series import moments_from_s
from .symcomb import (
    NoncrossingPartition,
    Permutation,
    all_permutations,
    catalan,
    count_simple_chains,
    enumerate_noncrossing,
    geodesic_leq,
    simple_chains_ending_at,
    symmetric_group,
)
from .weingarten import (
    _phi_identity_class_values,
    central_multiply,
    phi_identity,
    wg_class_values,
    wg_element,
)

FLOAT_FLOOR = 1e-12  # absolute slack for quantities that are exact up to rounding


@dataclass
class CriterionResult:
    id: int
    name: str
    passed: bool
    detail: str
    metrics: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        budget = RUNTIME_BUDGETS.get(self.id)
        timing = f"{self.seconds:.1f}s" + (f" of {budget:.0f}s budget" if budget else "")
        return f"criterion {self.id:2d} [{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail} ({timing})"

    def to_json(self) -> dict:
        return {"name": self.name, "passed": self.passed, "detail": self.detail,
                "metrics": self.metrics, "seconds": round(self.seconds, 3)}


def _c(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]


def full_cycle(n: int) -> Permutation:
    return Permutation.from_cycles(n, tuple(range(1, n + 1)))


def permutation_of_type(ct) -> Permutation:
    n = sum(ct)
    cycles, start = [], 1
    for k in ct:
        cycles.append(tuple(range(start, start + k)))
        start += k
    return Permutation.from_cycles(n, *cycles)


# --------------------------------------------------------------------------
# 1. combinatorics


def _brute_chain_count(sigma: Permutation) -> int:
    perms = list(all_permutations(sigma.n))
    memo: dict[Permutation, int] = {}

    def count(tau: Permutation) -> int:
        if tau not in memo:
            total = 1
            for rho in perms:
                if rho != tau and geodesic_leq(rho, tau) and (rho.inverse() * tau).is_cycle():
                    total += count(rho)
            memo[tau] = total
        return memo[tau]

    return count(sigma)


def check_combinatorics() -> CriterionResult:
    counts = {n: len(enumerate_noncrossing(n)) for n in range(1, 11)}
    cat_ok = all(counts[n] == catalan(n) for n in counts)
    iso_ok = True
    for n in range(1, 7):
        ncs = enumerate_noncrossing(n)
        images = [p.permutation for p in ncs]
        top = full_cycle(n)
        below = {s for s in all_permutations(n) if geodesic_leq(s, top)}
        iso_ok &= set(images) == below and len(set(images)) == len(ncs)
        iso_ok &= all(NoncrossingPartition.from_permutation(s) == p for s, p in zip(images, ncs))
        for (p, sp), (q, sq) in itertools.product(list(zip(ncs, images)), repeat=2):
            if p.leq(q) != geodesic_leq(sp, sq):
                iso_ok = False
    chains_ok = True
    checked = 0
    for n in range(1, 6):
        for sigma in all_permutations(n):
            fast = count_simple_chains(sigma)
            if n <= 4 or sigma.cycle_count() <= 2:
                chains_ok &= fast == _brute_chain_count(sigma)
            chains_ok &= fast == sum(1 for _ in simple_chains_ending_at(sigma))
            checked += 1
    ok = bool(cat_ok and iso_ok and chains_ok)
    return CriterionResult(1, "combinatorics exactness", ok,
                           f"|NC(n)|=Catalan(n) n≤10: {cat_ok}; Biane isomorphism n≤6: {iso_ok}; chain counts n≤5: {chains_ok}",
                           {"nc_counts": counts, "catalan_ok": bool(cat_ok), "biane_ok": bool(iso_ok),
                            "chains_ok": bool(chains_ok), "permutations_checked": checked})


# --------------------------------------------------------------------------
# 2. Weingarten


def moebius(sigma: Permutation) -> int:
    out = 1
    for c in sigma.cycles():
        k = len(c)
        out *= (-1) ** (k - 1) * catalan(k - 1)
    return out


def check_weingarten() -> CriterionResult:
    closed_err = 0.0
    for N in range(2, 7):
        w1 = wg_element(1, N)
        closed_err = max(closed_err, abs(w1.coeffs[0] - 1 / N))
        w2 = wg_element(2, N)
        ident = w2[Permutation.identity(2)]
        swap = w2[Permutation((2, 1))]
        closed_err = max(closed_err, abs(ident - 1 / (N * N - 1)), abs(swap + 1 / (N * (N * N - 1))))
    closed_ok = closed_err <= 1e-12
    inv_ok = True
    inv_err = 0.0
    for N in range(1, 6):
        for n in range(1, N + 1):
            vals, _ = wg_class_values(n, N)
            prod = central_multiply(n, _phi_identity_class_values(n, N), list(vals))
            e = [Fraction(0)] * len(prod)
            G = symmetric_group(n)
            e[G.class_of[G.identity_rank]] = Fraction(1)
            inv_ok &= prod == e
            one = phi_identity(n, N) * wg_element(n, N)
            target = np.zeros(len(one.coeffs))
            target[0] = 1
            inv_err = max(inv_err, float(np.max(np.abs(one.coeffs - target))))
    inv_ok = bool(inv_ok and inv_err <= 1e-12)
    bound_ok = True
    worst = 0.0
    for n in range(1, 5):
        seen = set()
        for sigma in all_permutations(n):
            if sigma.cycle_type() in seen:
                continue
            seen.add(sigma.cycle_type())
            scaled = [N ** (n + sigma.norm()) * float(wg_class_values(n, N)[0][_class_index(sigma)])
                      for N in range(n, n + 7)]
            mob = moebius(sigma)
            ratio = max(abs(s) for s in scaled) / abs(mob)
            worst = max(worst, ratio)
            bound_ok &= ratio < 10 and abs(scaled[-1] - mob) < abs(scaled[0] - mob) + 1e-12
    ok = bool(closed_ok and inv_ok and bound_ok)
    return CriterionResult(2, "Weingarten identities", ok,
                           f"closed forms err {closed_err:.1e}; Φ(Id)·Wg=1 exact and float err {inv_err:.1e}; "
                           f"sup |N^(n+|σ|)Wg(σ)|/|Möb(σ)| = {worst:.3f}",
                           {"closed_form_error": closed_err, "inverse_exact": bool(inv_ok), "inverse_float_error": inv_err,
                            "asymptotic_ratio_sup": worst, "asymptotic_ok": bool(bound_ok)})


def _class_index(sigma: Permutation) -> int:
    return symmetric_group(sigma.n).class_types.index(sigma.cycle_type())


# --------------------------------------------------------------------------
# 3. chain formula vs S-transform series


def random_mult_triplet(rng: np.random.Generator, atoms: int = 3) -> inf.MultFreeTriplet:
    locs = rng.uniform(-math.pi, math.pi, atoms)
    weights = rng.uniform(0.05, 0.6, atoms)
    return inf.MultFreeTriplet(float(rng.uniform(-math.pi, math.pi)), float(rng.uniform(0, 1.5)),
                              inf.AtomicMeasure.circle(*zip(locs.tolist(), weights.tolist())))


def oracle_triplet_family(seed: int) -> dict[str, inf.MultFreeTriplet]:
    fam = {f"dirac theta={th}": inf.dirac_mult(th) for th in (0.0, 0.4, -2.5)}
    fam.update({f"brownian b={b}": inf.free_unitary_bm(b) for b in (0.25, 1.0, 2.0)})
    fam.update({f"poisson lambda={lam} zeta=e^(i{phi})": inf.free_poisson_mult(lam, inf.AtomicMeasure.circle((phi, 1.0)))
                for lam, phi in ((1.0, math.pi / 2), (0.5, math.pi), (2.0, -1.0))})
    rng = np.random.default_rng([seed, 3])
    fam.update({f"random #{j}": random_mult_triplet(rng) for j in range(3)})
    return fam


def _rel(a: complex, b: complex) -> float:
    scale = max(abs(a), abs(b))
    return abs(a - b) / scale if scale > 0 else 0.0


def check_moment_oracles(seed: int) -> CriterionResult:
    worst = 0.0
    per = {}
    for name, t in oracle_triplet_family(seed).items():
        series = moments_from_s(inf.s_transform(t, 9))
        err = max(_rel(inf.moments_from_triplet(t, full_cycle(k)), series[k]) for k in range(1, 9))
        per[name] = err
        worst = max(worst, err)
    ok = worst <= 1e-8
    return CriterionResult(3, "moment formula oracle equivalence", ok,
                           f"max relative error through n=8 over {len(per)} triplets: {worst:.2e}",
                           {"max_relative_error": worst, "per_triplet": per})


# --------------------------------------------------------------------------
# 4. commuting diagrams


def random_add_triplet(rng: np.random.Generator, free: bool) -> inf.AddClassicalTriplet:
    k = int(rng.integers(0, 4))
    locs = rng.uniform(-8, 8, k)
    # exercise the truncation boundary and the kernel of the wrap map
    special = rng.random(k)
    locs = np.where(special < 0.15, 2 * math.pi * rng.integers(-2, 3, k), locs)
    locs = np.where((special >= 0.15) & (special < 0.3), rng.choice([-1.0, 1.0], k), locs)
    atoms = [(float(x), float(w)) for x, w in zip(locs, rng.uniform(0.01, 2, k)) if x != 0]
    cls = inf.AddFreeTriplet if free else inf.AddClassicalTriplet
    return cls(float(rng.uniform(-10, 10)), float(rng.uniform(0, 3)), inf.AtomicMeasure.real(*atoms))


def check_diagrams(seed: int, count: int = 1000) -> CriterionResult:
    rng = np.random.default_rng([seed, 4])
    top_fail = 0
    n_fail = 0
    for _ in range(count):
        t = random_add_triplet(rng, free=False)
        if not inf.diagram_check(t, 1e-12):
            top_fail += 1
        tf = random_add_triplet(rng, free=True)
        for N in range(1, 7):
            a = stochastic_exponential(pi_n(tf, N))
            b = gamma_n(inf.eboxplus_map(tf), N)
            same = (inf.angles_close(a.y0, b.y0, 1e-12) and abs(a.alpha - b.alpha) <= 1e-12
                    and abs(a.beta - b.beta) <= 1e-12 and a.jump_law.close_to(b.jump_law, 1e-12)
                    and a.haar == b.haar and a.N == b.N)
            if not same:
                n_fail += 1
    ok = top_fail == 0 and n_fail == 0
    return CriterionResult(4, "commuting diagrams", ok,
                           f"{count} triplets: wrapping square failures {top_fail}; finite-N square failures {n_fail} (N≤6)",
                           {"triplets": count, "wrap_failures": top_fail, "finite_n_failures": n_fail})


# --------------------------------------------------------------------------
# 5, 6. exact finite-N engine vs limit


def limit_triplet_family() -> dict[str, inf.MultFreeTriplet]:
    return {
        "brownian b=1": inf.free_unitary_bm(1.0),
        "poisson lambda=1 zeta=i": inf.free_poisson_mult(1.0, inf.AtomicMeasure.circle((math.pi / 2, 1.0))),
        "mixed": inf.MultFreeTriplet(0.3, 0.5, inf.AtomicMeasure.circle((1.0, 0.4), (-2.0, 0.7))),
    }


def check_finite_n(seed: int) -> CriterionResult:
    first_err = 0.0
    for b in (0.25, 1.0, 2.0):
        for N in range(1, 17):
            v = normalized_exact(gamma_n(inf.free_unitary_bm(b), N), full_cycle(1))
            first_err = max(first_err, abs(v - math.exp(-b / 2)))
    first_ok = first_err <= 1e-10
    Ns = (4, 8, 12, 16)
    mono_ok = True
    rows = {}
    for name, t in limit_triplet_family().items():
        for n in (1, 2, 3):
            for sigma in all_permutations(n):
                lim = limit_trace_moments(t, sigma)
                diffs = [abs(normalized_exact(gamma_n(t, N), sigma) - lim) for N in Ns]
                exact_everywhere = max(diffs) <= FLOAT_FLOOR
                decreasing = all(x > y for x, y in zip(diffs, diffs[1:]))
                mono_ok &= exact_everywhere or decreasing
                rows[f"{name} {sigma}"] = diffs
    ok = bool(first_ok and mono_ok)
    return CriterionResult(5, "exact finite-N vs free limit", ok,
                           f"|E tr U - e^(-b/2)| ≤ {first_err:.1e} for N≤16; differences decreasing over N=4,8,12,16: {mono_ok}",
                           {"first_moment_error": first_err, "decreasing": bool(mono_ok), "differences": rows})


def check_limit_operator(seed: int) -> CriterionResult:
    worst = 0.0
    for name, t in {**limit_triplet_family(), **oracle_triplet_family(seed)}.items():
        m = moments_from_s(inf.s_transform(t, 6))
        for sigma in all_permutations(5):
            target = math.prod((m[len(c)] for c in sigma.cycles()), start=1 + 0j)
            worst = max(worst, abs(limit_trace_moments(t, sigma) - target))
    ok = worst <= 1e-8
    return CriterionResult(6, "limit operator consistency", ok,
                           f"max |φ(e^T σ) − Π m| over S_5 and test triplets: {worst:.2e}",
                           {"max_error": worst})


# --------------------------------------------------------------------------
# 7. limit theorems by series


def check_limit_theorems() -> CriterionResult:
    powers = [2 ** k for k in range(1, 9)]
    b = 1.0
    target = inf.moments_by_series(inf.free_unitary_bm(b), 8)
    bm = inf.boxtimes_power_limit_experiment(lambda n: inf.wrapped_gaussian_moments(b / n, 8), powers, target)
    lam, zeta = 1.0, 1j
    ptarget = inf.moments_by_series(inf.free_poisson_mult(lam, inf.AtomicMeasure.circle((math.pi / 2, 1.0))), 8)
    pm = inf.boxtimes_power_limit_experiment(lambda n: inf.bernoulli_circle_moments(lam / n, zeta, 8), powers, ptarget)
    bm_dec = all(x[1] > y[1] for x, y in zip(bm, bm[1:]))
    pm_dec = all(x[1] > y[1] for x, y in zip(pm, pm[1:]))
    bm_small = bm[-1][1] < 1e-3
    ok = bm_dec and pm_dec and bm_small
    return CriterionResult(7, "limit theorems by series", ok,
                           f"wrapped Gaussian b=1: decreasing {bm_dec}, error at n=256 {bm[-1][1]:.4e} (< 1e-3: {bm_small}); "
                           f"Bernoulli→Poisson λ=1 ζ=i: decreasing {pm_dec}, error at n=256 {pm[-1][1]:.4e}",
                           {"brownian": bm, "poisson": pm, "brownian_below_1e-3": bool(bm_small)})


# --------------------------------------------------------------------------
# 8, 9, 10. Monte Carlo


CYCLE_TYPES = [(1,), (2,), (1, 1), (3,), (2, 1), (1, 1, 1)]


def mc_unitary_family() -> dict[str, inf.MultFreeTriplet]:
    return {
        "brownian b=1": inf.free_unitary_bm(1.0),
        "drift y0=0.7": inf.dirac_mult(0.7),
        "poisson lambda=1 zeta=i": inf.free_poisson_mult(1.0, inf.AtomicMeasure.circle((math.pi / 2, 1.0))),
    }


def check_monte_carlo(seed: int, workers: int, samples: int = 100_000, steps: int = 200, N: int = 3) -> CriterionResult:
    ok = True
    rows = {}
    worst_z = 0.0
    worst_step = 0.0
    for j, (name, t) in enumerate(mc_unitary_family().items()):
        m = gamma_n(t, N)
        cfg = SampleConfig(m, samples, steps, seed=seed + 1000 * j, workers=workers)
        sd = step_doubling_trace_products(cfg, CYCLE_TYPES)
        for i, ct in enumerate(CYCLE_TYPES):
            exact = normalized_exact(m, permutation_of_type(ct))
            est, se = sd.coarse.estimates[i], float(sd.coarse.stderr[i])
            dev = abs(est - exact)
            shift = abs(sd.fine.estimates[i] - est)
            mc_ok = dev <= 4 * se + FLOAT_FLOOR
            step_ok = shift < se or shift <= FLOAT_FLOOR
            ok &= mc_ok and step_ok
            if se > FLOAT_FLOOR:  # deterministic models leave only rounding noise
                worst_z = max(worst_z, dev / se)
                worst_step = max(worst_step, shift / se)
            rows[f"{name} {list(ct)}"] = {"mc": _c(est), "stderr": se, "exact": _c(exact),
                                          "fine": _c(sd.fine.estimates[i]), "step_shift": shift,
                                          "within_4_stderr": bool(mc_ok), "step_shift_below_stderr": bool(step_ok)}
    return CriterionResult(8, "Monte Carlo vs exact", bool(ok),
                           f"N={N}, {samples} samples, {steps}/{2 * steps} steps: max |MC−exact|/stderr {worst_z:.2f}, "
                           f"max step-halving shift/stderr {worst_step:.3f}",
                           {"rows": rows, "max_z": worst_z, "max_step_shift_ratio": worst_step})


def hermitian_m4_finite_n(a: float, N: int) -> float:
    """E[(1/N)Tr H^4] for the Gaussian Hermitian model: 2a²(N+2)/(N+1)."""
    return 2 * a * a * (N + 2) / (N + 1)


def check_hermitian(seed: int, workers: int, samples: int = 2000, N: int = 50) -> CriterionResult:
    cfg = SampleConfig(pi_n(inf.semicircle(1.0), N), samples, seed=seed + 9, workers=workers)
    em = empirical_spectral_moments(cfg, 4)
    m2, m4 = em.estimates[1], em.estimates[3]
    s2, s4 = float(em.stderr[1]), float(em.stderr[3])
    ok2 = abs(m2 - 1) <= 4 * s2
    ok4 = abs(m4 - 2) <= 4 * s4
    finite = hermitian_m4_finite_n(1.0, N)
    return CriterionResult(9, "Hermitian model semicircle moments", bool(ok2 and ok4),
                           f"N={N}, {samples} samples: m2={m2.real:.4f}±{s2:.4f} (|m2−1|/se={abs(m2 - 1) / s2:.2f}), "
                           f"m4={m4.real:.4f}±{s4:.4f} (|m4−2|/se={abs(m4 - 2) / s4:.2f}); "
                           f"finite-N mean of m4 is {finite:.4f}",
                           {"m2": _c(m2), "m2_stderr": s2, "m4": _c(m4), "m4_stderr": s4, "m2_ok": bool(ok2),
                            "m4_ok": bool(ok4), "m4_finite_n_mean": finite,
                            "m4_vs_finite_n_z": abs(m4 - finite) / s4})


def check_reproducibility(seed: int) -> CriterionResult:
    """Sampler streams do not depend on the worker count or on reruns."""
    ok = True
    t = inf.free_poisson_mult(1.0, inf.AtomicMeasure.circle((math.pi / 2, 1.0)))
    models = [gamma_n(inf.free_unitary_bm(1.0), 3), gamma_n(t, 3)]
    for m in models:
        runs = [step_doubling_trace_products(SampleConfig(m, 3000, 10, seed=seed, block_size=512, workers=w),
                                             CYCLE_TYPES) for w in (1, 8, 1)]
        ref = runs[0]
        for r in runs[1:]:
            ok &= np.array_equal(r.coarse.estimates, ref.coarse.estimates)
            ok &= np.array_equal(r.fine.estimates, ref.fine.estimates)
            ok &= np.array_equal(r.coarse.stderr, ref.coarse.stderr)
    h = [empirical_spectral_moments(SampleConfig(pi_n(inf.semicircle(1.0), 20), 600, seed=seed, block_size=100, workers=w), 4)
         for w in (1, 8)]
    ok &= np.array_equal(h[0].estimates, h[1].estimates)
    return CriterionResult(10, "reproducibility across worker counts", bool(ok),
                           f"sampler outputs bit-identical for 1 and 8 workers and on rerun: {bool(ok)}",
                           {"bit_identical": bool(ok)})


# --------------------------------------------------------------------------
# driver

TIERS = {
    "fast": {"mc_samples": 100_000, "mc_steps": 200, "herm_samples": 2000},
    "full": {"mc_samples": 1_000_000, "mc_steps": 400, "herm_samples": 20_000},
}

CRITERIA: dict[int, str] = {
    1: "combinatorics exactness",
    2: "Weingarten identities",
    3: "moment formula oracle equivalence",
    4: "commuting diagrams",
    5: "exact finite-N vs free limit",
    6: "limit operator consistency",
    7: "limit theorems by series",
    8: "Monte Carlo vs exact",
    9: "Hermitian model semicircle moments",
    10: "reproducibility across worker counts",
}


# wall-clock budgets (seconds) for the fast tier; reported beside, not inside, the pass flag
RUNTIME_BUDGETS: dict[int, float] = {1: 10.0, 3: 60.0, 7: 30.0, 8: 300.0, 9: 120.0}


def run_criterion(k: int, seed: int = 0, workers: int = 1, tier: str = "fast") -> CriterionResult:
    cfg = TIERS[tier]
    runners: dict[int, Callable[[], CriterionResult]] = {
        1: check_combinatorics,
        2: check_weingarten,
        3: lambda: check_moment_oracles(seed),
        4: lambda: check_diagrams(seed),
        5: lambda: check_finite_n(seed),
        6: lambda: check_limit_operator(seed),
        7: check_limit_theorems,
        8: lambda: check_monte_carlo(seed, workers, cfg["mc_samples"], cfg["mc_steps"]),
        9: lambda: check_hermitian(seed, workers, cfg["herm_samples"]),
        10: lambda: check_reproducibility(seed),
    }
    start = time.perf_counter()
    res = runners[k]()
    res.seconds = time.perf_counter() - start
    return res


def run_all(seed: int = 0, workers: int = 1, tier: str = "fast", only=None, progress=None) -> dict:
    results = {}
    for k in CRITERIA:
        if only and k not in only:
            continue
        res = run_criterion(k, seed, workers, tier)
        if progress:
            progress(res)
        results[k] = res
    return {
        "seed": seed,
        "tier": tier,
        "workers": workers,
        "criteria": {str(k): r.to_json() for k, r in results.items()},
        "all_passed": all(r.passed for r in results.values()),
    }


def strip_timing(report: dict) -> dict:
    """Copy of a report without wall-clock fields or the worker count."""
    out = {k: v for k, v in report.items() if k != "workers"}
    out["criteria"] = {k: {kk: vv for kk, vv in v.items() if kk != "seconds"} for k, v in report["criteria"].items()}
    return out
