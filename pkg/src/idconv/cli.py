"""Command-line front end: ``idconv <command> ...``.

Exit status: 0 on success, 1 when a numerical contract fails (the message names
it), 2 on unparseable input.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from typing import Sequence

from . import __version__
from . import infdiv as inf
from .finiten import (
    HermitianModel,
    TaylorDivergence,
    UnitaryModel,
    gamma_n,
    limit_trace_moments,
    model_from_json,
    normalized_exact,
    pi_n,
)
from .series import SeriesError, moments_from_s
from .symcomb import CapExceeded, Permutation, catalan, count_simple_chains, enumerate_noncrossing


class UsageError(Exception):
    pass


def _parse_json(text: str, what: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise UsageError(f"{what} is not valid JSON: {e}") from e


def _triplet(text: str):
    try:
        return inf.triplet_from_json(_parse_json(text, "--triplet"))
    except (KeyError, TypeError, ValueError) as e:
        if isinstance(e, UsageError):
            raise
        raise UsageError(f"bad triplet: {e}") from e


def _int_list(text: str, what: str) -> list[int]:
    try:
        out = [int(x) for x in text.replace(" ", "").split(",") if x]
    except ValueError as e:
        raise UsageError(f"{what} must be a comma-separated list of integers") from e
    if not out or any(v < 1 for v in out):
        raise UsageError(f"{what} must list positive integers")
    return out


def _cycle_permutation(ct: Sequence[int]) -> Permutation:
    n = sum(ct)
    cycles, start = [], 1
    for k in ct:
        cycles.append(tuple(range(start, start + k)))
        start += k
    return Permutation.from_cycles(n, *cycles)


def _fmt(x: float) -> str:
    return repr(float(x))


def _writer(out):
    return csv.writer(out, lineterminator="\n")


# --------------------------------------------------------------------------
# commands


def cmd_nc(args, out) -> int:
    n = args.n
    if n < 1:
        raise UsageError("n must be positive")
    ncs = enumerate_noncrossing(n, cap=args.cap)
    print(f"noncrossing_partitions {len(ncs)}", file=out)
    print(f"catalan {catalan(n)}", file=out)
    top = Permutation.from_cycles(n, tuple(range(1, n + 1)))
    if n <= args.chain_cap:
        print(f"simple_chains_to_full_cycle {count_simple_chains(top, cap=args.chain_cap)}", file=out)
    if args.list:
        w = _writer(out)
        w.writerow(["blocks", "permutation"])
        for p in ncs:
            w.writerow([json.dumps(p.to_json()), " ".join(map(str, p.permutation.images))])
    return 0


def cmd_series(args, out) -> int:
    t = _triplet(args.triplet)
    if not isinstance(t, inf.MultFreeTriplet):
        raise UsageError("series expects a mult-free triplet")
    S = inf.s_transform(t, args.order)
    m = moments_from_s(S)
    lk = inf.log_cumulants(t, args.order)
    w = _writer(out)
    w.writerow(["k", "s_re", "s_im", "moment_re", "moment_im", "logcumulant_re", "logcumulant_im"])
    for k in range(args.order + 1):
        mk = m[k] if k <= m.order else complex("nan")
        lc = lk[k] if k >= 1 else complex("nan")
        w.writerow([k, _fmt(S[k].real), _fmt(S[k].imag), _fmt(mk.real), _fmt(mk.imag), _fmt(lc.real), _fmt(lc.imag)])
    return 0


def cmd_map(args, out) -> int:
    t = _triplet(args.triplet)
    kind = args.which
    add = isinstance(t, inf.AddClassicalTriplet)
    if kind == "diagram":
        if not add or isinstance(t, inf.AddFreeTriplet):
            raise UsageError("diagram expects an add-classical triplet")
        ok = inf.diagram_check(t)
        print(f"commutes: {'true' if ok else 'false'}", file=out)
        return 0 if ok else 1
    if kind == "lambda":
        if not add:
            raise UsageError("lambda expects an additive triplet")
        res = inf.lambda_inverse(t) if isinstance(t, inf.AddFreeTriplet) else inf.lambda_map(t)
    elif kind == "estar":
        if not add or isinstance(t, inf.AddFreeTriplet):
            raise UsageError("estar expects an add-classical triplet")
        res = inf.estar_map(t)
    elif kind == "eboxplus":
        if not isinstance(t, inf.AddFreeTriplet):
            raise UsageError("eboxplus expects an add-free triplet")
        res = inf.eboxplus_map(t)
    else:
        if not isinstance(t, inf.MultFreeTriplet):
            raise UsageError("gamma expects a mult-free triplet")
        res = inf.gamma_map(t)
    print(json.dumps(inf.triplet_to_json(res)), file=out)
    return 0


def cmd_moments(args, out) -> int:
    t = _triplet(args.triplet)
    if not isinstance(t, inf.MultFreeTriplet):
        raise UsageError("moments expects a mult-free triplet")
    chains = inf.moments_by_chains(t, args.order)
    series = inf.moments_by_series(t, max(args.order, 1))
    w = _writer(out)
    w.writerow(["k", "chain_re", "chain_im", "series_re", "series_im", "abs_diff"])
    worst = 0.0
    for k in range(1, args.order + 1):
        a, b = chains[k], series[k]
        worst = max(worst, abs(a - b))
        w.writerow([k, _fmt(a.real), _fmt(a.imag), _fmt(b.real), _fmt(b.imag), _fmt(abs(a - b))])
    if worst > args.tol:
        print(f"error: chain and series moments disagree by {worst:.3e} (> {args.tol})", file=sys.stderr)
        return 1
    return 0


def cmd_finite_n(args, out) -> int:
    t = _triplet(args.triplet)
    if not isinstance(t, inf.MultFreeTriplet):
        raise UsageError("finite-n expects a mult-free triplet")
    ct = _int_list(args.cycle, "--cycle")
    Ns = _int_list(args.N, "--N")
    sigma = _cycle_permutation(ct)
    w = _writer(out)
    w.writerow(["N", "exact_re", "exact_im", "limit_re", "limit_im", "abs_diff"])
    lim = limit_trace_moments(t, sigma) if not t.haar else 0j
    for N in Ns:
        v = normalized_exact(gamma_n(t, N), sigma)
        w.writerow([N, _fmt(v.real), _fmt(v.imag), _fmt(lim.real), _fmt(lim.imag), _fmt(abs(v - lim))])
    return 0


def _model(args) -> HermitianModel | UnitaryModel:
    obj = _parse_json(args.model, "--model")
    if "type" in obj:
        try:
            return model_from_json(obj)
        except (KeyError, TypeError, ValueError) as e:
            raise UsageError(f"bad model: {e}") from e
    t = _triplet(args.model)
    if args.N is None:
        raise UsageError("a triplet given as --model needs --N")
    if isinstance(t, inf.MultFreeTriplet):
        return gamma_n(t, args.N)
    if isinstance(t, inf.AddFreeTriplet):
        return pi_n(t, args.N)
    raise UsageError("sample needs a mult-free or add-free triplet, or a model")


def cmd_sample(args, out) -> int:
    from .rmt_sampler import SampleConfig, empirical_spectral_moments, empirical_trace_products

    model = _model(args)
    cfg = SampleConfig(model, args.samples, args.steps, seed=args.seed, workers=args.workers)
    if args.cycles:
        types = [tuple(_int_list(c, "--cycles")) for c in args.cycles.split(";") if c]
        em = empirical_trace_products(cfg, types)
        keys = [" ".join(map(str, c)) for c in types]
    else:
        em = empirical_spectral_moments(cfg, args.kmax)
        keys = [str(k) for k in range(1, args.kmax + 1)]
    w = _writer(out)
    w.writerow(["k", "estimate_re", "estimate_im", "stderr"])
    for k, e, s in zip(keys, em.estimates, em.stderr):
        w.writerow([k, _fmt(e.real), _fmt(e.imag), _fmt(s)])
    summary = {"model": model.to_json(), "n_samples": args.samples, "brownian_steps": args.steps,
               "seed": args.seed, "statistic": "trace_products" if args.cycles else "spectral_moments",
               **em.to_json()}
    if args.summary:
        with open(args.summary, "w") as fh:
            json.dump(summary, fh, indent=2)
    else:
        print(json.dumps(summary), file=sys.stderr)
    return 0


def cmd_verify(args, out) -> int:
    from .acceptance import CRITERIA, run_all

    only = set(_int_list(args.only, "--only")) if args.only else None
    if only and not only <= set(CRITERIA):
        raise UsageError(f"--only must list criteria among {sorted(CRITERIA)}")
    tier = "full" if args.full else "fast"

    def progress(res):
        if not args.json:
            print(res.line(), file=out, flush=True)

    report = run_all(args.seed, args.workers, tier, only, progress)
    if args.json:
        print(json.dumps(report, indent=2), file=out)
    else:
        n_pass = sum(c["passed"] for c in report["criteria"].values())
        print(f"{n_pass}/{len(report['criteria'])} criteria passed", file=out)
    if not report["all_passed"]:
        failed = [k for k, c in report["criteria"].items() if not c["passed"]]
        print(f"error: acceptance criteria failed: {', '.join(failed)}", file=sys.stderr)
        return 1
    return 0


# --------------------------------------------------------------------------
# parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="idconv", description="Infinitely divisible laws on the circle and their unitary matrix models.")
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("--seed", type=int, default=0, help="seed for randomised commands (default 0)")
    # --seed is accepted before or after the command name
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="seed for randomised commands")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("nc", parents=[common], help="non-crossing partitions and simple chains")
    s.add_argument("n", type=int)
    s.add_argument("--list", action="store_true", help="also list every partition and its permutation")
    s.add_argument("--cap", type=int, default=12)
    s.add_argument("--chain-cap", type=int, default=8)

    s = sub.add_parser("series", parents=[common], help="S-transform, moments and free log-cumulants of a mult-free triplet")
    s.add_argument("--triplet", required=True)
    s.add_argument("--order", type=int, default=8)

    s = sub.add_parser("map", parents=[common], help="transform a triplet")
    s.add_argument("which", choices=["lambda", "estar", "eboxplus", "gamma", "diagram"])
    s.add_argument("--triplet", required=True)

    s = sub.add_parser("moments", parents=[common], help="moments by simple chains and by the S-transform")
    s.add_argument("--triplet", required=True)
    s.add_argument("--order", type=int, default=6)
    s.add_argument("--tol", type=float, default=1e-8)

    s = sub.add_parser("finite-n", parents=[common], help="exact finite-N trace moments next to their limit")
    s.add_argument("--triplet", required=True)
    s.add_argument("--cycle", required=True, help="cycle type, e.g. 2,1")
    s.add_argument("--N", required=True, help="comma-separated matrix sizes")

    s = sub.add_parser("sample", parents=[common], help="Monte Carlo moments of a matrix model")
    s.add_argument("--model", required=True, help="model JSON, or a triplet JSON together with --N")
    s.add_argument("--N", type=int)
    s.add_argument("--samples", type=int, default=10_000)
    s.add_argument("--steps", type=int, default=200)
    s.add_argument("--kmax", type=int, default=4)
    s.add_argument("--cycles", help="semicolon-separated cycle types, e.g. '1;2;1,1'")
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--summary", help="write the JSON summary here instead of stderr")

    s = sub.add_parser("verify", parents=[common], help="run the acceptance suite")
    tier = s.add_mutually_exclusive_group()
    tier.add_argument("--fast", action="store_true", help="desk-scale tier (default)")
    tier.add_argument("--full", action="store_true", help="larger Monte Carlo tier")
    s.add_argument("--json", action="store_true")
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--only", help="comma-separated criterion numbers")
    return p


COMMANDS = {"nc": cmd_nc, "series": cmd_series, "map": cmd_map, "moments": cmd_moments,
            "finite-n": cmd_finite_n, "sample": cmd_sample, "verify": cmd_verify}


def run(argv: Sequence[str] | None = None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "workers", 1) < 1:
            raise UsageError("--workers must be positive")
        return COMMANDS[args.command](args, out)
    except UsageError as e:
        print(f"idconv: error: {e}", file=sys.stderr)
        return 2
    except (SeriesError, CapExceeded, TaylorDivergence, inf.HaarLaw, ArithmeticError, ValueError) as e:
        print(f"idconv: numerical contract failed ({type(e).__name__}): {e}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
