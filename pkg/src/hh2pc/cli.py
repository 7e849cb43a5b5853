"""Command-line experiment driver.

Subcommands:
    run            one protocol session on vectors loaded from files
    sweep          runs across a list of N values; CSV plus figures
    privacy-test   real-vs-simulated distribution comparison
    gen-instance   write adversarial instance files (disjointness / leakage)
    qualified-set  exact qualified index set of a vector (debugging aid)

Exit codes: 0 success, 1 guarantee violation detected in self-check mode,
2 usage error. Rationals are given as "p/q". HH2PC_SEED is the fallback
seed when --seed is omitted.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from .extensions import Basis, prepare_basis_inputs
from .params import ProtocolParams, parse_fraction
from .privacy import (
    gen_disjointness_instance,
    gen_leakage_instance,
    planted_instance,
    privacy_test,
    split_vector,
)
from .protocol import run_heavy_hitters, run_heavy_hitters_with_error
from .qualified import qualified_set
from .terms import error_l1, error_squared, norm_squared, top_b
from .vectorio import dump_vector_lines, load_vector

RATIO_LIMIT_N = 1 << 16


class UsageError(Exception):
    pass


def _seed_from(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("HH2PC_SEED")
    if env is not None:
        return int(env)
    return 0


def _taxicab_params(params: ProtocolParams) -> ProtocolParams:
    eps_e = params.epsilon * params.epsilon / params.b
    return ProtocolParams(n=params.n, m=params.m, b=params.b, k=params.k, epsilon=eps_e)


def _error_ratio(c, terms, b: int, metric: str) -> float | None:
    """Error of the output against the brute-force b-term optimum."""
    if len(c) > RATIO_LIMIT_N:
        return None
    opt = top_b(c, b)
    if metric == "l1":
        err, opt_err = error_l1(c, terms), error_l1(c, opt)
    else:
        err, opt_err = error_squared(c, terms), error_squared(c, opt)
    if opt_err == 0:
        return 1.0 if err == 0 else float("inf")
    return err / opt_err


def cmd_run(args) -> int:
    params = ProtocolParams(n=args.n, m=args.m, b=args.b, k=args.k, epsilon=parse_fraction(args.epsilon))
    try:
        a = load_vector(args.input_a, args.n, args.m)
        b = load_vector(args.input_b, args.n, args.m)
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot load inputs: {exc}") from exc
    seed = _seed_from(args)
    basis = Basis(kind=args.basis, dimension=args.n)
    run_params = params
    if args.metric == "l1":
        if args.basis != "identity":
            raise UsageError("--metric l1 is only supported with --basis identity")
        run_params = _taxicab_params(params)
        xa, xb = a, b
    else:
        xa, xb, run_params = prepare_basis_inputs(a, b, basis, params)
    runner = run_heavy_hitters_with_error if args.with_error else run_heavy_hitters
    out = runner(xa, xb, run_params, seed, norm_mode=args.norm_mode)

    report = out.to_json_dict()
    c = xa + xb
    guarantee_eps = params.epsilon if args.metric == "l1" else run_params.epsilon
    ratio = _error_ratio(c, out.terms, args.b, args.metric)
    if ratio is not None:
        report["errorRatio"] = ratio
    text = json.dumps(report, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)

    if args.self_check and ratio is not None:
        bound = float(1 + guarantee_eps)
        if ratio > bound:
            print(f"self-check FAILED: error ratio {ratio:.6f} > {bound:.6f}", file=sys.stderr)
            return 1
    return 0


def cmd_sweep(args) -> int:
    try:
        n_list = [int(x) for x in args.n_list.split(",") if x.strip()]
    except ValueError as exc:
        raise UsageError(f"bad --n-list: {exc}") from exc
    if not n_list:
        raise UsageError("--n-list must be a nonempty comma-separated list")
    if args.trials < 1:
        raise UsageError("--trials must be >= 1")
    seed = _seed_from(args)
    eps = parse_fraction(args.epsilon)
    rows: list[dict] = []
    violation = False
    for n in n_list:
        params = ProtocolParams(n=n, m=args.m, b=args.b, k=args.k, epsilon=eps)
        for t in range(args.trials):
            a, b = planted_instance(n, args.m, args.b, (seed, n, t))
            out = run_heavy_hitters(a, b, params, (seed, "session", n, t), norm_mode=args.norm_mode)
            ratio = _error_ratio(a + b, out.terms, args.b, "l2")
            if ratio is not None and ratio > float(1 + eps):
                violation = True
            rows.append(
                {
                    "n": n,
                    "trial": t,
                    "bytes": out.total_bytes,
                    "rounds": out.rounds,
                    "error_ratio": "" if ratio is None else f"{ratio:.6f}",
                }
            )
        group = [r for r in rows if r["n"] == n and r["trial"] != "mean"]
        rows.append(
            {
                "n": n,
                "trial": "mean",
                "bytes": sum(r["bytes"] for r in group) / len(group),
                "rounds": sum(r["rounds"] for r in group) / len(group),
                "error_ratio": "",
            }
        )
    fieldnames = ["n", "trial", "bytes", "rounds", "error_ratio"]
    if args.out:
        with open(args.out, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=fieldnames)
            w.writeheader()
            w.writerows(rows)
        from .plotting import save_sweep_figures

        per_trial = [r for r in rows if r["trial"] != "mean"]
        save_sweep_figures(per_trial, args.out)
    else:
        w = csv.DictWriter(sys.stdout, fieldnames=fieldnames)
        w.writeheader()
        w.writerows(rows)
    if args.self_check and violation:
        print("self-check FAILED: guarantee violated in sweep", file=sys.stderr)
        return 1
    return 0


def default_privacy_suite(seed: int) -> list[tuple[str, np.ndarray, np.ndarray, ProtocolParams]]:
    """Five fixed instances at n=256, including one threshold-boundary case."""
    n = 256
    suite = []

    def inst(name, c, b, eps, m=100, sub=0):
        params = ProtocolParams(n=n, m=m, b=b, k=10, epsilon=parse_fraction(eps))
        a, bb = split_vector(np.asarray(c, dtype=np.int64), m, _suite_seed(seed, name, sub))
        suite.append((name, a, bb, params))

    spiky = np.zeros(n, dtype=np.int64)
    spiky[:4] = [100, 2, 1, 1]
    inst("dominant-term", spiky, 1, "1/1")

    flat = np.zeros(n, dtype=np.int64)
    flat[:8] = 2
    inst("flat-eight", flat, 1, "1/1")

    boundary = np.zeros(n, dtype=np.int64)
    boundary[0] = 41
    boundary[1:4] = 32
    inst("threshold-boundary", boundary, 1, "1/1")

    multi = np.zeros(n, dtype=np.int64)
    multi[:6] = [90, 70, 55, 40, 8, 5]
    inst("four-term", multi, 4, "1/1")

    short = np.zeros(n, dtype=np.int64)
    short[0], short[1] = 60, 40
    inst("short-support", short, 4, "1/1")
    return suite


def _suite_seed(seed: int, name: str, sub: int) -> bytes:
    from .runtime import as_seed, derive_seed

    return derive_seed(as_seed(seed), "suite", name, sub)


def cmd_privacy(args) -> int:
    if args.trials < 1:
        raise UsageError("--trials must be >= 1")
    seed = _seed_from(args)
    reports = []
    if args.norm_blind:
        # Leakage-instance pair where a norm-blind simulator must fail.
        n = args.n or 64
        for case in (1, 2):
            a, b = gen_leakage_instance(n, case, (seed, "leak"))
            params = ProtocolParams(n=n, m=2 * n, b=1, k=10, epsilon=Fraction(8))
            rep = privacy_test(
                a, b, params, args.trials, master_seed=(seed, "blind", case), blind=True
            )
            rep["instance"] = f"leakage-case-{case}"
            reports.append(rep)
    else:
        for name, a, b, params in default_privacy_suite(seed):
            rep = privacy_test(a, b, params, args.trials, master_seed=(seed, name), norm_mode=args.norm_mode)
            rep["instance"] = name
            reports.append(rep)
    text = json.dumps(reports, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n")
        from .plotting import save_privacy_figure

        save_privacy_figure(reports, args.out)
    else:
        print(text)
    return 0


def cmd_gen_instance(args) -> int:
    seed = _seed_from(args)
    if args.kind == "disjointness":
        a, b = gen_disjointness_instance(args.n, args.intersecting, seed)
    else:
        if args.case not in (1, 2):
            raise UsageError("--case must be 1 or 2 for leakage instances")
        a, b = gen_leakage_instance(args.n, args.case, seed, m=args.m)
    dump_vector_lines(a, args.out_a)
    dump_vector_lines(b, args.out_b)
    print(json.dumps({"kind": args.kind, "n": args.n, "normSquared": int(norm_squared(a + b))}))
    return 0


def cmd_qualified_set(args) -> int:
    try:
        c = load_vector(args.input, args.n, args.m)
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot load input: {exc}") from exc
    q = qualified_set(c, args.ell, parse_fraction(args.theta))
    print(json.dumps({"indices": list(q.indices), "ell": q.ell, "theta": str(q.theta)}))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hh2pc", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="command", required=True)

    def add_common(sp, with_protocol=True):
        sp.add_argument("--seed", type=int, default=None, help="master seed (fallback: HH2PC_SEED, then 0)")
        if with_protocol:
            sp.add_argument("--n", type=int, required=True, help="vector length (power of two)")
            sp.add_argument("--m", type=int, required=True, help="per-party value bound")
            sp.add_argument("--b", type=int, required=True, help="summary size")
            sp.add_argument("--epsilon", required=True, help='distortion as "p/q"')
            sp.add_argument("--k", type=int, required=True, help="security/failure parameter")
            sp.add_argument("--norm-mode", choices=["ideal", "sketch"], default="ideal")

    sp = sub.add_parser(
        "run",
        help="run one protocol session",
        description="Run one protocol session on vectors loaded from files.",
        epilog='JSON report schema: {"terms": [[index, value], ...], '
               '"auxSeeds": {"r1": hex, "r2": hex}, "errorEstimate": number|null, '
               '"bytes": int, "rounds": int, "errorRatio": number (n <= 2^16)}',
    )
    add_common(sp)
    sp.add_argument("--input-a", required=True, help="Alice's vector file (.txt lines or .json)")
    sp.add_argument("--input-b", required=True, help="Bob's vector file")
    sp.add_argument("--metric", choices=["l2", "l1"], default="l2")
    sp.add_argument("--basis", choices=["identity", "hadamard", "fourier"], default="identity")
    sp.add_argument("--with-error", action="store_true", help="also output the residual norm estimate")
    sp.add_argument("--self-check", action="store_true", help="exit 1 if the guarantee is violated")
    sp.add_argument("--out", help="write the JSON report here instead of stdout")
    sp.set_defaults(fn=cmd_run)

    sp = sub.add_parser(
        "sweep",
        help="sweep over N values; CSV report plus figures",
        description="Run seeded trials across a list of N values.",
        epilog="CSV schema: n,trial,bytes,rounds,error_ratio; one row per "
               "(n, trial) plus an aggregate row per n with trial=mean. With "
               "--out, bytes/rounds figures are rendered next to the CSV.",
    )
    sp.add_argument("--n-list", required=True, help="comma-separated N values")
    sp.add_argument("--m", type=int, required=True)
    sp.add_argument("--b", type=int, required=True)
    sp.add_argument("--epsilon", required=True)
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--trials", type=int, default=3)
    sp.add_argument("--norm-mode", choices=["ideal", "sketch"], default="ideal")
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--self-check", action="store_true")
    sp.add_argument("--out", help="CSV path; figures are written alongside")
    sp.set_defaults(fn=cmd_sweep)

    sp = sub.add_parser(
        "privacy-test",
        help="real-vs-simulated distribution test",
        description="Compare real protocol outputs against the simulator.",
        epilog='JSON report: list of {"instance": name, "trials": int, '
               '"tv": number, "pass": bool, ...}; with --out a TV bar chart '
               "is rendered next to the JSON.",
    )
    sp.add_argument("--trials", type=int, default=2000)
    sp.add_argument("--n", type=int, default=None, help="instance size for --norm-blind (default 64)")
    sp.add_argument("--norm-mode", choices=["ideal", "sketch"], default="ideal")
    sp.add_argument("--norm-blind", action="store_true", help="run the norm-blind baseline (expected to fail)")
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--out", help="JSON path; a TV bar chart is written alongside")
    sp.set_defaults(fn=cmd_privacy)

    sp = sub.add_parser("gen-instance", help="write adversarial instance vectors")
    sp.add_argument("--kind", choices=["disjointness", "leakage"], required=True)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--intersecting", action="store_true")
    sp.add_argument("--case", type=int, default=1)
    sp.add_argument("--m", type=int, default=None)
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--out-a", required=True)
    sp.add_argument("--out-b", required=True)
    sp.set_defaults(fn=cmd_gen_instance)

    sp = sub.add_parser("qualified-set", help="exact qualified index set of a vector")
    sp.add_argument("--input", required=True)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--m", type=int, required=True)
    sp.add_argument("--ell", type=int, required=True)
    sp.add_argument("--theta", required=True, help='threshold as "p/q"')
    sp.add_argument("--seed", type=int, default=None)
    sp.set_defaults(fn=cmd_qualified_set)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
