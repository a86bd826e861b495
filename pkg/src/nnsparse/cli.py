"""Command-line front end: ``nnsparse {recover,bench,verify}``.

Options can also come from a ``key=value`` file given with ``--config``
(keys are the long option names with dashes or underscores); command-line
flags win. The output directory defaults to ``$NNSPARSE_OUT`` or
``./nnsparse_out``. Every run writes its fully resolved options to
``<out>/config.txt`` in the same ``key=value`` format.

Exit codes: 0 success, 1 invalid input, 2 I/O error, 3 verification failure.
"""
import argparse
import logging
import math
import os
import sys
import time

import numpy as np

from . import bench, matio, theory
from .linalg import MeasurementMatrix
from .recovery import ALGORITHMS, RecoveryConfig, empirical_stepsize, run_recovery
from .nnls import GpConfig

EXIT_OK, EXIT_INVALID, EXIT_IO, EXIT_VERIFY = 0, 1, 2, 3
OUT_ENV = "NNSPARSE_OUT"

log = logging.getLogger("nnsparse")


class UsageError(Exception):
    pass


def read_config_file(path):
    opts = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key=value")
            key, val = (s.strip() for s in line.split("=", 1))
            key = key.replace("-", "_")
            opts["lam" if key == "lambda" else key] = val
    return opts


def write_resolved(outdir, args):
    os.makedirs(outdir, exist_ok=True)
    path = os.path.join(outdir, "config.txt")
    skip = {"func", "config"}
    with open(path, "w") as fh:
        for key in sorted(vars(args)):
            if key in skip:
                continue
            val = getattr(args, key)
            if val is None:
                continue
            if isinstance(val, (list, tuple)):
                val = ",".join(str(v) for v in val)
            fh.write(f"{key}={val}\n")
    return path


def _csv_list(text):
    return [s for s in str(text).split(",") if s]


def _lambda_arg(text):
    if str(text).lower() == "auto":
        return "auto"
    return float(text)


# ---------------------------------------------------------------- recover

def _load_inputs(args):
    if args.matrix:
        if args.m is not None or args.n is not None:
            raise UsageError("--matrix/--y and generation parameters (--m/--n) are exclusive")
        if not args.y:
            raise UsageError("--matrix requires --y")
        A = matio.load_any(args.matrix)
        y = matio.load_vector(args.y)
        x_true = matio.load_vector(args.x_true) if args.x_true else None
        if y.shape[0] != A.shape[0]:
            raise UsageError(f"y has length {y.shape[0]}, matrix has {A.shape[0]} rows")
        if x_true is not None and x_true.shape[0] != A.shape[1]:
            raise UsageError("--x-true length does not match the matrix")
        return A, y, x_true
    if args.y or args.x_true:
        raise UsageError("--y/--x-true need --matrix")
    m = 600 if args.m is None else args.m
    n = 2000 if args.n is None else args.n
    args.m, args.n = m, n
    inst = bench.gen_instance(m, n, args.k, args.noise, bench.trial_seed(args.seed, args.k, 0))
    return inst.A, inst.y, inst.x_star


def _resolve_lambda(args, m, n):
    if args.lam != "auto":
        return args.lam
    algo = args.algo.upper()
    if algo == "NDRTP":
        return empirical_stepsize(m, n)
    if algo == "NDRT":
        return 2.0
    if algo == "RHT":
        return 0.6 - args.k / (2.0 * m)
    if algo == "RHTP":
        return 1.6
    return None


def cmd_recover(args):
    if args.k is None:
        raise UsageError("--k is required (flag or config file)")
    A, y, x_true = _load_inputs(args)
    m, n = A.shape
    lam = _resolve_lambda(args, m, n)
    cfg = RecoveryConfig(args.algo, args.k, stepsize=lam, eps=args.eps,
                         max_iters=args.max_iters, residual_tol=args.residual_tol,
                         nnls_cfg=GpConfig(warm_start=args.warm_start))
    res = run_recovery(MeasurementMatrix(A), y, cfg, ground_truth=x_true)
    resolved = res.config
    args.lambda_resolved = resolved.stepsize
    args.eps_resolved = resolved.eps
    args.max_iters_resolved = resolved.max_iters

    outdir = args.out
    write_resolved(outdir, args)
    path = os.path.join(outdir, "recovered.csv")
    with open(path, "w") as fh:
        fh.write("index,value\n")
        for i in res.x_final.support:
            fh.write(f"{i},{float(res.x[i])!r}\n")
    print(f"algorithm={resolved.algorithm} k={resolved.k} lambda={resolved.stepsize} "
          f"eps={resolved.eps}")
    print(f"iterations={res.iterations} stop={res.stop_reason} "
          f"residual_norm={res.residual_norm:.6e} nnz={res.x_final.nnz}")
    if x_true is not None and np.any(x_true):
        ok, err = bench.success_check(res.x, x_true, args.success_tol)
        print(f"rel_error={err:.6e} success={ok}")
    print(f"wrote {path}")
    return EXIT_OK


# ---------------------------------------------------------------- bench

def _bench_plans(args):
    presets = {"paper": bench.paper_plan, "desk": bench.desk_plan}
    base = presets[args.preset]
    if args.noise == "both":
        levels = [0.0, 1e-4]
    else:
        levels = [float(v) for v in _csv_list(args.noise)]
    plans = []
    for lev in levels:
        p = base(lev, args.seed)
        if args.trials is not None:
            if args.trials < 1:
                raise UsageError("--trials must be at least 1")
            p.trials_per_k = args.trials
        if args.m is not None:
            p.m = args.m
        if args.n is not None:
            p.n = args.n
        if args.k_max is not None or args.k_min is not None or args.k_step is not None:
            lo = args.k_min or p.k_grid[0]
            hi = args.k_max or p.k_grid[-1]
            step = args.k_step or (p.k_grid[1] - p.k_grid[0])
            p.k_grid = list(range(lo, hi + 1, step))
        if args.success_tol is not None:
            p.success_tol = args.success_tol
        if args.algos:
            wanted = [a.upper() for a in _csv_list(args.algos)]
            bad = set(wanted) - set(ALGORITHMS)
            if bad:
                raise UsageError(f"unknown algorithms: {sorted(bad)}")
            p.algorithms = [c for c in p.algorithms if c.algorithm in wanted]
        # re-run validation on the edited plan
        p = bench.ExperimentPlan(p.m, p.n, p.k_grid, p.trials_per_k, p.noise_level,
                                 p.algorithms, p.seed, p.success_tol)
        plans.append(p)
    return plans


def _noise_dir(level):
    return "noiseless" if level == 0 else f"noise_{level:g}"


def cmd_bench(args):
    plans = _bench_plans(args)
    first = plans[0]
    args.m, args.n, args.trials = first.m, first.n, first.trials_per_k
    args.k_min, args.k_max = first.k_grid[0], first.k_grid[-1]
    if args.k_step is None and len(first.k_grid) > 1:
        args.k_step = first.k_grid[1] - first.k_grid[0]
    args.algos = ",".join(c.algorithm for c in first.algorithms)
    args.success_tol_resolved = ",".join(f"{p.success_tol:g}" for p in plans)
    args.noise_resolved = ",".join(f"{p.noise_level:g}" for p in plans)
    write_resolved(args.out, args)
    for plan in plans:
        sub = os.path.join(args.out, _noise_dir(plan.noise_level))
        os.makedirs(sub, exist_ok=True)
        t0 = time.perf_counter()

        def progress(done, total):
            if not args.quiet and (done == total or done % max(1, total // 20) == 0):
                print(f"  [{_noise_dir(plan.noise_level)}] {done}/{total} trials",
                      file=sys.stderr)

        outcomes, summary = bench.run_sweep(plan, workers=args.workers, progress=progress)
        bench.write_outcomes(os.path.join(sub, "outcomes.csv"), outcomes)
        bench.write_summary(os.path.join(sub, "summary.csv"), summary)
        bench.write_thresholds(os.path.join(sub, "thresholds.csv"), summary)
        bench.write_plot_data(sub, summary)
        print(f"{_noise_dir(plan.noise_level)}: m={plan.m} n={plan.n} "
              f"trials={plan.trials_per_k} ({time.perf_counter() - t0:.1f}s)")
        for a in summary.algorithms:
            th = summary.thresholds[a]
            print(f"  {a:6s} " + " ".join(f"{int(lev * 100)}%:{th[lev]}" for lev in th))
    return EXIT_OK


# ---------------------------------------------------------------- verify

VERIFY_CHECKS = ("lemma1", "lemma2", "lemma3", "relu", "ric", "theorem1", "theorem2",
                 "theorem3")


def certified_instances(count, seed=0, eps=0.5, k=1):
    """Near-isometry 14x16 / 15x16 matrices whose constants certify both
    contraction theorems with the stepsize at the middle of its window."""
    found = []
    rng = np.random.default_rng(seed)
    while len(found) < count:
        m = 14 if len(found) % 2 == 0 else 15
        A = theory.near_isometry_matrix(m, 16, 0.01, rng)
        bc = theory.bound_constants(A, eps, 1.0, k)
        lam = sum(bc.lambda_window) / 2
        bc = theory.bound_constants(A, eps, lam, k, deltas=bc.deltas,
                                    sigma=(bc.sigma_max, bc.sigma_min))
        if bc.certifies_ndrt(lam) and bc.certifies_ndrtp(lam):
            found.append((A, lam, bc))
    return found


def run_verify_suite(checks, m=8, n=12, s=3, eps=0.5, lam=None, trials=None, seed=0,
                     instances=10):
    """Run the requested theory checks; returns a list of VerificationReport."""
    if not 1 <= s <= n:
        raise UsageError(f"--s must lie in [1, n={n}], got {s}")
    brute = {"lemma1", "lemma3", "ric", "theorem2"} & set(checks)
    if brute and math.comb(n, s) > theory.MAX_SUPPORTS:
        raise theory.EnumerationTooLarge(
            f"{', '.join(sorted(brute))} need all C({n}, {s}) = {math.comb(n, s)} supports; "
            f"the brute-force limit is {theory.MAX_SUPPORTS}")
    rng = np.random.default_rng(seed)
    reports = []
    A = rng.standard_normal((m, n)) / np.sqrt(m)
    t_big = trials or 10_000
    t_small = trials or 1000
    if "lemma1" in checks:
        reports.append(theory.check_lemma1(A, s, t_big, rng=seed))
    if "lemma2" in checks:
        reports.append(theory.check_lemma2(n, s, t_big, rng=seed))
    if "relu" in checks:
        reports.append(theory.check_relu_contraction(n, t_big, rng=seed))
    if "lemma3" in checks:
        if lam is None:
            lo, hi = theory.bound_constants(A, eps, 1.0, 1, deltas={1: 0, 2: 0, 3: 0}) \
                .lambda_window
            lam_used = (lo + hi) / 2
        else:
            lam_used = lam
        reports.append(theory.check_lemma3(A, eps, lam_used, s, t_big, rng=seed))
    if "ric" in checks:
        reports.append(theory.check_ric_monotone(A, s))
    if "theorem2" in checks:
        # normalised columns keep delta_2k below one on the toy matrix
        B = A / np.linalg.norm(A, axis=0)
        k2 = max(1, s // 2)
        reports.append(theory.check_theorem2(B, k2, t_small, rng=seed))
        if n >= 4:
            # near-isometric matrix keeps delta_4 below one, so k=2 is checkable
            rep = theory.check_theorem2(theory.near_isometry_matrix(n - 1, n, 0.01, seed), 2,
                                        t_small, rng=seed)
            rep.check = "theorem2[isometric]"
            reports.append(rep)
    if "theorem1" in checks or "theorem3" in checks:
        for i, (Ai, lam_i, bc) in enumerate(certified_instances(instances, seed, eps)):
            for name, algo in (("theorem1", "NDRT"), ("theorem3", "NDRTP")):
                if name in checks:
                    rep = theory.check_contraction(Ai, 1, eps, lam_i, algo, trials=4,
                                                   rng=seed + i, constants=bc)
                    rep.check = f"{name}[{i}]"
                    reports.append(rep)
    return reports


def cmd_verify(args):
    checks = VERIFY_CHECKS if args.check == "all" else tuple(_csv_list(args.check))
    bad = set(checks) - set(VERIFY_CHECKS)
    if bad:
        raise UsageError(f"unknown checks: {sorted(bad)}")
    args.m, args.n = args.m or 8, args.n or 12
    reports = run_verify_suite(checks, args.m, args.n, args.s, args.eps,
                               None if args.lam in (None, "auto") else args.lam,
                               args.trials, args.seed, args.instances)
    write_resolved(args.out, args)
    theory.write_reports(os.path.join(args.out, "verify.csv"), reports)
    refused = [r for r in reports if not r.hypothesis_ok]
    failed = [r for r in reports if r.hypothesis_ok and not r.passed]
    for rep in reports:
        for line in rep.lines():
            print(line)
    if failed:
        return EXIT_VERIFY
    if refused:
        return EXIT_INVALID
    return EXIT_OK


# ---------------------------------------------------------------- parser

def build_parser():
    parser = argparse.ArgumentParser(prog="nnsparse", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="key=value file merged under the flags")
        p.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./nnsparse_out)")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--m", type=int)
        p.add_argument("--n", type=int)

    p = sub.add_parser("recover", help="run one recovery")
    common(p)
    p.add_argument("--algo", default="NDRTP", type=str.upper, choices=ALGORITHMS)
    p.add_argument("--k", type=int, help="sparsity level (required)")
    p.add_argument("--lambda", dest="lam", type=_lambda_arg, default="auto")
    p.add_argument("--eps", type=float)
    p.add_argument("--max-iters", type=int)
    p.add_argument("--residual-tol", type=float, default=0.0)
    p.add_argument("--warm-start", action="store_true")
    p.add_argument("--matrix", help="binary NNSM1 container or CSV")
    p.add_argument("--y", help="measurement vector file")
    p.add_argument("--x-true", help="ground truth, for reporting the relative error")
    p.add_argument("--noise", type=float, default=0.0, help="noise level for generated data")
    p.add_argument("--success-tol", type=float, default=1e-4)
    p.set_defaults(func=cmd_recover)

    p = sub.add_parser("bench", help="success-frequency sweep")
    common(p)
    p.add_argument("--preset", choices=("paper", "desk"), default="desk")
    p.add_argument("--trials", type=int)
    p.add_argument("--k-min", type=int)
    p.add_argument("--k-max", type=int)
    p.add_argument("--k-step", type=int)
    p.add_argument("--noise", default="both", help="'both' or comma-separated levels")
    p.add_argument("--success-tol", type=float)
    p.add_argument("--algos", help="comma-separated subset of " + ",".join(ALGORITHMS))
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("verify", help="theory checks at toy scale")
    common(p)
    p.add_argument("--check", default="all",
                   help="'all' or comma-separated subset of " + ",".join(VERIFY_CHECKS))
    p.add_argument("--s", type=int, default=3, help="support size / RIC order")
    p.add_argument("--eps", type=float, default=0.5)
    p.add_argument("--lambda", dest="lam", type=_lambda_arg)
    p.add_argument("--trials", type=int)
    p.add_argument("--instances", type=int, default=10)
    p.set_defaults(func=cmd_verify)
    return parser


def parse_args(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        opts = read_config_file(args.config)
        subparser = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest: a for a in subparser._actions}
        defaults = {}
        for key, val in opts.items():
            if key.endswith("_resolved") or key in ("command", "verbose"):
                continue
            if key not in known or key in ("config", "func", "help"):
                raise UsageError(f"unknown config key {key!r}")
            action = known[key]
            if action.type is not None:
                val = action.type(val)
            elif isinstance(action, argparse._StoreTrueAction):
                val = val.lower() in ("1", "true", "yes", "on")
            defaults[key] = val
        subparser.set_defaults(**defaults)
        args = parser.parse_args(argv)
    if args.out is None:
        args.out = os.environ.get(OUT_ENV, "nnsparse_out")
    return args


def main(argv=None):
    try:
        args = parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else EXIT_OK
    except (UsageError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, ValueError, theory.EnumerationTooLarge) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
