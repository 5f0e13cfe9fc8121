"""momgmm command line: sample, fit, validate."""
from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import fileio, moments, validate
from .em import EmConfig, em_fit, log_likelihood
from .estimator import FitConfig, fit, match_components, metrics
from .models import BUILTIN
from .sampling import make_benchmark, make_rng, sample_gmm

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

REPORT_HEADER = [
    "restart",
    "selected",
    "initial_objective",
    "final_objective",
    "iterations",
    "converged",
    "loglik",
    "mom3_objective",
    "mom4_objective",
    "proportion_error",
    "mean_rel_error",
    "cov_rel_error",
    "cosine_angle",
    "runtime_seconds",
]


def _outdir(path: str) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    if not os.access(out, os.W_OK):
        raise OSError(f"output directory {out} is not writable")
    return out


def _benchmark_spec(text: str):
    try:
        n, m, sigma2 = text.split(",")
        return int(n), int(m), float(sigma2)
    except ValueError:
        raise argparse.ArgumentTypeError("expected n,m,sigma2") from None


def cmd_sample(args) -> int:
    out = _outdir(args.out)
    if args.p <= 0:
        raise ValueError("--p must be positive")
    if args.benchmark:
        n, m, sigma2 = args.benchmark
        truth, samples = make_benchmark(n, m, sigma2, args.p, args.seed)
    else:
        truth = BUILTIN[args.model]() if args.model in BUILTIN else fileio.read_params(args.model)
        samples = sample_gmm(truth, args.p, make_rng(args.seed))
    fileio.write_samples(out / "samples.csv", samples)
    fileio.write_params(out / "truth.csv", truth)
    return EXIT_OK


def _objective_with_constant(params, samples, d, const):
    return moments.objective(params, samples, d).value + const


def cmd_fit(args) -> int:
    out = _outdir(args.out)
    samples = fileio.read_samples(args.data)
    truth = fileio.read_params(args.truth) if args.truth else None
    if truth is not None and (truth.n, truth.m) != (samples.n, args.m):
        raise ValueError(f"truth has n={truth.n}, m={truth.m}; data/--m give n={samples.n}, m={args.m}")
    consts = {d: moments.empirical_constant(samples, d) for d in (3, 4)}
    rows = []
    if args.method == "mom":
        if args.mode == "debias" and not args.sigma:
            raise ValueError("--mode debias requires --sigma")
        sigma = fileio.read_matrix(args.sigma) if args.sigma else None
        config = FitConfig(
            d=args.d, restarts=args.restarts, max_iters=args.max_iters, omega=args.omega,
            variant=args.variant, mode=args.mode, seed=args.seed,
        )
        report = fit(samples, args.m, config, truth=truth, sigma=sigma)
        best = report.best_params
        for r in report.restarts:
            row = [r.index, int(r.index == report.best_index), r.initial_objective, r.final_objective, r.iterations,
                   int(r.converged)]
            row += _post_hoc(r.params, samples, consts, truth, r.metrics)
            rows.append(row + [r.runtime])
        resolved = dataclasses.asdict(config)
    else:
        config = EmConfig(max_iters=args.max_iters, restarts=args.restarts, seed=args.seed)
        report = em_fit(samples, args.m, config)
        best = report.best_params
        for r in report.restarts:
            mets = None
            if truth is not None:
                order, _ = match_components(r.params.means, truth.means)
                mets = metrics(r.params, truth, order)
            row = [r.index, int(r.index == report.best_index), float("nan"), -r.loglik, r.iterations, int(r.converged)]
            rows.append(row + _post_hoc(r.params, samples, consts, truth, mets) + [r.runtime])
        resolved = dataclasses.asdict(config)
    fileio.write_params(out / "fitted.csv", best)
    fileio.write_table(out / "report.csv", REPORT_HEADER, rows)
    resolved.update(method=args.method, m=args.m, data=args.data, truth=args.truth, sigma=args.sigma)
    return EXIT_OK, resolved


def _post_hoc(params, samples, consts, truth, mets):
    nan = float("nan")
    if params is None:
        return [nan] * 7
    try:
        ll = log_likelihood(params, samples)
    except ValueError:
        ll = nan
    row = [ll, _objective_with_constant(params, samples, 3, consts[3]), _objective_with_constant(params, samples, 4, consts[4])]
    if mets is None:
        return row + [nan] * 4
    return row + [mets.proportion_error, mets.mean_rel_error, mets.cov_rel_error, mets.cosine_angle]


def cmd_validate(args) -> int:
    out = _outdir(args.out)
    if args.experiment in ("moments", "debias"):
        rows, slopes, mean, ok = validate.convergence_suite(args.experiment, seed=args.seed, reps=args.reps)
        fileio.write_table(out / f"{args.experiment}.csv", ["rep", "p", "error"], rows)
        fileio.write_table(out / f"{args.experiment}_slopes.csv", ["rep", "slope"], list(enumerate(slopes)))
        lo, hi = validate.SLOPE_RANGE
        print(f"{args.experiment}: mean log-log slope {mean:.4f} (accepted range [{lo}, {hi}]) -> {'PASS' if ok else 'FAIL'}")
        return EXIT_OK if ok else EXIT_FAIL
    checks = validate.oracle_suite(args.seed) if args.experiment == "oracle" else validate.identities_suite(args.seed)
    fileio.write_table(out / f"{args.experiment}.csv", ["check", "passed", "detail"],
                       [(c.name, int(c.passed), c.detail) for c in checks])
    failed = [c for c in checks if not c.passed]
    for c in failed:
        print(f"FAIL {c.name}: {c.detail}")
    print(f"{args.experiment}: {len(checks) - len(failed)}/{len(checks)} checks passed")
    return EXIT_FAIL if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="momgmm", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    s = sub.add_parser("sample", help="draw samples from a mixture")
    src = s.add_mutually_exclusive_group(required=True)
    src.add_argument("--model", help=f"parameter file or one of {sorted(BUILTIN)}")
    src.add_argument("--benchmark", type=_benchmark_spec, metavar="N,M,SIGMA2", help="structured random problem")
    s.add_argument("--p", type=int, required=True, help="number of samples")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_sample)

    f = sub.add_parser("fit", help="fit a mixture to samples")
    f.add_argument("--data", required=True)
    f.add_argument("--m", type=int, required=True, help="number of components")
    f.add_argument("--d", type=int, default=3, help="moment order")
    f.add_argument("--method", choices=["mom", "em"], default="mom")
    f.add_argument("--omega", type=float, default=0.5)
    f.add_argument("--variant", choices=["none", "implicit", "postprocess"], default="postprocess")
    f.add_argument("--mode", choices=["moments", "debias"], default="moments")
    f.add_argument("--sigma", help="known covariance (n lines of n values), debias mode")
    f.add_argument("--restarts", type=int, default=10)
    f.add_argument("--max-iters", type=int, default=1000)
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--truth", help="true parameters, enables recovery metrics")
    f.add_argument("--out", required=True)
    f.set_defaults(func=cmd_fit)

    v = sub.add_parser("validate", help="run a validation experiment")
    v.add_argument("--experiment", choices=["moments", "debias", "oracle", "identities"], required=True)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--reps", type=int, default=5, help="seeds for the convergence experiments")
    v.add_argument("--out", required=True)
    v.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    start = time.perf_counter()
    try:
        result = args.func(args)
    except (OSError, ValueError) as exc:
        print(f"momgmm {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    code, resolved = result if isinstance(result, tuple) else (result, {})
    config = {k: v for k, v in vars(args).items() if k != "func"}
    config.update(resolved)
    config["threads_env"] = os.environ.get("MOMGMM_THREADS", "0")
    fileio.write_manifest(Path(args.out) / "manifest.json", args.command, config, args.seed,
                          time.perf_counter() - start, argv)
    return code
