"""``parseq`` command line: run iteration-count experiments or self-checks."""
from __future__ import annotations

import argparse
import sys

from . import experiments as ex
from .verify import SUITES, run_suites


def int_list(text):
    try:
        vals = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not vals or min(vals) < 1:
        raise argparse.ArgumentTypeError("values must be positive integers")
    return vals


def method_list(text):
    vals = [v.strip() for v in text.split(",") if v.strip()]
    bad = [v for v in vals if v not in ex.METHODS]
    if bad or not vals:
        raise argparse.ArgumentTypeError(f"unknown methods {bad}; choose from {','.join(ex.METHODS)}")
    return vals


def positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def build_parser():
    p = argparse.ArgumentParser(prog="parseq", description="Parallel fixed-point evaluation of nonlinear recursions.")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an iteration-count experiment")
    run.add_argument("--experiment", required=True, choices=ex.EXPERIMENTS)
    run.add_argument("--methods", type=method_list, default=list(ex.METHODS))
    run.add_argument("--seq-lens", type=int_list, default=[64])
    run.add_argument("--dims", type=int_list, default=None)
    run.add_argument("--seeds", type=positive_int, default=10)
    run.add_argument("--batch", type=positive_int, default=16)
    run.add_argument("--tol", type=float, default=5e-4)
    run.add_argument("--epsilon", type=float, default=1e-5, help="Langevin step size")
    run.add_argument("--mixture-k", type=positive_int, default=2)
    run.add_argument("--eval", choices=("scan", "sequential"), default="scan")
    run.add_argument("--output", default=None, help="result file; omitted means none is written")
    run.add_argument("--format", choices=("csv", "jsonl"), default="csv")
    run.add_argument("--root-seed", type=int, default=0)
    run.add_argument("--elk-k", type=float, default=0.5, help="scale-ELK damping k in [0, 1]")
    run.add_argument("--diagonal", choices=("hutchinson", "exact"), default="hutchinson",
                     help="diagonal used by quasi-Newton and clip-ELK")
    run.add_argument("--probes", type=positive_int, default=4, help="Hutchinson probes per step")

    ver = sub.add_parser("verify", help="run the bundled self-check suites")
    ver.add_argument("--suite", action="append", choices=tuple(SUITES), help="restrict to a suite (repeatable)")
    return p


def cmd_run(args, parser):
    try:
        cfg = ex.ExperimentConfig(
            experiment=args.experiment, methods=args.methods, seq_lens=args.seq_lens, dims=args.dims,
            seeds=args.seeds, batch=args.batch, tolerance=args.tol, epsilon=args.epsilon,
            mixture_k=args.mixture_k, output=args.output, format=args.format, evaluation=args.eval,
            root_seed=args.root_seed, elk_k=args.elk_k, diagonal=args.diagonal, probes=args.probes)
    except ValueError as exc:
        parser.error(str(exc))
    try:
        rows, summary, ok = ex.run_experiment(cfg)
    except OSError as exc:
        print(f"parseq: cannot write {cfg.output}: {exc}", file=sys.stderr)
        return 1
    print(ex.summary_table(summary))
    bad = sum(not ex.expected(r) for r in rows)
    if bad:
        print(f"{bad} of {len(rows)} runs did not converge", file=sys.stderr)
    return 0 if ok else 1


def cmd_verify(args):
    results = run_suites(args.suite)
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    return 0 if all(ok for _, ok, _ in results) else 1


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "run":
        return cmd_run(args, parser)
    return cmd_verify(args)


if __name__ == "__main__":
    sys.exit(main())
