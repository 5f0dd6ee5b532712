"""``pdfrelay`` command line: d-sweeps, Monte-Carlo gap histograms and single solves.

Exit codes for ``--mode single``: 0 gap reached, 3 stalled (repeated
anchor), 4 iteration limit, 5 numerical failure, 6 instance parse error.
Any mode exits 7 when the output location is unusable and 8 on an invalid
configuration. Argument errors exit 2 (argparse).
"""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .driver import GAP_REACHED, ITERATION_LIMIT, NUMERICAL_FAILURE, STALLED, algorithm1, algorithm2
from .errors import InstanceParseError, InvalidConfigError, PdfRelayError
from .experiments import OUTPUT_ENV, ExperimentConfig, default_output_dir, run_gap_histogram, run_sweep
from .model import line_network_sample, load_instance

EXIT_OK = 0
EXIT_STALLED = 3
EXIT_LIMIT = 4
EXIT_FAILURE = 5
EXIT_PARSE = 6
EXIT_IO = 7
EXIT_CONFIG = 8

TERMINATION_EXIT = {
    GAP_REACHED: EXIT_OK,
    STALLED: EXIT_STALLED,
    ITERATION_LIMIT: EXIT_LIMIT,
    NUMERICAL_FAILURE: EXIT_FAILURE,
}


def build_parser():
    p = argparse.ArgumentParser(
        prog="pdfrelay",
        description="Globally optimal partial decode-and-forward rates for the Gaussian MIMO relay channel.",
    )
    p.add_argument("--mode", choices=("sweep-d", "monte-carlo", "single"), default="single")
    p.add_argument("--d", type=float, action="append", dest="d_values",
                   help="source-relay distance in (0, 1); repeat for a sweep (default 0.8)")
    p.add_argument("--realizations", type=int, default=200)
    p.add_argument("--ns", type=int, default=2, help="source antennas")
    p.add_argument("--nr", type=int, default=2, help="relay antennas")
    p.add_argument("--nd", type=int, default=2, help="destination antennas")
    p.add_argument("--gamma", type=float, default=4.0, help="path-loss exponent")
    p.add_argument("--ps", type=float, default=100.0, help="source power budget")
    p.add_argument("--pr", type=float, default=10.0, help="relay power budget")
    p.add_argument("--eps", type=float, default=None, help="eigenvalue floor for alg1 (default 1e-5*P_S)")
    p.add_argument("--eps-prime", type=float, default=None, help="projection floor for alg2 (default 1e-5*P_S)")
    p.add_argument("--eps-cp", type=float, default=1e-3, help="target bound gap in bits")
    p.add_argument("--max-iter", type=int, default=200)
    p.add_argument("--algorithm", choices=("alg1", "alg2", "both"), default="alg2")
    p.add_argument("--seed", type=int, default=0, help="base seed; instance i uses seed + i")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", default=None, help=f"output directory (default ${OUTPUT_ENV} or ./pdfrelay-out)")
    p.add_argument("--instance", default=None, help="instance JSON file for --mode single")
    p.add_argument("--report", default=None, help="write the solve report(s) as JSON to this path")
    return p


def _config(args):
    return ExperimentConfig(
        mode=args.mode,
        d_values=tuple(args.d_values or (0.8,)),
        realizations=args.realizations,
        n_s=args.ns,
        n_r=args.nr,
        n_d=args.nd,
        gamma=args.gamma,
        P_S=args.ps,
        P_R=args.pr,
        algorithm=args.algorithm,
        eps=args.eps,
        eps_prime=args.eps_prime,
        eps_cp=args.eps_cp,
        max_iter=args.max_iter,
        base_seed=args.seed,
        output_dir=args.out or default_output_dir(),
        jobs=args.jobs,
    )


def _matrix_json(m):
    m = np.asarray(m)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def _single(args, cfg, out):
    if args.instance:
        try:
            ch = load_instance(args.instance)
        except (OSError, InstanceParseError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_PARSE
    else:
        ch = line_network_sample(cfg.line(cfg.d_values[0], cfg.base_seed), cfg.P_S, cfg.P_R)
    eps, eps_prime = cfg.resolved_eps()
    algos = ("alg1", "alg2") if cfg.algorithm == "both" else (cfg.algorithm,)
    reports, code = [], EXIT_OK
    for name in algos:
        if name == "alg1":
            rep = algorithm1(ch, eps, cfg.eps_cp, cfg.max_iter)
        else:
            rep = algorithm2(ch, eps_prime, cfg.eps_cp, cfg.max_iter)
        reports.append(rep)
        print(f"{name}: rate={rep.rate:.12g} bits  delta={rep.delta:.3e}  "
              f"iterations={rep.iterations}  termination={rep.termination}", file=out)
        if rep.message:
            print(f"{name}: {rep.message}", file=out)
        dump = {"algorithm": name, "rate": rep.rate, "delta": rep.delta, "iterations": rep.iterations}
        if rep.incumbent_inner is not None:
            dump["C_v"] = _matrix_json(rep.incumbent_inner.split.C_v)
            dump["C_w"] = _matrix_json(rep.incumbent_inner.split.C_w)
        if rep.incumbent is not None:
            dump["R"] = _matrix_json(rep.incumbent.R)
        print(json.dumps(dump), file=out)
        if code == EXIT_OK:
            code = TERMINATION_EXIT[rep.termination]
    if args.report:
        docs = [r.to_dict() for r in reports]
        try:
            with open(args.report, "w") as fh:
                json.dump(docs[0] if len(docs) == 1 else docs, fh, indent=1)
                fh.write("\n")
        except OSError as exc:
            print(f"error: cannot write report: {exc}", file=sys.stderr)
            return EXIT_IO
    return code


def main(argv=None, out=None):
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        cfg = _config(args)
    except InvalidConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if cfg.mode == "single":
            return _single(args, cfg, out)
        if cfg.mode == "sweep-d":
            rows, agg = run_sweep(cfg)
            for a in agg:
                print(f"d={a['d']:.3g}: mean PDF={a['mean_rate_alg2'] or a['mean_rate_alg1']:.6g}  "
                      f"mean CSB={a['mean_csb']}  failed={a['failed']}", file=out)
        else:
            rows = run_gap_histogram(cfg)
            diffs = [r["abs_diff"] for r in rows if "abs_diff" in r]
            failed = sum(bool(r["failed"]) for r in rows)
            print(f"{len(rows)} instances, max |alg1-alg2| = {max(diffs, default=float('nan')):.3e}, "
                  f"failed={failed}", file=out)
        print(f"wrote CSV files to {cfg.output_dir}", file=out)
        return EXIT_OK
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except InvalidConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PdfRelayError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
