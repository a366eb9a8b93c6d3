"""Command line entry point: ``csdecomp compute | verify | experiment``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .bdb import HALF_PI
from .driver import DEFAULT_TAU, CsdFactors, csd, residual_report
from .errors import ConvergenceError, InvalidInputError, RejectedInputError
from .harness import EXPERIMENTS, ExperimentConfig, run_experiment
from .matfile import read_matrix, write_matrix
from .reduction import CsdProblem

log = logging.getLogger("csdecomp")

FACTOR_FILES = ("U1.mat", "U2.mat", "V1.mat", "V2.mat")


class UsageError(Exception):
    pass


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="csdecomp", description="Complete 2x2 CS decomposition.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    c = sub.add_parser("compute", help="factor a partitioned unitary matrix")
    c.add_argument("--input", required=True, help="matrix file")
    c.add_argument("--p", type=int, required=True, help="rows in the top block")
    c.add_argument("--q", type=int, required=True, help="columns in the left block")
    c.add_argument("--output-dir", default=".")
    c.add_argument("--shift", choices=("wilkinson", "perfect"), default="wilkinson")
    c.add_argument("--tau", type=float, default=DEFAULT_TAU, help="negligibility threshold for angles")
    c.add_argument("--sort-theta", action="store_true")

    v = sub.add_parser("verify", help="residuals of previously computed factors")
    v.add_argument("--input", required=True)
    v.add_argument("--factors", required=True, help="directory written by compute")
    v.add_argument("--bound", type=float, default=10.0,
                   help="pass when every metric is below bound * max(10 eps, input defect)")

    e = sub.add_parser("experiment", help="run a randomized accuracy experiment")
    e.add_argument("name", choices=sorted(EXPERIMENTS))
    e.add_argument("--trials", type=int)
    e.add_argument("--seed", type=int)
    e.add_argument("--json", dest="json_path")
    return ap


def _epsilon(report) -> float:
    return max(10 * np.finfo(float).eps, report.epsilon_in)


def _report_json(report, bound: float) -> dict:
    d = report.to_dict()
    eps = _epsilon(report)
    d["epsilon"] = eps
    d["bound"] = bound
    d["passed"] = bool(report.max_metric() < bound * eps)
    return d


def _cmd_compute(args) -> int:
    x = read_matrix(args.input)
    if args.tau < 0:
        raise UsageError("--tau must be nonnegative")
    try:
        problem = CsdProblem(x, args.p, args.q)
    except InvalidInputError as exc:
        raise UsageError(str(exc)) from None
    try:
        factors, report = csd(problem, strategy=args.shift, tau=args.tau, sort_theta=args.sort_theta)
    except RejectedInputError as exc:
        print(f"csdecomp: {exc}", file=sys.stderr)
        return 1
    except ConvergenceError as exc:
        print(f"csdecomp: {exc}", file=sys.stderr)
        return 1
    out = Path(args.output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        write_matrix(out / "theta.txt", factors.theta.reshape(-1, 1))
        for name, a in zip(FACTOR_FILES, (factors.u1, factors.u2, factors.v1, factors.v2)):
            write_matrix(out / name, a)
        body = _report_json(report, 10.0)
        (out / "report.json").write_text(json.dumps(body, indent=2) + "\n")
    except OSError as exc:
        raise UsageError(f"cannot write to {out}: {exc}") from None
    print(json.dumps(body))
    return 0 if body["passed"] else 1


def _cmd_verify(args) -> int:
    x = read_matrix(args.input)
    d = Path(args.factors)
    theta = read_matrix(d / "theta.txt").real.reshape(-1)
    u1, u2, v1, v2 = (read_matrix(d / name) for name in FACTOR_FILES)
    p, q = u1.shape[0], v1.shape[0]
    try:
        problem = CsdProblem(x, p, q)
        factors = CsdFactors(theta, HALF_PI - theta, u1, u2, v1, v2)
        if any(a.shape[0] != a.shape[1] for a in (u1, u2, v1, v2)):
            raise InvalidInputError("factor files must hold square matrices")
        report = residual_report(problem, factors)
    except (InvalidInputError, ValueError) as exc:
        raise UsageError(f"dimension mismatch: {exc}") from None
    body = _report_json(report, args.bound)
    print(json.dumps(body))
    return 0 if body["passed"] else 1


def _cmd_experiment(args) -> int:
    try:
        config = ExperimentConfig.default(args.name, trials=args.trials, seed=args.seed)
    except InvalidInputError as exc:
        raise UsageError(str(exc)) from None

    def progress(t, res):
        if not res.passed:
            log.info("trial %d failed: %s", t, res.error or "bound exceeded")

    report = run_experiment(config, progress=progress)
    body = report.to_dict()
    if args.json_path:
        try:
            Path(args.json_path).write_text(json.dumps(body, indent=2) + "\n")
        except OSError as exc:
            raise UsageError(f"cannot write {args.json_path}: {exc}") from None
    status = "PASS" if report.passed else "FAIL"
    print(f"{config.name}: {status}  trials={config.trials}  failures={body['failures']}  "
          f"worst={report.worst_ratio():.3f} of {config.bound:g} eps  time={report.wall_clock:.1f}s")
    return 0 if report.passed else 1


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    cmd = {"compute": _cmd_compute, "verify": _cmd_verify, "experiment": _cmd_experiment}[args.command]
    try:
        return cmd(args)
    except (UsageError, InvalidInputError) as exc:
        print(f"csdecomp: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
