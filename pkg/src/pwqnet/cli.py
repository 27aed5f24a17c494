"""Command line interface: ``pwqnet <subcommand> ...``.

Exit codes
----------
0  check passed
1  mathematical failure (validation violation, counterexample)
2  structural or I/O problem (bad JSON, unreadable file, bad arguments)
3  QP solver failure
4  precondition failure (invalid function, infeasible lift)

Tolerances default to ``eps_c=1e-9, eps_v=1e-8, eps_q=1e-6`` and can be
overridden with a JSON object in ``PWQ_TOL_OVERRIDE``.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import jsonio
from .lifting import (CostSpec, InvalidPwqError, LiftSolverError, algorithm1,
                      check_lift_conditions, solve_lift_qp_full)
from .nn import (InfeasibleLiftError, WeightSchemaError, build_maxout_net, build_relu_net,
                 eval_net, export_weights, import_weights)
from .pwq import (DomainError, Pwa1D, Pwq1D, StructureError, ToleranceConfig, eval_pwa,
                  eval_pwq, validate_pwq)
from .pwqnd import PwaND, PwqND
from .verify import (PipelineError, gamma_lift_search, sample_points_1d,
                     verify_conjecture_pipeline, verify_max_representation_1d,
                     verify_max_representation_nd, verify_net_1d)

EXIT_OK, EXIT_MATH, EXIT_STRUCT, EXIT_SOLVER, EXIT_PRECOND = 0, 1, 2, 3, 4


class CliError(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


def _emit(obj):
    sys.stdout.write(jsonio.dumps(obj))


def _read(path, what):
    try:
        return jsonio.read_json(path)
    except OSError as exc:
        raise CliError(EXIT_STRUCT, f"cannot read {what} file {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise CliError(EXIT_STRUCT, f"{what} file {path} is not valid JSON: {exc}") from None


def _load(path, cls, what):
    data = _read(path, what)
    if not isinstance(data, dict):
        raise CliError(EXIT_STRUCT, f"{what} file {path} must hold a JSON object")
    return cls.from_dict(data)


def _write(path, text):
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise CliError(EXIT_STRUCT, f"cannot write {path}: {exc.strerror}") from None


def _load_net(path):
    return import_weights(_read(path, "network"))


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_validate(args, tol):
    f = _load(args.input, Pwq1D, "function")
    result = validate_pwq(f, tol)
    for v in result.violations:
        sys.stdout.write(jsonio.dumps_line(v.to_dict()) + "\n")
    sys.stdout.write(jsonio.dumps_line({"ok": result.ok, "segments": f.s,
                                        "violations": len(result.violations)}) + "\n")
    return EXIT_OK if result.ok else EXIT_MATH


def cmd_lift(args, tol):
    f = _load(args.input, Pwq1D, "function")
    out = {"method": args.method}
    if args.method == "alg1":
        if args.cost:
            raise CliError(EXIT_STRUCT, "--cost only applies to --method qp")
        h = algorithm1(f, tol)
    else:
        cost = _load(args.cost, CostSpec, "cost") if args.cost else CostSpec.sum_squares()
        try:
            res = solve_lift_qp_full(f, cost, tol)
        except LiftSolverError as exc:
            _emit({"method": "qp", "error": str(exc), "solver": exc.solution.to_dict()})
            raise CliError(EXIT_SOLVER, str(exc)) from None
        h = res.lift
        sol = res.solution
        out.update(cost=res.cost, warm_start_cost=res.warm_start_cost, solver={
            "status": sol.status, "iterations": sol.iterations,
            "primal_residual": sol.primal_residual, "dual_residual": sol.dual_residual,
            "complementarity": sol.complementarity})
    report = check_lift_conditions(f, h, tol)
    out["lift"] = {"alpha": h.alpha.tolist(), "beta": h.beta.tolist()}
    out["conditions"] = report.to_dict()
    if args.output:
        _write(args.output, jsonio.dumps(h.to_dict()))
    _emit(out)
    return EXIT_OK if report.feasible else EXIT_MATH


def cmd_build(args, tol):
    f = _load(args.input, Pwq1D, "function")
    if args.arch == "maxout":
        if not args.lift:
            raise CliError(EXIT_STRUCT, "--arch maxout needs --lift")
        net = build_maxout_net(f, _load(args.lift, Pwa1D, "lift"), tol)
    else:
        result = validate_pwq(f, tol)
        if not result.ok:
            raise InvalidPwqError(result)
        net = build_relu_net(f, tol)
    text = jsonio.dumps(export_weights(net))
    if args.output:
        _write(args.output, text)
    hidden = net.layers[0]
    _emit({"arch": args.arch, "hidden_width": hidden.width, "channels": hidden.channels,
           "parameters": net.parameter_count()})
    return EXIT_OK


def cmd_eval(args, tol):
    f = _load(args.input, Pwq1D, "function")
    x = np.asarray(args.x, dtype=float)
    out = {"x": x.tolist(), "phi": np.atleast_1d(eval_pwq(f, x)).tolist()}
    if args.lift:
        out["h"] = np.atleast_1d(eval_pwa(_load(args.lift, Pwa1D, "lift"), x)).tolist()
    if args.net:
        net = _load_net(args.net)
        xi = np.column_stack([x, x * x])
        out["net"] = eval_net(net, xi)[:, 0].tolist()
    _emit(out)
    return EXIT_OK


def cmd_verify(args, tol):
    if args.nd:
        f = _load(args.input, PwqND, "function")
        if not args.lift:
            raise CliError(EXIT_STRUCT, "--nd needs --lift")
        h = _load(args.lift, PwaND, "lift")
        if args.gamma_search:
            res = gamma_lift_search(f, h, per_region=args.samples, seed=args.seed, tol=tol)
            _emit(res.to_dict())
            return EXIT_OK if res.gamma is not None else EXIT_MATH
        report = verify_max_representation_nd(f, h.scaled(args.gamma), per_region=args.samples,
                                              seed=args.seed, tol=tol)
    else:
        f = _load(args.input, Pwq1D, "function")
        if args.lift and args.net:
            raise CliError(EXIT_STRUCT, "give at most one of --lift and --net")
        if args.lift:
            report = verify_max_representation_1d(f, _load(args.lift, Pwa1D, "lift"), tol)
        elif args.net:
            pts = sample_points_1d(f, grid=args.samples, random_points=args.samples // 10,
                                   seed=args.seed)
            report = verify_net_1d(f, _load_net(args.net), pts, tol)
        else:
            report = verify_conjecture_pipeline(f, tol, seed=args.seed)
    _emit(report.to_dict())
    return EXIT_OK if report.passed else EXIT_MATH


def export_rows(f: Pwq1D, h: Pwa1D | None, net, grid):
    """Header and rows of the sample table; ``None`` marks an absent value."""
    lo, hi = f.domain
    x = np.unique(np.concatenate([np.linspace(lo, hi, grid), f.breakpoints]))
    s = f.s
    header = (["x", "phi", "h", "phi_plus_h", "net"]
              + [f"seg_{j + 1}" for j in range(s)] + [f"lifted_{j + 1}" for j in range(s)])
    phi = eval_pwq(f, x)
    ext = np.multiply.outer(x * x, f.q) + np.multiply.outer(x, f.l) + f.c
    cols = [x, phi]
    if h is not None:
        hv = eval_pwa(h, x)
        lifted = ext + np.multiply.outer(x, h.alpha) + h.beta
        cols += [hv, phi + hv]
    else:
        lifted = None
        cols += [None, None]
    cols.append(None if net is None else eval_net(net, np.column_stack([x, x * x]))[:, 0])
    cols += [ext[:, j] for j in range(s)]
    cols += [None if lifted is None else lifted[:, j] for j in range(s)]
    rows = [[None if c is None else float(c[k]) for c in cols] for k in range(x.size)]
    return header, rows


def write_csv(path, header, rows):
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow(["" if v is None else jsonio.format_float(v) for v in row])
    except OSError as exc:
        raise CliError(EXIT_STRUCT, f"cannot write {path}: {exc.strerror}") from None


def cmd_export_samples(args, tol):
    f = _load(args.input, Pwq1D, "function")
    h = _load(args.lift, Pwa1D, "lift") if args.lift else None
    if args.net:
        net = _load_net(args.net)
    elif h is not None and check_lift_conditions(f, h, tol).feasible:
        net = build_maxout_net(f, h, tol)
    else:
        net = None
    if args.grid < 2:
        raise CliError(EXIT_STRUCT, "--grid must be at least 2")
    header, rows = export_rows(f, h, net, args.grid)
    write_csv(args.output, header, rows)
    _emit({"rows": len(rows), "columns": header})
    return EXIT_OK


def cmd_repro(args, tol):
    from .repro import run_repro

    return run_repro(args.example, Path(args.outdir), tol, seed=args.seed)


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="pwqnet", description=__doc__.split("\n")[0],
                                formatter_class=argparse.RawDescriptionHelpFormatter,
                                epilog="exit codes: 0 pass, 1 math failure, 2 structural/IO, "
                                       "3 solver failure, 4 precondition failure")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("validate", help="check continuity and convexity of a 1D PWQ function")
    s.add_argument("--input", required=True)
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("lift", help="compute a compensating lift")
    s.add_argument("--input", required=True)
    s.add_argument("--method", choices=("alg1", "qp"), default="alg1")
    s.add_argument("--cost", help="CostSpec JSON (qp only); default sum of squares")
    s.add_argument("--output")
    s.set_defaults(func=cmd_lift)

    s = sub.add_parser("build", help="build max-out or ReLU network weights")
    s.add_argument("--input", required=True)
    s.add_argument("--lift")
    s.add_argument("--arch", choices=("maxout", "relu"), default="maxout")
    s.add_argument("--output")
    s.set_defaults(func=cmd_build)

    s = sub.add_parser("eval", help="evaluate function, lift and network at points")
    s.add_argument("--input", required=True)
    s.add_argument("--lift")
    s.add_argument("--net")
    s.add_argument("--x", type=float, nargs="+", required=True)
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("verify", help="certify or sample-check a max representation")
    s.add_argument("--input", required=True)
    s.add_argument("--lift")
    s.add_argument("--net")
    s.add_argument("--nd", action="store_true", help="input is a polytopic PWQ function")
    s.add_argument("--gamma", type=float, default=1.0, help="lift scaling for --nd")
    s.add_argument("--gamma-search", action="store_true",
                   help="with --nd: smallest passing scaling on a log grid")
    s.add_argument("--samples", type=int, default=None,
                   help="grid points (1D --net, default 100000) or points per region "
                        "(--nd, default 2000)")
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("export-samples", help="write plot data as CSV")
    s.add_argument("--input", required=True)
    s.add_argument("--lift")
    s.add_argument("--net")
    s.add_argument("--grid", type=int, default=1001)
    s.add_argument("--output", required=True)
    s.set_defaults(func=cmd_export_samples)

    s = sub.add_parser("repro", help="rerun a worked example end to end")
    s.add_argument("--example", choices=("1d", "2d"), required=True)
    s.add_argument("--outdir", required=True)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_repro)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_STRUCT if exc.code else EXIT_OK
    if getattr(args, "samples", 0) is None:
        args.samples = 2000 if args.nd else 100_000
    try:
        tol = ToleranceConfig.from_env()
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STRUCT
    try:
        return args.func(args, tol)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except LiftSolverError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (InvalidPwqError, InfeasibleLiftError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECOND
    except PipelineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECOND if exc.stage == "validate" else EXIT_MATH
    except (StructureError, DomainError, WeightSchemaError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STRUCT


if __name__ == "__main__":
    sys.exit(main())
