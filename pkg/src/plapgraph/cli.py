"""Command-line entry point.

Exit codes:
  0  success
  1  input error (unreadable or invalid documents, parameters out of range)
  2  solver did not converge
  3  mountain-pass geometry could not be certified
  4  a verified property was violated

Reports go to ``--output``, else to ``$PLAPGRAPH_OUTPUT_DIR/<name>.<format>``
when that variable is set, else to standard output.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import reports
from .calculus import (
    OperatorContext,
    conjugate_exponent,
    linf_bound_check,
    sobolev_constant_estimate,
    summation_by_parts_defect,
    trudinger_moser_check,
)
from .eigen import (
    EigenConfig,
    EigenProblem,
    solve_principal,
    verify_domain_monotonicity,
    verify_weight_monotonicity,
)
from .graph import DirichletDomain, GraphError, load_graph, load_weight
from .mountain_pass import GeometryError, MountainPassConfig, mountain_pass_solve
from .nonlinearity import FAMILIES, Nonlinearity

OUTPUT_DIR_ENV = "PLAPGRAPH_OUTPUT_DIR"

EXIT_OK, EXIT_INPUT, EXIT_NONCONVERGED, EXIT_GEOMETRY, EXIT_VIOLATED = 0, 1, 2, 3, 4


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """Usage errors are input errors (exit 1), keeping 2 for non-convergence."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _read_json(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc})") from exc


def _load_problem_inputs(args):
    _, dom = load_graph(_read_json(args.graph))
    return dom


def _eigen_config(args) -> EigenConfig:
    return EigenConfig(tol=args.tol, max_iter=args.max_iter, restarts=args.restarts,
                       seed=args.seed)


def _context(dom: DirichletDomain, p: float) -> OperatorContext:
    return OperatorContext(dom, p)


def _config(args, **extra) -> dict:
    skip = {"func", "name"}
    cfg = {k: v for k, v in sorted(vars(args).items()) if k not in skip}
    cfg.update(extra)
    return cfg


def _emit(args, name: str, report: dict) -> None:
    text = reports.render(report, args.format)
    target = args.output
    if target is None and os.environ.get(OUTPUT_DIR_ENV):
        target = str(Path(os.environ[OUTPUT_DIR_ENV]) / f"{name}.{args.format}")
    if target is None or target == "-":
        sys.stdout.write(text)
    else:
        reports.write_atomic(target, text)


# -- eigen -----------------------------------------------------------------------

def cmd_eigen(args) -> int:
    dom = _load_problem_inputs(args)
    K = load_weight(_read_json(args.weight), dom)
    ctx = _context(dom, args.p)
    result = solve_principal(EigenProblem(ctx, K), _eigen_config(args))
    report = reports.envelope("eigen", _config(args, eps=ctx.eps),
                              {"graph": args.graph, "weight": args.weight},
                              result.to_dict())
    _emit(args, "eigen", report)
    if not result.converged:
        print(f"eigen: not converged (residual {result.residual:.3e})", file=sys.stderr)
        return EXIT_NONCONVERGED
    return EXIT_OK


# -- solve -----------------------------------------------------------------------

def cmd_solve(args) -> int:
    dom = _load_problem_inputs(args)
    K = load_weight(_read_json(args.weight), dom)
    if args.p <= 2.0:
        raise InputError(f"p must exceed 2 for the semilinear problem, got {args.p}")
    kw = {"theta": args.theta, "s0": args.s0}
    if args.family == "exponential":
        kw["beta"] = args.beta
    nl = Nonlinearity(dom, args.p, args.q, args.a, family=args.family, **kw)
    ctx = _context(dom, args.p)
    problem = EigenProblem(ctx, K)
    eig = solve_principal(problem, _eigen_config(args))
    if args.lambda_frac is not None:
        if not 0.0 < args.lambda_frac < 1.0:
            raise InputError(f"lambda fraction must lie in (0, 1), got {args.lambda_frac}")
        lam = args.lambda_frac * eig.lambda1
    else:
        lam = args.lam
        if not 0.0 < lam < eig.lambda1:
            raise InputError(f"lambda must lie in (0, lambda_1) = (0, {eig.lambda1:.12g})")
    mp_cfg = MountainPassConfig(path_points=args.path_points, tol=args.mp_tol,
                                max_outer=args.max_outer, seed=args.seed,
                                eigen=_eigen_config(args))
    config = _config(args, eps=ctx.eps, lambda_resolved=lam,
                     nonlinearity=nl.describe())
    inputs = {"graph": args.graph, "weight": args.weight}
    try:
        sol = mountain_pass_solve(problem, nl, lam, mp_cfg, eigen=eig)
    except GeometryError as exc:
        result = {"lambda1": eig.lambda1, "lambda": lam, "converged": False,
                  "message": str(exc), "geometry_best": exc.best}
        _emit(args, "solve", reports.envelope("solve", config, inputs, result))
        print(f"solve: {exc}", file=sys.stderr)
        return EXIT_GEOMETRY
    result = sol.to_dict()
    result["hypotheses"] = nl.check_hypotheses()
    _emit(args, "solve", reports.envelope("solve", config, inputs, result))
    if not sol.converged:
        print(f"solve: not converged ({sol.message})", file=sys.stderr)
        return EXIT_NONCONVERGED
    return EXIT_OK


# -- verify ----------------------------------------------------------------------

def _row(check: str, relation: str, lhs, rhs, passed: bool) -> dict:
    return {"check": check, "relation": relation, "lhs": lhs, "rhs": rhs,
            "passed": bool(passed)}


def _verify_weight(args):
    dom = _load_problem_inputs(args)
    K1 = load_weight(_read_json(args.k1), dom)
    K2 = load_weight(_read_json(args.k2), dom)
    cfg = _eigen_config(args)
    rep = verify_weight_monotonicity(_context(dom, args.p), K1, K2, cfg)
    rows = [
        _row("lambda1(K2) < lambda1(K1) - margin", "<",
             rep.lambda_k2, rep.lambda_k1 - rep.margin, rep.lambda_k2 < rep.lambda_k1 - rep.margin),
        _row("lambda1(K2) <= test bound", "<=", rep.lambda_k2, rep.test_bound,
             rep.lambda_k2 <= rep.test_bound * (1.0 + 1e-12)),
        _row("solver converged (K1)", "==", rep.result_k1.converged, True, rep.result_k1.converged),
        _row("solver converged (K2)", "==", rep.result_k2.converged, True, rep.result_k2.converged),
    ]
    details = {"lambda_k1": rep.lambda_k1, "lambda_k2": rep.lambda_k2,
               "test_bound": rep.test_bound, "margin": rep.margin}
    return rows, details, {"graph": args.graph, "k1": args.k1, "k2": args.k2}


def _verify_domain(args):
    graph, dom1 = load_graph(_read_json(args.graph))
    interior2 = [v for v in args.interior2.split(",") if v]
    dom2 = DirichletDomain(graph, interior2)
    K = load_weight(_read_json(args.weight), dom2)
    rep = verify_domain_monotonicity(dom1, dom2, K, args.p, _eigen_config(args))
    rows = [
        _row("lambda1(large) <= lambda1(small) + slack", "<=",
             rep.lambda_large, rep.lambda_small + rep.slack, rep.passed),
        _row("lambda1(large) <= zero-extension quotient", "<=",
             rep.lambda_large, rep.extension_value + rep.slack,
             rep.lambda_large <= rep.extension_value + rep.slack),
        _row("solver converged (small)", "==", rep.result_small.converged, True,
             rep.result_small.converged),
        _row("solver converged (large)", "==", rep.result_large.converged, True,
             rep.result_large.converged),
    ]
    details = {"lambda_small": rep.lambda_small, "lambda_large": rep.lambda_large,
               "extension_value": rep.extension_value, "interior_small": list(dom1.interior),
               "interior_large": list(dom2.interior)}
    return rows, details, {"graph": args.graph, "weight": args.weight}


def _verify_green(args):
    dom = _load_problem_inputs(args)
    ctx = _context(dom, args.p)
    rng = np.random.default_rng(args.seed)
    worst = 0.0
    for _ in range(args.trials):
        u = dom.function(rng.standard_normal(dom.n_closure))
        phi = dom.dirichlet_function(rng.standard_normal(dom.n_interior))
        worst = max(worst, summation_by_parts_defect(ctx, u, phi))
    rows = [_row("summation by parts relative defect", "<=", worst, args.max_defect,
                 worst <= args.max_defect)]
    return rows, {"max_defect": worst, "trials": args.trials}, {"graph": args.graph}


def _verify_tm(args):
    dom = _load_problem_inputs(args)
    ctx = _context(dom, args.p)
    chk = trudinger_moser_check(ctx, args.alpha, args.c0, samples=args.samples, seed=args.seed)
    rows = [_row("Trudinger-Moser bound violations", "==", chk.violations, 0, chk.passed),
            _row("largest sampled integral <= bound", "<=", chk.worst, chk.bound,
                 chk.worst <= chk.bound)]
    details = {"bound": chk.bound, "c0": chk.c0, "c0_source": "given" if args.c0 else "empirical",
               "samples": chk.samples, "worst": chk.worst}
    return rows, details, {"graph": args.graph}


def _verify_embedding(args):
    dom = _load_problem_inputs(args)
    ctx = _context(dom, args.p)
    q = conjugate_exponent(args.p) if args.q is None else args.q
    c_hat = sobolev_constant_estimate(ctx, q, trials=args.samples, seed=args.seed)
    linf = linf_bound_check(ctx, samples=args.samples, seed=args.seed)
    rows = [
        _row("embedding constant estimate finite and positive", ">", c_hat, 0.0,
             math.isfinite(c_hat) and c_hat > 0.0),
        _row("sup norm bound violations", "==", linf.violations, 0, linf.passed),
    ]
    details = {"q": q, "c_hat": c_hat, "c0": linf.c0, "c0_refined": linf.c0_refined,
               "refinements": linf.refinements, "samples": linf.samples}
    return rows, details, {"graph": args.graph}


_VERIFY = {
    "monotonicity-weight": _verify_weight,
    "monotonicity-domain": _verify_domain,
    "green": _verify_green,
    "tm": _verify_tm,
    "embedding": _verify_embedding,
}


def cmd_verify(args) -> int:
    rows, details, inputs = _VERIFY[args.check](args)
    passed = all(r["passed"] for r in rows)
    result = {"check": args.check, "checks": rows, "details": details, "passed": passed}
    _emit(args, f"verify-{args.check}", reports.envelope("verify", _config(args), inputs, result))
    for r in rows:
        if not r["passed"]:
            print(f"verify {args.check}: violated: {r['check']} "
                  f"({r['lhs']} {r['relation']} {r['rhs']})", file=sys.stderr)
    return EXIT_OK if passed else EXIT_VIOLATED


# -- parser ----------------------------------------------------------------------

def _common(p: argparse.ArgumentParser, *, needs_p: bool = True) -> None:
    p.add_argument("--graph", required=True, help="graph document (JSON)")
    if needs_p:
        p.add_argument("--p", type=float, required=True, help="exponent p > 1")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", default=None, help="report path ('-' for stdout)")
    p.add_argument("--format", choices=("json", "csv"), default="json")


def _eigen_opts(p: argparse.ArgumentParser) -> None:
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--max-iter", type=int, default=100_000)
    p.add_argument("--restarts", type=int, default=16)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="plapgraph",
                                     description="p-Laplacian solvers on weighted graphs.")
    sub = parser.add_subparsers(dest="command", required=True)

    pe = sub.add_parser("eigen", help="principal eigenvalue with indefinite weight")
    _common(pe)
    pe.add_argument("--weight", required=True, help="weight document (JSON)")
    _eigen_opts(pe)
    pe.set_defaults(func=cmd_eigen)

    ps = sub.add_parser("solve", help="positive solution by the mountain-pass method")
    _common(ps)
    ps.add_argument("--weight", required=True)
    ps.add_argument("--q", type=float, required=True, help="growth exponent q > p")
    ps.add_argument("--theta", type=float, default=None,
                    help="Ambrosetti-Rabinowitz exponent in (p, q]; default (p+q)/2")
    ps.add_argument("--s0", type=float, default=1.0)
    ps.add_argument("--a", type=float, default=1.0, help="constant coefficient a > 0")
    ps.add_argument("--family", choices=FAMILIES, default="power")
    ps.add_argument("--beta", type=float, default=1.0, help="exponential family exponent")
    lam = ps.add_mutually_exclusive_group(required=True)
    lam.add_argument("--lambda", dest="lam", type=float, help="absolute lambda")
    lam.add_argument("--lambda-frac", type=float, help="lambda as a fraction of lambda_1")
    ps.add_argument("--path-points", type=int, default=33)
    ps.add_argument("--mp-tol", type=float, default=1e-9)
    ps.add_argument("--max-outer", type=int, default=3000)
    _eigen_opts(ps)
    ps.set_defaults(func=cmd_solve)

    pv = sub.add_parser("verify", help="property checks")
    vs = pv.add_subparsers(dest="check", required=True)

    v = vs.add_parser("monotonicity-weight")
    _common(v)
    v.add_argument("--k1", required=True)
    v.add_argument("--k2", required=True)
    _eigen_opts(v)

    v = vs.add_parser("monotonicity-domain")
    _common(v)
    v.add_argument("--interior2", required=True,
                   help="comma-separated interior of the larger domain")
    v.add_argument("--weight", required=True, help="weight on the larger interior")
    _eigen_opts(v)

    v = vs.add_parser("green")
    _common(v)
    v.add_argument("--trials", type=int, default=1000)
    v.add_argument("--max-defect", type=float, default=1e-10)

    v = vs.add_parser("tm")
    _common(v)
    v.add_argument("--alpha", type=float, required=True)
    v.add_argument("--c0", type=float, default=None, help="embedding constant; default empirical")
    v.add_argument("--samples", type=int, default=1000)

    v = vs.add_parser("embedding")
    _common(v)
    v.add_argument("--q", type=float, default=None, help="default p/(p-1)")
    v.add_argument("--samples", type=int, default=1000)

    pv.set_defaults(func=cmd_verify)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InputError, GraphError, ValueError) as exc:
        print(f"{args.command}: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
