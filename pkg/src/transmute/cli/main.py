"""Command-line entry point: ``transmute {eigs,ivp,qwell,kernel,diagnose}``.

Exit codes: 0 success, 2 bad configuration, 3 the construction failed
(particular solution, formal powers or kernel fit), 4 fewer eigenvalues
than requested or unconverged roots.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
import time
import warnings
from dataclasses import replace

import numpy as np

from ..errors import BoundaryConditionError, ConditioningError, ConstructionError, TransmuteError
from ..nsbf import kernel_eval
from ..spectral import find_eigenvalues, ivp_solution, quantum_well
from ..spps import formal_powers, sanity_ratio
from ..traces import fit_kernel, goursat_targets
from .config import (
    ConfigError,
    ProblemSpec,
    RunConfig,
    assemble,
    choose_mode,
    load_config,
    problem_from_mapping,
    run_from_mapping,
)
from .expression import ExpressionError, parse_expression

log = logging.getLogger("transmute")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CONSTRUCTION = 3
EXIT_CONVERGENCE = 4

DEFAULT_COUNT = 10
EIG_HEADER = ["index", "lambda_re", "lambda_im", "omega_re", "omega_im", "residual", "method"]


def fmt(v) -> str:
    """17 significant digits, enough to round-trip any double."""
    return f"{float(v):.17g}"


def _add_problem_args(p):
    g = p.add_argument_group("problem")
    g.add_argument("--config", help="TOML file with [problem], [run], [output] sections")
    src = g.add_mutually_exclusive_group()
    src.add_argument("--potential", help="expression in x, e.g. 'exp(x)'")
    src.add_argument("--samples", dest="samples_file", help="CSV of x, Re q[, Im q]")
    src.add_argument("--builtin", help="catalog problem, e.g. 'square_well(15,1)'")
    g.add_argument("--interval", help="'lo,hi', e.g. '0,pi'")
    g.add_argument("--bc-left", help="dirichlet | neumann | 'alpha,beta' (expressions in omega)")
    g.add_argument("--bc-right", help="same form as --bc-left")
    r = p.add_argument_group("run")
    r.add_argument("-M", "--m", type=int, dest="m", help="Chebyshev nodes (default 256)")
    r.add_argument("-N", "--n", type=int, dest="n", help="kernel order (default 30)")
    r.add_argument("-K", "--k", type=int, dest="k", help="power-series degree near the origin")
    r.add_argument("--count", type=int, help="number of eigenvalues")
    r.add_argument("--mode", choices=("real-scan", "complex"))
    r.add_argument("--shift", help="spectral shift lam*")
    o = p.add_argument_group("output")
    o.add_argument("--format", choices=("csv", "json"))
    o.add_argument("--out", help="output file (default stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="transmute", description="Sturm-Liouville problems via transmutation kernels")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eigs", help="eigenvalues of a boundary-value problem")
    _add_problem_args(p)

    p = sub.add_parser("qwell", help="bound states of a well with zero exterior potential")
    _add_problem_args(p)

    p = sub.add_parser("ivp", help="solution of an initial-value problem at fixed lambda")
    _add_problem_args(p)
    p.add_argument("--lam", required=True, help="spectral parameter lambda")
    p.add_argument("--y0", default="1", help="y(lo)")
    p.add_argument("--y1", default="0", help="y'(lo)")
    p.add_argument("--points", type=int, default=101, help="equispaced output abscissas")

    p = sub.add_parser("kernel", help="K_{f,N}(x, t) on a triangular grid")
    _add_problem_args(p)
    p.add_argument("--grid", type=int, default=20, help="subdivisions of [0, b]")
    p.add_argument("--which", choices=("Kf", "K1f", "C", "S"), default="Kf")

    p = sub.add_parser("diagnose", help="fit errors versus N, or phi_k(x)/x^k ratios")
    _add_problem_args(p)
    p.add_argument("--n-sweep", default=None, help="start:stop:step, inclusive stop")
    p.add_argument("--ratios-at", type=float, default=None, help="x at which to tabulate phi_k(x)/x^k")
    return parser


def _resolve(args):
    """Merge config file and flags into ``(ProblemSpec, RunConfig)``."""
    data = {"problem": {}, "run": {}, "output": {}}
    base_dir = None
    if args.config:
        loaded = load_config(args.config)
        unknown = set(loaded) - set(data)
        if unknown:
            raise ConfigError(f"unknown config sections {sorted(unknown)}")
        for key in data:
            data[key].update(loaded.get(key, {}))
        base_dir = os.path.dirname(os.path.abspath(args.config))
    problem = data["problem"]
    flags = {
        "potential": args.potential,
        "samples_file": args.samples_file,
        "builtin": args.builtin,
    }
    if any(v is not None for v in flags.values()):
        for key in ("potential", "samples_file", "builtin"):
            problem.pop(key, None)
        problem.update({k: v for k, v in flags.items() if v is not None})
    for key, value in (("interval", args.interval), ("bc_left", args.bc_left), ("bc_right", args.bc_right)):
        if value is not None:
            problem[key] = value
    allowed = {"interval", "potential", "samples_file", "builtin", "bc_left", "bc_right"}
    unknown = set(problem) - allowed
    if unknown:
        raise ConfigError(f"unknown [problem] keys {sorted(unknown)}")
    spec = problem_from_mapping(problem, base_dir)
    run = dict(data["run"])
    for key in ("m", "n", "k", "count", "mode", "shift"):
        value = getattr(args, key)
        if value is not None:
            run[key] = value
    output = dict(data["output"])
    for key in ("format", "out"):
        value = getattr(args, key)
        if value is not None:
            output[key] = value
    return spec, run_from_mapping(run, output, spec.defaults)


def _emit(text, out):
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)


def _table_csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _meta(problem, run, t0, **extra):
    e1, e2 = problem.eps
    meta = {
        "N": run.N,
        "M": run.M,
        "eps1": float(e1),
        "eps2": float(e2),
        "runtime_ms": round(1e3 * (time.perf_counter() - t0), 3),
    }
    meta.update(extra)
    return meta


def _eigen_rows(result):
    rows = []
    for k, lam in enumerate(result.eigenvalues):
        om = result.omegas[k]
        method = ";".join([result.methods[k]] + list(dict.fromkeys(result.flags[k])))
        rows.append([k + 1, lam.real, lam.imag, om.real, om.imag, result.residuals[k], method])
    return rows


def write_eigen_result(result, problem, run, t0, **extra):
    rows = _eigen_rows(result)
    if run.format == "json":
        meta = _meta(problem, run, t0, shortfall=int(result.shortfall), **extra)
        records = []
        for row in rows:
            rec = dict(zip(EIG_HEADER, row))
            for key in EIG_HEADER[1:6]:
                rec[key] = float(fmt(rec[key]))
            records.append(rec)
        text = json.dumps({"meta": meta, "eigenvalues": records}, indent=2) + "\n"
    else:
        text = _table_csv(EIG_HEADER, [[r[0]] + [fmt(v) for v in r[1:6]] + [r[6]] for r in rows])
    _emit(text, run.out)


def _write_table(header, rows, run, meta):
    if run.format == "json":
        body = [{h: (float(fmt(v)) if isinstance(v, float) else v) for h, v in zip(header, r)} for r in rows]
        text = json.dumps({"meta": meta, "rows": body}, indent=2) + "\n"
    else:
        text = _table_csv(header, [[fmt(v) if isinstance(v, float) else v for v in r] for r in rows])
    _emit(text, run.out)


def _status(result) -> int:
    bad = result.shortfall > 0 or any("unconverged" in f for f in result.flags)
    if bad:
        log.warning("convergence shortfall: %d missing, flags %s", result.shortfall, result.flags)
    return EXIT_CONVERGENCE if bad else EXIT_OK


def cmd_eigs(args, spec: ProblemSpec, run: RunConfig) -> int:
    t0 = time.perf_counter()
    problem = assemble(spec, run)
    if spec.kind == "qwell":
        return _qwell(problem, run, t0)
    mode = choose_mode(spec, problem, run)
    result = find_eigenvalues(problem, run.count or DEFAULT_COUNT, mode=mode)
    write_eigen_result(result, problem, run, t0, mode=mode)
    return _status(result)


def _truncate(result, count):
    if count >= len(result):
        return replace(result, shortfall=max(0, count - len(result)))
    return replace(
        result,
        eigenvalues=result.eigenvalues[:count],
        omegas=result.omegas[:count],
        methods=result.methods[:count],
        residuals=result.residuals[:count],
        flags=result.flags[:count],
    )


def cmd_qwell(args, spec: ProblemSpec, run: RunConfig) -> int:
    t0 = time.perf_counter()
    return _qwell(assemble(spec, run), run, t0)


def _qwell(problem, run, t0):
    # all bound states unless a count was asked for
    result = quantum_well(problem)
    if run.count is not None:
        result = _truncate(result, run.count)
    write_eigen_result(result, problem, run, t0, mode="qwell")
    return _status(result)


def _constant(text, what):
    try:
        return parse_expression(str(text), variables=())(0.0)
    except ExpressionError as exc:
        raise ConfigError(f"{what}: {exc}") from None


def cmd_ivp(args, spec: ProblemSpec, run: RunConfig) -> int:
    t0 = time.perf_counter()
    lam = _constant(args.lam, "lam")
    y0 = _constant(args.y0, "y0")
    y1 = _constant(args.y1, "y1")
    if args.points < 2:
        raise ConfigError("points must be >= 2")
    problem = assemble(spec, run)
    lo, hi = spec.interval
    ts = np.linspace(0.0, hi - lo, args.points)
    ys, dys = ivp_solution(problem, lam, y0, y1, ts)
    rows = [[lo + t, y.real, y.imag, d.real, d.imag] for t, y, d in zip(ts, ys, dys)]
    _write_table(["x", "y_re", "y_im", "dy_re", "dy_im"], rows, run, _meta(problem, run, t0))
    return EXIT_OK


def cmd_kernel(args, spec: ProblemSpec, run: RunConfig) -> int:
    t0 = time.perf_counter()
    if args.grid < 1:
        raise ConfigError("grid must be >= 1")
    problem = assemble(spec, run)
    b = problem.b
    rows = []
    for i in range(args.grid + 1):
        x = b * i / args.grid
        for j in range(-i, i + 1):
            t = b * j / args.grid
            K = kernel_eval(problem.basis, x, t, args.which)
            rows.append([x, t, K.real, K.imag])
    _write_table(["x", "t", f"{args.which}_re", f"{args.which}_im"], rows, run, _meta(problem, run, t0))
    return EXIT_OK


def _parse_sweep(text):
    try:
        start, stop, step = (int(v) for v in text.split(":"))
    except ValueError:
        raise ConfigError(f"n-sweep must be start:stop:step, got {text!r}") from None
    if start < 1 or step < 1 or stop < start:
        raise ConfigError(f"bad n-sweep {text!r}")
    return list(range(start, stop + 1, step))


def cmd_diagnose(args, spec: ProblemSpec, run: RunConfig) -> int:
    t0 = time.perf_counter()
    sweep = _parse_sweep(args.n_sweep) if args.n_sweep else None
    if sweep is None and args.ratios_at is None:
        sweep = _parse_sweep(f"8:{run.N}:4")
    top = max(sweep) if sweep else run.N
    check = RunConfig(M=run.M, N=top)
    check.validate()
    # assemble once (which validates the problem) then reuse its particular solution
    problem = assemble(spec, RunConfig(M=run.M, N=min(top, run.N), K=run.K))
    ps = problem.basis.solution
    table = formal_powers(ps, top)
    meta = {"M": run.M, "h_re": ps.h.real, "h_im": ps.h.imag}
    if sweep:
        g1, g2 = goursat_targets(problem.q, ps.h)
        rows = []
        for N in sweep:
            try:
                k = fit_kernel(table, g1, g2, N)
                rows.append([N, k.eps1, k.eps2, min(k.rank)])
            except ConditioningError as exc:
                rows.append([N, float("nan"), float("nan"), exc.rank])
        meta["runtime_ms"] = round(1e3 * (time.perf_counter() - t0), 3)
        _write_table(["N", "eps1", "eps2", "rank"], rows, run, meta)
        return EXIT_OK
    lo, hi = spec.interval
    x = args.ratios_at - lo
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        rep = sanity_ratio(table, x)
    meta.update(x=args.ratios_at, flagged=rep.flagged, runtime_ms=round(1e3 * (time.perf_counter() - t0), 3))
    _write_table(["k", "ratio"], [[k, float(r)] for k, r in enumerate(rep.ratios)], run, meta)
    return EXIT_OK


COMMANDS = {
    "eigs": cmd_eigs,
    "qwell": cmd_qwell,
    "ivp": cmd_ivp,
    "kernel": cmd_kernel,
    "diagnose": cmd_diagnose,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        spec, run = _resolve(args)
        return COMMANDS[args.command](args, spec, run)
    except (ConfigError, ExpressionError, BoundaryConditionError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConstructionError, ConditioningError) as exc:
        print(f"construction error: {exc}", file=sys.stderr)
        return EXIT_CONSTRUCTION
    except TransmuteError as exc:
        print(f"convergence error: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE


if __name__ == "__main__":
    sys.exit(main())
