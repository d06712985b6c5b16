"""Command line entry point ``gcq-kit``."""

from __future__ import annotations

import argparse
import json
import re
import sys
from pathlib import Path

import numpy as np

from .direct import default_rule, gcq_direct, sample_stages
from .experiments import _jsonable, _write_csv, format_float, load_config, run_experiment
from .fast import gcq_fast
from .kernels import PowerData, exact_convolution, parse_kernel
from .mesh import bisect_mesh, parse_mesh
from .solvers import (
    compact_laplacian,
    fode_example_data,
    max_error_report,
    solve_fode,
    solve_subdiffusion,
    solve_westervelt,
    subdiffusion_example_data,
    westervelt_operator,
)
from .tableau import TABLEAU_IDS, make_tableau

_POWER = re.compile(
    r"^\s*(?:(?P<c>[-+]?[\d.]+(?:e[-+]?\d+)?)\s*\*\s*)?t\s*(?:\^\s*(?P<b>[-+]?[\d.]+(?:e[-+]?\d+)?))?\s*$",
    re.IGNORECASE,
)
_FUNCS = {"sin(t)": np.sin, "cos(t)": np.cos, "exp(-t)": lambda t: np.exp(-t)}


def parse_data(text: str):
    """Stage data from strings like ``t^0.5``, ``2*t^1.5``, ``1`` or ``sin(t)``.

    Returns ``(callable, PowerData or None)``; the second item is set when
    a closed-form convolution exists.
    """
    key = text.strip().lower().replace(" ", "")
    if key in _FUNCS:
        return _FUNCS[key], None
    try:
        const = float(key)
    except ValueError:
        pass
    else:
        data = PowerData(0.0, const)
        return data, data
    m = _POWER.match(key)
    if not m:
        raise ValueError(f"cannot parse data {text!r}; use c*t^b, a constant or sin(t)")
    data = PowerData(float(m["b"] or 1.0), float(m["c"] or 1.0))
    return data, data


def _write_jsonl(path: Path, records):
    with path.open("w") as fh:
        for rec in records:
            fh.write(json.dumps(_jsonable(rec), sort_keys=True) + "\n")


def _prefix_paths(prefix: str):
    p = Path(prefix)
    p.parent.mkdir(parents=True, exist_ok=True)
    return (
        p.with_name(p.name + "_solution.csv"),
        p.with_name(p.name + "_errors.csv"),
        p.with_name(p.name + "_diagnostics.jsonl"),
    )


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    if args.out:
        cfg.out = args.out
    result = run_experiment(cfg)
    for N, tau, err, eoc in result.table:
        print(f"N={N:<6d} tau_max={tau:.3e} max_err={err:.3e} eoc={'' if eoc is None else f'{eoc:.3f}'}")
    for path in result.files:
        print(f"wrote {path}")
    return 0


def cmd_convolve(args) -> int:
    kernel = parse_kernel(args.kernel)
    mesh = parse_mesh(args.mesh)
    tab = make_tableau(args.tableau)
    func, power = parse_data(args.data)
    f = sample_stages(func, mesh, tab)
    options = {"h": args.h, "mtilde": args.mtilde, "ntilde": args.ntilde}
    if args.engine == "fast":
        res = gcq_fast(
            kernel, mesh, tab, f, n0=args.n0, tol=args.tol,
            history_rule=args.history_rule, **options,
        )
    else:
        rule = default_rule(kernel, (mesh.tau_min, mesh.T), args.tol, args.history_rule, **options)
        res = gcq_direct(kernel, mesh, tab, f, rule=rule, tol=args.tol)
    t = mesh.nodes[1:]
    exact = exact_convolution(kernel, power, t) if power is not None else None
    rows = []
    for n in range(mesh.N):
        if exact is None:
            rows.append((n + 1, t[n], res.u[n], None, None))
        else:
            rows.append((n + 1, t[n], res.u[n], exact[n], abs(res.u[n] - exact[n])))
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    _write_csv(out, ("n", "t_n", "u_n", "exact", "abs_error"), rows)
    print(f"wrote {out}")
    if args.engine == "fast":
        sidecar = out.with_suffix(".jsonl")
        _write_jsonl(sidecar, res.diagnostics["log"])
        print(f"wrote {sidecar}")
    if exact is not None:
        print(f"max abs error {format_float(np.max(np.abs(res.u - exact)))}")
    return 0


def _emit_solver(args, run, rep, values, value_name):
    sol, err, diag = _prefix_paths(args.out)
    rows = [(n, run.t[n], values[n]) + (() if rep is None else (rep.errors[n],))
            for n in range(run.mesh.N + 1)]
    header = ("n", "t_n", value_name) + (() if rep is None else ("error",))
    _write_csv(sol, header, rows)
    files = [sol]
    if rep is not None:
        _write_csv(err, ("N", "tau_max", "max_err", "eoc"),
                   [(run.mesh.N, run.mesh.tau_max, rep.max_error, None)])
        files.append(err)
        print(f"max error {format_float(rep.max_error)}")
    diagnostics = dict(run.diagnostics)
    diagnostics.pop("log", None)
    _write_jsonl(diag, [{"N": run.mesh.N, **run.params, **diagnostics}])
    files.append(diag)
    for path in files:
        print(f"wrote {path}")
    return 0


def cmd_fode(args) -> int:
    mesh = parse_mesh(args.mesh)
    source, exact = fode_example_data(args.alpha, args.beta1, args.beta2, args.sigma)
    run = solve_fode(args.alpha, source, 1.0, mesh, make_tableau(args.tableau), args.tol, args.n0)
    return _emit_solver(args, run, max_error_report(run, exact), run.u, "u_n")


def cmd_subdiffusion(args) -> int:
    alpha, dim = args.alpha, args.dim
    op = compact_laplacian(dim, args.J, (-1.0, 1.0))
    mesh = parse_mesh(args.mesh)
    f, exact = subdiffusion_example_data(alpha, op)
    run = solve_subdiffusion(alpha, op, f, 0.0, mesh, make_tableau(args.tableau), args.tol, args.n0)
    rep = max_error_report(run, exact, norm=op.norm)
    return _emit_solver(args, run, rep, op.norm(run.u), "norm_u")


def cmd_westervelt(args) -> int:
    op = westervelt_operator(args.J)
    mesh = parse_mesh(args.mesh)
    tab = make_tableau(args.tableau)
    kw = dict(fp_tol=args.fp_tol, tol=args.tol, n0=args.n0)
    run = solve_westervelt(args.alpha, args.kappa, op, mesh, tab, **kw)
    rep = None
    if args.reference:
        ref = solve_westervelt(args.alpha, args.kappa, op, bisect_mesh(mesh), tab, **kw)
        rep = max_error_report(run, ref, norm=op.norm)
    run.diagnostics["fp_iterations_max"] = max(run.diagnostics.pop("fp_iterations"))
    return _emit_solver(args, run, rep, op.norm(run.u), "norm_u")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gcq-kit", description=__doc__)
    parser.add_argument("--seed", type=int, default=None, help="seed numpy's global generator")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a convergence study from a config file")
    p.add_argument("config")
    p.add_argument("--out", default=None, help="output prefix (overrides the config)")
    p.set_defaults(func=cmd_run)

    def engine_flags(p):
        p.add_argument("--tableau", default="radau2", choices=TABLEAU_IDS)
        p.add_argument("--n0", type=int, default=None)
        p.add_argument("--tol", type=float, default=1e-12)

    p = sub.add_parser("convolve", help="discrete convolution of one data function")
    p.add_argument("--kernel", required=True, help="e.g. fracint:alpha=0.5")
    p.add_argument("--mesh", required=True, help="e.g. graded:T=1,N=128,gamma=6")
    p.add_argument("--data", default="1", help="c*t^b, a constant, sin(t), cos(t) or exp(-t)")
    p.add_argument("--engine", choices=("direct", "fast"), default="direct")
    p.add_argument("--history-rule", choices=("gauss", "trapezoid"), default=None)
    p.add_argument("--h", type=float, default=3 / 40)
    p.add_argument("--mtilde", type=int, default=400)
    p.add_argument("--ntilde", type=int, default=400)
    p.add_argument("--out", default="result.csv")
    engine_flags(p)
    p.set_defaults(func=cmd_convolve)

    p = sub.add_parser("fode", help="fractional ODE with two singular points")
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--beta1", type=float, default=0.5)
    p.add_argument("--beta2", type=float, default=0.9)
    p.add_argument("--sigma", type=float, default=0.28)
    p.add_argument("--mesh", default="twosing:T=1,N=128,sigma=0.28,g1=6,g2=3.3333333333333335")
    p.add_argument("--out", default="results/fode")
    engine_flags(p)
    p.set_defaults(func=cmd_fode)

    p = sub.add_parser("subdiffusion", help="subdiffusion on (-1, 1)^dim")
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--mesh", default="graded:T=1,N=32,gamma=6")
    p.add_argument("--J", type=int, default=32)
    p.add_argument("--dim", type=int, choices=(1, 2), default=2)
    p.add_argument("--out", default="results/subdiffusion")
    engine_flags(p)
    p.set_defaults(func=cmd_subdiffusion)

    p = sub.add_parser("westervelt", help="damped Westervelt equation on (0, 2)")
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--kappa", type=float, default=0.09)
    p.add_argument("--mesh", default="graded:T=2,N=32,gamma=3")
    p.add_argument("--J", type=int, default=64)
    p.add_argument("--fp-tol", type=float, default=1e-8)
    p.add_argument("--no-reference", dest="reference", action="store_false",
                   help="skip the refined-mesh error estimate")
    p.add_argument("--out", default="results/westervelt")
    engine_flags(p)
    p.set_defaults(func=cmd_westervelt)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.seed is not None:
        np.random.seed(args.seed)
    try:
        return args.func(args)
    except (ValueError, RuntimeError, ArithmeticError) as exc:
        print(f"gcq-kit: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
