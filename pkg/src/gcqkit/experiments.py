"""Convergence studies driven by flat ``key = value`` config files.

A config names an experiment, a mesh family with a list of step counts
and the method parameters. Running it writes

* ``<out>_errors.csv``: one row per level with ``N, tau_max, max_err, eoc``;
* ``<out>_N<N>.csv``: the solution of each level;
* ``<out>_diagnostics.jsonl``: engine counters and timings per level.

Example::

    experiment = example1
    alpha = 0.5
    beta = 0.5
    tableau = radau2
    mesh = graded
    gamma = 3
    N = 16, 32, 64, 128, 256
"""

from __future__ import annotations

import csv
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .direct import default_rule, gcq_direct, sample_stages
from .fast import gcq_fast
from .kernels import PowerData, builtin_kernel, exact_convolution
from .mesh import Mesh, bisect_mesh, graded_mesh, two_singularity_mesh, uniform_mesh
from .solvers import (
    compact_laplacian,
    eoc_table,
    fode_example_data,
    max_error_report,
    solve_fode,
    solve_subdiffusion,
    solve_westervelt,
    subdiffusion_example_data,
    westervelt_operator,
)
from .tableau import make_tableau

__all__ = [
    "ExperimentConfig",
    "ExperimentResult",
    "parse_config",
    "load_config",
    "run_experiment",
    "format_float",
]

EXPERIMENTS = (
    "example1", "example2-ka", "example2-kb", "example3", "example4", "example5", "custom",
)
_KERNEL_OF = {"example1": "fracint", "example2-ka": "ka", "example2-kb": "kb"}
_FLOAT_KEYS = {
    "alpha", "beta", "t", "gamma", "tol", "sigma", "g1", "g2", "beta1", "beta2",
    "kappa", "fp_tol", "h",
}
_INT_KEYS = {"n0", "j", "dim", "mtilde", "ntilde", "seed"}


def format_float(value) -> str:
    """17 significant digits, empty for ``None``."""
    return "" if value is None else format(float(value), ".17g")


@dataclass
class ExperimentConfig:
    """Validated experiment description. See the module docstring for keys."""

    experiment: str
    N: list
    tableau: str = "radau2"
    mesh: str = "graded"
    params: dict = field(default_factory=dict)
    engine: str = "direct"
    tol: float = 1e-12
    out: str = "results/run"

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}")
        if not self.N:
            raise ValueError("the N list is empty")
        if any(b <= a for a, b in zip(self.N, self.N[1:])):
            raise ValueError("the N list must be strictly increasing")
        if any(n < 1 for n in self.N):
            raise ValueError("step counts must be positive")
        if self.engine not in ("direct", "fast"):
            raise ValueError(f"unknown engine {self.engine!r}")
        if self.mesh not in ("graded", "uniform", "twosing"):
            raise ValueError(f"unknown mesh family {self.mesh!r}")
        if not 1e-15 <= self.tol < 1:
            raise ValueError("tol must lie in [1e-15, 1)")
        make_tableau(self.tableau)
        if self.experiment == "custom" and "kernel" not in self.params:
            raise ValueError("custom experiments need kernel = <id>")
        if "kernel" in self.params:
            builtin_kernel(self.params["kernel"], self.params.get("alpha", 0.5))

    def build_mesh(self, N: int) -> Mesh:
        p = self.params
        T = p.get("t", 2.0 if self.experiment == "example5" else 1.0)
        if self.mesh == "uniform":
            return uniform_mesh(T, N)
        if self.mesh == "graded":
            return graded_mesh(T, N, p.get("gamma", 1.0))
        return two_singularity_mesh(T, N, p["sigma"], p["g1"], p["g2"])


def _convert(key: str, value: str):
    if key == "n":
        return [int(v) for v in value.replace(",", " ").split()]
    if key in _FLOAT_KEYS:
        return float(value)
    if key in _INT_KEYS:
        return int(value)
    return value


def parse_config(text: str) -> ExperimentConfig:
    """Parse config text: one ``key = value`` per line, ``#`` starts a comment."""
    raw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"line {lineno}: expected key = value")
        key = key.strip().lower().replace("-", "_")
        if key in raw:
            raise ValueError(f"line {lineno}: duplicate key {key!r}")
        raw[key] = _convert(key, value.strip())
    if "experiment" not in raw:
        raise ValueError("config needs experiment = <id>")
    top = {k: raw.pop(k) for k in ("experiment", "tableau", "mesh", "engine", "tol", "out") if k in raw}
    N = raw.pop("n", [])
    return ExperimentConfig(N=N, params=raw, **top)


def load_config(path) -> ExperimentConfig:
    cfg = parse_config(Path(path).read_text())
    if cfg.out == "results/run":
        cfg.out = str(Path("results") / Path(path).stem)
    return cfg


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    table: list
    files: list
    runs: dict


def _convolution_level(cfg: ExperimentConfig, N: int):
    p = cfg.params
    kernel = builtin_kernel(p.get("kernel", _KERNEL_OF.get(cfg.experiment)), p["alpha"])
    data = PowerData(p.get("beta", 0.0))
    mesh = cfg.build_mesh(N)
    tab = make_tableau(cfg.tableau)
    f = sample_stages(data, mesh, tab)
    options = {k: p[k] for k in ("h", "mtilde", "ntilde") if k in p}
    if cfg.engine == "fast":
        res = gcq_fast(
            kernel, mesh, tab, f, n0=p.get("n0"), tol=cfg.tol,
            history_rule=p.get("history_rule"), **options,
        )
        diag = {k: v for k, v in res.diagnostics.items() if k != "log"}
    else:
        rule = default_rule(
            kernel, (mesh.tau_min, mesh.T), cfg.tol, p.get("history_rule"), **options
        )
        res = gcq_direct(kernel, mesh, tab, f, rule=rule, tol=cfg.tol)
        diag = dict(res.diagnostics)
    t = mesh.nodes[1:]
    exact = exact_convolution(kernel, data, t)
    err = np.abs(res.u - exact)
    rows = [
        (n, t[n - 1], res.u[n - 1], exact[n - 1], err[n - 1]) for n in range(1, N + 1)
    ]
    header = ("n", "t_n", "u_n", "exact", "abs_error")
    return mesh, float(err.max()), header, rows, diag


def _fode_level(cfg, N):
    p = cfg.params
    mesh = cfg.build_mesh(N)
    source, exact = fode_example_data(p["alpha"], p["beta1"], p["beta2"], p["sigma"])
    run = solve_fode(p["alpha"], source, 1.0, mesh, make_tableau(cfg.tableau), cfg.tol, p.get("n0"))
    rep = max_error_report(run, exact)
    ex = exact(mesh.nodes)
    rows = [(n, mesh.nodes[n], run.u[n], ex[n], rep.errors[n]) for n in range(N + 1)]
    return mesh, rep.max_error, ("n", "t_n", "u_n", "exact", "abs_error"), rows, run.diagnostics


def _subdiffusion_level(cfg, N):
    p = cfg.params
    alpha, dim = p["alpha"], p.get("dim", 2)
    op = compact_laplacian(dim, p.get("j", 32), (-1.0, 1.0))
    mesh = cfg.build_mesh(N)
    f, exact = subdiffusion_example_data(alpha, op)
    run = solve_subdiffusion(alpha, op, f, 0.0, mesh, make_tableau(cfg.tableau), cfg.tol, p.get("n0"))
    rep = max_error_report(run, exact, norm=op.norm)
    norms = op.norm(run.u)
    rows = [(n, mesh.nodes[n], norms[n], rep.errors[n]) for n in range(N + 1)]
    return mesh, rep.max_error, ("n", "t_n", "norm_u", "l2_error"), rows, run.diagnostics


def _westervelt_level(cfg, N):
    p = cfg.params
    op = westervelt_operator(p.get("j", 64))
    tab = make_tableau(cfg.tableau)
    mesh = cfg.build_mesh(N)
    fine = cfg.build_mesh(2 * N) if cfg.mesh != "twosing" else bisect_mesh(mesh)
    kw = dict(fp_tol=p.get("fp_tol", 1e-8), tol=cfg.tol, n0=p.get("n0"))
    run = solve_westervelt(p["alpha"], p.get("kappa", 0.0), op, mesh, tab, **kw)
    ref = solve_westervelt(p["alpha"], p.get("kappa", 0.0), op, fine, tab, **kw)
    rep = max_error_report(run, ref, norm=op.norm)
    norms = op.norm(run.u)
    rows = [(n, mesh.nodes[n], norms[n], rep.errors[n]) for n in range(N + 1)]
    diag = dict(run.diagnostics)
    diag["fp_iterations_max"] = max(diag.pop("fp_iterations"))
    return mesh, rep.max_error, ("n", "t_n", "norm_u", "error_vs_refined"), rows, diag


_LEVEL = {
    "example1": _convolution_level,
    "example2-ka": _convolution_level,
    "example2-kb": _convolution_level,
    "custom": _convolution_level,
    "example3": _fode_level,
    "example4": _subdiffusion_level,
    "example5": _westervelt_level,
}


def _write_csv(path: Path, header, rows):
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([v if isinstance(v, (int, np.integer)) else format_float(v) for v in row])


def _jsonable(value):
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.generic):
        return value.item()
    return value


def thread_limit() -> int:
    """Worker cap from ``GCQ_THREADS`` (default 1)."""
    try:
        return max(1, int(os.environ.get("GCQ_THREADS", "1")))
    except ValueError:
        raise ValueError("GCQ_THREADS must be an integer") from None


def run_experiment(cfg: ExperimentConfig, write: bool = True) -> ExperimentResult:
    """Run every level of the sweep and write the result files.

    Levels are independent and may run concurrently (``GCQ_THREADS``);
    results are collected in sweep order so outputs do not depend on
    scheduling.
    """
    level = _LEVEL[cfg.experiment]

    def one(N):
        try:
            return level(cfg, N)
        except Exception as exc:
            raise RuntimeError(f"{cfg.experiment} failed at N={N}: {exc}") from exc

    with ThreadPoolExecutor(max_workers=thread_limit()) as pool:
        outcomes = list(pool.map(one, cfg.N))

    errors = [(N, out[1]) for N, out in zip(cfg.N, outcomes)]
    doubling = all(b == 2 * a for a, b in zip(cfg.N, cfg.N[1:]))
    if doubling:
        eocs = [row[2] for row in eoc_table(errors)]
    else:
        eocs = [None] + [
            float(np.log(e0 / e1) / np.log(n1 / n0))
            for (n0, e0), (n1, e1) in zip(errors, errors[1:])
        ]
    table = [
        (N, out[0].tau_max, err, eoc)
        for (N, err), out, eoc in zip(errors, outcomes, eocs)
    ]
    files = []
    runs = {N: out for N, out in zip(cfg.N, outcomes)}
    if write:
        prefix = Path(cfg.out)
        prefix.parent.mkdir(parents=True, exist_ok=True)
        err_path = prefix.with_name(prefix.name + "_errors.csv")
        _write_csv(err_path, ("N", "tau_max", "max_err", "eoc"), table)
        files.append(err_path)
        diag_path = prefix.with_name(prefix.name + "_diagnostics.jsonl")
        with diag_path.open("w") as fh:
            for N, out in zip(cfg.N, outcomes):
                fh.write(json.dumps(_jsonable({"N": N, **out[4]}), sort_keys=True) + "\n")
        files.append(diag_path)
        for N, out in zip(cfg.N, outcomes):
            path = prefix.with_name(f"{prefix.name}_N{N}.csv")
            _write_csv(path, out[2], out[3])
            files.append(path)
    return ExperimentResult(cfg, table, files, runs)
