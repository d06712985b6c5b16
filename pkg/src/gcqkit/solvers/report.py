"""Error tables and observed convergence orders."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

__all__ = ["ErrorReport", "MeshMismatchError", "eoc_table", "max_error_report"]


class MeshMismatchError(ValueError):
    """The reference does not share the run's time nodes."""


@dataclass
class ErrorReport:
    """Per-step errors of one run and their maximum."""

    t: np.ndarray
    errors: np.ndarray
    max_error: float
    final_error: float
    extra: dict = field(default_factory=dict)


def _norm(values, norm):
    values = np.asarray(values)
    if values.ndim == 1:
        return np.abs(values)
    if norm is None:
        return np.max(np.abs(values.reshape(values.shape[0], -1)), axis=1)
    return np.asarray(norm(values))


def max_error_report(run, reference, norm: Callable | None = None, skip_initial=True) -> ErrorReport:
    """Compare a run's endpoint values with a reference.

    ``reference`` is either a callable ``exact(t)`` returning values
    shaped like ``run.u[n]`` (with time as the leading axis when given an
    array of times), or another run on a mesh that contains every node of
    ``run.mesh`` at even indices (a once-refined mesh). ``norm`` maps an
    array of grid functions to per-step norms; the default is the
    max-abs norm.
    """
    t = run.mesh.nodes
    if callable(reference):
        ref = np.asarray(reference(t), dtype=float)
        if ref.shape != run.u.shape:
            ref = np.stack([np.asarray(reference(tn), dtype=float) for tn in t])
    else:
        t_ref = reference.mesh.nodes
        if t_ref.size != 2 * (t.size - 1) + 1:
            raise MeshMismatchError("reference must have exactly twice as many steps")
        if not np.allclose(t_ref[::2], t, rtol=1e-13, atol=1e-15):
            raise MeshMismatchError("reference nodes do not contain the run's nodes")
        ref = reference.u[::2]
        if ref.shape != run.u.shape:
            raise MeshMismatchError("reference values have a different spatial shape")
    errs = _norm(run.u - ref, norm)
    start = 1 if skip_initial else 0
    return ErrorReport(
        t=t, errors=errs,
        max_error=float(np.max(errs[start:])), final_error=float(errs[-1]),
    )


def eoc_table(errors: Sequence[tuple]) -> list:
    """Rows ``(N, e, eoc)`` with ``eoc = log2(e_prev / e)``; the first eoc is ``None``."""
    rows = []
    prev = None
    for N, e in errors:
        N = int(N)
        e = float(e)
        if prev is None:
            rows.append((N, e, None))
        else:
            if N != 2 * prev[0]:
                raise ValueError(f"N must double between levels, got {prev[0]} -> {N}")
            if prev[1] == e:
                eoc = 0.0
            elif prev[1] <= 0 or e <= 0:
                eoc = math.nan
            else:
                eoc = math.log2(prev[1] / e)
            rows.append((N, e, eoc))
        prev = (N, e)
    return rows
