"""Damped Westervelt equation in 1-d.

Discrete scheme, with ``L`` the compact approximation of ``-d^2/dx^2``,
``D1 = [dU]_n`` and ``D2 = [d^2 U]_n``:

    (1 - 2 kappa U_n) D2 + L U_n + [K(d)(d L U)]_n = 2 kappa D1^2 + F_n

where ``K(z) = (z + 1)^-alpha`` and ``d`` is the Runge-Kutta discrete
derivative. The grid is ``x_j = 2 j / J`` on ``(0, 2)`` with ``U_0 = 0``
and initial velocity ``sin(pi x)``. Each step runs a fixed-point
iteration that freezes ``2 kappa (U D2 + D1^2)``; the remaining linear
system decouples in the eigenbasis of the Runge-Kutta matrix.
"""

from __future__ import annotations

import time
from typing import Callable

import numpy as np

from ..fast import FastConvolution
from ..kernels import builtin_kernel
from ..mesh import Mesh
from ..tableau import ButcherTableau
from .derivatives import discrete_derivative
from .fractional import SolverRun
from .spatial import SpatialOperator, compact_laplacian

__all__ = ["FixedPointError", "solve_westervelt", "westervelt_source", "westervelt_operator"]


class FixedPointError(RuntimeError):
    """The per-step fixed-point iteration did not converge."""


def westervelt_operator(J: int = 64) -> SpatialOperator:
    """Compact operator on the grid ``x_j = 2 j / J``."""
    return compact_laplacian(1, J, (0.0, 2.0))


def westervelt_source(t, x):
    """``(1 + log t) sin(pi x)``."""
    return (1.0 + np.log(t)) * np.sin(np.pi * x)


def solve_westervelt(
    alpha: float,
    kappa: float,
    op: SpatialOperator,
    mesh: Mesh,
    tab: ButcherTableau,
    fp_tol: float = 1e-8,
    tol: float = 1e-12,
    n0: int | None = None,
    source: Callable | None = westervelt_source,
    velocity0=None,
    max_iter: int = 200,
) -> SolverRun:
    """March the damped Westervelt scheme over ``mesh``.

    Parameters
    ----------
    alpha, kappa : float
        Damping exponent and nonlinearity strength.
    op : SpatialOperator
        1-d compact operator; see :func:`westervelt_operator`.
    fp_tol : float
        Stop the fixed-point iteration once successive iterates differ
        by less than this in the max norm.
    source : callable or None
        ``source(t, x)`` at stage times; ``None`` means zero forcing.
    velocity0 : array, optional
        Initial velocity; defaults to ``sin(pi x)``.
    """
    if op.dim != 1:
        raise ValueError("the Westervelt solver is 1-d")
    if tab.c[0] <= 0 and source is not None:
        raise ValueError("the source is singular at t = 0; use a tableau with c_1 > 0")
    if fp_tol <= 0:
        raise ValueError("fp_tol must be positive")
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")

    s = tab.s
    x = op.grid[0]
    m = x.size
    V_mat, Vi = tab.eigvecs, tab.eigvecs_inv
    lam = tab.eigvals
    kernel = builtin_kernel("kb", alpha)
    engine = FastConvolution(kernel, tab, n0=n0, tol=tol, mesh=mesh)
    stage_t = mesh.stage_times(tab.c)

    u_prev = np.zeros(m)
    d_prev = np.sin(np.pi * x) if velocity0 is None else np.asarray(velocity0, float)
    u = np.empty((mesh.N + 1, m))
    u[0] = u_prev
    stages = np.empty((mesh.N, s, m))
    iterations = []
    start = time.perf_counter_ns()
    ones = np.ones(s)
    for n, tau in enumerate(mesh.steps):
        beta = 1.0 / (tau * lam)  # eigenvalues of (tau A)^{-1}
        k_diag = kernel.K(beta)  # eigenvalues of the newest damping weight
        engine.begin_step(tau)
        H = engine.pending(m)
        F = np.zeros((s, m))
        if source is not None:
            F = source(stage_t[n][:, None], x[None, :])

        # parts of the right-hand side fixed during the iteration, eigenbasis
        one_hat = Vi @ ones
        fixed_hat = (
            (beta**2 * one_hat)[:, None] * u_prev[None]
            + (beta * one_hat)[:, None] * d_prev[None]
            + (k_diag * beta * one_hat)[:, None] * op.apply(u_prev)[None]
        )
        scale = 1.0 + k_diag * beta
        U = np.outer(ones, u_prev)
        for it in range(1, max_iter + 1):
            D1 = discrete_derivative(tab, tau, U, u_prev)
            D2 = discrete_derivative(tab, tau, D1, d_prev)
            frozen = 2 * kappa * (U * D2 + D1**2)
            rhs_hat = Vi @ (F + frozen - H) + fixed_hat
            sol_hat = op.solve_shifted(beta**2 / scale, rhs_hat / scale[:, None])
            U_new = (V_mat @ sol_hat).real
            if not np.all(np.isfinite(U_new)):
                raise FixedPointError(f"non-finite iterate at step {n + 1}")
            if np.any(1.0 - 2.0 * kappa * U_new <= 0):
                raise FloatingPointError(
                    f"degenerate coefficient 1 - 2 kappa u <= 0 at step {n + 1}"
                )
            delta = np.max(np.abs(U_new - U))
            U = U_new
            if delta < fp_tol:
                break
        else:
            raise FixedPointError(
                f"no convergence at step {n + 1} after {max_iter} iterations"
            )
        iterations.append(it)
        D1 = discrete_derivative(tab, tau, U, u_prev)
        engine.commit(op.apply(D1))
        stages[n] = U
        u_prev = U[-1]
        d_prev = D1[-1]
        u[n + 1] = u_prev

    diag = engine.node_census()
    diag["fp_iterations"] = iterations
    diag["wall_ns"] = time.perf_counter_ns() - start
    return SolverRun(
        mesh, tab, {"alpha": alpha, "kappa": kappa, "J": op.J}, u, stages, diag
    )
