"""Time-fractional problems ``D^alpha u + A u = f`` with ``u(0) = u0``.

The Caputo derivative is written as the order ``1 - alpha`` integral of
the discrete first derivative. The newest weight of that integral is
``(tau A)^{1-alpha}``, so each step solves

    ((tau A)^{-alpha} + A_op) V_n
        = F_n - A_op u0 1 + (tau A)^{-alpha} v_{n-1} 1 - H_n

for ``v = u - u0``, where ``H_n`` is the sum over earlier steps,
supplied by the fast engine. Stage coupling is removed by diagonalizing
the Runge-Kutta matrix.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from math import gamma
from typing import Callable

import numpy as np

from ..fast import FastConvolution
from ..kernels import builtin_kernel
from ..mesh import Mesh
from ..tableau import ButcherTableau
from .derivatives import discrete_derivative
from .spatial import SpatialOperator

__all__ = [
    "SolverRun",
    "solve_fode",
    "solve_subdiffusion",
    "fode_example_data",
    "subdiffusion_example_data",
]


@dataclass
class SolverRun:
    """Endpoint values ``u[n]`` at ``t_n`` (``u[0]`` is the initial value) and stage blocks."""

    mesh: Mesh
    tab: ButcherTableau
    params: dict
    u: np.ndarray
    stages: np.ndarray
    diagnostics: dict = field(default_factory=dict)

    @property
    def t(self) -> np.ndarray:
        return self.mesh.nodes


def _march(
    alpha: float,
    mesh: Mesh,
    tab: ButcherTableau,
    source: Callable,
    u0: np.ndarray,
    op_apply: Callable,
    shifted_solve: Callable,
    tol: float,
    n0: int | None,
):
    """Shared stepping loop; grid functions are flattened to length ``m``."""
    s = tab.s
    u0 = np.asarray(u0, dtype=float).ravel()
    m = u0.size
    V_mat, Vi = tab.eigvecs, tab.eigvecs_inv
    lam = tab.eigvals
    ones = np.ones(s)
    engine = FastConvolution(
        builtin_kernel("fracint_dual", alpha), tab, n0=n0, tol=tol, mesh=mesh
    )
    a_u0 = np.asarray(op_apply(u0), dtype=float).ravel()
    stage_t = mesh.stage_times(tab.c)

    v_prev = np.zeros(m)
    u = np.empty((mesh.N + 1, m))
    u[0] = u0
    stages = np.empty((mesh.N, s, m))
    start = time.perf_counter_ns()
    for n, tau in enumerate(mesh.steps):
        engine.begin_step(tau)
        H = engine.pending(m)
        F = np.asarray(source(stage_t[n]), dtype=float).reshape(s, m)
        c = (tau * lam) ** (-alpha)
        # (tau A)^{-alpha} (1 v_prev), assembled in the eigenbasis
        mem = (V_mat @ (c[:, None] * (Vi @ np.outer(ones, v_prev)))).real
        rhs = F - a_u0[None] + mem - H
        rhs_hat = Vi @ rhs
        sol_hat = shifted_solve(c, rhs_hat)
        V = (V_mat @ sol_hat).real
        engine.commit(discrete_derivative(tab, tau, V, v_prev))
        stages[n] = V + u0[None]
        v_prev = V[-1]
        u[n + 1] = v_prev + u0
    diag = engine.node_census()
    diag["wall_ns"] = time.perf_counter_ns() - start
    return u, stages, diag


def solve_fode(
    alpha: float,
    f: Callable,
    u0: float,
    mesh: Mesh,
    tab: ButcherTableau,
    tol: float = 1e-12,
    n0: int | None = None,
    rate: float = 1.0,
) -> SolverRun:
    """Solve ``D^alpha u + rate u = f`` with ``u(0) = u0``."""
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")

    def shifted_solve(c, rhs_hat):
        denom = c + rate
        if np.any(np.abs(denom) < 1e-14):
            raise ZeroDivisionError("singular stage system")
        return rhs_hat / denom[:, None]

    u, stages, diag = _march(
        alpha, mesh, tab, lambda t: f(t), np.array([u0]),
        lambda v: rate * v, shifted_solve, tol, n0,
    )
    return SolverRun(
        mesh, tab, {"alpha": alpha, "u0": u0, "rate": rate},
        u[:, 0], stages[:, :, 0], diag,
    )


def fode_example_data(alpha: float, beta1: float, beta2: float, sigma: float):
    """Source and exact solution with ``u = 1 + t^b1 + H(t - sigma)(t - sigma)^b2``."""
    g1 = gamma(beta1 + 1) / gamma(beta1 - alpha + 1)
    g2 = gamma(beta2 + 1) / gamma(beta2 - alpha + 1)

    def exact(t):
        t = np.asarray(t, dtype=float)
        late = np.where(t > sigma, np.abs(t - sigma) ** beta2, 0.0)
        return 1.0 + t**beta1 + late

    def source(t):
        t = np.asarray(t, dtype=float)
        late = np.where(t > sigma, np.abs(t - sigma) ** (beta2 - alpha), 0.0)
        return exact(t) + g1 * t ** (beta1 - alpha) + g2 * late

    return source, exact


def solve_subdiffusion(
    alpha: float,
    op: SpatialOperator,
    f: Callable,
    u0,
    mesh: Mesh,
    tab: ButcherTableau,
    tol: float = 1e-12,
    n0: int | None = None,
) -> SolverRun:
    """Solve ``D^alpha u - Laplace u = f`` with homogeneous Dirichlet data.

    ``f(t, *coords)`` receives stage times shaped ``(s, 1, ..)`` and the
    grid coordinates, and returns values broadcast to ``(s, *grid)``.
    """
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    coords = op.mesh()
    shape = op.shape
    s = tab.s

    def source(ts):
        t = np.asarray(ts).reshape((s,) + (1,) * op.dim)
        return np.broadcast_to(f(t, *coords), (s,) + shape)

    def shifted_solve(c, rhs_hat):
        grid = rhs_hat.reshape((s,) + shape)
        return op.solve_shifted(c, grid).reshape(s, -1)

    u0 = np.broadcast_to(np.asarray(u0, dtype=float), shape)
    u, stages, diag = _march(
        alpha, mesh, tab, source, u0,
        lambda v: op.apply(v.reshape(shape)), shifted_solve, tol, n0,
    )
    return SolverRun(
        mesh, tab, {"alpha": alpha, "J": op.J, "dim": op.dim},
        u.reshape((-1,) + shape), stages.reshape((mesh.N, s) + shape), diag,
    )


def subdiffusion_example_data(alpha: float, op: SpatialOperator):
    """Source and exact solution for ``u = t^alpha prod cos(pi x_k / 2)`` on ``(-1, 1)^d``.

    ``exact(t)`` accepts an array of times and returns grid functions
    stacked along the first axis.
    """
    ev = op.dim * np.pi**2 / 4
    g = gamma(alpha + 1)
    profile = np.prod([np.cos(np.pi * c / 2) for c in op.mesh()], axis=0)

    def source(t, *coords):
        shape = np.prod([np.cos(np.pi * c / 2) for c in coords], axis=0)
        return (g + ev * t**alpha) * shape

    def exact(t):
        t = np.asarray(t, dtype=float)
        return t.reshape(t.shape + (1,) * op.dim) ** alpha * profile

    return source, exact
