"""Reference engines: full real-axis recursion and explicit weight matrices.

These evaluate the quadrature definitionally, with one small linear solve
per quadrature node and step. They are slow but simple and serve as the
oracle for the fast engine.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .kernels import Kernel
from .mesh import Mesh
from .quadrature import (
    ContourRule,
    RealAxisRule,
    build_history_rule,
    build_log_trapezoid_rule,
)
from .tableau import ButcherTableau

__all__ = [
    "ConvolutionResult",
    "sample_stages",
    "default_rule",
    "gcq_direct",
    "gcq_weights",
    "gcq_weight_matrix",
    "contour_weights",
]


@dataclass
class ConvolutionResult:
    """Endpoint values ``u[n-1] = u_n`` and stage vectors ``U[n-1] = U_n``."""

    u: np.ndarray
    U: np.ndarray
    diagnostics: dict = field(default_factory=dict)


def sample_stages(f, mesh: Mesh, tab: ButcherTableau) -> np.ndarray:
    """Stage samples ``f(t_{n-1} + c_i tau_n)``, shape ``(N, s)`` or ``(N, s, m)``."""
    return np.asarray(f(mesh.stage_times(tab.c)), dtype=float)


def default_rule(
    kernel: Kernel,
    t_span,
    tol: float,
    kind: str | None = None,
    h: float = 3 / 40,
    mtilde: int = 400,
    ntilde: int = 400,
) -> RealAxisRule:
    """History rule for a kernel: composite Gauss unless the kernel asks for trapezoid."""
    kind = kind or kernel.rule
    if kind == "trapezoid":
        return build_log_trapezoid_rule(kernel.order, h, mtilde, ntilde)
    if kind == "gauss":
        return build_history_rule(kernel.alpha, t_span, tol)
    raise ValueError(f"unknown history rule {kind!r}")


def _as_matrix_data(f: np.ndarray, s: int):
    f = np.asarray(f, dtype=float)
    if f.ndim < 2 or f.shape[1] != s:
        raise ValueError(f"stage samples must have shape (N, {s}[, m])")
    vector = f.ndim == 3
    return (f if vector else f[:, :, None]), vector


def gcq_direct(
    kernel: Kernel,
    mesh: Mesh,
    tab: ButcherTableau,
    f: np.ndarray,
    rule: RealAxisRule | None = None,
    tol: float = 1e-12,
    record_history: bool = False,
) -> ConvolutionResult:
    """Run the stage recursion at every quadrature node.

    At node ``xi = x + shift`` the stage vector obeys
    ``(I + tau_n xi A) Y_n = 1 y_{n-1} + tau_n A f_n`` and
    ``U_n = sum_l w_l G(x_l) Y_n(x_l)``.
    """
    s = tab.s
    data, vector = _as_matrix_data(f, s)
    N = mesh.N
    if data.shape[0] != N:
        raise ValueError("need one stage sample block per step")
    if rule is None:
        rule = default_rule(kernel, (mesh.tau_min, mesh.T), tol)
    if rule.kind == "gauss" and abs(rule.alpha - kernel.alpha) > 1e-14:
        raise ValueError("rule was built for a different singularity exponent")

    start = time.perf_counter_ns()
    x = rule.nodes
    xi = x + kernel.shift
    gw = rule.weights * kernel.G(x)
    A = tab.A
    eye = np.eye(s)
    m = data.shape[2]
    y = np.zeros((len(x), m))
    U = np.empty((N, s, m))
    trace = [] if record_history else None
    for n, tau in enumerate(mesh.steps):
        lhs = eye[None] + tau * xi[:, None, None] * A[None]
        rhs = y[:, None, :] + tau * (A @ data[n])[None]
        Y = np.linalg.solve(lhs, rhs)
        y = Y[:, -1, :]
        U[n] = np.einsum("l,lim->im", gw, Y)
        if trace is not None:
            trace.append(y.copy())
    u = U[:, -1, :]
    if not vector:
        U, u = U[:, :, 0], u[:, 0]
    diag = {
        "nq_his": len(x),
        "rule": rule.kind,
        "wall_ns": time.perf_counter_ns() - start,
    }
    if trace is not None:
        diag["y_history"] = np.array(trace)
    return ConvolutionResult(u=u, U=U, diagnostics=diag)


def _node_weight_products(kernel, mesh, tab, rule, j):
    """Per-node factors for ``W_{n,j}``, ``n = j..N``; shape ``(N - j + 1, L, s, s)``."""
    s = tab.s
    tau = mesh.steps
    xi = rule.nodes + kernel.shift
    A = tab.A
    eye = np.eye(s)
    tj = tau[j - 1]
    lhs = eye[None] + tj * xi[:, None, None] * A[None]
    M = np.linalg.solve(lhs, np.broadcast_to(tj * A, lhs.shape))
    out = [M]
    for n in range(j + 1, mesh.N + 1):
        lhs = eye[None] + tau[n - 1] * xi[:, None, None] * A[None]
        r = np.linalg.solve(lhs, np.ones(lhs.shape[:-1] + (1,)))[..., 0]
        # rank-one step: R(-tau x) e_s^T M
        M = r[:, :, None] * M[:, -1, None, :]
        out.append(M)
    return np.array(out)


def gcq_weights(
    kernel: Kernel, mesh: Mesh, tab: ButcherTableau, rule: RealAxisRule, n: int, j: int
) -> np.ndarray:
    """Weight ``W_{n,j}`` from the real-axis representation (1-based indices)."""
    if not 1 <= j <= n <= mesh.N:
        raise IndexError("need 1 <= j <= n <= N")
    gw = rule.weights * kernel.G(rule.nodes)
    P = _node_weight_products(kernel, mesh, tab, rule, j)[n - j]
    return np.einsum("l,lab->ab", gw, P)


def gcq_weight_matrix(
    kernel: Kernel, mesh: Mesh, tab: ButcherTableau, rule: RealAxisRule
) -> np.ndarray:
    """All weights, ``W[n-1, j-1] = W_{n,j}`` and zero for ``j > n``."""
    N, s = mesh.N, tab.s
    gw = rule.weights * kernel.G(rule.nodes)
    W = np.zeros((N, N, s, s))
    for j in range(1, N + 1):
        P = _node_weight_products(kernel, mesh, tab, rule, j)
        W[j - 1 :, j - 1] = np.einsum("l,klab->kab", gw, P)
    return W


def contour_weights(
    kernel: Kernel,
    mesh: Mesh,
    tab: ButcherTableau,
    n: int,
    j: int,
    contour: ContourRule,
) -> np.ndarray:
    """Weight ``W_{n,j}`` from the contour representation.

    ``W = -(tau_j / 2 pi i) \\oint K(z) prod_l [R(tau_l z) e_s^T] A (I - tau_j z A)^{-1} dz``
    with the contour traversed counterclockwise around the poles
    ``1 / (tau lambda_i)`` of steps ``j..n``.
    """
    if not 1 <= j <= n <= mesh.N:
        raise IndexError("need 1 <= j <= n <= N")
    if not 0 < kernel.alpha <= 1:
        raise ValueError("transfer function must decay like |z|^-alpha with alpha > 0")
    tau = mesh.steps
    poles = np.concatenate([1.0 / (tau[k - 1] * tab.eigvals) for k in range(j, n + 1)])
    if not np.all(contour.encloses(poles)):
        raise ValueError("contour does not enclose every resolvent pole of the steps")
    s = tab.s
    z = contour.nodes
    A = tab.A.astype(complex)
    eye = np.eye(s)
    tj = tau[j - 1]
    lhs = eye[None] - tj * z[:, None, None] * A[None]
    M = np.linalg.solve(lhs, np.broadcast_to(tj * A, lhs.shape))
    for k in range(j + 1, n + 1):
        lhs = eye[None] - tau[k - 1] * z[:, None, None] * A[None]
        r = np.linalg.solve(lhs, np.ones(lhs.shape[:-1] + (1,), dtype=complex))[..., 0]
        M = r[:, :, None] * M[:, -1, None, :]
    W = -np.einsum("l,lab->ab", contour.weights * kernel.K(z), M)
    return W.real
