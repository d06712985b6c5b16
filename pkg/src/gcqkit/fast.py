"""Fast and oblivious convolution: contour quadrature for the most recent
steps, real-axis recursion for everything older.

At step ``n`` the stage vector ``U_n = sum_j W_{n,j} f_j`` splits into a
local part (the last ``n0`` steps, evaluated on a contour around the
resolvent poles of those steps) and a history part (all older steps,
carried as one scalar per real-axis node). Memory stays proportional to
the number of quadrature nodes instead of the number of steps.
"""

from __future__ import annotations

import time
from collections import deque

import numpy as np

from .direct import ConvolutionResult, _as_matrix_data, default_rule
from .kernels import Kernel
from .mesh import Mesh
from .quadrature import ContourRule, RealAxisRule, build_local_contour
from .tableau import ButcherTableau

__all__ = ["FastConvolution", "gcq_fast", "history_span"]


def history_span(mesh: Mesh, n0: int) -> tuple:
    """Smallest and largest time gap the history sum can see on ``mesh``.

    The history part of step ``n`` involves ``t_n - t_{j-1}`` with
    ``j <= n - n0``, so the gap never drops below ``t_n - t_{n-n0}``.
    """
    t = mesh.nodes
    if mesh.N <= n0:
        return (mesh.tau_min, mesh.T)
    gaps = t[n0:] - t[:-n0]
    return (float(gaps.min()), mesh.T)


class FastConvolution:
    """Streaming evaluator of ``U_n = sum_{j<=n} W_{n,j} f_j``.

    Parameters
    ----------
    kernel, tab
        Convolution kernel and Runge-Kutta tableau.
    n0 : int, optional
        Window length; defaults to ``min(5, mesh.N)`` (5 without a mesh).
    tol : float
        Target accuracy of both quadratures.
    mesh : Mesh, optional
        Mesh hint. It fixes the history-rule span and the contour used
        during the first ``n0`` steps.
    t_span : (float, float), optional
        Required for streaming use without ``mesh`` and a Gauss history
        rule: the range of time gaps the history must resolve. A step that
        leaves this range raises ``ValueError``.
    rule : RealAxisRule, optional
        Prebuilt history rule; overrides ``history_rule``.
    history_rule : {"gauss", "trapezoid"}, optional
        Defaults to the kernel's preference.

    Notes
    -----
    Use :meth:`step` for plain convolution. Solvers that need the sum
    without the current input call :meth:`begin_step`, :meth:`pending`
    and then :meth:`commit`.
    """

    def __init__(
        self,
        kernel: Kernel,
        tab: ButcherTableau,
        n0: int | None = None,
        tol: float = 1e-12,
        mesh: Mesh | None = None,
        t_span=None,
        rule: RealAxisRule | None = None,
        history_rule: str | None = None,
        h: float = 3 / 40,
        mtilde: int = 400,
        ntilde: int = 400,
    ):
        if not 1e-15 <= tol < 1:
            raise ValueError("tol must lie in [1e-15, 1)")
        if n0 is None:
            n0 = min(5, mesh.N) if mesh is not None else 5
        if n0 < 1:
            raise ValueError("window length n0 must be positive")
        self.kernel = kernel
        self.tab = tab
        self.n0 = int(n0)
        self.tol = tol
        self.mesh = mesh
        kind = history_rule or kernel.rule

        if rule is None and kind == "gauss":
            if mesh is not None:
                t_span = history_span(mesh, self.n0)
            elif t_span is None:
                raise ValueError("a Gauss history rule needs a mesh hint or t_span")
        self._span = tuple(float(v) for v in t_span) if t_span is not None else None
        self._rule_args = (kind, h, mtilde, ntilde)
        self.rule = rule
        if rule is None and (mesh is None or mesh.N > self.n0):
            self.rule = default_rule(kernel, self._span, tol, kind, h, mtilde, ntilde)

        # eigen data: A = V diag(lam) V^{-1}
        self._lam = tab.eigvals
        self._V = tab.eigvecs
        self._Vi = tab.eigvecs_inv
        self._ones_hat = self._Vi @ np.ones(tab.s)
        self._es_V = self._V[-1]

        self._window: deque = deque()
        self._q_his = None  # e_s^T Q^his at each history node
        self._n = 0
        self._t = 0.0
        self._times: deque = deque([0.0])
        self._fixed_contour: ContourRule | None = None
        if mesh is not None:
            self._fixed_contour = build_local_contour(
                tab, mesh.steps[: self.n0], self.n0, tol
            )
        self._contour: ContourRule | None = None
        self._contour_steps = None
        self._visits = 0
        self._nq_loc_max = 0
        self._peak_vectors = 0
        self.log: list = []
        self._m = None

        if self.rule is not None:
            x = self.rule.nodes
            self._xi = x + kernel.shift
            self._gw = self.rule.weights * kernel.G(x)

    # -- stage algebra in the eigenbasis of A -------------------------------

    def _stage_solve(self, xi, tau, q_prev, f):
        """``(I + tau xi A)^{-1} (1 q_prev + tau A f)`` for nodes ``xi``.

        Returns eigen-coordinates, shape ``(L, s, m)``.
        """
        d = 1.0 / (1.0 + tau * np.multiply.outer(xi, self._lam))  # (L, s)
        f_hat = self._Vi @ f  # (s, m)
        inner = self._ones_hat[None, :, None] * q_prev[:, None, :]
        inner = inner + tau * (self._lam[:, None] * f_hat)[None]
        return d[:, :, None] * inner

    def _last_stage(self, Y_hat):
        return np.einsum("i,lim->lm", self._es_V, Y_hat)

    # -- window management --------------------------------------------------

    def begin_step(self, tau: float):
        """Open step ``n + 1`` with size ``tau``; its input is zero until committed."""
        if not tau > 0:
            raise ValueError("step size must be positive")
        if self._window and self._window[-1][1] is None:
            raise RuntimeError("previous step was never committed")
        if len(self._window) == self.n0:
            self._absorb()
        self._n += 1
        self._t += tau
        self._times.append(self._t)
        if len(self._times) > self.n0 + 1:
            self._times.popleft()
        self._window.append([float(tau), None])
        self._check_span()

    def _check_span(self):
        if self._span is None or self.rule is None or self.rule.kind != "gauss":
            return
        if self._n <= self.n0 or self.mesh is not None:
            return
        gap = self._times[-1] - self._times[0]
        lo, hi = self._span
        if gap < lo * (1 - 1e-12) or self._t > hi * (1 + 1e-12):
            raise ValueError(
                f"step {self._n} leaves the history span: gap {gap:.3e}, "
                f"time {self._t:.3e}, span ({lo:.3e}, {hi:.3e})"
            )

    def _absorb(self):
        tau, f = self._window.popleft()
        if self.rule is None:
            kind, h, mt, nt = self._rule_args
            self.rule = default_rule(self.kernel, self._span, self.tol, kind, h, mt, nt)
            self._xi = self.rule.nodes + self.kernel.shift
            self._gw = self.rule.weights * self.kernel.G(self.rule.nodes)
        if self._q_his is None:
            self._q_his = np.zeros((len(self._xi), f.shape[1]))
        Y_hat = self._stage_solve(self._xi, tau, self._q_his, f)
        self._q_his = self._last_stage(Y_hat).real
        self._visits += len(self._xi)

    def commit(self, f):
        """Fix the input of the open step."""
        if not self._window or self._window[-1][1] is not None:
            raise RuntimeError("no open step to commit")
        self._window[-1][1] = self._shape(f)

    def _shape(self, f):
        f = np.asarray(f, dtype=float)
        if f.shape[0] != self.tab.s:
            raise ValueError(f"stage input must have {self.tab.s} rows")
        f = f.reshape(self.tab.s, -1)
        if self._m is None:
            self._m = f.shape[1]
        elif f.shape[1] != self._m:
            raise ValueError("input dimension changed between steps")
        return f

    # -- evaluation -----------------------------------------------------------

    def _local_contour(self) -> ContourRule:
        steps = tuple(tau for tau, _ in self._window)
        if self._n <= self.n0 and self._fixed_contour is not None:
            return self._fixed_contour
        if self._contour is None or self._contour_steps != steps:
            self._contour = build_local_contour(self.tab, steps, self.n0, self.tol)
            self._contour_steps = steps
        return self._contour

    def _evaluate(self, f_last) -> np.ndarray:
        """``sum_j W_{n,j} f_j`` over all steps with ``f_n = f_last``; shape ``(s, m)``."""
        m = f_last.shape[1]
        contour = self._local_contour()
        z = contour.nodes
        q = np.zeros((len(z), m), dtype=complex)
        entries = list(self._window)
        for k, (tau, f) in enumerate(entries):
            f = f_last if k == len(entries) - 1 else f
            Y_hat = self._stage_solve(-z, tau, q, f)
            q = self._last_stage(Y_hat)
        # clockwise orientation of the contour representation gives the minus sign
        wk = -contour.weights * self.kernel.K(z)
        U_hat = np.einsum("l,lim->im", wk, Y_hat)
        U = (self._V @ U_hat).real
        self._visits += len(z) * len(entries)
        self._nq_loc_max = max(self._nq_loc_max, len(z))

        if self._q_his is not None:
            xi = self._xi
            q_h = self._q_his
            # lagged product of the window's rank-one stability factors
            for tau, _ in entries[:-1]:
                r = self._es_V @ (self._ones_hat[:, None] / (1.0 + tau * np.outer(self._lam, xi)))
                q_h = q_h * r.real[:, None]
            tau_n = entries[-1][0]
            d = 1.0 / (1.0 + tau_n * np.outer(xi, self._lam))  # (L, s)
            r_vec = ((d * self._ones_hat) @ self._V.T).real  # (L, s)
            U = U + np.einsum("l,li,lm->im", self._gw, r_vec, q_h)
            self._visits += len(xi) * len(entries)
        nq_his = 0 if self.rule is None else len(self.rule)
        vectors = nq_his + len(z) + len(entries) * self.tab.s
        self._peak_vectors = max(self._peak_vectors, vectors)
        return U

    def pending(self, m: int | None = None) -> np.ndarray:
        """History-plus-window sum with the open step's input set to zero."""
        if not self._window or self._window[-1][1] is not None:
            raise RuntimeError("pending() needs an open step")
        m = m if m is not None else (self._m or 1)
        return self._evaluate(np.zeros((self.tab.s, m)))

    def step(self, tau: float, f):
        """Advance one step with input ``f`` and return ``(u_n, U_n)``.

        ``f`` has shape ``(s,)`` or ``(s, m)``; ``U_n`` has the same shape.
        """
        start = time.perf_counter_ns()
        self.begin_step(tau)
        self.commit(f)
        U = self._evaluate(self._window[-1][1])
        if np.ndim(f) == 1:
            U = U[:, 0]
        self.log.append(
            {
                "step": self._n,
                "nq_loc": int(self._contour_count()),
                "nq_his": 0 if self.rule is None else len(self.rule),
                "wall_ns": time.perf_counter_ns() - start,
            }
        )
        return U[-1], U

    def _contour_count(self):
        return len(self._local_contour())

    def node_census(self) -> dict:
        """Quadrature sizes and work counters accumulated so far."""
        return {
            "steps": self._n,
            "n0": self.n0,
            "nq_loc": self._nq_loc_max,
            "nq_loc_budget": (
                self._fixed_contour.budget if self._fixed_contour is not None else None
            ),
            "nq_his": 0 if self.rule is None else len(self.rule),
            "node_visits": self._visits,
            "peak_node_vectors": self._peak_vectors,
        }


def gcq_fast(
    kernel: Kernel,
    mesh: Mesh,
    tab: ButcherTableau,
    f: np.ndarray,
    n0: int | None = None,
    tol: float = 1e-12,
    **options,
) -> ConvolutionResult:
    """Run :class:`FastConvolution` over a whole mesh."""
    data, vector = _as_matrix_data(f, tab.s)
    if data.shape[0] != mesh.N:
        raise ValueError("need one stage sample block per step")
    start = time.perf_counter_ns()
    engine = FastConvolution(kernel, tab, n0=n0, tol=tol, mesh=mesh, **options)
    U = np.empty(data.shape)
    for n, tau in enumerate(mesh.steps):
        _, U[n] = engine.step(tau, data[n])
    u = U[:, -1, :]
    if not vector:
        U, u = U[:, :, 0], u[:, 0]
    diag = engine.node_census()
    diag["wall_ns"] = time.perf_counter_ns() - start
    diag["log"] = engine.log
    return ConvolutionResult(u=u, U=U, diagnostics=diag)
