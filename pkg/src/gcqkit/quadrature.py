"""Quadrature rules for the real-axis history integral and the local contour.

``RealAxisRule`` integrates over ``(0, inf)`` against a density with an
``x^-alpha`` singularity. ``ContourRule`` approximates
``(1/2 pi i) \\oint f(z) dz`` around the poles of the Runge-Kutta stage
resolvents of a short window of steps.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import ceil, log, pi, sin

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

from .tableau import ButcherTableau

__all__ = [
    "RealAxisRule",
    "ContourRule",
    "build_history_rule",
    "build_log_trapezoid_rule",
    "build_local_contour",
    "beta_residual",
    "local_node_budget",
    "QuadratureBudgetError",
]

_PANEL_ORDERS = (8, 12, 16, 20, 24, 32, 40, 48, 64)
_PANEL_RATIO = 4.0
# last finite panel ends where the smallest time scale sees x * t_lo >= this
_TAIL_START = 16.0


class QuadratureBudgetError(RuntimeError):
    """Raised when a rule cannot reach its tolerance within the node budget."""


@dataclass(frozen=True, eq=False)
class RealAxisRule:
    """Nodes and weights for ``int_0^inf f(x) dx ~ sum_l w_l f(x_l)``."""

    nodes: np.ndarray
    weights: np.ndarray
    alpha: float
    tol: float
    kind: str = "gauss"
    t_span: tuple = (0.0, 0.0)

    def __post_init__(self):
        x = np.asarray(self.nodes, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if x.shape != w.shape or x.ndim != 1:
            raise ValueError("nodes and weights must be matching 1-d arrays")
        if np.any(x <= 0) or np.any(np.diff(x) <= 0):
            raise ValueError("nodes must be positive and strictly increasing")
        for name, value in (("nodes", x), ("weights", w)):
            value.setflags(write=False)
            object.__setattr__(self, name, value)

    def __len__(self):
        return len(self.nodes)

    def integrate(self, f) -> float:
        return float(np.dot(self.weights, f(self.nodes)))


@dataclass(frozen=True, eq=False)
class ContourRule:
    """Periodic trapezoid rule on a closed contour around the resolvent poles.

    The contour is the image under ``z = exp(w)`` of the ellipse
    ``w = center + focal * cosh(rho + i theta)``. ``weights`` already include
    the factor ``dz / (2 pi i)`` for counterclockwise traversal.
    """

    nodes: np.ndarray
    weights: np.ndarray
    center: float
    focal: float
    rho: float
    budget: int = 0

    def __len__(self):
        return len(self.nodes)

    @property
    def count(self) -> int:
        return len(self.nodes)

    def integrate(self, values) -> complex:
        """``(1/2 pi i) \\oint f dz`` given samples of ``f`` at the nodes (axis 0)."""
        return np.tensordot(self.weights, values, axes=(0, 0))

    def encloses(self, points) -> np.ndarray:
        """True where ``points`` lie strictly inside the contour."""
        z = np.asarray(points, dtype=complex)
        w = np.log(z)
        r = np.arccosh((w - self.center) / self.focal).real
        return np.abs(r) < self.rho


def beta_residual(rule: RealAxisRule, zeta) -> np.ndarray:
    """Relative error of the rule on ``x^-alpha / (1 + zeta x)``.

    The exact value is ``B(alpha, 1 - alpha) zeta^(alpha - 1)``.
    """
    a = rule.alpha
    zeta = np.atleast_1d(np.asarray(zeta, dtype=float))
    x, w = rule.nodes, rule.weights
    approx = (w * x ** (-a)) @ (1.0 / (1.0 + np.outer(x, zeta)))
    exact = pi / sin(pi * a) * zeta ** (a - 1)
    return np.abs(approx - exact) / exact


def _gauss_panels(alpha: float, t_lo: float, t_hi: float, order: int):
    """Composite rule for one per-panel order.

    Layout: a Gauss-Jacobi panel with weight ``x^-alpha`` on ``[0, 1/t_hi]``,
    Gauss-Legendre panels growing by ``_PANEL_RATIO`` up to
    ``_TAIL_START / t_lo``, then the tail mapped through ``x = X/u`` onto a
    Gauss-Jacobi panel with weight ``u^(alpha-1)``.
    """
    x0 = 1.0 / t_hi
    s, ws = roots_jacobi(order, 0.0, -alpha)
    # x = x0 (1 + s)/2 ; int_0^x0 x^-a g = (x0/2)^(1-a) sum ws g(x)
    xs = [x0 * (1 + s) / 2]
    wts = [ws * (x0 / 2) ** (1 - alpha) * xs[0] ** alpha]

    x_end = _TAIL_START / t_lo
    npanel = max(1, ceil(log(x_end / x0) / log(_PANEL_RATIO)))
    edges = x0 * _PANEL_RATIO ** np.arange(npanel + 1)
    edges[-1] = max(edges[-1], x_end)
    gl, wl = roots_legendre(order)
    for lo, hi in zip(edges[:-1], edges[1:]):
        xs.append(lo + (hi - lo) * (1 + gl) / 2)
        wts.append(wl * (hi - lo) / 2)

    X = edges[-1]
    su, wu = roots_jacobi(order, 0.0, alpha - 1.0)
    u = (1 + su) / 2
    # int_X^inf f dx = int_0^1 f(X/u) X u^-2 du with u^(a-1) pulled into the weight
    xs.append(X / u[::-1])
    wts.append((wu * 0.5**alpha * X * u ** (-1.0 - alpha))[::-1])
    return np.concatenate(xs), np.concatenate(wts)


def build_history_rule(
    alpha: float, t_span, tol: float, max_nodes: int = 6000
) -> RealAxisRule:
    """Composite Gauss rule for ``int_0^inf x^-alpha phi(x) dx``.

    ``phi`` is assumed to behave like ``1 / (1 + t x)`` for time scales
    ``t`` in ``t_span = (t_lo, t_hi)``. The per-panel order is the smallest
    one in ``(8, 12, ..., 64)`` for which the Beta identity holds to
    ``tol / 2`` over the span (``tol`` itself below ``2e-14``, where
    rounding dominates).

    Raises
    ------
    QuadratureBudgetError
        If no order meets the tolerance within ``max_nodes`` nodes.
    """
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    t_lo, t_hi = (float(v) for v in t_span)
    if not 0 < t_lo <= t_hi:
        raise ValueError("t_span must satisfy 0 < t_lo <= t_hi")
    if tol < 1e-15:
        raise ValueError("tol below 1e-15 is not attainable in double precision")

    # rounding in the sums floors the residual near 5e-15
    target = tol / 2 if tol >= 2e-14 else tol
    zeta = np.geomspace(t_lo, t_hi, max(32, 8 * ceil(log(t_hi / t_lo + 1, 2))))
    best = np.inf
    for order in _PANEL_ORDERS:
        x, w = _gauss_panels(alpha, t_lo, t_hi, order)
        if len(x) > max_nodes:
            break
        rule = RealAxisRule(x, w, alpha, tol, "gauss", (t_lo, t_hi))
        err = float(beta_residual(rule, zeta).max())
        best = min(best, err)
        if err <= target:
            return rule
    raise QuadratureBudgetError(
        f"history rule reached only {best:.2e} (target {target:.1e}) "
        f"within {max_nodes} nodes"
    )


def build_log_trapezoid_rule(
    alpha: float, h: float = 3 / 40, mtilde: int = 400, ntilde: int = 400
) -> RealAxisRule:
    """Trapezoid rule after ``x = exp(mu / alpha)``.

    Nodes ``exp(l h / alpha)`` and weights ``(h / alpha) exp(l h / alpha)``
    for ``l = -mtilde .. ntilde``.
    """
    if h <= 0:
        raise ValueError("step h must be positive")
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    mu = np.arange(-mtilde, ntilde + 1) * h / alpha
    x = np.exp(mu)
    return RealAxisRule(x, (h / alpha) * x, alpha, np.nan, "trapezoid")


def local_node_budget(
    n0: int, tol: float, m_loc: float | None = None, M_loc: float | None = None,
    max_exponent: float = 2.0,
) -> int:
    """Node budget ``n0^e log(n0) (log(n0) + log(1/tol))``, at least 8.

    With both radii given, ``e = max(1, log(M) / (2 log(m)))`` with
    ``log(m)`` kept at least ``1e-2`` away from zero and ``e`` capped at
    ``max_exponent``; otherwise ``e = 1``.
    """
    if n0 < 1:
        raise ValueError("window length must be positive")
    expo = 1.0
    if m_loc is not None and M_loc is not None:
        lm = log(m_loc)
        if abs(lm) < 1e-2:
            lm = 1e-2 if lm >= 0 else -1e-2
        expo = min(max(1.0, 0.5 * log(M_loc) / lm), max_exponent)
    n = n0**expo * log(n0) * (log(n0) + log(1.0 / tol))
    return max(8, ceil(n))


def _ellipse_fit(lo: float, hi: float, phi: float, barrier: float):
    """Pick the focal length that maximizes the analyticity gap.

    The poles fill the rectangle ``[lo, hi] x [-phi, phi]`` in ``w = log z``;
    the contour must stay below ``|Im w| = barrier``. Returns
    ``(center, focal, rho_in, rho_out)``.
    """
    c = 0.5 * (lo + hi)
    corner = complex(0.5 * (hi - lo), phi)
    best = None
    for f in np.geomspace(1e-3, 1e3, 600):
        rho_out = np.arcsinh(barrier / f)
        rho_in = np.arccosh(corner / f).real
        gap = rho_out - rho_in
        if best is None or gap > best[0]:
            best = (gap, f, rho_in, rho_out)
    _, f, rho_in, rho_out = best
    return c, float(f), float(rho_in), float(rho_out)


def build_local_contour(
    tab: ButcherTableau, window_steps, n0: int, tol: float, safety: float = 1.15
) -> ContourRule:
    """Contour around the poles ``1 / (tau_j lambda_i)`` of the window.

    The poles are enclosed by an ellipse in the ``log z`` plane whose image
    stays in the sector ``|arg z| < pi/2``; the node count follows from the
    trapezoid-rule error ``exp(-N gap)`` and is never below
    ``local_node_budget(n0, tol)``.
    """
    tau = np.asarray(window_steps, dtype=float)
    if tau.size == 0:
        raise ValueError("window must contain at least one step")
    if np.any(tau <= 0):
        raise ValueError("window steps must be positive")
    mu = tab.inv_eigvals
    lo = log(np.abs(mu).min() / tau.max())
    hi = log(np.abs(mu).max() / tau.min())
    phi = float(np.abs(np.angle(mu)).max())
    barrier = pi / 2
    if phi >= barrier:
        raise ValueError("resolvent poles must lie in the open right half-plane")
    c, f, rho_in, rho_out = _ellipse_fit(lo, hi, phi, barrier)
    gap = 0.5 * (rho_out - rho_in)
    rho0 = 0.5 * (rho_out + rho_in)
    budget = local_node_budget(n0, tol)
    count = max(budget, ceil(safety * log(1.0 / tol) / gap) + 4)

    theta = 2 * pi * np.arange(count) / count
    arg = rho0 + 1j * theta
    w = c + f * np.cosh(arg)
    z = np.exp(w)
    # dz/(2 pi i) = z w'(theta) dtheta / (2 pi i), dtheta = 2 pi / count
    weights = z * f * np.sinh(arg) / count
    return ContourRule(z, weights, c, f, rho0, budget)
