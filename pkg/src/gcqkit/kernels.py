"""Sectorial convolution kernels given through their Laplace transforms.

A kernel ``k`` whose transform ``K`` is holomorphic off the negative real
axis and decays like ``|z|^-alpha`` has the representation
``k(t) = int_0^inf exp(-x t) G(x) dx`` with ``G`` the jump of ``K`` across
the cut. Each catalog entry carries both ``K`` (for contour quadrature) and
the closed form of ``G`` (for the real-axis recursion).
"""

from __future__ import annotations

from dataclasses import dataclass
from math import gamma, pi, sin
from typing import Callable

import numpy as np
from scipy.special import hyp1f1

from .mittag_leffler import mittag_leffler

__all__ = [
    "Kernel",
    "PowerData",
    "builtin_kernel",
    "parse_kernel",
    "density_from_transfer",
    "exact_convolution",
    "exact_solution",
    "scalar_ode_solution",
    "KERNEL_IDS",
]


@dataclass(frozen=True)
class Kernel:
    """Transfer function ``K``, density ``G`` and bookkeeping for one kernel.

    Attributes
    ----------
    name : str
        Catalog id (``fracint``, ``ka``, ``kb`` or ``fracint_dual``).
    K : callable
        Vectorized complex transfer function.
    G : callable
        Vectorized real density on ``x > 0``.
    alpha : float
        Decay exponent of ``K`` in the sector; also the power of the
        ``x^-alpha`` singularity that the history rule is built for.
    shift : float
        The real-axis recursion runs at ``x + shift`` while ``G`` is
        sampled at ``x``. Nonzero only for ``(z + 1)^-alpha``.
    order : float
        The user-facing parameter the kernel was built from.
    rule : str
        Default history rule, ``"gauss"`` or ``"trapezoid"``.
    """

    name: str
    K: Callable
    G: Callable
    alpha: float
    shift: float = 0.0
    order: float = 0.0
    rule: str = "gauss"

    def diag_transfer(self, z):
        """``K`` evaluated at the eigenvalues ``z`` of a matrix argument."""
        return self.K(np.asarray(z, dtype=complex))


@dataclass(frozen=True)
class PowerData:
    """Scalar input ``f(t) = coefficient * t^beta``."""

    beta: float
    coefficient: float = 1.0

    def __post_init__(self):
        if self.beta <= -1:
            raise ValueError("beta must exceed -1")

    def __call__(self, t):
        return self.coefficient * np.power(np.asarray(t, dtype=float), self.beta)


def _check_alpha(alpha: float):
    if not 0 < alpha < 1:
        raise ValueError("kernel exponent must lie in (0, 1)")


def _fracint(alpha: float) -> Kernel:
    c = sin(pi * alpha) / pi
    return Kernel(
        name="fracint",
        K=lambda z: np.power(np.asarray(z, dtype=complex), -alpha),
        G=lambda x: c * np.power(x, -alpha),
        alpha=alpha,
        order=alpha,
    )


def _ka(alpha: float) -> Kernel:
    c = sin(pi * alpha) / pi
    cs = np.cos(pi * alpha)

    def G(x):
        xa = np.power(x, alpha)
        return c * xa / (xa * xa + 2 * xa * cs + 1)

    return Kernel(
        name="ka",
        K=lambda z: 1.0 / (np.power(np.asarray(z, dtype=complex), alpha) + 1.0),
        G=G,
        alpha=alpha,
        order=alpha,
        rule="trapezoid",
    )


def _kb(alpha: float) -> Kernel:
    c = sin(pi * alpha) / pi

    def K(z):
        w = np.array(z, dtype=complex)
        # shift only the real part so a signed-zero imaginary part survives
        w.real += 1.0
        return np.power(w, -alpha)

    return Kernel(
        name="kb",
        K=K,
        G=lambda x: c * np.power(x, -alpha),
        alpha=alpha,
        shift=1.0,
        order=alpha,
    )


def _fracint_dual(alpha: float) -> Kernel:
    # the integral of order 1 - alpha that turns a derivative into D^alpha
    k = _fracint(1.0 - alpha)
    return Kernel(
        name="fracint_dual", K=k.K, G=k.G, alpha=1.0 - alpha, order=alpha
    )


_BUILDERS = {
    "fracint": _fracint,
    "ka": _ka,
    "kb": _kb,
    "fracint_dual": _fracint_dual,
}
_ALIASES = {
    "karesolvent": "ka",
    "kbshifted": "kb",
    "fracintdual": "fracint_dual",
    "dual": "fracint_dual",
}
KERNEL_IDS = tuple(_BUILDERS)


def builtin_kernel(kernel_id: str, alpha: float) -> Kernel:
    """Catalog kernel by id with parameter ``alpha`` in ``(0, 1)``.

    ``fracint``: ``K = z^-alpha``. ``ka``: ``K = 1/(z^alpha + 1)``.
    ``kb``: ``K = (z + 1)^-alpha``. ``fracint_dual``: ``K = z^(alpha-1)``.
    """
    _check_alpha(alpha)
    key = kernel_id.strip().lower()
    key = _ALIASES.get(key, key)
    try:
        builder = _BUILDERS[key]
    except KeyError:
        raise ValueError(f"unknown kernel id {kernel_id!r}") from None
    return builder(float(alpha))


def parse_kernel(spec: str) -> Kernel:
    """Parse CLI strings such as ``fracint:alpha=0.5`` or ``kb:alpha=0.4``."""
    name, _, rest = spec.partition(":")
    params = {}
    for item in filter(None, (p.strip() for p in rest.split(","))):
        key, sep, value = item.partition("=")
        if not sep:
            raise ValueError(f"expected key=value in kernel spec, got {item!r}")
        params[key.strip().lower()] = float(value)
    if "alpha" not in params:
        raise ValueError(f"kernel spec {spec!r} needs alpha=")
    return builtin_kernel(name, params["alpha"])


def density_from_transfer(K: Callable, x):
    """Jump ``(K(x e^{-i pi}) - K(x e^{i pi})) / (2 pi i)`` across the negative axis.

    The two edges of the cut are addressed with signed zeros so that the
    principal branch of every power picks the right side.
    """
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValueError("density is defined for x > 0 only")
    below = np.empty(x.shape, dtype=complex)
    below.real, below.imag = -x, -0.0
    above = np.empty(x.shape, dtype=complex)
    above.real, above.imag = -x, 0.0
    value = (K(below) - K(above)) / (2j * pi)
    if np.any(np.abs(value.imag) > 1e-12 * (1 + np.abs(value.real))):
        raise ArithmeticError("transfer function is not conjugate-symmetric")
    return value.real


def exact_convolution(kernel: Kernel, data: PowerData, t):
    """Closed-form ``(k * f)(t)`` for power data ``f = c t^beta``."""
    t = np.asarray(t, dtype=float)
    a, b, c = kernel.order, data.beta, data.coefficient
    if kernel.name == "fracint":
        return c * gamma(b + 1) / gamma(a + b + 1) * t ** (a + b)
    if kernel.name == "fracint_dual":
        e = 1.0 - a
        return c * gamma(b + 1) / gamma(e + b + 1) * t ** (e + b)
    if kernel.name == "ka":
        return c * gamma(b + 1) * t ** (a + b) * mittag_leffler(a, a + b + 1, t**a)
    if kernel.name == "kb":
        # k(t) = t^(a-1) e^-t / Gamma(a); Kummer's function collects the exponential
        return (
            c * gamma(b + 1) / gamma(a + b + 1) * t ** (a + b)
            * hyp1f1(a, a + b + 1, -t)
        )
    raise ValueError(f"no closed form for kernel {kernel.name!r}")


def exact_solution(example_id: str, params: dict, t, x=None, y=None):
    """Closed-form solutions of the benchmark problems.

    ``example1``: fractional integral of ``t^beta``. ``example2a`` and
    ``example2b``: the ``ka`` and ``kb`` convolutions of ``t^beta``.
    ``example3``: ``1 + t^b1 + H(t - sigma)(t - sigma)^b2``. ``example4``:
    ``t^alpha cos(pi x/2) cos(pi y/2)`` (``y`` optional for 1-d).
    """
    t = np.asarray(t, dtype=float)
    if example_id == "example1":
        k = builtin_kernel("fracint", params["alpha"])
        return exact_convolution(k, PowerData(params["beta"]), t)
    if example_id in ("example2a", "example2-ka"):
        k = builtin_kernel("ka", params["alpha"])
        return exact_convolution(k, PowerData(params["beta"]), t)
    if example_id in ("example2b", "example2-kb"):
        k = builtin_kernel("kb", params["alpha"])
        return exact_convolution(k, PowerData(params["beta"]), t)
    if example_id == "example3":
        b1, b2, sig = params["beta1"], params["beta2"], params["sigma"]
        late = np.where(t > sig, np.maximum(t - sig, 0.0) ** b2, 0.0)
        return 1.0 + t**b1 + late
    if example_id == "example4":
        if x is None:
            raise ValueError("example4 needs spatial coordinates")
        shape = np.cos(pi * np.asarray(x) / 2)
        if y is not None:
            shape = shape * np.cos(pi * np.asarray(y) / 2)
        return t ** params["alpha"] * shape
    raise ValueError(f"unknown example id {example_id!r}")


def scalar_ode_solution(x: float, beta: float, t):
    """Solution of ``y' = -x y + t^beta``, ``y(0) = 0``.

    Equals ``Gamma(beta + 1) t^(beta + 1) E_{1, beta + 2}(-x t)``.
    """
    if beta <= -1:
        raise ValueError("beta must exceed -1")
    if x < 0:
        raise ValueError("x must be nonnegative")
    t = np.asarray(t, dtype=float)
    return gamma(beta + 1) * t ** (beta + 1) * mittag_leffler(1.0, beta + 2, x * t)
