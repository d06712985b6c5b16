"""Butcher tableaus for stiffly accurate, A-stable Runge-Kutta methods.

Only the pieces shared by every convolution engine live here: the stage
stability vector, the scalar stability function and fractional powers of
``tau * A`` computed from a cached eigendecomposition.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import sqrt

import numpy as np

__all__ = [
    "ButcherTableau",
    "make_tableau",
    "stability_scalar",
    "stability_vector",
    "matrix_power",
    "TABLEAU_IDS",
]


@dataclass(frozen=True, eq=False)
class ButcherTableau:
    """Coefficients ``(A, b, c)`` with classical order ``p`` and stage order ``q``.

    The eigendecomposition ``A = V diag(lam) V^{-1}`` is computed once and
    cached (``eigvecs`` holds eigenvectors as columns). Construction
    validates stiff accuracy, invertibility, distinct eigenvalues with
    positive real part and A-stability on the negative real axis.
    """

    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    p: int
    q: int
    name: str = "custom"
    eigvals: np.ndarray = field(init=False, repr=False)
    eigvecs: np.ndarray = field(init=False, repr=False)
    eigvecs_inv: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        A = np.array(self.A, dtype=float)
        b = np.array(self.b, dtype=float)
        c = np.array(self.c, dtype=float)
        s = len(b)
        if A.shape != (s, s) or c.shape != (s,):
            raise ValueError("inconsistent tableau dimensions")
        if not (1 <= self.q <= self.p):
            raise ValueError("orders must satisfy 1 <= q <= p")
        if np.any(np.diff(c) < 0) or c[-1] != 1.0 or c[0] < 0:
            raise ValueError("abscissae must be nondecreasing in [0, 1] with c_s = 1")
        if np.max(np.abs(A[-1] - b)) > 1e-14:
            raise ValueError("tableau is not stiffly accurate (b != A^T e_s)")

        lam, V = np.linalg.eig(A.astype(complex))
        if np.any(lam.real <= 0):
            raise ValueError("eigenvalues of A must have positive real part")
        gaps = np.abs(lam[:, None] - lam[None, :]) + np.eye(s)
        if np.min(gaps) < 1e-8:
            raise ValueError("eigenvalues of A must be distinct")
        Vinv = np.linalg.inv(V)

        for name, value in (("A", A), ("b", b), ("c", c)):
            value.setflags(write=False)
            object.__setattr__(self, name, value)
        for name, value in (("eigvals", lam), ("eigvecs", V), ("eigvecs_inv", Vinv)):
            value.setflags(write=False)
            object.__setattr__(self, name, value)

        x = np.geomspace(1e-6, 1e8, 400)
        if np.any(np.abs(stability_scalar(self, -x)) > 1 + 1e-12):
            raise ValueError("tableau is not A-stable on the negative real axis")

    @property
    def s(self) -> int:
        return len(self.b)

    @property
    def inv_eigvals(self) -> np.ndarray:
        """Spectrum of ``A^{-1}``; the poles of the stage resolvent scale with it."""
        return 1.0 / self.eigvals

    def diagonal_apply(self, diag: np.ndarray, vec: np.ndarray) -> np.ndarray:
        """Apply ``V diag(d) V^{-1}`` along the stage axis.

        ``diag`` has shape ``(..., s)`` and ``vec`` has shape ``(s, ...)`` or
        ``(..., s, m)``; the stage axis of ``vec`` is axis ``-2`` when it is
        2-d or higher, otherwise axis 0.
        """
        V, Vi = self.eigvecs, self.eigvecs_inv
        if vec.ndim == 1:
            return V @ (diag * (Vi @ vec))
        return np.einsum("ij,...j,jk,...km->...im", V, diag, Vi, vec)


def _rational(rows):
    return np.array([[float(Fraction(v)) for v in row] for row in rows])


def _radau2() -> ButcherTableau:
    A = _rational([["5/12", "-1/12"], ["3/4", "1/4"]])
    return ButcherTableau(
        A=A,
        b=A[-1].copy(),
        c=np.array([1 / 3, 1.0]),
        p=3,
        q=2,
        name="radau2",
    )


def _radau3() -> ButcherTableau:
    r6 = sqrt(6.0)
    A = np.array(
        [
            [(88 - 7 * r6) / 360, (296 - 169 * r6) / 1800, (-2 + 3 * r6) / 225],
            [(296 + 169 * r6) / 1800, (88 + 7 * r6) / 360, (-2 - 3 * r6) / 225],
            [(16 - r6) / 36, (16 + r6) / 36, 1 / 9],
        ]
    )
    c = np.array([(4 - r6) / 10, (4 + r6) / 10, 1.0])
    return ButcherTableau(A=A, b=A[-1].copy(), c=c, p=5, q=3, name="radau3")


def _lobatto4() -> ButcherTableau:
    r5 = sqrt(5.0)
    A = np.array(
        [
            [1 / 12, -r5 / 12, r5 / 12, -1 / 12],
            [1 / 12, 1 / 4, (10 - 7 * r5) / 60, r5 / 60],
            [1 / 12, (10 + 7 * r5) / 60, 1 / 4, -r5 / 60],
            [1 / 12, 5 / 12, 5 / 12, 1 / 12],
        ]
    )
    c = np.array([0.0, (5 - r5) / 10, (5 + r5) / 10, 1.0])
    return ButcherTableau(A=A, b=A[-1].copy(), c=c, p=6, q=3, name="lobatto4")


_BUILDERS = {
    "radau2": _radau2,
    "radau3": _radau3,
    "lobatto4": _lobatto4,
}
_ALIASES = {"radauiia2": "radau2", "radauiia3": "radau3", "lobattoiiic4": "lobatto4"}
TABLEAU_IDS = tuple(_BUILDERS)


def make_tableau(method_id: str) -> ButcherTableau:
    """Build one of the shipped tableaus: ``radau2``, ``radau3`` or ``lobatto4``.

    The long names ``RadauIIA2``, ``RadauIIA3`` and ``LobattoIIIC4`` are
    accepted as well (case-insensitive).
    """
    key = method_id.strip().lower()
    key = _ALIASES.get(key, key)
    try:
        return _BUILDERS[key]()
    except KeyError:
        raise ValueError(f"unknown tableau id {method_id!r}") from None


def stability_vector(tab: ButcherTableau, z) -> np.ndarray:
    """Return ``(I - z A)^{-1} 1``; for array ``z`` the stage axis is last."""
    z = np.asarray(z, dtype=complex)
    den = 1.0 - z[..., None] * tab.eigvals
    if np.any(np.abs(den) <= 1e-14 * (1.0 + np.abs(z[..., None] * tab.eigvals))):
        raise ZeroDivisionError("I - zA is singular at the requested z")
    d = 1.0 / den
    ones_hat = tab.eigvecs_inv @ np.ones(tab.s)
    return (d * ones_hat) @ tab.eigvecs.T


def stability_scalar(tab: ButcherTableau, z):
    """Stability function ``R(z) = 1 + z b^T (I - zA)^{-1} 1``."""
    z_arr = np.asarray(z, dtype=complex)
    lhs = np.eye(tab.s)[None] - z_arr.reshape(-1)[:, None, None] * tab.A[None]
    try:
        rhs = np.ones(lhs.shape[:-1] + (1,))
        sol = np.linalg.solve(lhs, rhs)[..., 0]
    except np.linalg.LinAlgError as exc:
        raise ZeroDivisionError("I - zA is singular at the requested z") from exc
    out = 1.0 + z_arr.reshape(-1) * (sol @ tab.b)
    return out.reshape(z_arr.shape) if z_arr.ndim else complex(out[0])


def matrix_power(tab: ButcherTableau, tau: float, gamma: float) -> np.ndarray:
    """``(tau A)^gamma`` through the cached eigendecomposition (principal branch).

    The result is returned as a real matrix; the discarded imaginary part is
    at rounding level because the eigenvalues come in conjugate pairs.
    """
    if tau <= 0:
        raise ValueError("tau must be positive")
    d = (tau * tab.eigvals) ** gamma
    M = tab.eigvecs @ np.diag(d) @ tab.eigvecs_inv
    return M.real.copy()
