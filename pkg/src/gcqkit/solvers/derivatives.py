"""Runge-Kutta discrete time derivatives on stage blocks."""

from __future__ import annotations

import numpy as np

from ..tableau import ButcherTableau

__all__ = ["discrete_derivative", "discrete_second_derivative"]


def discrete_derivative(tab: ButcherTableau, tau: float, V, v_prev):
    """``(tau A)^{-1} (V_n - 1 v_{n-1})`` for a stage block ``V`` of shape ``(s, ...)``."""
    if not tau > 0:
        raise ValueError("step size must be positive")
    V = np.asarray(V, dtype=float)
    diff = V - np.asarray(v_prev, dtype=float)[None]
    flat = diff.reshape(tab.s, -1)
    return np.linalg.solve(tau * tab.A, flat).reshape(V.shape)


def discrete_second_derivative(tab: ButcherTableau, tau: float, dU, dU_prev):
    """Apply the discrete derivative to a derivative block.

    ``dU_prev`` is the previous derivative block; only its last stage
    enters, as the endpoint value of the previous step.
    """
    dU_prev = np.asarray(dU_prev, dtype=float)
    return discrete_derivative(tab, tau, dU, dU_prev[-1])
