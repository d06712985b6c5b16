"""Time meshes: graded, refined graded and two-singularity meshes."""

from __future__ import annotations

from dataclasses import dataclass
from math import floor

import numpy as np

__all__ = [
    "Mesh",
    "uniform_mesh",
    "graded_mesh",
    "refined_graded_mesh",
    "bisect_mesh",
    "two_singularity_mesh",
    "quasi_uniformity",
    "parse_mesh",
]


@dataclass(frozen=True, eq=False)
class Mesh:
    """Strictly increasing nodes ``0 = t_0 < t_1 < ... < t_N = T``."""

    nodes: np.ndarray

    def __post_init__(self):
        t = np.array(self.nodes, dtype=float)
        if t.ndim != 1 or len(t) < 2:
            raise ValueError("a mesh needs at least two nodes")
        if t[0] != 0.0:
            raise ValueError("mesh must start at t_0 = 0")
        if not np.all(np.isfinite(t)) or np.any(np.diff(t) <= 0):
            raise ValueError("mesh nodes must be finite and strictly increasing")
        t.setflags(write=False)
        object.__setattr__(self, "nodes", t)

    @property
    def steps(self) -> np.ndarray:
        return np.diff(self.nodes)

    @property
    def N(self) -> int:
        return len(self.nodes) - 1

    @property
    def T(self) -> float:
        return float(self.nodes[-1])

    @property
    def tau_max(self) -> float:
        return float(self.steps.max())

    @property
    def tau_min(self) -> float:
        return float(self.steps.min())

    def stage_times(self, c: np.ndarray) -> np.ndarray:
        """Times ``t_{n-1} + c_i tau_n`` as an ``(N, s)`` array."""
        return self.nodes[:-1, None] + np.outer(self.steps, c)

    def __len__(self):
        return self.N


def uniform_mesh(T: float, N: int) -> Mesh:
    return graded_mesh(T, N, 1.0)


def graded_mesh(T: float, N: int, gamma: float) -> Mesh:
    """Nodes ``t_n = T (n/N)^gamma``."""
    if gamma < 1:
        raise ValueError("grading exponent must be >= 1")
    if N < 1:
        raise ValueError("N must be a positive integer")
    if T <= 0:
        raise ValueError("T must be positive")
    t = T * (np.arange(N + 1) / N) ** gamma
    t[-1] = T
    return Mesh(t)


def refined_graded_mesh(T: float, N: int, gamma: float) -> Mesh:
    """The ``2N``-step graded mesh whose even nodes coincide with ``graded_mesh(T, N, gamma)``."""
    return graded_mesh(T, 2 * N, gamma)


def bisect_mesh(mesh: Mesh) -> Mesh:
    """Halve every step; the original nodes sit at the even indices."""
    t = mesh.nodes
    fine = np.empty(2 * t.size - 1)
    fine[::2] = t
    fine[1::2] = 0.5 * (t[:-1] + t[1:])
    return Mesh(fine)


def two_singularity_mesh(
    T: float, N: int, sigma: float, gamma1: float, gamma2: float
) -> Mesh:
    """Mesh graded towards both ``t = 0`` and ``t = sigma``.

    The first ``N1 = floor(N sigma / T)`` steps cover ``[0, sigma]`` with sizes
    proportional to ``n^(g1-1) (N1-n+1)^(g2-1)``; the remaining nodes are
    ``sigma + (T - sigma) ((k - N1)/(N - N1))^g2``.
    """
    if not 0 < sigma < T:
        raise ValueError("sigma must lie strictly inside (0, T)")
    if gamma1 < 1 or gamma2 < 1:
        raise ValueError("grading exponents must be >= 1")
    N1 = floor(N * sigma / T)
    if N1 < 2 or N - N1 < 2:
        raise ValueError("N too small to resolve both singularities")

    n = np.arange(1, N1 + 1, dtype=float)
    # work in logs to keep large exponents finite
    logw = (gamma1 - 1) * np.log(n) + (gamma2 - 1) * np.log(N1 - n + 1)
    w = np.exp(logw - logw.max())
    steps = sigma * w / w.sum()
    first = np.concatenate(([0.0], np.cumsum(steps)))
    first[-1] = sigma

    k = np.arange(N1 + 1, N + 1)
    rest = sigma + (T - sigma) * ((k - N1) / (N - N1)) ** gamma2
    rest[-1] = T
    return Mesh(np.concatenate((first, rest)))


def quasi_uniformity(mesh: Mesh) -> float:
    """``c = max_i (tau_i/tau_{i-1} + tau_{i-1}/tau_i) / 2``; equals 1 on uniform meshes."""
    if mesh.N < 2:
        raise ValueError("quasi-uniformity needs at least two steps")
    tau = mesh.steps
    r = tau[1:] / tau[:-1]
    return float(0.5 * np.max(r + 1.0 / r))


def _parse_params(text: str) -> dict:
    out = {}
    for item in filter(None, (p.strip() for p in text.split(","))):
        key, sep, value = item.partition("=")
        if not sep:
            raise ValueError(f"expected key=value, got {item!r}")
        out[key.strip().lower()] = value.strip()
    return out


def parse_mesh(spec: str) -> Mesh:
    """Build a mesh from strings such as ``graded:T=1,N=128,gamma=6``.

    Families: ``graded`` (keys T, N, gamma), ``uniform`` (T, N) and
    ``twosing`` (T, N, sigma, g1, g2).
    """
    family, _, rest = spec.partition(":")
    p = _parse_params(rest)
    family = family.strip().lower()
    try:
        T = float(p.get("t", 1.0))
        N = int(p["n"])
        if family == "graded":
            return graded_mesh(T, N, float(p.get("gamma", 1.0)))
        if family == "uniform":
            return uniform_mesh(T, N)
        if family == "twosing":
            return two_singularity_mesh(
                T, N, float(p["sigma"]), float(p["g1"]), float(p["g2"])
            )
    except KeyError as exc:
        raise ValueError(f"mesh spec {spec!r} is missing {exc.args[0]!r}") from None
    raise ValueError(f"unknown mesh family {family!r}")
