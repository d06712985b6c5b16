import numpy as np
import pytest
from math import gamma
from scipy.integrate import quad
import mpmath

from gcqkit.kernels import (
    KERNEL_IDS,
    PowerData,
    builtin_kernel,
    density_from_transfer,
    exact_convolution,
    exact_solution,
    parse_kernel,
    scalar_ode_solution,
)
from gcqkit.mittag_leffler import mittag_leffler


@pytest.mark.parametrize("kid", KERNEL_IDS)
@pytest.mark.parametrize("alpha", [0.2, 0.5, 0.9])
def test_density_matches_jump_of_transfer(kid, alpha):
    k = builtin_kernel(kid, alpha)
    x = np.geomspace(1e-4, 1e4, 40)
    # the shifted kernel's recursion runs at x + shift while G is sampled at x
    jump = density_from_transfer(lambda z: k.K(z - k.shift), x)
    np.testing.assert_allclose(k.G(x), jump, rtol=1e-12)


@pytest.mark.parametrize("kid", KERNEL_IDS)
@pytest.mark.parametrize("z", [0.3, 2.0, 15.0])
def test_stieltjes_representation(kid, z):
    k = builtin_kernel(kid, 0.4)
    # K(z) = int_0^inf G(x) / (z + shift + x) dx
    f = lambda x: k.G(x) / (z + k.shift + x)
    val = quad(f, 0, 1, limit=200)[0] + quad(f, 1, np.inf, limit=200)[0]
    assert val == pytest.approx(k.K(z).real, rel=1e-8)


def _time_kernel(kid, alpha):
    """``k(r) = r^(p-1) smooth(r)``; returns ``(smooth, p)``."""
    if kid == "fracint":
        return lambda r: 1 / gamma(alpha), alpha
    if kid == "kb":
        return lambda r: np.exp(-r) / gamma(alpha), alpha
    if kid == "fracint_dual":
        return lambda r: 1 / gamma(1 - alpha), 1 - alpha
    return lambda r: mittag_leffler(alpha, alpha, r**alpha), alpha


@pytest.mark.parametrize("kid", KERNEL_IDS)
@pytest.mark.parametrize("alpha,beta", [(0.5, 0.5), (0.3, -0.2), (0.7, 1.5)])
def test_exact_convolution_against_quadrature(kid, alpha, beta):
    k = builtin_kernel(kid, alpha)
    smooth, p = _time_kernel(kid, alpha)
    for t in (0.3, 1.0, 2.5):
        # int_0^t r^(p-1) smooth(r) (t - r)^beta dr with r = v^(1/p)
        def f(v):
            r = float(v) ** (1 / p)
            # rounding can push r onto the integrable endpoint singularity
            return smooth(r) * (t - r) ** beta / p if r < t else 0.0

        val = float(mpmath.quad(f, [0, t**p / 2, t**p]))
        got = exact_convolution(k, PowerData(beta), t)
        assert got == pytest.approx(val, rel=1e-10)


def test_power_data():
    d = PowerData(0.5, 2.0)
    np.testing.assert_allclose(d([0.0, 4.0]), [0.0, 4.0])
    with pytest.raises(ValueError):
        PowerData(-1.0)


def test_parse_kernel():
    k = parse_kernel("fracint:alpha=0.5")
    assert k.name == "fracint" and k.alpha == 0.5
    assert parse_kernel("kb:alpha=0.4").shift == 1.0
    assert parse_kernel("ka:alpha=0.7").rule == "trapezoid"
    with pytest.raises(ValueError):
        parse_kernel("fracint")
    with pytest.raises(ValueError):
        parse_kernel("bessel:alpha=0.5")
    with pytest.raises(ValueError):
        builtin_kernel("fracint", 1.0)


def test_dual_kernel_parameters():
    k = builtin_kernel("fracint_dual", 0.3)
    assert k.alpha == pytest.approx(0.7)
    assert k.order == 0.3
    assert k.K(2.0) == pytest.approx(2.0 ** (-0.7))


def test_density_rejects_nonpositive():
    with pytest.raises(ValueError):
        density_from_transfer(lambda z: z**-0.5, np.array([0.0, 1.0]))


def test_exact_solutions():
    t = np.array([0.0, 0.5, 1.0])
    p = {"beta1": 0.5, "beta2": 0.9, "sigma": 0.28}
    u = exact_solution("example3", p, t)
    assert u[0] == 1.0
    assert u[2] == pytest.approx(2 + 0.72**0.9)
    u4 = exact_solution("example4", {"alpha": 0.5}, 0.25, x=0.0, y=0.0)
    assert u4 == pytest.approx(0.5)
    e1 = exact_solution("example1", {"alpha": 0.5, "beta": 0.5}, 1.0)
    assert e1 == pytest.approx(gamma(1.5))
    with pytest.raises(ValueError):
        exact_solution("example4", {"alpha": 0.5}, 1.0)
    with pytest.raises(ValueError):
        exact_solution("example9", {}, 1.0)


@pytest.mark.parametrize("x,beta", [(0.0, 0.5), (2.0, 0.5), (50.0, -0.3), (0.7, 2.0)])
def test_scalar_ode_solution(x, beta):
    for t in (0.1, 1.0, 3.0):
        val = quad(lambda s: np.exp(-x * (t - s)), 0, t, weight="alg", wvar=(beta, 0))[0]
        assert scalar_ode_solution(x, beta, t) == pytest.approx(val, rel=1e-10)
