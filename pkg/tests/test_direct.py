import numpy as np
import pytest
from hypothesis import given, strategies as st

from gcqkit.direct import (
    contour_weights,
    default_rule,
    gcq_direct,
    gcq_weight_matrix,
    gcq_weights,
    sample_stages,
)
from gcqkit.kernels import KERNEL_IDS, PowerData, builtin_kernel, exact_convolution
from gcqkit.mesh import graded_mesh, uniform_mesh
from gcqkit.quadrature import build_local_contour
from gcqkit.tableau import make_tableau, matrix_power


def _rule(k, m, tol=1e-13):
    return default_rule(k, (m.tau_min, m.T), tol)


@pytest.mark.parametrize("name", ["radau2", "radau3", "lobatto4"])
@pytest.mark.parametrize("alpha", [0.3, 0.8])
def test_newest_weight_is_matrix_power(name, alpha):
    # W_nn = K((tau A)^-1) = (tau A)^alpha for the fractional integral
    tab = make_tableau(name)
    k = builtin_kernel("fracint", alpha)
    m = graded_mesh(1.0, 6, 2.0)
    rule = _rule(k, m)
    for n in (1, 4, 6):
        W = gcq_weights(k, m, tab, rule, n, n)
        expect = matrix_power(tab, m.steps[n - 1], alpha)
        np.testing.assert_allclose(W, expect, rtol=1e-10, atol=1e-12)


@pytest.mark.parametrize("kid", KERNEL_IDS)
def test_contour_and_real_axis_weights_agree(kid):
    tab = make_tableau("radau2")
    k = builtin_kernel(kid, 0.5)
    m = graded_mesh(1.0, 8, 3.0)
    rule = _rule(k, m, 1e-14) if k.rule == "gauss" else default_rule(k, None, 1e-14)
    for n, j in [(3, 1), (5, 5), (8, 4)]:
        contour = build_local_contour(tab, m.steps[j - 1 : n], n - j + 1, 1e-14)
        Wc = contour_weights(k, m, tab, n, j, contour)
        Wr = gcq_weights(k, m, tab, rule, n, j)
        assert np.abs(Wc - Wr).max() <= 1e-11 * (1 + np.abs(Wr).max())


def test_uniform_mesh_weights_are_toeplitz():
    tab = make_tableau("radau3")
    k = builtin_kernel("fracint", 0.4)
    m = uniform_mesh(1.0, 6)
    W = gcq_weight_matrix(k, m, tab, _rule(k, m))
    for d in range(6):
        diag = [W[n + d, n] for n in range(6 - d)]
        for block in diag[1:]:
            np.testing.assert_allclose(block, diag[0], rtol=1e-12, atol=1e-14)


def test_composition_rule_at_stage_level():
    # discrete operators compose like their transfer functions
    tab = make_tableau("radau2")
    m = graded_mesh(1.0, 4, 2.0)

    def op(alpha):
        k = builtin_kernel("fracint", alpha)
        W = gcq_weight_matrix(k, m, tab, _rule(k, m, 1e-14))
        return W.transpose(0, 2, 1, 3).reshape(8, 8)

    np.testing.assert_allclose(op(0.3) @ op(0.4), op(0.7), atol=1e-12)


def test_engine_matches_weight_sum(rng):
    tab = make_tableau("radau2")
    k = builtin_kernel("kb", 0.6)
    m = graded_mesh(1.0, 7, 2.5)
    f = rng.standard_normal((7, 2))
    rule = _rule(k, m)
    res = gcq_direct(k, m, tab, f, rule=rule)
    W = gcq_weight_matrix(k, m, tab, rule)
    expect = np.einsum("njab,jb->na", W, f)
    np.testing.assert_allclose(res.U, expect, rtol=1e-11, atol=1e-13)
    np.testing.assert_array_equal(res.u, res.U[:, -1])


@given(st.floats(-3, 3), st.floats(-3, 3))
def test_linearity(a, b):
    tab = make_tableau("radau2")
    k = builtin_kernel("fracint", 0.5)
    m = graded_mesh(1.0, 8, 3.0)
    rule = _rule(k, m)
    f = sample_stages(np.sin, m, tab)
    g = sample_stages(PowerData(0.3), m, tab)
    lhs = gcq_direct(k, m, tab, a * f + b * g, rule=rule).u
    rhs = a * gcq_direct(k, m, tab, f, rule=rule).u + b * gcq_direct(k, m, tab, g, rule=rule).u
    np.testing.assert_allclose(lhs, rhs, atol=1e-12 * (1 + abs(a) + abs(b)))


def test_vector_data_runs_per_component(rng):
    tab = make_tableau("radau2")
    k = builtin_kernel("ka", 0.5)
    m = graded_mesh(1.0, 5, 2.0)
    f = rng.standard_normal((5, 2, 3))
    res = gcq_direct(k, m, tab, f)
    for c in range(3):
        np.testing.assert_allclose(res.u[:, c], gcq_direct(k, m, tab, f[:, :, c]).u, rtol=1e-14)


def test_fractional_integral_converges():
    tab = make_tableau("radau2")
    k = builtin_kernel("fracint", 0.5)
    d = PowerData(0.5)
    errs = []
    for N in (32, 64, 128):
        m = graded_mesh(1.0, N, 3.0)
        u = gcq_direct(k, m, tab, sample_stages(d, m, tab)).u
        errs.append(np.abs(u - exact_convolution(k, d, m.nodes[1:])).max())
    assert np.all(np.diff(errs) < 0)
    assert np.log2(errs[-2] / errs[-1]) == pytest.approx(3.0, abs=0.15)


def test_input_validation():
    tab = make_tableau("radau2")
    k = builtin_kernel("fracint", 0.5)
    m = uniform_mesh(1.0, 4)
    with pytest.raises(ValueError):
        gcq_direct(k, m, tab, np.ones((3, 2)))
    with pytest.raises(ValueError):
        gcq_direct(k, m, tab, np.ones((4, 3)))
    with pytest.raises(IndexError):
        gcq_weights(k, m, tab, _rule(k, m), 2, 3)
    other = default_rule(builtin_kernel("fracint", 0.3), (0.25, 1.0), 1e-12)
    with pytest.raises(ValueError):
        gcq_direct(k, m, tab, np.ones((4, 2)), rule=other)
    small = build_local_contour(tab, [1.0], 1, 1e-12)
    with pytest.raises(ValueError):
        contour_weights(k, graded_mesh(1.0, 4, 6.0), tab, 4, 1, small)


def test_history_recording():
    tab = make_tableau("radau2")
    k = builtin_kernel("fracint", 0.5)
    m = uniform_mesh(1.0, 3)
    res = gcq_direct(k, m, tab, np.ones((3, 2)), record_history=True)
    assert res.diagnostics["y_history"].shape[0] == 3
