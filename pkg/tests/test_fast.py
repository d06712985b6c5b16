import numpy as np
import pytest

from gcqkit.direct import default_rule, gcq_direct, sample_stages
from gcqkit.fast import FastConvolution, gcq_fast, history_span
from gcqkit.kernels import KERNEL_IDS, PowerData, builtin_kernel, exact_convolution
from gcqkit.mesh import Mesh, graded_mesh, two_singularity_mesh, uniform_mesh
from gcqkit.tableau import make_tableau

TOL = 1e-12


def _random_graded(rng, N):
    return graded_mesh(float(rng.uniform(0.5, 2.0)), N, float(rng.uniform(1.0, 4.0)))


@pytest.mark.parametrize("kid", KERNEL_IDS)
@pytest.mark.parametrize("name", ["radau2", "radau3"])
def test_fast_matches_direct_on_random_meshes(kid, name, rng):
    tab = make_tableau(name)
    k = builtin_kernel(kid, 0.6)
    for N in (16, 64):
        for _ in range(3):
            m = _random_graded(rng, N)
            for data in (lambda t: np.ones_like(t), PowerData(0.3), np.sin):
                f = sample_stages(data, m, tab)
                ref = gcq_direct(k, m, tab, f, tol=TOL).u
                got = gcq_fast(k, m, tab, f, tol=TOL).u
                assert np.abs(got - ref).max() <= 100 * TOL * (1 + np.abs(ref).max())


def test_short_mesh_is_local_only():
    tab = make_tableau("radau2")
    k = builtin_kernel("fracint", 0.5)
    m = graded_mesh(1.0, 3, 2.0)
    f = sample_stages(PowerData(0.5), m, tab)
    res = gcq_fast(k, m, tab, f, tol=TOL)
    assert res.diagnostics["n0"] == 3
    ref = gcq_direct(k, m, tab, f, tol=1e-14).u
    np.testing.assert_allclose(res.u, ref, rtol=10 * TOL, atol=10 * TOL)


def test_first_step_equals_newest_weight_times_data():
    from gcqkit.tableau import matrix_power

    tab = make_tableau("radau2")
    k = builtin_kernel("fracint", 0.5)
    eng = FastConvolution(k, tab, n0=5, tol=TOL, t_span=(1e-3, 1.0))
    f = np.array([1.0, 2.0])
    _, U = eng.step(0.1, f)
    np.testing.assert_allclose(U, matrix_power(tab, 0.1, 0.5) @ f, rtol=1e-11)


def test_census_is_consistent():
    tab = make_tableau("radau2")
    k = builtin_kernel("fracint", 0.5)
    m = graded_mesh(1.0, 40, 3.0)
    res = gcq_fast(k, m, tab, sample_stages(PowerData(0.5), m, tab), tol=TOL)
    d = res.diagnostics
    assert d["steps"] == 40 and d["n0"] == 5
    assert d["peak_node_vectors"] <= d["nq_loc"] + d["nq_his"] + d["n0"] * tab.s
    assert len(res.diagnostics["log"]) == 40
    assert max(e["nq_loc"] for e in d["log"]) == d["nq_loc"]
    assert d["nq_loc"] >= d["nq_loc_budget"]


def test_local_count_independent_of_N():
    tab = make_tableau("radau2")
    k = builtin_kernel("fracint", 0.5)
    counts = set()
    for N in (64, 128, 256):
        m = graded_mesh(1.0, N, 3.0)
        d = gcq_fast(k, m, tab, sample_stages(PowerData(0.5), m, tab), tol=1e-14).diagnostics
        counts.add((d["nq_loc"], d["nq_loc_budget"]))
    assert len(counts) == 1


def test_deterministic():
    tab = make_tableau("radau3")
    k = builtin_kernel("ka", 0.4)
    m = two_singularity_mesh(1.0, 40, 0.3, 3.0, 2.0)
    f = sample_stages(np.cos, m, tab)
    a = gcq_fast(k, m, tab, f).u
    b = gcq_fast(k, m, tab, f).u
    np.testing.assert_array_equal(a, b)


def test_trapezoid_history_matches_exact():
    tab = make_tableau("radau2")
    k = builtin_kernel("ka", 0.5)
    d = PowerData(0.2)
    errs = []
    for N in (32, 64, 128):
        m = graded_mesh(1.0, N, 3 / 0.7)
        res = gcq_fast(k, m, tab, sample_stages(d, m, tab), history_rule="trapezoid")
        errs.append(np.abs(res.u - exact_convolution(k, d, m.nodes[1:])).max())
    assert np.log2(errs[-2] / errs[-1]) == pytest.approx(3.0, abs=0.2)


def test_streaming_api_matches_batch(rng):
    tab = make_tableau("radau2")
    k = builtin_kernel("kb", 0.5)
    m = graded_mesh(1.0, 20, 2.0)
    f = rng.standard_normal((20, 2, 3))
    batch = gcq_fast(k, m, tab, f).U
    eng = FastConvolution(k, tab, mesh=m)
    for n, tau in enumerate(m.steps):
        eng.begin_step(tau)
        pending = eng.pending(3)
        eng.commit(f[n])
        # pending + newest weight applied to f_n reproduces the batch stage vector
        W_nn = np.real(tab.eigvecs @ np.diag(k.K(1 / (tau * tab.eigvals))) @ tab.eigvecs_inv)
        np.testing.assert_allclose(pending + W_nn @ f[n], batch[n], rtol=1e-10, atol=1e-12)


def test_history_span():
    m = uniform_mesh(1.0, 10)
    lo, hi = history_span(m, 5)
    assert lo == pytest.approx(0.5) and hi == 1.0
    assert history_span(uniform_mesh(1.0, 3), 5) == pytest.approx((1 / 3, 1.0))


def test_span_violation_without_mesh():
    tab = make_tableau("radau2")
    eng = FastConvolution(builtin_kernel("fracint", 0.5), tab, n0=1, t_span=(0.5, 1.0))
    eng.step(0.6, np.ones(2))
    with pytest.raises(ValueError):
        for _ in range(5):
            eng.step(0.6, np.ones(2))


def test_invalid_arguments():
    tab = make_tableau("radau2")
    k = builtin_kernel("fracint", 0.5)
    with pytest.raises(ValueError):
        FastConvolution(k, tab, tol=1e-16, mesh=uniform_mesh(1, 4))
    eng = FastConvolution(k, tab, mesh=uniform_mesh(1, 4))
    with pytest.raises(ValueError):
        eng.step(0.0, np.ones(2))
    assert isinstance(Mesh(np.array([0.0, 1.0])).N, int)
