import numpy as np
import pytest

from gcqkit.mesh import graded_mesh
from gcqkit.solvers import MeshMismatchError, SolverRun, eoc_table, max_error_report
from gcqkit.tableau import make_tableau


def _run(mesh, values):
    return SolverRun(mesh, make_tableau("radau2"), {}, np.asarray(values), np.empty(0))


def test_run_against_itself_is_zero():
    m = graded_mesh(1.0, 8, 2.0)
    r = _run(m, np.sin(m.nodes))
    assert max_error_report(r, np.sin).max_error == 0.0
    fine = graded_mesh(1.0, 16, 2.0)
    rf = _run(fine, np.sin(fine.nodes))
    assert max_error_report(r, rf).max_error == 0.0


def test_refined_reference_alignment():
    coarse = graded_mesh(1.0, 8, 2.0)
    fine = graded_mesh(1.0, 16, 2.0)
    rc = _run(coarse, coarse.nodes**2)
    rf = _run(fine, fine.nodes**2 + 1e-3)
    rep = max_error_report(rc, rf)
    assert rep.max_error == pytest.approx(1e-3)
    with pytest.raises(MeshMismatchError):
        max_error_report(rc, _run(graded_mesh(1.0, 16, 3.0), np.zeros(17)))
    with pytest.raises(MeshMismatchError):
        max_error_report(rc, _run(graded_mesh(1.0, 12, 2.0), np.zeros(13)))


def test_grid_function_norm():
    m = graded_mesh(1.0, 4, 1.0)
    r = _run(m, np.zeros((5, 3)))
    rep = max_error_report(r, lambda t: np.ones((np.size(t), 3)), norm=lambda v: np.sqrt((v**2).sum(axis=1)))
    assert rep.max_error == pytest.approx(np.sqrt(3))


def test_eoc_table_synthetic():
    rows = eoc_table([(16, 1.0), (32, 1 / 8), (64, 1 / 64)])
    assert rows[0][2] is None
    assert rows[1][2] == pytest.approx(3.0) and rows[2][2] == pytest.approx(3.0)


def test_eoc_table_power_law():
    rows = eoc_table([(N, 7.0 * N**-3.0) for N in (8, 16, 32, 64)])
    assert all(r[2] == pytest.approx(3.0) for r in rows[1:])


def test_eoc_constant_and_arithmetic():
    assert eoc_table([(4, 0.5), (8, 0.5)])[1][2] == 0.0
    assert eoc_table([(16, 1e-2), (32, 1.3e-3)])[1][2] == pytest.approx(2.943, abs=1e-3)


def test_eoc_rejects_non_doubling():
    with pytest.raises(ValueError):
        eoc_table([(16, 1.0), (48, 0.1)])
