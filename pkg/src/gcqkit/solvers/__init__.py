"""Equation solvers built on the convolution engines."""

from .derivatives import discrete_derivative, discrete_second_derivative
from .fractional import (
    SolverRun,
    fode_example_data,
    solve_fode,
    solve_subdiffusion,
    subdiffusion_example_data,
)
from .report import ErrorReport, MeshMismatchError, eoc_table, max_error_report
from .spatial import SpatialOperator, compact_laplacian
from .westervelt import (
    FixedPointError,
    solve_westervelt,
    westervelt_operator,
    westervelt_source,
)

__all__ = [
    "ErrorReport",
    "FixedPointError",
    "MeshMismatchError",
    "SolverRun",
    "SpatialOperator",
    "compact_laplacian",
    "discrete_derivative",
    "discrete_second_derivative",
    "eoc_table",
    "fode_example_data",
    "max_error_report",
    "solve_fode",
    "solve_subdiffusion",
    "solve_westervelt",
    "subdiffusion_example_data",
    "westervelt_operator",
    "westervelt_source",
]
