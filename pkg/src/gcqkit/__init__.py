"""Runge-Kutta generalized convolution quadrature on graded time meshes."""

__version__ = "0.1.0"
