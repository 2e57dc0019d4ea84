"""Adaptive Galerkin boundary element solver for exterior Helmholtz problems."""

__version__ = "0.1.0"
