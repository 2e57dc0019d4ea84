"""Helmholtz and Laplace fundamental solutions in 2D.

``G_k(r) = (i/4) H0(kr)`` for ``k > 0`` and ``G_0(r) = -ln(r) / (2 pi)``.
Besides the kernel and its radial derivative, :func:`kernel_values` returns
the coefficients of ``ln r`` in both, which the singular quadrature rules
integrate exactly.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

from ..specfun import DomainError, _bessel01_array, bessel01

_INV_2PI = 1.0 / (2.0 * math.pi)


@njit(cache=True)
def kernel_values(k, r):
    """Return ``(G, dG/dr, A, A')`` at distance ``r > 0``.

    ``A`` and ``A'`` are the (real) coefficients of ``ln r`` in ``G`` and
    ``dG/dr``: ``-J0(kr)/(2 pi)`` and ``k J1(kr)/(2 pi)``.
    """
    if k == 0.0:
        return (
            complex(-math.log(r) * _INV_2PI, 0.0),
            complex(-_INV_2PI / r, 0.0),
            -_INV_2PI,
            0.0,
        )
    j0, j1, y0, y1 = bessel01(k * r)
    g = complex(-0.25 * y0, 0.25 * j0)
    gp = complex(0.25 * k * y1, -0.25 * k * j1)
    return g, gp, -j0 * _INV_2PI, k * j1 * _INV_2PI


@njit(cache=True)
def kernel_g_only(k, r):
    if k == 0.0:
        return complex(-math.log(r) * _INV_2PI, 0.0)
    j0, j1, y0, y1 = bessel01(k * r)
    return complex(-0.25 * y0, 0.25 * j0)


def _check_args(k, r):
    if not (np.isfinite(k) and k >= 0.0):
        raise DomainError("wavenumber must be finite and >= 0")
    arr = np.asarray(r, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr <= 0.0):
        raise DomainError("distance must be finite and > 0")
    return arr


def kernel_G(k: float, r):
    """Fundamental solution as a function of the distance ``r``."""
    arr = _check_args(k, r)
    if k == 0.0:
        out = -np.log(arr) * _INV_2PI + 0j
    else:
        v = _bessel01_array(np.ascontiguousarray(k * arr.ravel()))
        out = (-0.25 * v[2] + 0.25j * v[0]).reshape(arr.shape)
    return out.item() if out.shape == () else out


def kernel_dG(k: float, r):
    """Radial derivative ``dG/dr``."""
    arr = _check_args(k, r)
    if k == 0.0:
        out = -_INV_2PI / arr + 0j
    else:
        v = _bessel01_array(np.ascontiguousarray(k * arr.ravel()))
        out = (0.25 * k * v[3] - 0.25j * k * v[1]).reshape(arr.shape)
    return out.item() if out.shape == () else out


def gradient_G(k: float, z):
    """Gradient of ``G_k`` at the points ``z`` (shape ``(..., 2)``)."""
    z = np.asarray(z, dtype=float)
    r = np.linalg.norm(z, axis=-1)
    dg = np.asarray(kernel_dG(k, r))
    return (dg / r)[..., None] * z
