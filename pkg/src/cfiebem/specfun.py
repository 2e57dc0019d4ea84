"""Bessel and Hankel functions of order 0 and 1 for real positive arguments.

Three evaluation branches are used:

* ``x <= 8``: ascending power series (Y via the logarithmic series).
* ``8 < x < 25``: Miller's backward recurrence for J, normalized by
  ``J0 + 2*sum(J_2k) = 1``, and Neumann series for Y0 and Y1.
* ``x >= 25``: Hankel's asymptotic expansion.

The scalar kernels are compiled with numba and are used directly by the
Helmholtz kernel evaluation in :mod:`cfiebem.operators.kernels`.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

EULER_GAMMA = 0.57721566490153286061
SERIES_SWITCH = 8.0
ASYMPTOTIC_SWITCH = 25.0
MAX_ARGUMENT = 1.0e4

_TWO_OVER_PI = 2.0 / math.pi


class DomainError(ValueError):
    """Argument outside the supported domain."""


def _series_tables(nterms):
    c0 = np.empty(nterms)
    c1 = np.empty(nterms)
    d0 = np.empty(nterms)
    d1 = np.empty(nterms)
    fact = 1.0
    h = 0.0
    for m in range(nterms):
        if m > 0:
            fact *= m
            h += 1.0 / m
        c0[m] = 1.0 / (fact * fact)
        c1[m] = 1.0 / (fact * fact * (m + 1))
        d0[m] = h * c0[m]
        d1[m] = (2.0 * h + 1.0 / (m + 1)) * c1[m]
    return c0, c1, d0, d1


_C0, _C1, _D0, _D1 = _series_tables(32)


@njit(cache=True)
def _series01(x):
    z = -0.25 * x * x
    az = -z
    if az <= 1.0:
        n = 12
    elif az <= 4.0:
        n = 18
    else:
        n = 31
    j0 = _C0[n]
    s1 = _C1[n]
    y0s = _D0[n]
    y1s = _D1[n]
    for m in range(n - 1, -1, -1):
        j0 = j0 * z + _C0[m]
        s1 = s1 * z + _C1[m]
        y0s = y0s * z + _D0[m]
        y1s = y1s * z + _D1[m]
    half = 0.5 * x
    j1 = half * s1
    lg = math.log(half) + EULER_GAMMA
    y0 = _TWO_OVER_PI * (lg * j0 - y0s)
    y1 = -_TWO_OVER_PI / x + _TWO_OVER_PI * lg * j1 - half * y1s / math.pi
    return j0, j1, y0, y1


@njit(cache=True)
def _miller01(x):
    m = 2 * int((x + 50.0) / 2.0)
    jp1 = 0.0  # J_{n+1}
    jn = 1e-30  # J_n
    norm = 0.0
    neu0 = 0.0
    neu1 = 0.0
    j1 = 0.0
    for n in range(m, 0, -1):
        jm1 = (2.0 * n / x) * jn - jp1
        idx = n - 1
        if idx > 0:
            if idx % 2 == 0:
                kk = idx // 2
                sgn = 1.0 if kk % 2 == 0 else -1.0
                norm += 2.0 * jm1
                neu0 += sgn * jm1 / kk
            else:
                kk = (idx + 1) // 2
                sgn = 1.0 if kk % 2 == 0 else -1.0
                # jn is J_{2k}, jp1 is J_{2k+1}; pair J_{2k-1} - J_{2k+1}
                neu1 += sgn * (jm1 - jp1) / kk
        if idx == 1:
            j1 = jm1
        jp1 = jn
        jn = jm1
    j0 = jn
    norm += j0
    j0 /= norm
    j1 /= norm
    neu0 /= norm
    neu1 /= norm
    lg = math.log(0.5 * x) + EULER_GAMMA
    y0 = _TWO_OVER_PI * (lg * j0 - 2.0 * neu0)
    y1 = _TWO_OVER_PI * (-j0 / x + lg * j1 + neu1)
    return j0, j1, y0, y1


@njit(cache=True)
def _hankel_pq(mu, x):
    p = 1.0
    q = 0.0
    term = 1.0
    last = 1.0
    for m in range(1, 80):
        odd = 2 * m - 1
        term *= (mu - odd * odd) / (8.0 * m * x)
        a = abs(term)
        if a > last:
            break
        r = m % 4
        if r == 1:
            q += term
        elif r == 2:
            p -= term
        elif r == 3:
            q -= term
        else:
            p += term
        if a < 1e-17:
            break
        last = a
    return p, q


@njit(cache=True)
def _asymptotic01(x):
    scale = math.sqrt(_TWO_OVER_PI / x)
    p0, q0 = _hankel_pq(0.0, x)
    p1, q1 = _hankel_pq(4.0, x)
    c0 = x - 0.25 * math.pi
    c1 = x - 0.75 * math.pi
    cs0 = math.cos(c0)
    sn0 = math.sin(c0)
    cs1 = math.cos(c1)
    sn1 = math.sin(c1)
    j0 = scale * (p0 * cs0 - q0 * sn0)
    y0 = scale * (p0 * sn0 + q0 * cs0)
    j1 = scale * (p1 * cs1 - q1 * sn1)
    y1 = scale * (p1 * sn1 + q1 * cs1)
    return j0, j1, y0, y1


@njit(cache=True)
def bessel01(x):
    """Return ``(J0, J1, Y0, Y1)`` at ``x > 0``."""
    if x <= SERIES_SWITCH:
        return _series01(x)
    if x < ASYMPTOTIC_SWITCH:
        return _miller01(x)
    return _asymptotic01(x)


@njit(cache=True)
def _bessel01_array(x):
    n = x.size
    out = np.empty((4, n))
    for i in range(n):
        xi = x[i]
        if xi == 0.0:
            out[0, i] = 1.0
            out[1, i] = 0.0
            out[2, i] = -np.inf
            out[3, i] = -np.inf
        else:
            j0, j1, y0, y1 = bessel01(xi)
            out[0, i] = j0
            out[1, i] = j1
            out[2, i] = y0
            out[3, i] = y1
    return out


def _prepare(order, x, strictly_positive):
    if order not in (0, 1):
        raise DomainError(f"order must be 0 or 1, got {order!r}")
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("argument must be finite")
    if strictly_positive:
        if np.any(arr <= 0.0):
            raise DomainError("argument must be > 0")
    elif np.any(arr < 0.0):
        raise DomainError("argument must be >= 0")
    if np.any(arr > MAX_ARGUMENT):
        raise DomainError(f"argument must be <= {MAX_ARGUMENT:g}")
    return arr


def _finish(values, shape):
    if shape == ():
        return values.reshape(()).item()
    return values.reshape(shape)


def bessel_j(order: int, x):
    """Bessel function of the first kind J_order(x), order 0 or 1, x >= 0."""
    arr = _prepare(order, x, strictly_positive=False)
    vals = _bessel01_array(arr.ravel())
    return _finish(vals[order], arr.shape)


def bessel_y(order: int, x):
    """Bessel function of the second kind Y_order(x), order 0 or 1, x > 0."""
    arr = _prepare(order, x, strictly_positive=True)
    vals = _bessel01_array(arr.ravel())
    return _finish(vals[2 + order], arr.shape)


def hankel1(order: int, x):
    """Hankel function of the first kind, ``J_order(x) + i Y_order(x)``."""
    arr = _prepare(order, x, strictly_positive=True)
    vals = _bessel01_array(arr.ravel())
    h = vals[order] + 1j * vals[2 + order]
    return _finish(h, arr.shape)


def _branch(name: str, x) -> np.ndarray:
    """Evaluate one branch directly (for continuity checks); rows J0, J1, Y0, Y1."""
    fn = {"series": _series01, "miller": _miller01, "asymptotic": _asymptotic01}[name]
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    return np.array([fn(float(v)) for v in xs]).T
