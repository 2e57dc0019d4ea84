"""Galerkin matrices of the Helmholtz boundary integral operators.

All four operators are built in one sweep over unordered panel pairs.
For every quadrature point pair ``(x, y)`` with weight ``w`` the sweep
adds ``w * k(x, y) * b_i(x) * b_j(y)`` to both orientations ``(i, j)`` and
``(j, i)`` of the pair, so complex symmetry of V and W and the duality
``K' = K^T`` hold up to rounding.

Identical panels use a split ``F = A ln|s - t| + B`` where ``A`` is known
in closed form (``-J0(kr) / (2 pi)`` for the single layer); the log part
is integrated with log-Gauss rules.  Weights come in pairs ``(wF, wA)``
and a point pair contributes ``wF * F + wA * A``.

W uses the Maue form ``<W v, w> = <V v', w'> - k^2 <V(v nu), w nu>``.
"""

from __future__ import annotations

import logging
import math

import numpy as np
from numba import njit

from ..geometry import Mesh, curve_point
from .kernels import kernel_values
from .panels import ETA, Panels, PairRules, build_panels, pair_rules
from .spaces import GalerkinMatrix

log = logging.getLogger(__name__)

F_V = 1
F_K = 2
F_KP = 4
F_W = 8
F_V1 = 16

_NLOC = 35


@njit(cache=True)
def _accumulate(loc, k, flags, xx, xy, xtx, xty, xt, xh, yx, yy, ytx, yty, yt, yh, wF, wA):
    dx = xx - yx
    dy = xy - yy
    r = math.sqrt(dx * dx + dy * dy)
    g, gp, ag, agp = kernel_values(k, r)
    gv = wF * g + wA * ag
    gpv = wF * gp + wA * agp
    if flags & F_V:
        loc[0] += gv
    if flags & (F_K | F_KP):
        # nu = (t_y, -t_x)
        dny = (dx * yty - dy * ytx) / r
        dnx = (dx * xty - dy * xtx) / r
        kdy = -gpv * dny  # d/dnu(y) G(x - y)
        kdx = gpv * dnx  # d/dnu(x) G(x - y)
        by0 = 1.0 - yt
        by1 = yt
        by2 = 4.0 * yt * (1.0 - yt)
        bx0 = 1.0 - xt
        bx1 = xt
        bx2 = 4.0 * xt * (1.0 - xt)
        loc[1] += kdy * by0
        loc[2] += kdy * by1
        loc[3] += kdy * by2
        loc[4] += kdx * bx0
        loc[5] += kdx * bx1
        loc[6] += kdx * bx2
    if flags & F_W:
        bx = (1.0 - xt, xt, 4.0 * xt * (1.0 - xt))
        by = (1.0 - yt, yt, 4.0 * yt * (1.0 - yt))
        dbx = (-1.0 / xh, 1.0 / xh, (4.0 - 8.0 * xt) / xh)
        dby = (-1.0 / yh, 1.0 / yh, (4.0 - 8.0 * yt) / yh)
        nn = xty * yty + xtx * ytx
        gnn = gv * nn
        for i in range(3):
            for j in range(3):
                loc[13 + 3 * i + j] += gv * (dbx[i] * dby[j])
                loc[22 + 3 * i + j] += gnn * (bx[i] * by[j])
    if flags & F_V1:
        px = (1.0 - xt, xt)
        py = (1.0 - yt, yt)
        for i in range(2):
            for j in range(2):
                loc[31 + 2 * i + j] += gv * (px[i] * py[j])


@njit(cache=True)
def _scatter(loc, ex, ey, both, n, flags, V, K, Kp, W1, W2, V1):
    sx = (ex, (ex + 1) % n, n + ex)
    sy = (ey, (ey + 1) % n, n + ey)
    if flags & F_V:
        V[ex, ey] += loc[0]
        if both:
            V[ey, ex] += loc[0]
    if flags & F_K:
        for j in range(3):
            K[ex, sy[j]] += loc[1 + j]
            if both:
                K[ey, sx[j]] += loc[4 + j]
    if flags & F_KP:
        for j in range(3):
            Kp[sx[j], ey] += loc[4 + j]
            if both:
                Kp[sy[j], ex] += loc[1 + j]
    if flags & F_W:
        for i in range(3):
            for j in range(3):
                W1[sx[i], sy[j]] += loc[13 + 3 * i + j]
                W2[sx[i], sy[j]] += loc[22 + 3 * i + j]
                if both:
                    W1[sy[j], sx[i]] += loc[13 + 3 * i + j]
                    W2[sy[j], sx[i]] += loc[22 + 3 * i + j]
    if flags & F_V1:
        for i in range(2):
            for j in range(2):
                V1[2 * ex + i, 2 * ey + j] += loc[31 + 2 * i + j]
                if both:
                    V1[2 * ey + j, 2 * ex + i] += loc[31 + 2 * i + j]


@njit(cache=True)
def _rule_pair(loc, k, flags, geo, pelem, pt0, ptl, p, q, rs, rt, wF, wA):
    ex = pelem[p]
    ey = pelem[q]
    rowx = geo[ex]
    rowy = geo[ey]
    hx = rowx[5]
    hy = rowy[5]
    jac = hx * ptl[p] * hy * ptl[q]
    for i in range(rs.size):
        tx = pt0[p] + rs[i] * ptl[p]
        ty = pt0[q] + rt[i] * ptl[q]
        x0, x1, xtx, xty, _ = curve_point(rowx, tx)
        y0, y1, ytx, yty, _ = curve_point(rowy, ty)
        _accumulate(loc, k, flags, x0, x1, xtx, xty, tx, hx, y0, y1, ytx, yty, ty, hy,
                    wF[i] * jac, wA[i] * jac)


@njit(cache=True)
def _far_pair(loc, k, flags, geo, pelem, cloud, cloud_w, p, q):
    hx = geo[pelem[p], 5]
    hy = geo[pelem[q], 5]
    nq = cloud.shape[1]
    for i in range(nq):
        for j in range(nq):
            _accumulate(loc, k, flags,
                        cloud[p, i, 0], cloud[p, i, 1], cloud[p, i, 2], cloud[p, i, 3], cloud[p, i, 4], hx,
                        cloud[q, j, 0], cloud[q, j, 1], cloud[q, j, 2], cloud[q, j, 3], cloud[q, j, 4], hy,
                        cloud_w[p, i] * cloud_w[q, j], 0.0)


@njit(cache=True)
def _sweep(k, flags, n, geo, pelem, pt0, ptl, plen, pcen, cloud, cloud_w,
           id_s, id_t, id_wF, id_wA, adj_s, adj_t, adj_w, near_s, near_t, near_w,
           eta, V, K, Kp, W1, W2, V1):
    npan = pelem.size
    loc = np.zeros(_NLOC, dtype=np.complex128)
    zero_adj = np.zeros(adj_w.size)
    zero_near = np.zeros(near_w.size)
    for p in range(npan):
        loc[:] = 0.0
        _rule_pair(loc, k, flags, geo, pelem, pt0, ptl, p, p, id_s, id_t, id_wF, id_wA)
        _scatter(loc, pelem[p], pelem[p], False, n, flags, V, K, Kp, W1, W2, V1)
        for q in range(p + 1, npan):
            loc[:] = 0.0
            if q == p + 1:
                _rule_pair(loc, k, flags, geo, pelem, pt0, ptl, p, q, adj_s, adj_t, adj_w, zero_adj)
                _scatter(loc, pelem[p], pelem[q], True, n, flags, V, K, Kp, W1, W2, V1)
                continue
            if p == 0 and q == npan - 1:
                _rule_pair(loc, k, flags, geo, pelem, pt0, ptl, q, p, adj_s, adj_t, adj_w, zero_adj)
                _scatter(loc, pelem[q], pelem[p], True, n, flags, V, K, Kp, W1, W2, V1)
                continue
            ddx = pcen[p, 0] - pcen[q, 0]
            ddy = pcen[p, 1] - pcen[q, 1]
            dist = math.sqrt(ddx * ddx + ddy * ddy) - 0.5 * (plen[p] + plen[q])
            if dist >= eta * max(plen[p], plen[q]):
                _far_pair(loc, k, flags, geo, pelem, cloud, cloud_w, p, q)
            else:
                _rule_pair(loc, k, flags, geo, pelem, pt0, ptl, p, q, near_s, near_t, near_w, zero_near)
            _scatter(loc, pelem[p], pelem[q], True, n, flags, V, K, Kp, W1, W2, V1)


def _flags_for(which) -> int:
    table = {"V": F_V, "K": F_K, "Kp": F_KP, "W": F_W, "V1": F_V1}
    flags = 0
    for name in which:
        if name not in table:
            raise ValueError(f"unknown operator {name!r}")
        flags |= table[name]
    return flags


def assemble_operators(mesh: Mesh, k: float, which=("V", "K", "W"), quad_order: int = 16,
                       panels: Panels | None = None) -> dict:
    """Assemble a subset of ``V, K, Kp, W, V1`` in one sweep.

    ``V1`` is the single layer on discontinuous P1 (same kernel ``k``).
    Returns a dict of :class:`GalerkinMatrix`; W comes with its Maue parts
    ``W_grad`` and ``W_nn`` as well.
    """
    if not (np.isfinite(k) and k >= 0.0):
        raise ValueError("wavenumber must be finite and >= 0")
    flags = _flags_for(which)
    rules: PairRules = pair_rules(quad_order)
    if panels is None or panels.k != k or panels.cloud.shape[1] != rules.q_far:
        panels = build_panels(mesh, k, rules.q_far)
    n = mesh.n_elements
    c = np.complex128

    def alloc(flag, shape):
        return np.zeros(shape if flags & flag else (1, 1), dtype=c)

    V = alloc(F_V, (n, n))
    K = alloc(F_K, (n, 2 * n))
    Kp = alloc(F_KP, (2 * n, n))
    W1 = alloc(F_W, (2 * n, 2 * n))
    W2 = alloc(F_W, (2 * n, 2 * n))
    V1 = alloc(F_V1, (2 * n, 2 * n))
    _sweep(float(k), flags, n, np.ascontiguousarray(mesh.geo), panels.elem, panels.t0, panels.tl,
           panels.length, panels.center, panels.cloud, panels.cloud_w,
           rules.id_s, rules.id_t, rules.id_wF, rules.id_wA,
           rules.adj_s, rules.adj_t, rules.adj_w,
           rules.near_s, rules.near_t, rules.near_w,
           ETA, V, K, Kp, W1, W2, V1)
    out = {}
    if flags & F_V:
        out["V"] = GalerkinMatrix(V, "P0", "P0", "V", k)
    if flags & F_K:
        out["K"] = GalerkinMatrix(K, "P0", "S2", "K", k)
    if flags & F_KP:
        out["Kp"] = GalerkinMatrix(Kp, "S2", "P0", "Kp", k)
    if flags & F_W:
        out["W_grad"] = GalerkinMatrix(W1, "S2", "S2", "W_grad", k)
        out["W_nn"] = GalerkinMatrix(W2, "S2", "S2", "W_nn", k)
        out["W"] = GalerkinMatrix(W1 - k * k * W2, "S2", "S2", "W", k)
    if flags & F_V1:
        out["V1"] = GalerkinMatrix(V1, "P1", "P1", "V", k)
    return out


def assemble_V(mesh: Mesh, k: float, quad_order: int = 16) -> GalerkinMatrix:
    """Single layer on P0 x P0."""
    return assemble_operators(mesh, k, ("V",), quad_order)["V"]


def assemble_K(mesh: Mesh, k: float, quad_order: int = 16) -> GalerkinMatrix:
    """Double layer ``<K b_j, chi_i>``, rows P0, columns S2.

    ``K`` is the principal-value operator, which equals the interior trace
    of the double-layer potential plus 1/2.  Add ``0.5 * mass_p0_s2`` to get
    ``K + 1/2``.
    """
    return assemble_operators(mesh, k, ("K",), quad_order)["K"]


def assemble_Kp(mesh: Mesh, k: float, quad_order: int = 16) -> GalerkinMatrix:
    """Adjoint double layer ``<K' chi_j, b_i>``, rows S2, columns P0."""
    return assemble_operators(mesh, k, ("Kp",), quad_order)["Kp"]


def assemble_W(mesh: Mesh, k: float, quad_order: int = 16) -> GalerkinMatrix:
    """Hypersingular operator on S2 x S2 via the Maue identity."""
    return assemble_operators(mesh, k, ("W",), quad_order)["W"]


def assemble_V_p1(mesh: Mesh, k: float = 0.0, quad_order: int = 16) -> GalerkinMatrix:
    """Single layer on discontinuous P1, used for energy-norm errors."""
    return assemble_operators(mesh, k, ("V1",), quad_order)["V1"]
