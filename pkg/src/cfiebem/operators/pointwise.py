"""Evaluation of layer potentials on and off the boundary.

On the boundary, for densities ``psi`` that are polynomial on each element
(optionally multiplied by a component of the normal), the evaluator
returns at each target point ``x``

* ``V psi(x)``,
* ``K' psi(x) = int d/dnu(x) G(x - y) psi(y) dy``,
* ``d/ds V psi(x)``, through integration by parts::

      d/ds V psi(x) = sum_z G(x - z) [psi](z) + int G(x - y) psi'(y) dy
                      + int G'(r) (x - y).(t(x) - t(y)) / r psi(y) dy

  where ``[psi](z)`` is the jump across node ``z`` in boundary direction.

Double-layer quantities follow from the identities (``t``/``nu`` unit
tangent/normal, ``'`` arclength derivative)::

    d/ds (K v) = k^2 t.V(v nu) - K'(v')
    W v        = -k^2 nu.V(v nu) - d/ds V(v')
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from ..geometry import Mesh, curve_point
from ..quadrature import gauss_legendre, log_gauss
from .kernels import kernel_g_only, kernel_values
from .panels import ETA, Panels, build_panels, far_order
from .spaces import GridFunction

MODE_SCALAR = 0
MODE_NU_X = 1
MODE_NU_Y = 2

_GRADED_BASE = 8


class NearFieldError(ValueError):
    """Evaluation point too close to the boundary."""


@njit(cache=True)
def _source(acc, k, x0, x1, xtx, xty, row, e, t, wF, wA, dens, dmode):
    y0, y1, ytx, yty, kap = curve_point(row, t)
    d0 = x0 - y0
    d1 = x1 - y1
    r = math.sqrt(d0 * d0 + d1 * d1)
    g, gp, ag, agp = kernel_values(k, r)
    gv = wF * g + wA * ag
    gpv = wF * gp + wA * agp
    dnx = (d0 * xty - d1 * xtx) / r
    dtt = (d0 * (xtx - ytx) + d1 * (xty - yty)) / r
    h = row[5]
    for j in range(dens.shape[0]):
        c0 = dens[j, e, 0]
        c1 = dens[j, e, 1]
        c2 = dens[j, e, 2]
        p = c0 + t * (c1 + t * c2)
        dp = (c1 + 2.0 * t * c2) / h
        m = dmode[j]
        if m == 0:
            psi = p
            dpsi = dp
        elif m == 1:
            psi = p * yty
            dpsi = dp * yty + p * kap * ytx
        else:
            psi = -p * ytx
            dpsi = -dp * ytx + p * kap * yty
        acc[0, j] += gv * psi
        acc[1, j] += gpv * dnx * psi
        acc[2, j] += gv * dpsi + gpv * dtt * psi


@njit(cache=True)
def _eval_targets(k, geo, pelem, pt0, ptl, plen, pcen, cloud, cloud_w, first,
                  tgt_e, tgt_t, dens, dmode, jumps, nodes,
                  lg_x, lg_w, g_x, g_w, gb_x, gb_w, eta, out):
    npan = pelem.size
    nd = dens.shape[0]
    nq = cloud.shape[1]
    nnode = nodes.shape[0]
    acc = np.zeros((3, nd), dtype=np.complex128)
    for it in range(tgt_e.size):
        e = tgt_e[it]
        t = tgt_t[it]
        row = geo[e]
        x0, x1, xtx, xty, _ = curve_point(row, t)
        acc[:, :] = 0.0
        m = first[e + 1] - first[e]
        tl = ptl[first[e]]
        loc = min(int(t / tl), m - 1)
        p0 = first[e] + loc
        # self panel: split at the target, log-Gauss + Gauss on each side
        ss = (t - pt0[p0]) / ptl[p0]
        jac = plen[p0]
        for side in range(2):
            span = (1.0 - ss) if side == 0 else ss
            if span <= 0.0:
                continue
            sgn = 1.0 if side == 0 else -1.0
            for i in range(lg_x.size):
                s = ss + sgn * span * lg_x[i]
                _source(acc, k, x0, x1, xtx, xty, row, e, pt0[p0] + s * ptl[p0],
                        0.0, -lg_w[i] * span * jac, dens, dmode)
            for i in range(g_x.size):
                s = ss + sgn * span * g_x[i]
                w = g_w[i] * span * jac
                _source(acc, k, x0, x1, xtx, xty, row, e, pt0[p0] + s * ptl[p0],
                        w, -w * math.log(g_x[i]), dens, dmode)
        for q in range(npan):
            if q == p0:
                continue
            eq = pelem[q]
            rq = geo[eq]
            prev = (p0 - 1) % npan
            nxt = (p0 + 1) % npan
            if q == prev or q == nxt:
                # graded toward the shared node; a = distance from it in panel units
                if q == nxt:
                    zx, zy, _, _, _ = curve_point(rq, pt0[q])
                else:
                    zx, zy, _, _, _ = curve_point(rq, pt0[q] + ptl[q])
                delta = math.sqrt((x0 - zx) ** 2 + (x1 - zy) ** 2) / plen[q]
                eps = 0.5 * min(delta, 1.0)
                lo = 0.0
                hi = eps
                while lo < 1.0:
                    wd = hi - lo
                    for i in range(gb_x.size):
                        a = lo + wd * gb_x[i]
                        s = a if q == nxt else 1.0 - a
                        _source(acc, k, x0, x1, xtx, xty, rq, eq, pt0[q] + s * ptl[q],
                                gb_w[i] * wd * plen[q], 0.0, dens, dmode)
                    lo = hi
                    hi = min(1.0, 2.0 * hi)
                continue
            dd = math.sqrt((x0 - pcen[q, 0]) ** 2 + (x1 - pcen[q, 1]) ** 2) - 0.5 * plen[q]
            if dd >= eta * plen[q]:
                for i in range(nq):
                    _source(acc, k, x0, x1, xtx, xty, rq, eq, cloud[q, i, 4], cloud_w[q, i], 0.0, dens, dmode)
            else:
                for i in range(g_x.size):
                    _source(acc, k, x0, x1, xtx, xty, rq, eq, pt0[q] + g_x[i] * ptl[q],
                            g_w[i] * plen[q], 0.0, dens, dmode)
        # node jumps of the densities
        for z in range(nnode):
            any_jump = False
            for j in range(nd):
                if jumps[j, z] != 0.0:
                    any_jump = True
            if not any_jump:
                continue
            r = math.sqrt((x0 - nodes[z, 0]) ** 2 + (x1 - nodes[z, 1]) ** 2)
            gz = kernel_g_only(k, r)
            for j in range(nd):
                acc[2, j] += gz * jumps[j, z]
        for a in range(3):
            for j in range(nd):
                out[a, j, it] = acc[a, j]


@dataclass(frozen=True)
class Density:
    """Piecewise polynomial density, optionally times a normal component.

    ``poly[e] = (c0, c1, c2)`` gives ``c0 + c1 t + c2 t^2`` on element ``e``
    in the element-local parameter ``t``; ``mode`` selects a factor
    ``1``, ``nu_x`` or ``nu_y``.
    """

    poly: np.ndarray
    mode: int = MODE_SCALAR


def density_from(gf: GridFunction, mode: int = MODE_SCALAR) -> Density:
    return Density(np.asarray(gf.element_poly(), dtype=complex), mode)


def derivative_density(gf: GridFunction) -> Density:
    """Arclength derivative of an S2 or P1 function (piecewise polynomial)."""
    c = gf.element_poly()
    h = gf.mesh.h
    d = np.zeros_like(c, dtype=complex)
    d[:, 0] = c[:, 1] / h
    d[:, 1] = 2.0 * c[:, 2] / h
    return Density(d, MODE_SCALAR)


def _end_values(mesh: Mesh, dens: Density):
    """Values at t=0 and t=1 of each element."""
    c = dens.poly
    v0 = c[:, 0].astype(complex)
    v1 = (c[:, 0] + c[:, 1] + c[:, 2]).astype(complex)
    if dens.mode != MODE_SCALAR:
        n = mesh.n_elements
        f0 = np.empty(n)
        f1 = np.empty(n)
        for e in range(n):
            for t, f in ((0.0, f0), (1.0, f1)):
                _, _, tx, ty, _ = curve_point(mesh.geo[e], t)
                f[e] = ty if dens.mode == MODE_NU_X else -tx
        v0 = v0 * f0
        v1 = v1 * f1
    return v0, v1


def node_jumps(mesh: Mesh, dens: Density) -> np.ndarray:
    """Jump ``psi(z+) - psi(z-)`` at each node (node ``i`` starts element ``i``)."""
    v0, v1 = _end_values(mesh, dens)
    return v0 - np.roll(v1, 1)


class BoundaryEvaluator:
    """Pointwise layer-potential evaluation at points of the boundary."""

    def __init__(self, mesh: Mesh, k: float, quad_order: int = 16, panels: Panels | None = None):
        self.mesh = mesh
        self.k = float(k)
        self.quad_order = int(quad_order)
        q_far = far_order(self.quad_order)
        if panels is None or panels.k != self.k or panels.cloud.shape[1] != q_far:
            panels = build_panels(mesh, self.k, q_far)
        self.panels = panels
        lg = log_gauss(min(self.quad_order, 32))
        g = gauss_legendre(self.quad_order)
        gb = gauss_legendre(max(_GRADED_BASE, self.quad_order // 2))
        self._rules = (lg.nodes, lg.weights, g.nodes, g.weights, gb.nodes, gb.weights)

    def evaluate(self, densities, elems, ts) -> np.ndarray:
        """Return array ``(3, len(densities), n_targets)``: V, K', d/ds V."""
        mesh = self.mesh
        elems = np.ascontiguousarray(np.asarray(elems, dtype=np.int64).ravel())
        ts = np.ascontiguousarray(np.asarray(ts, dtype=float).ravel())
        if elems.shape != ts.shape:
            raise ValueError("elements and parameters must match")
        if np.any((ts <= 0.0) | (ts >= 1.0)):
            raise ValueError("target parameters must lie inside (0, 1)")
        if np.any((elems < 0) | (elems >= mesh.n_elements)):
            raise ValueError("unknown element id")
        nd = len(densities)
        dens = np.ascontiguousarray(np.stack([np.asarray(d.poly, dtype=complex) for d in densities]))
        dmode = np.array([d.mode for d in densities], dtype=np.int64)
        jumps = np.ascontiguousarray(np.stack([node_jumps(mesh, d) for d in densities]))
        out = np.zeros((3, nd, ts.size), dtype=complex)
        pn = self.panels
        _eval_targets(self.k, np.ascontiguousarray(mesh.geo), pn.elem, pn.t0, pn.tl, pn.length, pn.center,
                      pn.cloud, pn.cloud_w, pn.first, elems, ts, dens, dmode, jumps,
                      np.ascontiguousarray(mesh.nodes), *self._rules, ETA, out)
        return out


def tangential_derivative_on_gamma(kind: str, k: float, density: GridFunction, T: int, points,
                                   quad_order: int = 16) -> np.ndarray:
    """Arclength derivative of ``V phi`` (``single_P0``) or ``(K + 1/2) f``
    (``double_S2``) at local parameters ``points`` of element ``T``."""
    mesh = density.mesh
    pts = np.atleast_1d(np.asarray(points, dtype=float))
    if not (0 <= T < mesh.n_elements):
        raise ValueError(f"unknown element id {T!r}")
    if np.any((pts <= 0.0) | (pts >= 1.0)):
        raise ValueError("points must lie inside the element")
    ev = BoundaryEvaluator(mesh, k, quad_order)
    elems = np.full(pts.size, T)
    if kind == "single_P0":
        if density.space != "P0":
            raise ValueError("single_P0 needs a P0 density")
        return ev.evaluate([density_from(density)], elems, pts)[2, 0]
    if kind == "double_S2":
        if density.space != "S2":
            raise ValueError("double_S2 needs an S2 density")
        dens = [density_from(density, MODE_NU_X), density_from(density, MODE_NU_Y), derivative_density(density)]
        res = ev.evaluate(dens, elems, pts)
        _, tan, _, _ = mesh.frames(T, pts)
        kk = float(k) ** 2
        fprime = derivative_density(density)
        c = fprime.poly[T]
        fp = c[0] + pts * (c[1] + pts * c[2])
        return kk * (tan[:, 0] * res[0, 0] + tan[:, 1] * res[0, 1]) - res[1, 2] + 0.5 * fp
    raise ValueError(f"unknown kind {kind!r}")


def eval_potential(kind: str, k: float, density: GridFunction, x, order: int = 16) -> complex:
    """Single- or double-layer potential at a point off the boundary.

    Each element is split into pieces no longer than the distance from
    ``x`` to the boundary, each integrated with an ``order``-point Gauss rule.
    """
    from .kernels import kernel_G, kernel_dG

    mesh = density.mesh
    x = np.asarray(x, dtype=float)
    if kind not in ("single", "double"):
        raise ValueError(f"unknown potential kind {kind!r}")
    if kind == "single" and density.space not in ("P0", "P1"):
        raise ValueError("single layer density must be P0 or P1")
    if kind == "double" and density.space not in ("S2", "P1", "P0"):
        raise ValueError("double layer density must be S2, P1 or P0")
    # distance estimate from dense sampling of the curve
    probe = np.linspace(0.0, 1.0, 33)
    dmin = np.inf
    for e in range(mesh.n_elements):
        d = np.linalg.norm(mesh.points(e, probe) - x, axis=1).min()
        dmin = min(dmin, d)
    if dmin < 0.1 * mesh.h.min():
        raise NearFieldError(f"point {x} is closer than 0.1 h_min to the boundary")
    rule = gauss_legendre(order)
    poly = density.element_poly()
    total = 0.0 + 0.0j
    for e in range(mesh.n_elements):
        h = mesh.h[e]
        npieces = int(min(64, max(1, math.ceil(h / dmin))))
        t = ((np.arange(npieces)[:, None] + rule.nodes[None, :]) / npieces).ravel()
        w = np.tile(rule.weights, npieces) * h / npieces
        pts, tan, nu, _ = mesh.frames(e, t)
        c = poly[e]
        vals = c[0] + t * (c[1] + t * c[2])
        z = x[None, :] - pts
        r = np.linalg.norm(z, axis=1)
        if kind == "single":
            ker = np.asarray(kernel_G(k, r))
        else:
            # d/dnu(y) G(x - y) = -G'(r) (x - y).nu(y) / r
            ker = -np.asarray(kernel_dG(k, r)) * np.sum(z * nu, axis=1) / r
        total += np.sum(w * ker * vals)
    return complex(total)
