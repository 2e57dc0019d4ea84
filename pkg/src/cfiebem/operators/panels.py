"""Quadrature panels and reference pair rules.

Each element is split into ``max(1, ceil(k h / kappa))`` equal panels so
that the kernel oscillation over a panel stays bounded.  Panels are kept
in boundary order: panel ``p`` ends where panel ``p + 1`` starts.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from ..geometry import Mesh, curve_point
from ..quadrature import gauss_legendre, graded_composite, log_gauss

# far-field admissibility: dist >= ETA * max(panel lengths)
ETA = 2.0
KAPPA = 1.0
ADJ_LAYERS = 16
ADJ_RATIO = 0.25
ADJ_BASE = 8


def far_order(quad_order: int) -> int:
    return max(3, quad_order // 3)


@njit(cache=True)
def _cloud(geo, elem, t0, tl, nodes):
    npan = elem.size
    q = nodes.size
    out = np.empty((npan, q, 5))
    for p in range(npan):
        row = geo[elem[p]]
        for i in range(q):
            t = t0[p] + nodes[i] * tl[p]
            x, y, tx, ty, _ = curve_point(row, t)
            out[p, i, 0] = x
            out[p, i, 1] = y
            out[p, i, 2] = tx
            out[p, i, 3] = ty
            out[p, i, 4] = t
    return out


@dataclass(frozen=True, eq=False)
class Panels:
    """Panel decomposition of a mesh.

    Attributes
    ----------
    elem, t0, tl : ndarray
        Owning element and element-local interval ``[t0, t0 + tl]``.
    length : ndarray
        Arclength of each panel.
    center : ndarray, shape (P, 2)
        Curve point at the panel midpoint; the panel lies in the disc of
        radius ``length / 2`` around it.
    first : ndarray
        ``first[e]:first[e+1]`` are the panels of element ``e``.
    cloud, cloud_w : ndarray
        Far-field Gauss points ``(x, y, t_x, t_y, t_elem)`` and arclength
        weights per panel.
    """

    mesh: Mesh
    k: float
    elem: np.ndarray
    t0: np.ndarray
    tl: np.ndarray
    length: np.ndarray
    center: np.ndarray
    first: np.ndarray
    cloud: np.ndarray
    cloud_w: np.ndarray

    @property
    def n_panels(self) -> int:
        return self.elem.size


def build_panels(mesh: Mesh, k: float, q_far: int = 5, kappa: float = KAPPA) -> Panels:
    h = mesh.h
    m = np.maximum(1, np.ceil(k * h / kappa - 1e-12)).astype(np.int64)
    elem = np.repeat(np.arange(mesh.n_elements), m)
    first = np.concatenate([[0], np.cumsum(m)])
    local = np.arange(elem.size) - first[elem]
    tl = 1.0 / m[elem]
    t0 = local * tl
    geo = np.ascontiguousarray(mesh.geo)
    mid = _cloud(geo, elem, t0, tl, np.array([0.5]))[:, 0, :2]
    rule = gauss_legendre(q_far)
    cloud = _cloud(geo, elem, t0, tl, rule.nodes)
    length = h[elem] * tl
    cloud_w = length[:, None] * rule.weights[None, :]
    return Panels(mesh, float(k), elem, t0, tl, length, np.ascontiguousarray(mid), first, cloud, cloud_w)


@dataclass(frozen=True, eq=False)
class PairRules:
    """Reference rules on the unit square of panel-local coordinates.

    ``id_*``: identical panels, with weights ``wF`` for the full kernel and
    ``wA`` for the coefficient of ``ln|s - t|`` (see module ``assembly``).
    ``adj_*``: panels meeting at ``s = 1`` (first) and ``t = 0`` (second).
    ``near_*``: tensor Gauss rule.  ``far_nodes``: per-panel Gauss rule.
    """

    id_s: np.ndarray
    id_t: np.ndarray
    id_wF: np.ndarray
    id_wA: np.ndarray
    adj_s: np.ndarray
    adj_t: np.ndarray
    adj_w: np.ndarray
    near_s: np.ndarray
    near_t: np.ndarray
    near_w: np.ndarray
    q_far: int


@functools.lru_cache(maxsize=None)
def pair_rules(quad_order: int = 16) -> PairRules:
    n = int(quad_order)
    g = gauss_legendre(n)
    lg = log_gauss(min(n, 32))

    # identical panels: u = |s - t|, integrate over u outside, t inside
    s_list, t_list, wf_list, wa_list = [], [], [], []
    for (u_nodes, u_w, is_log) in ((lg.nodes, lg.weights, True), (g.nodes, g.weights, False)):
        for u, wu in zip(u_nodes, u_w):
            tt = g.nodes * (1.0 - u)
            wt = g.weights * (1.0 - u)
            for (xs, ys) in ((tt + u, tt), (tt, tt + u)):
                s_list.append(xs)
                t_list.append(ys)
                if is_log:
                    wf_list.append(np.zeros_like(wt))
                    wa_list.append(-wu * wt)
                else:
                    wf_list.append(wu * wt)
                    wa_list.append(-wu * wt * math.log(u))
    id_s = np.concatenate(s_list)
    id_t = np.concatenate(t_list)
    id_wF = np.concatenate(wf_list)
    id_wA = np.concatenate(wa_list)

    # adjacent panels: Duffy split at the shared corner
    rho = graded_composite(gauss_legendre(ADJ_BASE), ADJ_LAYERS, ADJ_RATIO)
    R, W = np.meshgrid(rho.nodes, g.nodes, indexing="ij")
    WR, WW = np.meshgrid(rho.weights, g.weights, indexing="ij")
    R, W, wt = R.ravel(), W.ravel(), (WR * WW).ravel() * R.ravel()
    a = np.concatenate([R, R * W])
    b = np.concatenate([R * W, R])
    adj_w = np.concatenate([wt, wt])

    S, T = np.meshgrid(g.nodes, g.nodes, indexing="ij")
    WS, WT = np.meshgrid(g.weights, g.weights, indexing="ij")
    return PairRules(
        id_s, id_t, id_wF, id_wA,
        1.0 - a, b, adj_w,
        S.ravel(), T.ravel(), (WS * WT).ravel(),
        far_order(n),
    )
