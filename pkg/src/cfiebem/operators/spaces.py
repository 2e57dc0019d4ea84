"""Discrete spaces, sparse mass/stiffness matrices and L2 projections.

* P0: piecewise constants, dof ``e`` on element ``e``.
* S2: continuous piecewise quadratics, hierarchical basis.  Node dofs come
  first (dof ``i`` is the hat function at node ``i``), followed by one
  bubble ``4 t (1 - t)`` per element (dof ``N + e``).
* P1: discontinuous piecewise affine, dofs ``2e`` and ``2e + 1`` for
  ``1 - t`` and ``t`` on element ``e``.  Used only to measure errors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from ..geometry import Mesh
from ..quadrature import gauss_legendre

SPACES = ("P0", "S2", "P1")

_S2_MASS = np.array([[1 / 3, 1 / 6, 1 / 3], [1 / 6, 1 / 3, 1 / 3], [1 / 3, 1 / 3, 8 / 15]])
_S2_STIFF = np.array([[1.0, -1.0, 0.0], [-1.0, 1.0, 0.0], [0.0, 0.0, 16 / 3]])
_P1_MASS = np.array([[1 / 3, 1 / 6], [1 / 6, 1 / 3]])
_P0_S2 = np.array([0.5, 0.5, 2 / 3])


class SpaceError(ValueError):
    pass


def dim(space: str, mesh: Mesh) -> int:
    n = mesh.n_elements
    return {"P0": n, "S2": 2 * n, "P1": 2 * n}[_check_space(space)]


def _check_space(space: str) -> str:
    if space not in SPACES:
        raise SpaceError(f"unknown space {space!r}")
    return space


def s2_dofs(mesh: Mesh) -> np.ndarray:
    """Local-to-global map for S2, shape (N, 3)."""
    n = mesh.n_elements
    e = np.arange(n)
    return np.column_stack([e, (e + 1) % n, n + e])


def p1_dofs(mesh: Mesh) -> np.ndarray:
    e = np.arange(mesh.n_elements)
    return np.column_stack([2 * e, 2 * e + 1])


def s2_shape(t):
    t = np.asarray(t, dtype=float)
    return np.stack([1.0 - t, t, 4.0 * t * (1.0 - t)], axis=-1)


def s2_shape_ds(t, h):
    """Arclength derivatives of the S2 shape functions on an element of length h."""
    t = np.asarray(t, dtype=float)
    return np.stack([-np.ones_like(t), np.ones_like(t), 4.0 - 8.0 * t], axis=-1) / np.asarray(h)[..., None]


def p1_shape(t):
    t = np.asarray(t, dtype=float)
    return np.stack([1.0 - t, t], axis=-1)


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Coefficient vector in one of the discrete spaces on ``mesh``."""

    space: str
    coeffs: np.ndarray
    mesh: Mesh

    def __post_init__(self):
        _check_space(self.space)
        c = np.asarray(self.coeffs)
        if c.shape != (dim(self.space, self.mesh),):
            raise SpaceError(f"coefficient length {c.shape} does not match {self.space}")
        object.__setattr__(self, "coeffs", c)

    def element_poly(self) -> np.ndarray:
        """Monomial coefficients ``c0 + c1 t + c2 t^2`` per element, shape (N, 3)."""
        return element_poly(self.space, self.coeffs, self.mesh)

    def __call__(self, e, t):
        """Values on element(s) ``e`` at local parameter(s) ``t``."""
        c = self.element_poly()[np.asarray(e)]
        t = np.asarray(t, dtype=float)
        return c[..., 0] + t * (c[..., 1] + t * c[..., 2])


def element_poly(space: str, coeffs, mesh: Mesh) -> np.ndarray:
    coeffs = np.asarray(coeffs)
    n = mesh.n_elements
    out = np.zeros((n, 3), dtype=np.result_type(coeffs, float))
    if space == "P0":
        out[:, 0] = coeffs
    elif space == "S2":
        d = s2_dofs(mesh)
        u0, u1, ub = coeffs[d[:, 0]], coeffs[d[:, 1]], coeffs[d[:, 2]]
        out[:, 0] = u0
        out[:, 1] = u1 - u0 + 4.0 * ub
        out[:, 2] = -4.0 * ub
    elif space == "P1":
        u0, u1 = coeffs[0::2], coeffs[1::2]
        out[:, 0] = u0
        out[:, 1] = u1 - u0
    else:
        _check_space(space)
    return out


@dataclass(frozen=True, eq=False)
class GalerkinMatrix:
    """Galerkin matrix with row/column space and operator labels."""

    data: object
    row_space: str
    col_space: str
    operator: str
    k: float = 0.0

    @property
    def shape(self):
        return self.data.shape

    def toarray(self) -> np.ndarray:
        return self.data.toarray() if sp.issparse(self.data) else np.asarray(self.data)


def _scatter(rows, cols, vals, shape):
    m = sp.coo_matrix((vals.ravel(), (rows.ravel(), cols.ravel())), shape=shape)
    return m.tocsr()


def mass_s2(mesh: Mesh) -> sp.csr_matrix:
    d = s2_dofs(mesh)
    h = mesh.h
    vals = h[:, None, None] * _S2_MASS[None]
    rows = np.repeat(d[:, :, None], 3, axis=2)
    cols = np.repeat(d[:, None, :], 3, axis=1)
    return _scatter(rows, cols, vals, (2 * mesh.n_elements,) * 2)


def stiffness_s2(mesh: Mesh) -> sp.csr_matrix:
    d = s2_dofs(mesh)
    h = mesh.h
    vals = (1.0 / h)[:, None, None] * _S2_STIFF[None]
    rows = np.repeat(d[:, :, None], 3, axis=2)
    cols = np.repeat(d[:, None, :], 3, axis=1)
    return _scatter(rows, cols, vals, (2 * mesh.n_elements,) * 2)


def mass_p0_s2(mesh: Mesh) -> sp.csr_matrix:
    """Pairing ``<chi_T, b_j>``, shape (N, 2N)."""
    d = s2_dofs(mesh)
    n = mesh.n_elements
    rows = np.repeat(np.arange(n)[:, None], 3, axis=1)
    vals = mesh.h[:, None] * _P0_S2[None]
    return _scatter(rows, d, vals, (n, 2 * n))


def mass_p0(mesh: Mesh) -> sp.csr_matrix:
    return sp.diags(mesh.h).tocsr()


def mass_p1(mesh: Mesh) -> sp.csr_matrix:
    d = p1_dofs(mesh)
    vals = mesh.h[:, None, None] * _P1_MASS[None]
    rows = np.repeat(d[:, :, None], 2, axis=2)
    cols = np.repeat(d[:, None, :], 2, axis=1)
    return _scatter(rows, cols, vals, (2 * mesh.n_elements,) * 2)


def mass_matrix(space: str, mesh: Mesh) -> sp.csr_matrix:
    return {"P0": mass_p0, "S2": mass_s2, "P1": mass_p1}[_check_space(space)](mesh)


def assemble_LB(mesh: Mesh, alpha: float) -> GalerkinMatrix:
    """``alpha * Mass + Stiffness`` on S2 (weak form of ``alpha - Laplace-Beltrami``)."""
    if not alpha > 0.0:
        raise SpaceError("alpha must be positive")
    return GalerkinMatrix((alpha * mass_s2(mesh) + stiffness_s2(mesh)).tocsc(), "S2", "S2", "LB")


def boundary_samples(mesh: Mesh, order: int = 12):
    """Gauss points on every element: (t, points, normals, weights) arrays."""
    rule = gauss_legendre(order)
    t = rule.nodes
    n = mesh.n_elements
    pts = np.empty((n, order, 2))
    nrm = np.empty((n, order, 2))
    for e in range(n):
        p, tan, nu, _ = mesh.frames(e, t)
        pts[e] = p
        nrm[e] = nu
    w = mesh.h[:, None] * rule.weights[None, :]
    return t, pts, nrm, w


def _evaluate_target(target, pts, nrm, with_normal):
    flat_p = pts.reshape(-1, 2)
    if with_normal:
        vals = target(flat_p, nrm.reshape(-1, 2))
    else:
        vals = target(flat_p)
    return np.asarray(vals).reshape(pts.shape[:-1])


def l2_project(target, space: str, mesh: Mesh, with_normal: bool = False, order: int = 12) -> GridFunction:
    """L2 projection of ``target`` onto ``space``.

    ``target(points)`` (or ``target(points, normals)`` with
    ``with_normal=True``) evaluates the function at points of the curve.
    """
    _check_space(space)
    t, pts, nrm, w = boundary_samples(mesh, order)
    f = _evaluate_target(target, pts, nrm, with_normal)
    n = mesh.n_elements
    if space == "P0":
        return GridFunction("P0", np.sum(w * f, axis=1) / mesh.h, mesh)
    if space == "P1":
        phi = p1_shape(t)  # (q, 2)
        load = np.einsum("eq,eq,qa->ea", w, f, phi).reshape(-1)
        # element-local 2x2 solves, inverse of h*[[1/3,1/6],[1/6,1/3]]
        inv = np.array([[4.0, -2.0], [-2.0, 4.0]])
        c = (load.reshape(n, 2) @ inv.T) / mesh.h[:, None]
        return GridFunction("P1", c.reshape(-1), mesh)
    phi = s2_shape(t)
    loc = np.einsum("eq,eq,qa->ea", w, f, phi)
    load = np.zeros(2 * n, dtype=loc.dtype)
    np.add.at(load, s2_dofs(mesh), loc)
    lu = splu(mass_s2(mesh).tocsc())
    if np.iscomplexobj(load):
        c = lu.solve(load.real) + 1j * lu.solve(load.imag)
    else:
        c = lu.solve(load)
    return GridFunction("S2", c, mesh)
