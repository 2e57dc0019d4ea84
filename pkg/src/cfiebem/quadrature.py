"""Quadrature rules on (0, 1) and panel-pair classification."""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.linalg import eigh_tridiagonal
from scipy.special import comb

from .geometry import Mesh, MeshError


class QuadratureError(ValueError):
    """Invalid quadrature request."""


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Nodes in (0, 1) with positive weights."""

    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.nodes, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if x.shape != w.shape or x.ndim != 1 or x.size == 0:
            raise QuadratureError("nodes and weights must be matching 1D arrays")
        x.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "nodes", x)
        object.__setattr__(self, "weights", w)

    def __len__(self) -> int:
        return self.nodes.size

    def integrate(self, f) -> float:
        return float(np.dot(self.weights, f(self.nodes)))


@functools.lru_cache(maxsize=None)
def gauss_legendre(n: int) -> QuadratureRule:
    """Gauss-Legendre rule with ``n`` points on (0, 1)."""
    if not (isinstance(n, (int, np.integer)) and 1 <= n <= 64):
        raise QuadratureError(f"gauss_legendre needs 1 <= n <= 64, got {n!r}")
    x, w = leggauss(int(n))
    return QuadratureRule(0.5 * (x + 1.0), 0.5 * w)


def _shifted_legendre_log_moments(m: int) -> np.ndarray:
    """Moments of -ln(x) on (0,1) against monic shifted Legendre polynomials."""
    k = np.arange(m)
    mom = np.empty(m)
    mom[0] = 1.0
    mom[1:] = (-1.0) ** k[1:] / (k[1:] * (k[1:] + 1.0))
    return mom / comb(2 * k, k)


def _modified_chebyshev(mom, a, b, n):
    """Recurrence coefficients from modified moments (Gautschi's algorithm)."""
    alpha = np.zeros(n)
    beta = np.zeros(n)
    m = 2 * n
    sig_old = np.zeros(m)
    sig = mom.copy()
    alpha[0] = a[0] + mom[1] / mom[0]
    beta[0] = mom[0]
    for k in range(1, n):
        sig_new = np.zeros(m)
        for l in range(k, m - k):
            sig_new[l] = (
                sig[l + 1]
                - (alpha[k - 1] - a[l]) * sig[l]
                - beta[k - 1] * sig_old[l]
                + b[l] * sig[l - 1]
            )
        alpha[k] = a[k] + sig_new[k + 1] / sig_new[k] - sig[k] / sig[k - 1]
        beta[k] = sig_new[k] / sig[k - 1]
        sig_old, sig = sig, sig_new
    return alpha, beta


@functools.lru_cache(maxsize=None)
def log_gauss(n: int) -> QuadratureRule:
    """Gauss rule for the weight ``-ln(x)`` on (0, 1).

    Recurrence coefficients come from the modified Chebyshev algorithm with
    shifted Legendre moments; nodes and weights from the Jacobi matrix.
    """
    if not (isinstance(n, (int, np.integer)) and 1 <= n <= 32):
        raise QuadratureError(f"log_gauss needs 1 <= n <= 32, got {n!r}")
    n = int(n)
    m = 2 * n
    k = np.arange(m, dtype=float)
    a = np.full(m, 0.5)
    b = np.zeros(m)
    b[1:] = k[1:] ** 2 / (4.0 * (4.0 * k[1:] ** 2 - 1.0))
    alpha, beta = _modified_chebyshev(_shifted_legendre_log_moments(m), a, b, n)
    if n == 1:
        return QuadratureRule(np.array([alpha[0]]), np.array([beta[0]]))
    x, v = eigh_tridiagonal(alpha, np.sqrt(beta[1:]))
    w = beta[0] * v[0, :] ** 2
    return QuadratureRule(x, w)


def graded_composite(base: QuadratureRule, layers: int, ratio: float) -> QuadratureRule:
    """Geometric subdivision of (0, 1) toward 0 with ``base`` on each piece.

    The breakpoints are ``0, ratio**(layers-1), ..., ratio, 1``.
    """
    if not (isinstance(layers, (int, np.integer)) and layers >= 1):
        raise QuadratureError("layers must be a positive integer")
    if not (0.0 < ratio < 1.0):
        raise QuadratureError("ratio must lie in (0, 1)")
    edges = np.concatenate([[0.0], ratio ** np.arange(layers - 1, -1, -1, dtype=float)])
    lo = edges[:-1, None]
    width = np.diff(edges)[:, None]
    x = (lo + width * base.nodes[None, :]).ravel()
    w = (width * base.weights[None, :]).ravel()
    return QuadratureRule(x, w)


@dataclass(frozen=True)
class PanelPairClass:
    classification: str
    shared_node: int | None = None


def classify_pair(mesh: Mesh, T: int, Tp: int) -> PanelPairClass:
    """Identical, adjacent (sharing a node) or separated."""
    n = mesh.n_elements
    for e in (T, Tp):
        if not (isinstance(e, (int, np.integer)) and 0 <= e < n):
            raise MeshError(f"unknown element id {e!r}")
    if T == Tp:
        return PanelPairClass("identical")
    shared = set(mesh.element_nodes(T)) & set(mesh.element_nodes(Tp))
    if shared:
        return PanelPairClass("adjacent", int(min(shared)))
    return PanelPairClass("separated")
