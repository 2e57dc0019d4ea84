"""Weighted-residual error indicators for the four formulations.

All first-part indicators have the form ``eta1(T)^2 = h_T || d/ds R ||^2_T``
for a residual trace ``R`` on the boundary; the integral over ``T`` uses
``q_est`` interior Gauss points.  Residuals are log-singular at element
endpoints (density jumps, corners); the leading ``ln d`` and ``d ln d``
terms are known in closed form from the densities and the local geometry,
so they are subtracted, the cross terms are integrated with product
weights on the same Gauss nodes and the pure log part separately.  This
keeps the indicators stable under changes of ``q_est`` at no extra
kernel evaluations.  For the mixed forms the second part is

    eta2(T)^2 = h_T^2 || r ||^2_T + h_T (|[f']|^2(z_start) + |[f']|^2(z_end))

with ``r = phi - alpha f + f''`` (indirect) or
``r = W u + K' phi + phi/2 - alpha f + f''`` (direct), and ``[f']`` the
jump of the arclength derivative of ``f`` across a node.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .formulations import ProblemData, Solution, formulation_kind
from .geometry import Mesh
from .operators.pointwise import (
    MODE_NU_X,
    MODE_NU_Y,
    BoundaryEvaluator,
    density_from,
    derivative_density,
)
from .specfun import bessel_j
from .quadrature import _shifted_legendre_log_moments, gauss_legendre


class EstimatorError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class EstimatorReport:
    """Per-element squared indicators (``eta1_sq``/``eta2_sq`` for mixed forms)."""

    eta_sq: np.ndarray
    eta1_sq: Optional[np.ndarray] = None
    eta2_sq: Optional[np.ndarray] = None

    @property
    def total(self) -> float:
        return float(np.sqrt(np.sum(self.eta_sq)))

    @property
    def total1(self) -> Optional[float]:
        return None if self.eta1_sq is None else float(np.sqrt(np.sum(self.eta1_sq)))

    @property
    def total2(self) -> Optional[float]:
        return None if self.eta2_sq is None else float(np.sqrt(np.sum(self.eta2_sq)))

    def subset(self, elements) -> float:
        """Squared estimator restricted to a set of elements."""
        return float(np.sum(self.eta_sq[np.asarray(list(elements), dtype=int)]))


@functools.lru_cache(maxsize=None)
def _log_weights(q: int) -> np.ndarray:
    """Weights ``w`` on the Gauss nodes with ``sum w p(t_i) = int_0^1 p(t) ln t dt``, deg p < q."""
    t = gauss_legendre(q).nodes
    # monic shifted Legendre values at the nodes by the three-term recurrence
    P = np.empty((q, q))
    P[0] = 1.0
    if q > 1:
        P[1] = t - 0.5
    for j in range(1, q - 1):
        P[j + 1] = (t - 0.5) * P[j] - j * j / (4.0 * (4.0 * j * j - 1.0)) * P[j - 1]
    return np.linalg.solve(P, -_shifted_legendre_log_moments(q))


_LAGUERRE = np.polynomial.laguerre.laggauss(48)


class _Targets:
    def __init__(self, mesh: Mesh, q_est: int, k: float):
        rule = gauss_legendre(q_est)
        n = mesh.n_elements
        self.q = q_est
        self.k = k
        self.t = rule.nodes
        self.w = rule.weights
        self.elems = np.repeat(np.arange(n), q_est)
        self.ts = np.tile(rule.nodes, n)
        tan = np.empty((n, q_est, 2))
        ends = np.array([0.0, 1.0])
        t0 = np.empty((n, 2))
        t1 = np.empty((n, 2))
        for e in range(n):
            _, tn, _, _ = mesh.frames(e, rule.nodes)
            tan[e] = tn
            _, tn, _, _ = mesh.frames(e, ends)
            t0[e], t1[e] = tn
        self.tan = tan
        self.nu = np.stack([tan[..., 1], -tan[..., 0]], axis=-1)
        self.h = mesh.h
        self.tan0, self.tan1 = t0, t1
        self.nu0 = np.stack([t0[:, 1], -t0[:, 0]], axis=-1)
        self.nu1 = np.stack([t1[:, 1], -t1[:, 0]], axis=-1)

    def log_coeffs(self, op: str, poly, proj: str | None = None):
        """Endpoint log coefficients of ``op psi`` on each element.

        ``op`` is ``"dsV"``, ``"Kp"`` or ``"V"`` and ``poly`` holds the
        per-element coefficients of ``psi`` in the local parameter.  For
        ``"V"`` the density is ``psi nu`` and the value is projected on the
        target tangent (``proj="tan"``) or normal (``proj="nu"``).  Returns
        ``(L0s, L1s, L0e, L1e)``: near the start ``op psi`` behaves like
        ``(L0s + L1s d) ln d`` with ``d`` the arclength to the node, and
        likewise near the end.  Contributions come from the element itself
        and from its neighbour across the node, for any corner angle.
        """
        h = self.h
        d1 = (poly[:, 1] + 2.0 * poly[:, 2]) / h  # slope at the end
        prev = lambda x: np.roll(x, 1, axis=0)
        nxt = lambda x: np.roll(x, -1, axis=0)
        val0, val1 = poly[:, 0], poly.sum(axis=1)
        if op == "V":
            dot = lambda x, y: np.sum(x * y, axis=1)
            w0, w1 = (self.tan0, self.tan1) if proj == "tan" else (self.nu0, self.nu1)
            start = self._node_coeffs(op, self.tan0, self.tan0, -prev(self.tan1),
                                      val0 * dot(self.nu0, w0), prev(val1) * dot(prev(self.nu1), w0))
            end = self._node_coeffs(op, -self.tan1, self.tan1, nxt(self.tan0),
                                    val1 * dot(self.nu1, w1), nxt(val0) * dot(nxt(self.nu0), w1))
            return start + end
        # start node: own element along e = tan0, neighbour along -tan1(prev)
        start = self._node_coeffs(op, self.tan0, self.tan0, -prev(self.tan1), val0, prev(val1),
                                  self.nu0, poly[:, 1] / h, -prev(d1))
        # end node: own element along -tan1, neighbour along tan0(next)
        end = self._node_coeffs(op, -self.tan1, self.tan1, nxt(self.tan0), val1, nxt(val0),
                                self.nu1, -d1, nxt(poly[:, 1] / h))
        return start + end

    @staticmethod
    def _node_coeffs(op, e, tau, d, a0, b0, nu=None, a1=None, b1=None):
        dot = lambda x, y: np.sum(x * y, axis=1)
        ed = dot(e, d)
        if op == "V":
            # the value carries a d ln d term only
            l0 = np.zeros_like(ed)
            l1 = -(a0 + ed * b0)
        elif op == "dsV":
            et, dt = dot(e, tau), dot(d, tau)
            l0 = -et * a0 - dt * b0
            l1 = -et * a1 + (et - 2.0 * dt * ed) * b1
        else:
            dn = dot(d, nu)
            l0 = -dn * b0
            l1 = -2.0 * dn * ed * b1
        return (l0 / (2.0 * np.pi), l1 / (2.0 * np.pi))

    def _log_factors(self, logs, t, t1=None):
        """Smooth factors ``A, B`` with ``ell = A ln t + B ln(1-t)``; ``t1 = 1 - t``."""
        L0s, L1s, L0e, L1e = (np.asarray(x)[:, None] for x in logs)
        t1 = 1.0 - t if t1 is None else t1
        kh = (self.k * self.h)[:, None]
        h = self.h[:, None]
        A = L0s * bessel_j(0, kh * t[None, :]) + L1s * h * t[None, :]
        B = L0e * bessel_j(0, kh * t1[None, :]) + L1e * h * t1[None, :]
        return A, B

    def weighted_sq(self, vals, power: int, logs=None) -> np.ndarray:
        """``h_T^power * int_T |vals|^2`` for values shaped (N, q).

        ``logs`` (see ``log_coeffs``) describe the endpoint singularities of
        ``vals``; they are subtracted, the cross terms use product weights
        on the same Gauss nodes and the log part is integrated separately.
        """
        h = self.h
        w = self.w[None, :]
        if logs is None:
            integral = np.sum(w * np.abs(vals) ** 2, axis=1)
        else:
            A, B = self._log_factors(logs, self.t)
            s = vals - A * np.log(self.t)[None, :] - B * np.log1p(-self.t)[None, :]
            wl = _log_weights(self.q)
            cross = (np.conj(s) * A) @ wl + (np.conj(s) * B) @ wl[::-1]
            integral = np.sum(w * np.abs(s) ** 2, axis=1) + 2.0 * cross.real + self._log_sq(logs)
        return h**power * h * integral

    def _log_sq(self, logs) -> np.ndarray:
        """``int_0^1 |A ln t + B ln(1-t)|^2 dt`` with Gauss-Laguerre on each half."""
        y, wy = _LAGUERRE
        t = 0.5 * np.exp(-y)
        total = 0.0
        for u, u1 in ((t, 1.0 - t), (1.0 - t, t)):
            A, B = self._log_factors(logs, u, u1)
            ell = A * np.log(u)[None, :] + B * np.log(u1)[None, :]
            total = total + 0.5 * (np.abs(ell) ** 2 @ wy)
        return total


def _combine(*terms):
    """Sum ``(scale, coeffs)`` pairs of log coefficients."""
    return tuple(sum(a * c[i] for a, c in terms) for i in range(4))


def _poly_at(poly, t):
    return poly[:, 0:1] + t[None, :] * (poly[:, 1:2] + t[None, :] * poly[:, 2:3])


def _derivative_values(gf, tg: _Targets):
    d = derivative_density(gf).poly
    return _poly_at(d, tg.t)


def _second_derivative(gf) -> np.ndarray:
    c = gf.element_poly()
    return 2.0 * c[:, 2] / gf.mesh.h**2


def _derivative_jumps(gf) -> np.ndarray:
    """``f'(z+) - f'(z-)`` at every node."""
    return _poly_jumps(derivative_density(gf).poly)


def _poly_jumps(d) -> np.ndarray:
    start = d[:, 0]
    end = d[:, 0] + d[:, 1] + d[:, 2]
    return start - np.roll(end, 1)


def _reshape(vals, n, q):
    return np.asarray(vals).reshape(n, q)


def _check(solution: Solution, kinds):
    if solution.kind not in kinds:
        raise EstimatorError(f"estimator for {kinds} got a {solution.kind} solution")


def _evaluator(mesh, data, quad_order, panels):
    return BoundaryEvaluator(mesh, data.k, quad_order, panels)


def estimate_standard(mesh: Mesh, solution: Solution, data: ProblemData, kind: str | None = None,
                      q_est: int = 8, quad_order: int = 16, panels=None) -> EstimatorReport:
    """``eta(T)^2 = h_T || d/ds (rhs - V phi_h) ||^2_T`` for the standard equations."""
    kind = formulation_kind(kind or solution.kind)
    if kind != solution.kind:
        raise EstimatorError("formulation kind does not match the solution")
    _check(solution, ("std_indirect", "std_direct"))
    n = mesh.n_elements
    tg = _Targets(mesh, q_est, data.k)
    ev = _evaluator(mesh, data, quad_order, panels)
    u = solution.u_h
    du = _derivative_values(u, tg)
    if kind == "std_indirect":
        res = ev.evaluate([density_from(solution.phi)], tg.elems, tg.ts)
        r = du - _reshape(res[2, 0], n, q_est)
        logs = _combine((-1.0, tg.log_coeffs("dsV", _p0_poly(solution.phi))))
    else:
        dens = [density_from(solution.phi), density_from(u, MODE_NU_X), density_from(u, MODE_NU_Y),
                derivative_density(u)]
        res = ev.evaluate(dens, tg.elems, tg.ts)
        dk = _dK(res, 1, tg, data.k, n)
        r = dk - 0.5 * du - _reshape(res[2, 0], n, q_est)
        logs = _combine((-1.0, tg.log_coeffs("dsV", _p0_poly(solution.phi))), (1.0, _dK_logs(tg, data.k, u)))
    eta = tg.weighted_sq(r, 1, logs)
    return EstimatorReport(eta)


def _dK(res, first, tg, k, n):
    """``d/ds (K v)`` from the densities ``v nu_x, v nu_y, v'`` starting at ``first``."""
    q = tg.q
    vx = _reshape(res[0, first], n, q)
    vy = _reshape(res[0, first + 1], n, q)
    kp = _reshape(res[1, first + 2], n, q)
    return k * k * (tg.tan[..., 0] * vx + tg.tan[..., 1] * vy) - kp


def _dK_logs(tg, k, v):
    """Endpoint log coefficients of ``d/ds (K v)``."""
    return _combine((k * k, tg.log_coeffs("V", v.element_poly(), "tan")),
                    (-1.0, tg.log_coeffs("Kp", derivative_density(v).poly)))


def estimate_cfie_indirect(mesh: Mesh, solution: Solution, data: ProblemData,
                           q_est: int = 8, quad_order: int = 16, panels=None) -> EstimatorReport:
    _check(solution, ("cfie_indirect_mixed",))
    n = mesh.n_elements
    q = q_est
    tg = _Targets(mesh, q_est, data.k)
    ev = _evaluator(mesh, data, quad_order, panels)
    phi, f, u = solution.phi, solution.f, solution.u_h
    dens = [density_from(phi), density_from(f, MODE_NU_X), density_from(f, MODE_NU_Y), derivative_density(f)]
    res = ev.evaluate(dens, tg.elems, tg.ts)
    df = _derivative_values(f, tg)
    d_kf = _dK(res, 1, tg, data.k, n) + 0.5 * df
    r1 = _derivative_values(u, tg) - _reshape(res[2, 0], n, q) - 1j * d_kf
    logs = _combine((-1.0, tg.log_coeffs("dsV", _p0_poly(phi))),
                    (-1j, _dK_logs(tg, data.k, f)))
    eta1 = tg.weighted_sq(r1, 1, logs)
    fv = _poly_at(f.element_poly(), tg.t)
    r2 = phi.coeffs[:, None] - data.alpha * fv + _second_derivative(f)[:, None]
    eta2 = tg.weighted_sq(r2, 2) + _jump_term(f, mesh)
    return EstimatorReport(eta1 + eta2, eta1, eta2)


def estimate_cfie_direct(mesh: Mesh, solution: Solution, data: ProblemData,
                         q_est: int = 8, quad_order: int = 16, panels=None) -> EstimatorReport:
    _check(solution, ("cfie_direct_mixed",))
    n = mesh.n_elements
    q = q_est
    tg = _Targets(mesh, q_est, data.k)
    ev = _evaluator(mesh, data, quad_order, panels)
    phi, f, u = solution.phi, solution.f, solution.u_h
    dens = [density_from(phi), density_from(u, MODE_NU_X), density_from(u, MODE_NU_Y), derivative_density(u)]
    res = ev.evaluate(dens, tg.elems, tg.ts)
    du = _derivative_values(u, tg)
    dv_phi = _reshape(res[2, 0], n, q)
    r1 = _dK(res, 1, tg, data.k, n) - 0.5 * du - dv_phi - 1j * _derivative_values(f, tg)
    du_poly = derivative_density(u).poly
    logs = _combine((-1.0, tg.log_coeffs("dsV", _p0_poly(phi))), (1.0, _dK_logs(tg, data.k, u)))
    eta1 = tg.weighted_sq(r1, 1, logs)
    k2 = data.k**2
    vnu = tg.nu[..., 0] * _reshape(res[0, 1], n, q) + tg.nu[..., 1] * _reshape(res[0, 2], n, q)
    wu = -k2 * vnu - _reshape(res[2, 3], n, q)
    kp_phi = _reshape(res[1, 0], n, q)
    fv = _poly_at(f.element_poly(), tg.t)
    r2 = wu + kp_phi + 0.5 * phi.coeffs[:, None] - data.alpha * fv + _second_derivative(f)[:, None]
    logs2 = _combine((-k2, tg.log_coeffs("V", u.element_poly(), "nu")),
                     (-1.0, tg.log_coeffs("dsV", du_poly)), (1.0, tg.log_coeffs("Kp", _p0_poly(phi))))
    eta2 = tg.weighted_sq(r2, 2, logs2) + _jump_term(f, mesh)
    return EstimatorReport(eta1 + eta2, eta1, eta2)


def _p0_poly(phi) -> np.ndarray:
    c = np.asarray(phi.coeffs)
    return np.stack([c, np.zeros_like(c), np.zeros_like(c)], axis=1)


def _jump_term(f, mesh: Mesh) -> np.ndarray:
    j2 = np.abs(_derivative_jumps(f)) ** 2
    return mesh.h * (j2 + np.roll(j2, -1))


def estimate(solution: Solution, data: ProblemData, q_est: int = 8, quad_order: int = 16,
             panels=None) -> EstimatorReport:
    """Dispatch on the formulation of ``solution``."""
    mesh = solution.mesh
    kw = dict(q_est=q_est, quad_order=quad_order, panels=panels)
    if solution.kind in ("std_indirect", "std_direct"):
        return estimate_standard(mesh, solution, data, solution.kind, **kw)
    if solution.kind == "cfie_indirect_mixed":
        return estimate_cfie_indirect(mesh, solution, data, **kw)
    return estimate_cfie_direct(mesh, solution, data, **kw)
