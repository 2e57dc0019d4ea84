"""The four discrete boundary integral formulations and their solution.

Unknowns are ``phi`` in P0 and, for the mixed forms, ``f`` in S2.  With
``B`` the P0 x S2 mass pairing, ``A = alpha M + S`` the S2 mass plus
stiffness, and ``u_h`` the S2 projection of the Dirichlet datum::

    std_indirect         V phi = B u_h
    std_direct           V phi = (K - B/2) u_h
    cfie_indirect_mixed  [ V     i(K + B/2) ] [phi]   [B u_h]
                         [ -B^T  A          ] [ f ] = [ 0   ]
    cfie_direct_mixed    [ V            iB ] [phi]   [(K - B/2) u_h]
                         [ -(K' + B^T/2) A ] [ f ] = [ W u_h       ]

Mixed systems are solved by eliminating ``f`` with a sparse factorization
of ``A``; the remaining dense N x N Schur complement is LU-factorized.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.linalg as sla
from scipy.sparse.linalg import splu

from .geometry import BoundaryGeometry, Mesh
from .operators.assembly import assemble_operators, assemble_V_p1
from .operators.spaces import (
    GridFunction,
    assemble_LB,
    l2_project,
    mass_p0_s2,
    mass_s2,
    stiffness_s2,
)

log = logging.getLogger(__name__)

KINDS = ("std_indirect", "std_direct", "cfie_indirect_mixed", "cfie_direct_mixed")
ALIASES = {
    "std-ind": "std_indirect",
    "std-dir": "std_direct",
    "cfie-ind": "cfie_indirect_mixed",
    "cfie-dir": "cfie_direct_mixed",
}

RESIDUAL_TOL = 1e-10
SINGULAR_RCOND = 1e-14
ILL_CONDITIONED = 1e6


class SingularSystemError(RuntimeError):
    """The discrete system is numerically singular (resonance or inf-sup failure)."""


class FormulationError(ValueError):
    pass


class ConditionWarning(RuntimeWarning):
    pass


def formulation_kind(name: str) -> str:
    name = ALIASES.get(name, name)
    if name not in KINDS:
        raise FormulationError(f"unknown formulation {name!r}")
    return name


def is_mixed(kind: str) -> bool:
    return kind.startswith("cfie")


def is_direct(kind: str) -> bool:
    return kind in ("std_direct", "cfie_direct_mixed")


@dataclass(frozen=True)
class ProblemData:
    """Wavenumber, regularization scale and Dirichlet datum.

    ``u(points)`` evaluates the datum; ``phi_exact(points, normals)``
    evaluates the exact Neumann trace when it is known.
    """

    geometry: BoundaryGeometry
    k: float
    u: Callable
    alpha: float = 1.0
    phi_exact: Optional[Callable] = None

    def __post_init__(self):
        if not (math.isfinite(self.k) and self.k > 0.0):
            raise FormulationError("wavenumber must be positive")
        if not (math.isfinite(self.alpha) and self.alpha > 0.0):
            raise FormulationError("alpha must be positive")


@dataclass(eq=False)
class LinearSystem:
    """Assembled blocks of one discrete formulation."""

    kind: str
    mesh: Mesh
    data: ProblemData
    u_h: GridFunction
    V: np.ndarray
    B: object  # sparse N x 2N
    rhs1: np.ndarray
    K: Optional[np.ndarray] = None
    W: Optional[np.ndarray] = None
    A: Optional[object] = None  # sparse 2N x 2N
    rhs2: Optional[np.ndarray] = None
    panels: object = field(default=None, repr=False)

    @property
    def n_dofs(self) -> int:
        n = self.mesh.n_elements
        return 3 * n if is_mixed(self.kind) else n

    def blocks(self):
        """Dense ``[[A11, A12], [A21, A22]]`` for mixed forms."""
        if not is_mixed(self.kind):
            return [[self.V]]
        Bd = self.B.toarray()
        Ad = self.A.toarray()
        if self.kind == "cfie_indirect_mixed":
            return [[self.V, 1j * (self.K + 0.5 * Bd)], [-Bd.T.astype(complex), Ad.astype(complex)]]
        return [[self.V, 1j * Bd], [-(self.K.T + 0.5 * Bd.T), Ad.astype(complex)]]

    def matrix(self) -> np.ndarray:
        """Full dense system matrix."""
        return np.block(self.blocks())

    def rhs(self) -> np.ndarray:
        if not is_mixed(self.kind):
            return self.rhs1.copy()
        return np.concatenate([self.rhs1, self.rhs2])

    def apply(self, phi, f=None):
        """System matrix times ``(phi, f)`` without forming it."""
        r1 = self.V @ phi
        if not is_mixed(self.kind):
            return r1
        Bf = self.B @ f
        if self.kind == "cfie_indirect_mixed":
            r1 = r1 + 1j * (self.K @ f + 0.5 * Bf)
            r2 = -(self.B.T @ phi) + self.A @ f
        else:
            r1 = r1 + 1j * Bf
            r2 = -(self.K.T @ phi + 0.5 * (self.B.T @ phi)) + self.A @ f
        return np.concatenate([r1, r2])


@dataclass(eq=False)
class Solution:
    kind: str
    phi: GridFunction
    f: Optional[GridFunction]
    mesh: Mesh
    u_h: GridFunction
    condition: float
    residual: float


def assemble_system(kind: str, mesh: Mesh, data: ProblemData, quad_order: int = 16) -> LinearSystem:
    """Assemble blocks and right-hand side of the chosen formulation."""
    kind = formulation_kind(kind)
    k = data.k
    which = ["V"]
    if kind != "std_indirect":
        which.append("K")
    if kind == "cfie_direct_mixed":
        which.append("W")
    ops = assemble_operators(mesh, k, tuple(which), quad_order)
    u_h = l2_project(data.u, "S2", mesh)
    u = u_h.coeffs.astype(complex)
    B = mass_p0_s2(mesh)
    V = ops["V"].data
    K = ops["K"].data if "K" in ops else None
    W = ops["W"].data if "W" in ops else None
    if kind == "std_indirect" or kind == "cfie_indirect_mixed":
        rhs1 = B @ u
    else:
        rhs1 = K @ u - 0.5 * (B @ u)
    A = rhs2 = None
    if is_mixed(kind):
        A = assemble_LB(mesh, data.alpha).data
        rhs2 = np.zeros(2 * mesh.n_elements, dtype=complex) if kind == "cfie_indirect_mixed" else W @ u
    return LinearSystem(kind, mesh, data, u_h, V, B, rhs1, K, W, A, rhs2)


def _factor(S: np.ndarray, kind: str, k: float):
    with warnings.catch_warnings():
        # exact singularity is reported below with formulation context
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        lu, piv = sla.lu_factor(S, check_finite=True)
    diag = np.abs(np.diag(lu))
    if diag.min() == 0.0 or not np.all(np.isfinite(diag)):
        raise SingularSystemError(f"{kind} system is singular at k={k!r}")
    anorm = np.abs(S).sum(axis=0).max()
    rcond, info = sla.lapack.zgecon(lu, anorm, norm="1")
    if info != 0:
        raise RuntimeError("condition estimate failed")
    if rcond < SINGULAR_RCOND:
        raise SingularSystemError(
            f"{kind} system is numerically singular at k={k!r} (rcond={rcond:.2e}); "
            "spurious resonance or inf-sup failure"
        )
    return (lu, piv), 1.0 / rcond


def solve(system: LinearSystem) -> Solution:
    """Factorize and solve; the condition estimate refers to the (reduced) dense matrix."""
    kind = system.kind
    mesh = system.mesh
    k = system.data.k
    f = None
    if not is_mixed(kind):
        S = system.V
        rhs = system.rhs1
    else:
        Alu = splu(system.A.tocsc())
        Bt = system.B.T.toarray()
        AinvBt = Alu.solve(Bt)  # real, 2N x N
        if kind == "cfie_indirect_mixed":
            Kh = system.K + 0.5 * system.B.toarray()
            S = system.V + 1j * (Kh @ AinvBt)
            rhs = system.rhs1
        else:
            Kht = system.K.T + 0.5 * Bt
            S = system.V + 1j * (AinvBt.T @ Kht)
            rhs = system.rhs1 - 1j * (AinvBt.T @ system.rhs2)
    fac, cond = _factor(S, kind, k)
    if cond > ILL_CONDITIONED:
        msg = f"{kind} at k={k}: condition estimate {cond:.2e}"
        log.warning(msg)
        warnings.warn(msg, ConditionWarning, stacklevel=2)
    phi = sla.lu_solve(fac, rhs)
    if is_mixed(kind):
        if kind == "cfie_indirect_mixed":
            g = system.B.T @ phi
        else:
            g = system.rhs2 + system.K.T @ phi + 0.5 * (system.B.T @ phi)
        f = Alu.solve(g.real) + 1j * Alu.solve(g.imag)
    full_rhs = system.rhs()
    res = system.apply(phi, f) - full_rhs
    bnorm = np.linalg.norm(full_rhs)
    residual = float(np.linalg.norm(res) / bnorm) if bnorm > 0 else float(np.linalg.norm(res))
    if residual > RESIDUAL_TOL:
        log.warning("%s at k=%g: relative residual %.2e", kind, k, residual)
    return Solution(
        kind,
        GridFunction("P0", phi, mesh),
        GridFunction("S2", f, mesh) if f is not None else None,
        mesh,
        system.u_h,
        cond,
        residual,
    )


def p0_to_p1(phi_h: GridFunction) -> np.ndarray:
    return np.repeat(np.asarray(phi_h.coeffs), 2)


def energy_norm_error(mesh: Mesh, phi_h: GridFunction, phi_exact, V1=None, check_spd: bool = True) -> float:
    """``<V0 e, conj(e)>^(1/2)`` with ``e = P1-projection(phi_exact) - phi_h``.

    ``phi_exact(points, normals)`` is the exact density.  ``V1`` may pass a
    precomputed Laplace single-layer matrix on P1.
    """
    if phi_h.space != "P0":
        raise FormulationError("phi_h must be a P0 function")
    pe = l2_project(phi_exact, "P1", mesh, with_normal=True)
    e = pe.coeffs - p0_to_p1(phi_h)
    return energy_norm(mesh, e, V1, check_spd)


def energy_norm(mesh: Mesh, e, V1=None, check_spd: bool = True) -> float:
    """V0 energy norm of a P1 coefficient vector (real and imaginary parts)."""
    if V1 is None:
        V1 = assemble_V_p1(mesh, 0.0).data
    V0 = np.real(V1)
    if check_spd:
        try:
            np.linalg.cholesky(0.5 * (V0 + V0.T))
        except np.linalg.LinAlgError as exc:
            raise RuntimeError("Laplace single layer is not positive definite") from exc
    e = np.asarray(e)
    val = np.real(np.vdot(e, V0 @ e))
    return math.sqrt(max(val, 0.0))


def residual_check_direct_f(solution: Solution) -> float:
    """Discrete H1 norm of ``f``, which vanishes for exact data."""
    if solution.kind != "cfie_direct_mixed":
        raise FormulationError("only defined for cfie_direct_mixed solutions")
    mesh = solution.mesh
    f = solution.f.coeffs
    H = mass_s2(mesh) + stiffness_s2(mesh)
    return math.sqrt(max(np.real(np.vdot(f, H @ f)), 0.0))
