"""Doerfler marking and the solve-estimate-mark-refine loop."""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .estimators import estimate
from .formulations import (
    ProblemData,
    SingularSystemError,
    assemble_system,
    energy_norm_error,
    formulation_kind,
    is_direct,
    is_mixed,
    solve,
)
from .geometry import BoundaryGeometry, Mesh, build_initial_mesh, refine
from .operators.assembly import assemble_V_p1

log = logging.getLogger(__name__)


class AdaptiveError(ValueError):
    pass


def _check_theta(theta) -> float:
    theta = float(theta)
    if not (0.0 < theta <= 1.0) or math.isnan(theta):
        raise AdaptiveError(f"theta must lie in (0, 1], got {theta}")
    return theta


def doerfler_mark(indicators, theta: float) -> set:
    """Minimal set of elements carrying a ``theta`` fraction of ``sum(eta^2)``.

    Elements are sorted by indicator (descending, ties by ascending id) and
    the shortest prefix meeting the bulk criterion is returned.  ``theta = 1``
    marks every element.  All-zero indicators return the empty set.
    """
    theta = _check_theta(theta)
    eta = np.asarray(indicators, dtype=float)
    if eta.ndim != 1:
        raise AdaptiveError("indicators must be a 1D sequence")
    if np.any(eta < 0) or not np.all(np.isfinite(eta)):
        raise AdaptiveError("indicators must be finite and nonnegative")
    total = eta.sum()
    if eta.size == 0 or total == 0.0:
        return set()
    if theta == 1.0:
        return set(range(eta.size))
    order = np.lexsort((np.arange(eta.size), -eta))
    csum = np.cumsum(eta[order])
    # compare against the total accumulated in the same order
    m = int(np.searchsorted(csum, theta * csum[-1], side="left")) + 1
    return set(int(i) for i in order[: min(m, eta.size)])


@dataclass(frozen=True)
class AdaptiveConfig:
    """Settings of one adaptive run.

    ``max_elements`` stops the loop once the mesh exceeds it; ``max_levels``
    caps the number of levels (``None`` for no cap).
    """

    theta: float = 0.9
    formulation: str = "cfie_direct_mixed"
    max_elements: int = 1200
    max_levels: Optional[int] = None
    quad_order: int = 16
    est_quad_order: int = 8

    def __post_init__(self):
        _check_theta(self.theta)
        object.__setattr__(self, "formulation", formulation_kind(self.formulation))
        if self.max_elements < 1:
            raise AdaptiveError("max_elements must be positive")
        if self.max_levels is not None and self.max_levels < 0:
            raise AdaptiveError("max_levels must be nonnegative")
        if self.quad_order < 2 or self.est_quad_order < 1:
            raise AdaptiveError("quadrature orders too small")


@dataclass(frozen=True)
class LevelRecord:
    level: int
    n_elements: int
    eta: float
    eta2: Optional[float]
    error: Optional[float]
    condition: float
    seconds: float


@dataclass
class RunRecord:
    formulation: str
    k: float
    theta: float
    levels: List[LevelRecord] = field(default_factory=list)
    meshes: List[Mesh] = field(default_factory=list, repr=False)

    def column(self, name: str) -> np.ndarray:
        """``N``, ``eta``, ``eta2`` or ``err`` as a float array (NaN if absent)."""
        attr = {"N": "n_elements", "eta": "eta", "eta2": "eta2", "err": "error"}[name]
        vals = [getattr(r, attr) for r in self.levels]
        return np.array([np.nan if v is None else v for v in vals], dtype=float)

    @property
    def N(self) -> np.ndarray:
        return np.array([r.n_elements for r in self.levels], dtype=int)


def adaptive_loop(geometry: BoundaryGeometry, data: ProblemData, config: AdaptiveConfig,
                  mesh: Mesh | None = None, keep_meshes: bool = False) -> RunRecord:
    """Run solve -> estimate -> mark -> refine until the element budget is used."""
    kind = config.formulation
    if mesh is None:
        mesh = build_initial_mesh(geometry)
    if config.max_elements < mesh.n_elements:
        raise AdaptiveError("max_elements is below the initial element count")
    want_error = is_direct(kind) and data.phi_exact is not None
    record = RunRecord(kind, data.k, config.theta)
    level = 0
    while True:
        t0 = time.perf_counter()
        try:
            sol = solve(assemble_system(kind, mesh, data, config.quad_order))
        except SingularSystemError as exc:
            raise SingularSystemError(f"level {level} (N={mesh.n_elements}): {exc}") from exc
        rep = estimate(sol, data, config.est_quad_order, config.quad_order)
        err = None
        if want_error:
            V1 = assemble_V_p1(mesh, 0.0).data
            err = energy_norm_error(mesh, sol.phi, data.phi_exact, V1)
        row = LevelRecord(level, mesh.n_elements, rep.total, rep.total2 if is_mixed(kind) else None,
                          err, sol.condition, time.perf_counter() - t0)
        record.levels.append(row)
        if keep_meshes:
            record.meshes.append(mesh)
        log.info("level %d N=%d eta=%.3e eta2=%s err=%s (%.1fs)", level, row.n_elements, row.eta,
                 row.eta2, row.error, row.seconds)
        if config.max_levels is not None and level >= config.max_levels:
            break
        marked = doerfler_mark(rep.eta_sq, config.theta)
        if not marked:
            log.info("all indicators vanish; stopping")
            break
        new = refine(mesh, marked)
        if new.n_elements > config.max_elements:
            break
        mesh = new
        level += 1
    return record


def fit_rate(record, field: str = "eta", window: float = 1.0, min_points: int = 4) -> float:
    """Least-squares slope of ``log(field)`` against ``log(N)``.

    ``window`` in (0, 1] is the trailing fraction of levels used; a value
    above 1 is read as a trailing range factor in N (``window=10`` is the
    last decade).
    """
    if isinstance(record, RunRecord):
        N = record.column("N")
        y = record.column(field)
    else:
        N, y = (np.asarray(a, dtype=float) for a in record)
    mask = np.isfinite(y) & (y > 0)
    N, y = N[mask], y[mask]
    if window <= 0:
        raise AdaptiveError("window must be positive")
    if window <= 1.0:
        m = max(int(math.ceil(window * N.size)), 0)
        N, y = N[N.size - m:], y[y.size - m:]
    else:
        keep = N >= N[-1] / window * (1 - 1e-12) if N.size else np.zeros(0, bool)
        N, y = N[keep], y[keep]
    if N.size < min_points:
        raise AdaptiveError(f"need at least {min_points} data points, got {N.size}")
    slope = np.polyfit(np.log(N), np.log(y), 1)[0]
    return float(slope)
