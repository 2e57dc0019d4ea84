"""Preset problems: geometries, wavenumbers and the manufactured solution.

The exact exterior field is the fundamental solution with its singularity
at ``X0 = (0, 1/20)`` inside both domains, so the Dirichlet datum and the
Neumann trace are known in closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from .formulations import ALIASES, ProblemData, formulation_kind, is_direct
from .geometry import BoundaryGeometry
from .operators.kernels import kernel_G, kernel_dG

X0 = (0.0, 0.05)
K_CIRCLE = 24.04825558  # first J0 root / radius 0.1, truncated
K_LSHAPE = 20.0 * math.pi
HIGH_FREQUENCIES = (1.0, 10.0, 100.0, 500.0, 750.0, 1000.0)
THETAS = (0.9, 1.0)
SHORT = {v: k for k, v in ALIASES.items()}


class ExperimentError(ValueError):
    pass


def fundamental_solution_trace(k: float, x0, x, normals=None):
    """Values ``U(x) = G_k(x - x0)`` and, if ``normals`` is given, ``dU/dnu``.

    ``x`` and ``normals`` have shape ``(m, 2)`` (or ``(2,)`` for one point).
    Returns ``U`` or ``(U, dU/dnu)``.
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    z = x - np.asarray(x0, dtype=float)[None, :]
    r = np.hypot(z[:, 0], z[:, 1])
    if np.any(r == 0.0):
        raise ExperimentError("evaluation point coincides with the source x0")
    u = kernel_G(k, r)
    if normals is None:
        return u[0] if single else u
    nu = np.atleast_2d(np.asarray(normals, dtype=float))
    du = kernel_dG(k, r) * np.sum(z * nu, axis=1) / r
    return (u[0], du[0]) if single else (u, du)


def resonant_wavenumbers(kind: str) -> float:
    """Interior Dirichlet eigen-wavenumber used in the resonance sweeps."""
    if kind == "circle":
        return K_CIRCLE
    if kind == "lshape":
        return K_LSHAPE
    raise ExperimentError(f"unknown geometry {kind!r}")


def make_geometry(kind: str) -> BoundaryGeometry:
    if kind == "circle":
        return BoundaryGeometry.circle()
    if kind == "lshape":
        return BoundaryGeometry.lshape()
    raise ExperimentError(f"unknown geometry {kind!r}")


def problem_data(geometry: BoundaryGeometry, k: float, alpha: float = 1.0, x0=X0) -> ProblemData:
    """Dirichlet datum and exact Neumann trace of ``G_k(. - x0)``."""
    x0 = np.asarray(x0, dtype=float)
    if not geometry.contains(x0):
        raise ExperimentError("source point must lie inside the domain")

    def u(points):
        return fundamental_solution_trace(k, x0, points)

    def phi(points, normals):
        return fundamental_solution_trace(k, x0, points, normals)[1]

    return ProblemData(geometry, float(k), u, float(alpha), phi)


@dataclass(frozen=True)
class ExperimentPreset:
    """One run of the experiment grid.

    ``family`` groups the presets of one sweep; ``tag`` names the
    wavenumber (``kO``, ``kO+1e-3``, ``k100`` ...).
    """

    name: str
    family: str
    geometry_kind: str
    k: float
    formulation: str
    theta: float
    tag: str
    alpha: float = 1.0
    x0: Tuple[float, float] = X0

    def __post_init__(self):
        if not self.k > 0:
            raise ExperimentError("k must be positive")
        object.__setattr__(self, "formulation", formulation_kind(self.formulation))

    @property
    def geometry(self) -> BoundaryGeometry:
        return make_geometry(self.geometry_kind)

    @property
    def data(self) -> ProblemData:
        return problem_data(self.geometry, self.k, self.alpha, self.x0)

    @property
    def has_exact(self) -> bool:
        return is_direct(self.formulation)

    def file_name(self) -> str:
        """CSV name ``geo-{g}_dir-{0|1}_com-{0|1}_kap-{k}_p-0_the-{90|100}.csv``."""
        d = int(is_direct(self.formulation))
        c = int(self.formulation.startswith("cfie"))
        kap = ("%.10f" % self.k).rstrip("0").rstrip(".")
        return f"geo-{self.geometry_kind}_dir-{d}_com-{c}_kap-{kap}_p-0_the-{round(100 * self.theta)}.csv"


def _resonance_sweep(k0: float) -> List[Tuple[str, float]]:
    out = [(f"kO+1e{p}", k0 + 10.0**p) for p in range(1, -7, -1)]
    out.append(("kO", k0))
    return out


def _sweeps() -> Dict[str, Tuple[str, List[Tuple[str, float]]]]:
    return {
        "circle-critical": ("circle", _resonance_sweep(K_CIRCLE)),
        "lshape-critical": ("lshape", _resonance_sweep(K_LSHAPE)),
        "circle-high": ("circle", [(f"k{int(k)}", k) for k in HIGH_FREQUENCIES]),
        "lshape-high": ("lshape", [(f"k{int(k)}", k) for k in HIGH_FREQUENCIES]),
    }


FAMILIES = tuple(_sweeps())


def preset_catalog() -> List[ExperimentPreset]:
    """Full grid: families x formulations x theta x wavenumbers.

    Names look like ``circle-cfie-dir-kO-ada`` (theta 0.9) or
    ``lshape-std-ind-kO+1e1-uni`` (theta 1).
    """
    out = []
    for family, (geo, ks) in _sweeps().items():
        for kind in ALIASES.values():
            for theta in THETAS:
                suffix = "uni" if theta == 1.0 else "ada"
                for tag, k in ks:
                    name = f"{geo}-{SHORT[kind]}-{tag}-{suffix}"
                    out.append(ExperimentPreset(name, family, geo, k, kind, theta, tag))
    return out


def find_preset(name: str) -> ExperimentPreset:
    for p in preset_catalog():
        if p.name == name:
            return p
    raise ExperimentError(f"unknown preset {name!r}")


def family_presets(family: str, formulation: Optional[str] = None) -> List[ExperimentPreset]:
    if family not in FAMILIES:
        raise ExperimentError(f"unknown family {family!r}; choose from {', '.join(FAMILIES)}")
    kind = formulation_kind(formulation) if formulation else None
    return [p for p in preset_catalog() if p.family == family and (kind is None or p.formulation == kind)]
