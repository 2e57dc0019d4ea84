"""Boundary integral operators, discrete spaces and potential evaluation."""

from .assembly import (
    assemble_K,
    assemble_Kp,
    assemble_operators,
    assemble_V,
    assemble_V_p1,
    assemble_W,
)
from .kernels import gradient_G, kernel_dG, kernel_G
from .spaces import (
    GalerkinMatrix,
    GridFunction,
    assemble_LB,
    l2_project,
    mass_matrix,
    mass_p0_s2,
    mass_s2,
    stiffness_s2,
)

__all__ = [
    "GalerkinMatrix",
    "GridFunction",
    "assemble_K",
    "assemble_Kp",
    "assemble_LB",
    "assemble_operators",
    "assemble_V",
    "assemble_V_p1",
    "assemble_W",
    "gradient_G",
    "kernel_G",
    "kernel_dG",
    "l2_project",
    "mass_matrix",
    "mass_p0_s2",
    "mass_s2",
    "stiffness_s2",
]
