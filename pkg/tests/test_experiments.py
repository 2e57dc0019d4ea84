import math

import numpy as np
import pytest

from cfiebem.experiments import (
    FAMILIES,
    HIGH_FREQUENCIES,
    K_CIRCLE,
    K_LSHAPE,
    ExperimentError,
    ExperimentPreset,
    family_presets,
    find_preset,
    fundamental_solution_trace,
    make_geometry,
    preset_catalog,
    problem_data,
    resonant_wavenumbers,
    X0,
)
from cfiebem.geometry import BoundaryGeometry
from cfiebem.operators import l2_project
from cfiebem.specfun import bessel_j

from conftest import uniform_mesh


def test_resonant_wavenumbers():
    assert resonant_wavenumbers("circle") == 24.04825558
    assert resonant_wavenumbers("lshape") == pytest.approx(62.83185307, abs=1e-8)
    assert abs(bessel_j(0, 0.1 * K_CIRCLE)) < 1e-8
    with pytest.raises(ExperimentError):
        resonant_wavenumbers("square")


def test_catalog_sweeps():
    cat = preset_catalog()
    assert len(cat) == len({p.name for p in cat})
    circ = family_presets("circle-critical", "cfie-dir")
    assert sorted({p.k for p in circ}) == sorted([K_CIRCLE + 10.0**p for p in range(1, -7, -1)] + [K_CIRCLE])
    assert len({p.k for p in circ}) == 9 and len(circ) == 18
    high = family_presets("lshape-high", "std-ind")
    assert sorted({p.k for p in high}) == sorted(HIGH_FREQUENCIES)
    assert len(high) == 12
    assert len({p.k for p in family_presets("lshape-critical")}) == 9
    assert K_LSHAPE in {p.k for p in family_presets("lshape-critical")}
    assert all(p.x0 == X0 == (0.0, 0.05) for p in cat)
    assert len(cat) == sum(len(family_presets(f)) for f in FAMILIES)
    with pytest.raises(ExperimentError):
        family_presets("circle-low")


def test_find_preset_and_file_name():
    p = find_preset("circle-cfie-dir-kO-ada")
    assert (p.geometry_kind, p.k, p.formulation, p.theta) == ("circle", K_CIRCLE, "cfie_direct_mixed", 0.9)
    assert p.has_exact
    assert p.file_name() == "geo-circle_dir-1_com-1_kap-24.04825558_p-0_the-90.csv"
    q = find_preset("lshape-std-ind-k100-uni")
    assert not q.has_exact
    assert q.file_name() == "geo-lshape_dir-0_com-0_kap-100_p-0_the-100.csv"
    with pytest.raises(ExperimentError):
        find_preset("nope")
    with pytest.raises(ExperimentError):
        ExperimentPreset("x", "f", "circle", -1.0, "cfie-dir", 0.9, "t")


def test_source_inside_both_geometries():
    for kind in ("circle", "lshape"):
        g = make_geometry(kind)
        assert g.contains(X0)
    with pytest.raises(ExperimentError):
        problem_data(make_geometry("circle"), 10.0, x0=(0.2, 0.0))


def test_radial_dependence(rng):
    ang = rng.uniform(0, 2 * np.pi, 20)
    pts = np.array(X0) + 0.03 * np.column_stack([np.cos(ang), np.sin(ang)])
    u = fundamental_solution_trace(24.0, X0, pts)
    assert np.allclose(u, u[0], rtol=1e-14, atol=0)


@pytest.mark.parametrize("k", [1.0, K_CIRCLE, 100.0])
def test_normal_derivative_finite_differences(k, rng):
    mesh = uniform_mesh("lshape", 24)
    for e in rng.choice(24, 6, replace=False):
        pts, tan, nrm, _ = mesh.frames(int(e), np.array([0.3, 0.7]))
        _, du = fundamental_solution_trace(k, X0, pts, nrm)
        d = 1e-5
        fd = (fundamental_solution_trace(k, X0, pts + d * nrm) - fundamental_solution_trace(k, X0, pts - d * nrm)) / (2 * d)
        assert np.all(np.abs(fd - du) <= 1e-6 * np.maximum(np.abs(du), 1.0))


def test_laplace_normal_derivative():
    mesh = uniform_mesh("circle", 16)
    pts, _, nrm, _ = mesh.frames(3, np.linspace(0.1, 0.9, 5))
    _, du = fundamental_solution_trace(0.0, X0, pts, nrm)
    z = pts - np.array(X0)
    ref = -np.sum(z * nrm, axis=1) / (2 * math.pi * np.sum(z * z, axis=1))
    assert np.allclose(du, ref, rtol=1e-13, atol=0)


def test_source_coincidence():
    with pytest.raises(ExperimentError):
        fundamental_solution_trace(5.0, X0, np.array(X0))


@pytest.mark.parametrize("kind", ["circle", "lshape"])
def test_p1_projection_of_neumann_trace(kind):
    g = make_geometry(kind)
    n = 512 if kind == "circle" else 384
    mesh = uniform_mesh(kind, n)
    data = problem_data(g, K_CIRCLE)
    proj = l2_project(data.phi_exact, "P1", mesh, with_normal=True)
    c = proj.coeffs.reshape(n, 2)
    mid = 0.5 * (c[:, 0] + c[:, 1])
    pts, nrm = [], []
    for e in range(n):
        p, _, nu, _ = mesh.frames(e, np.array([0.5]))
        pts.append(p[0])
        nrm.append(nu[0])
    exact = data.phi_exact(np.array(pts), np.array(nrm))
    keep = np.ones(n, dtype=bool)
    if kind == "lshape":
        corner = [np.min(np.linalg.norm(np.array(g.vertices) - p, axis=1)) for p in pts]
        keep = np.array(corner) > 2 * mesh.h.max()
    rel = np.abs(mid - exact)[keep] / np.abs(exact)[keep]
    assert rel.max() <= 0.01


def test_geometry_factory():
    assert make_geometry("circle") == BoundaryGeometry.circle()
    with pytest.raises(ExperimentError):
        make_geometry("torus")
