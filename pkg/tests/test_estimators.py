import numpy as np
import pytest

from cfiebem.adaptive import AdaptiveConfig, adaptive_loop
from cfiebem.estimators import (
    EstimatorError,
    _derivative_jumps,
    _Targets,
    estimate,
    estimate_cfie_direct,
    estimate_cfie_indirect,
    estimate_standard,
)
from cfiebem.experiments import K_CIRCLE, make_geometry
from cfiebem.formulations import KINDS, Solution, assemble_system, energy_norm_error, solve
from cfiebem.geometry import build_initial_mesh, refine
from cfiebem.operators import GridFunction

from conftest import problem_data, uniform_mesh, zero_data


def _solve(kind, mesh, data):
    return solve(assemble_system(kind, mesh, data))


def _rel_change(a, b):
    return np.max(np.abs(a.eta_sq - b.eta_sq) / b.eta_sq)


@pytest.mark.parametrize("kind", KINDS)
def test_zero_datum_zero_indicators(circle, kind):
    data = zero_data(circle, 12.0)
    rep = estimate(_solve(kind, uniform_mesh("circle", 8), data), data)
    assert np.all(rep.eta_sq == 0)
    assert rep.total == 0


def test_h_weight_scaling(circle):
    mesh = uniform_mesh("circle", 8)
    fine = refine(mesh, {0})
    const = lambda m: np.ones((m.n_elements, 8))
    parent = _Targets(mesh, 8, 1.0).weighted_sq(const(mesh), 1)
    kids = _Targets(fine, 8, 1.0).weighted_sq(const(fine), 1)
    # weight h_T and element length both halve
    assert kids[0] == pytest.approx(parent[0] / 4, rel=1e-12)
    assert kids[1] == pytest.approx(parent[0] / 4, rel=1e-12)


@pytest.mark.parametrize("k,kinds", [(K_CIRCLE + 10, KINDS), (K_CIRCLE, KINDS[2:])])
def test_quadrature_stability_circle16(circle, k, kinds):
    # at k_O the standard densities are ~1e10 and their residuals cancel to ~1e-5
    mesh = uniform_mesh("circle", 16)
    data = problem_data(circle, k)
    for kind in kinds:
        sol = _solve(kind, mesh, data)
        assert _rel_change(estimate(sol, data, 8), estimate(sol, data, 16)) <= 1e-6


@pytest.mark.parametrize("kind,k", [("circle", K_CIRCLE), ("circle", K_CIRCLE + 10), ("lshape", 10.0),
                                    ("lshape", 20.0)])
def test_quadrature_stability_sampled_meshes(kind, k):
    g = make_geometry(kind)
    data = problem_data(g, k)
    rng = np.random.default_rng(7)
    mesh = build_initial_mesh(g)
    worst = 0.0
    while True:
        n = mesh.n_elements
        fine = refine(mesh, rng.choice(n, size=max(1, n // 3), replace=False))
        if fine.n_elements > 64:
            break
        mesh = fine
        for form in KINDS:
            sol = _solve(form, mesh, data)
            worst = max(worst, _rel_change(estimate(sol, data, 8), estimate(sol, data, 16)))
    assert worst <= 1e-4


def test_eta2_constant_phi(circle):
    mesh = uniform_mesh("circle", 16)
    c, j = 3.0, 5
    vals = np.zeros(16, dtype=complex)
    vals[j] = c
    zero_s2 = GridFunction("S2", np.zeros(32, dtype=complex), mesh)
    sol = Solution("cfie_indirect_mixed", GridFunction("P0", vals, mesh), zero_s2, mesh, zero_s2, 1.0, 0.0)
    rep = estimate_cfie_indirect(mesh, sol, zero_data(circle, 5.0))
    h = mesh.h[j]
    assert rep.eta2_sq[j] == pytest.approx(c**2 * h**3, rel=1e-12)
    assert np.all(np.delete(rep.eta2_sq, j) == 0)


def test_jump_vanishes_for_affine_f_on_collinear_panels(lshape):
    mesh = refine(build_initial_mesh(lshape), {0})
    # elements 0 and 1 are the collinear halves of the first edge
    assert np.allclose(mesh.frames(0, [1.0])[1], mesh.frames(1, [0.0])[1])
    n = mesh.n_elements
    coeffs = np.zeros(2 * n, dtype=complex)
    coeffs[:3] = [0.0, mesh.h[0], mesh.h[0] + mesh.h[1]]
    jumps = _derivative_jumps(GridFunction("S2", coeffs, mesh))
    assert abs(jumps[1]) < 1e-12
    assert abs(jumps[2]) > 0.5  # the kink at the corner is seen


@pytest.mark.parametrize("kind", ["cfie_indirect_mixed", "cfie_direct_mixed"])
def test_additivity_and_split(circle, kind):
    mesh = refine(uniform_mesh("circle", 16), {2, 3})
    data = problem_data(circle, 12.0)
    rep = estimate(_solve(kind, mesh, data), data)
    assert np.all(rep.eta_sq >= 0)
    assert np.allclose(rep.eta_sq, rep.eta1_sq + rep.eta2_sq, rtol=1e-14, atol=0)
    assert rep.total**2 == pytest.approx(np.sum(rep.eta_sq), rel=1e-12)
    assert rep.total1**2 + rep.total2**2 == pytest.approx(rep.total**2, rel=1e-12)
    sub = {0, 4, 7}
    assert rep.subset(sub) == pytest.approx(sum(rep.eta_sq[i] for i in sub), rel=1e-14)


def test_mismatched_kind(circle):
    mesh = uniform_mesh("circle", 8)
    data = problem_data(circle, 12.0)
    std = _solve("std_indirect", mesh, data)
    mixed = _solve("cfie_indirect_mixed", mesh, data)
    with pytest.raises(EstimatorError):
        estimate_cfie_direct(mesh, mixed, data)
    with pytest.raises(EstimatorError):
        estimate_cfie_indirect(mesh, std, data)
    with pytest.raises(EstimatorError):
        estimate_standard(mesh, mixed, data)
    with pytest.raises(EstimatorError):
        estimate_standard(mesh, std, data, kind="std_direct")


def test_consistency_at_n512(circle):
    mesh = uniform_mesh("circle", 512)
    data = problem_data(circle, K_CIRCLE + 10)
    sol = _solve("cfie_direct_mixed", mesh, data)
    eta = estimate(sol, data).total
    err = energy_norm_error(mesh, sol.phi, data.phi_exact)
    assert 1 / 50 <= eta / err <= 50


@pytest.mark.parametrize("k", [K_CIRCLE, K_CIRCLE + 10])
def test_reliability_trend(circle, k):
    cfg = AdaptiveConfig(theta=0.9, formulation="cfie_direct_mixed", max_elements=200)
    rec = adaptive_loop(circle, problem_data(circle, k), cfg)
    err, eta = rec.column("err"), rec.column("eta")
    assert len(rec.levels) >= 5
    assert np.all(err <= 10 * eta)
