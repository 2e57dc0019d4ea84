import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cfiebem.adaptive import AdaptiveConfig, AdaptiveError, RunRecord, adaptive_loop, doerfler_mark, fit_rate
from cfiebem.experiments import K_CIRCLE
from cfiebem.formulations import FormulationError

from conftest import problem_data


def brute_force_min_size(eta, theta):
    """Smallest cardinality of any subset meeting the bulk criterion."""
    total = sum(eta)
    for size in range(len(eta) + 1):
        for sub in itertools.combinations(range(len(eta)), size):
            if sum(eta[i] for i in sub) >= theta * total:
                return size
    return len(eta)


def test_doerfler_examples():
    eta = [9, 4, 1, 1, 1]
    assert doerfler_mark(eta, 0.5) == {0}
    assert doerfler_mark(eta, 0.7) == {0, 1}
    assert doerfler_mark(eta, 1.0) == set(range(5))
    assert doerfler_mark([0, 3, 0], 1.0) == {0, 1, 2}  # zero indicators included for uniform refinement
    assert doerfler_mark([0.0, 0.0], 0.5) == set()


def test_doerfler_ties_by_id():
    assert doerfler_mark([1, 1, 1, 1], 0.5) == {0, 1}
    assert doerfler_mark([2, 5, 5, 2], 0.3) == {1}
    assert doerfler_mark([2, 5, 5, 2], 0.5) == {1, 2}


def test_doerfler_errors():
    for bad in (0.0, -0.1, 1.5, float("nan")):
        with pytest.raises(AdaptiveError):
            doerfler_mark([1, 2], bad)
    with pytest.raises(AdaptiveError):
        doerfler_mark([1, -2], 0.5)
    with pytest.raises(AdaptiveError):
        doerfler_mark([[1, 2]], 0.5)


@settings(max_examples=150, deadline=None)
@given(st.lists(st.integers(0, 1000), min_size=1, max_size=10), st.sampled_from([0.1, 0.3, 0.5, 0.7, 0.9]))
def test_doerfler_minimal(eta, theta):
    # integer-valued indicators keep every partial sum exact
    marked = doerfler_mark(eta, theta)
    total = sum(eta)
    if total == 0:
        assert marked == set()
        return
    assert sum(eta[i] for i in marked) >= theta * total
    assert len(marked) == brute_force_min_size(eta, theta)


def test_fit_rate_exact_and_constant():
    N = np.array([8, 16, 32, 64, 128, 256, 512, 1024], dtype=float)
    assert abs(fit_rate((N, N**-1.5)) + 1.5) < 1e-12
    assert abs(fit_rate((N, 3.0 * np.ones_like(N)))) < 1e-12
    # trailing decade keeps N >= 102.4
    assert abs(fit_rate((N, N**-1.5), window=10.0) + 1.5) < 1e-12


def test_fit_rate_noise(rng):
    N = 2.0 ** np.arange(3, 11)
    for _ in range(50):
        y = N**-1.5 * (1 + rng.uniform(-0.05, 0.05, N.size))
        assert -1.6 <= fit_rate((N, y)) <= -1.4


def test_fit_rate_errors():
    with pytest.raises(AdaptiveError):
        fit_rate(([1, 2, 4], [1, 0.5, 0.25]))
    with pytest.raises(AdaptiveError):
        fit_rate((np.arange(1, 9), np.ones(8)), window=0.25)
    with pytest.raises(AdaptiveError):
        fit_rate(RunRecord("std_indirect", 1.0, 0.9), field="eta")


def test_config_validation():
    with pytest.raises(AdaptiveError):
        AdaptiveConfig(theta=0.0)
    with pytest.raises(AdaptiveError):
        AdaptiveConfig(max_elements=0)
    with pytest.raises(FormulationError):
        AdaptiveConfig(formulation="bogus")
    assert AdaptiveConfig(formulation="cfie-ind").formulation == "cfie_indirect_mixed"


def test_uniform_loop_doubles(circle):
    cfg = AdaptiveConfig(theta=1.0, formulation="cfie_indirect_mixed", max_elements=64)
    rec = adaptive_loop(circle, problem_data(circle, 12.0), cfg)
    assert list(rec.N) == [4 * 2**l for l in range(5)]
    assert np.all(np.isnan(rec.column("err")))
    assert np.all(np.isfinite(rec.column("eta2")))


def test_single_level_budget(circle, lshape):
    cfg = AdaptiveConfig(max_elements=4)
    rec = adaptive_loop(circle, problem_data(circle, 12.0), cfg)
    assert len(rec.levels) == 1 and rec.levels[0].n_elements == 4
    with pytest.raises(AdaptiveError):
        adaptive_loop(lshape, problem_data(lshape, 12.0), cfg)  # 6 initial elements
    rec = adaptive_loop(circle, problem_data(circle, 12.0), AdaptiveConfig(max_levels=0))
    assert len(rec.levels) == 1


def test_loop_deterministic_and_growth(circle):
    cfg = AdaptiveConfig(theta=0.5, formulation="cfie_direct_mixed", max_elements=120)
    data = problem_data(circle, K_CIRCLE)
    a = adaptive_loop(circle, data, cfg, keep_meshes=True)
    b = adaptive_loop(circle, data, cfg)
    assert np.array_equal(a.N, b.N)
    for name in ("eta", "eta2", "err"):
        assert np.allclose(a.column(name), b.column(name), rtol=1e-12, atol=0)
    N = a.N
    assert np.all(N[1:] > N[:-1]) and np.all(N[1:] <= 2 * N[:-1])
    assert len(a.meshes) == len(a.levels) and not b.meshes
    assert all(np.isfinite([r.eta, r.eta2, r.error, r.condition]).all() for r in a.levels)
