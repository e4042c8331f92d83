"""Direction-search solvers against per-coordinate grids and dense sampling."""

import numpy as np
import pytest

import subderiv as sd
from subderiv.extreal import ExtReal
from subderiv.model import ScalarPart

from conftest import l1_table_direction


def grid_scalar_min(c, g, lo=-1.0, hi=1.0, n=400_001):
    """Independent 1-D oracle for min over [lo, hi] of c*t + g(t)."""
    ts = np.linspace(lo, hi, n)
    vals = c * ts + np.array([g(t) for t in ts])
    i = int(np.argmin(vals))
    return float(ts[i]), float(vals[i])


def test_l2_smooth_quadratic(quad2):
    res = sd.solve_l2_smooth(quad2, np.array([3.0, 4.0]))
    assert res.w == pytest.approx(np.array([-0.6, -0.8]))
    assert res.value == ExtReal(-5.0)
    assert res.exact
    # Dense sphere sampling cannot do better.
    brute = sd.brute_force_direction(quad2, np.array([3.0, 4.0]),
                                     sd.NormChoice.L2, 1e-3)
    assert brute.value.v >= res.value.v - 1e-12


def test_l2_smooth_stationary_point(quad2):
    res = sd.solve_l2_smooth(quad2, np.zeros(2))
    assert res.w == pytest.approx(np.zeros(2))
    assert res.value == ExtReal(0.0)


def test_l2_smooth_requires_gradient(l1):
    with pytest.raises(sd.NoGradient):
        sd.solve_l2_smooth(l1, np.zeros(3))


def separable_fixture(c, x, lam=1.0):
    n = len(c)
    phi = sd.smooth_model(n, lambda z, c=np.asarray(c, float): float(np.dot(c, z)),
                          lambda z, c=np.asarray(c, float): c.copy())
    model = sd.sum_models([phi, sd.L1Norm(n, lam)])
    grad, parts = model.separable_parts(np.asarray(x, dtype=float))
    return model, grad, parts


def test_linf_separable_example():
    model, grad, parts = separable_fixture([2.0, -0.5], [0.0, 0.0])
    res = sd.solve_linf_separable(parts, grad, np.zeros(2), model=model)
    # Coordinate 1 sits in I5 (w = -1, s = -1); coordinate 2 in I7 (w = 0).
    assert res.w == pytest.approx(np.array([-1.0, 0.0]))
    assert res.value == ExtReal(-1.0)
    assert res.exact
    # Per-coordinate grid oracle agrees.
    t1, s1 = grid_scalar_min(2.0, lambda t: abs(t))
    t2, s2 = grid_scalar_min(-0.5, lambda t: abs(t))
    assert res.w[0] == pytest.approx(t1, abs=1e-5)
    assert res.w[1] == pytest.approx(t2, abs=1e-5)
    assert res.value.v == pytest.approx(s1 + s2, abs=1e-5)


def test_linf_separable_all_flat():
    model, grad, parts = separable_fixture([0.0, 0.0], [0.0, 0.0])
    res = sd.solve_linf_separable(parts, grad, np.zeros(2), model=model)
    assert res.w == pytest.approx(np.zeros(2))
    assert res.value == ExtReal(0.0)


def test_linf_separable_positive_coordinate():
    # x = (1) > 0, c = (2), lam = 1: index set I1, w = -1; the optimal value
    # of the scalar subproblem is -(c + lam) = -3, confirmed by the grid.
    model, grad, parts = separable_fixture([2.0], [1.0])
    res = sd.solve_linf_separable(parts, grad, np.array([1.0]), model=model)
    t, s = grid_scalar_min(2.0, lambda t: t)  # g_1(t) = lam * t on the x>0 branch
    assert res.w[0] == pytest.approx(t, abs=1e-5) and t == pytest.approx(-1.0)
    assert res.value.v == pytest.approx(s, abs=1e-5)
    assert res.value == ExtReal(-3.0)


def test_linf_separable_matches_index_table_randomly(rng):
    for _ in range(50):
        n = int(rng.integers(1, 6))
        lam = float(rng.uniform(0.2, 2.0))
        c = rng.uniform(-3, 3, n)
        x = rng.uniform(-1, 1, n)
        x[rng.random(n) < 0.4] = 0.0  # exercise the kink rows
        model, grad, parts = separable_fixture(c, x, lam)
        res = sd.solve_linf_separable(parts, grad, x, model=model)
        w_ref, s_ref = l1_table_direction(grad, x, lam)
        assert np.array_equal(res.w, w_ref)
        assert res.value.v == pytest.approx(float(np.sum(s_ref)), rel=1e-12, abs=1e-12)


def test_linf_separable_golden_refinement_path():
    # A smooth nonlinear scalar part forces the grid + golden-section route.
    part = ScalarPart(fn=lambda t: (t - 0.3) ** 2, piecewise_linear=False)
    res = sd.solve_linf_separable([part], np.zeros(1), np.zeros(1))
    t_ref, s_ref = grid_scalar_min(0.0, lambda t: (t - 0.3) ** 2)
    assert not res.exact
    assert res.w[0] == pytest.approx(0.3, abs=1e-6)
    assert res.value.v == pytest.approx(s_ref, abs=1e-9)


def test_linf_separable_rejects_mismatched_parts():
    with pytest.raises(sd.NotSeparable):
        sd.solve_linf_separable([], np.zeros(2), np.zeros(2))


def test_l1_extreme_tie_break_at_origin(dc1):
    m2 = sd.sum_models([sd.quadratic_model(np.zeros(2)), sd.NegL1Norm(2)])
    res = sd.solve_l1_extreme(m2, np.zeros(2))
    # All four vertices give -1; enumeration order picks e1.
    assert res.w == pytest.approx(np.array([1.0, 0.0]))
    assert res.value == ExtReal(-1.0)
    assert res.exact and res.evaluations == 5


def test_l1_extreme_off_origin():
    m2 = sd.sum_models([sd.quadratic_model(np.zeros(2)), sd.NegL1Norm(2)])
    x = np.array([2.0, 0.0])
    res = sd.solve_l1_extreme(m2, x)
    # Vertex values: e1 -> 1, -e1 -> -1, e2 -> -1, -e2 -> -1; first min is -e1.
    assert res.w == pytest.approx(np.array([-1.0, 0.0]))
    assert res.value == ExtReal(-1.0)
    # Dense enumeration of the l1 sphere agrees on the value.
    brute = sd.brute_force_direction(m2, x, sd.NormChoice.L1, 0.05)
    assert brute.value.v == pytest.approx(res.value.v, abs=1e-6)


def test_l1_extreme_one_dimensional_symmetry(dc1):
    res = sd.solve_l1_extreme(dc1, np.zeros(1))
    assert res.w == pytest.approx(np.array([1.0]))
    assert res.value == ExtReal(-1.0)


def test_l1_extreme_reduced_vertex_set():
    m2 = sd.sum_models([sd.quadratic_model(np.zeros(2)), sd.NegL1Norm(2)])
    res = sd.solve_l1_extreme(m2, np.zeros(2), reduced=True)
    # Candidates e1, e2, -(1,1): values -1, -1, -2; the bundle vertex wins.
    assert res.w == pytest.approx(np.array([-1.0, -1.0]))
    assert res.value == ExtReal(-2.0)
    assert res.evaluations == 4


def test_fallback_budget_zero_coordinates_only(l1):
    res = sd.solve_sampling_fallback(l1, np.zeros(3), sd.NormChoice.L2, 0, seed=1)
    # No gradient, no samples: min over +-e_i of d||.||_1(0) = 1 > 0.
    assert res.value == ExtReal(1.0)
    assert not res.exact


def test_fallback_seed_determinism(quad2):
    a = sd.solve_sampling_fallback(quad2, np.array([3.0, 4.0]), sd.NormChoice.L2, 32, 9)
    b = sd.solve_sampling_fallback(quad2, np.array([3.0, 4.0]), sd.NormChoice.L2, 32, 9)
    assert np.array_equal(a.w, b.w)
    assert a.value == b.value and a.evaluations == b.evaluations


def test_fallback_discards_infinite_directions():
    zn = sd.ZeroNormComposite(np.eye(2), np.zeros(2))
    x = np.array([1.0, 0.0])
    res = sd.solve_sampling_fallback(zn, x, sd.NormChoice.L2, 16, seed=3)
    assert res.value.is_finite
    assert res.value.v >= 0.0


def test_fallback_includes_gradient_candidate(quad2):
    res = sd.solve_sampling_fallback(quad2, np.array([3.0, 4.0]),
                                     sd.NormChoice.L2, 0, seed=0)
    assert res.value.v == pytest.approx(-5.0)


@pytest.mark.parametrize("norm", [sd.NormChoice.L2, sd.NormChoice.L1, sd.NormChoice.LINF])
def test_fallback_samples_stay_in_ball(norm, rng, l1):
    res = sd.solve_sampling_fallback(l1, rng.uniform(-1, 1, 3), norm, 64, seed=5)
    from subderiv.direction import norm_of
    assert norm_of(res.w, norm) <= 1.0 + 1e-12


def test_exact_solvers_beat_fallback_on_shared_instances(rng):
    m2 = sd.sum_models([sd.quadratic_model(np.zeros(2)), sd.NegL1Norm(2)])
    for seed in range(5):
        x = rng.uniform(-2, 2, 2)
        exact = sd.solve_l1_extreme(m2, x)
        fb = sd.solve_sampling_fallback(m2, x, sd.NormChoice.L1, 64, seed)
        assert exact.value.v <= fb.value.v + 1e-12


def test_all_solvers_return_recomputed_value(rng):
    m2 = sd.sum_models([sd.quadratic_model(np.zeros(2)), sd.NegL1Norm(2)])
    x = rng.uniform(-2, 2, 2)
    for res in (sd.solve_l1_extreme(m2, x),
                sd.solve_sampling_fallback(m2, x, sd.NormChoice.L1, 8, 0)):
        assert res.value == m2.subderivative(x, res.w)
    grad, parts = m2.separable_parts(x)
    res = sd.solve_linf_separable(parts, grad, x, model=m2)
    assert res.value == m2.subderivative(x, res.w)
    q = sd.quadratic_model(np.zeros(2))
    res = sd.solve_l2_smooth(q, x)
    assert res.value == q.subderivative(x, res.w)


def test_direction_results_respect_ball(rng):
    m2 = sd.sum_models([sd.quadratic_model(np.zeros(2)), sd.NegL1Norm(2)])
    x = rng.uniform(-2, 2, 2)
    assert np.sum(np.abs(sd.solve_l1_extreme(m2, x).w)) <= 1 + 1e-12
    grad, parts = m2.separable_parts(x)
    assert np.max(np.abs(sd.solve_linf_separable(parts, grad, x, model=m2).w)) <= 1 + 1e-12
    q = sd.quadratic_model(np.zeros(2))
    assert np.linalg.norm(sd.solve_l2_smooth(q, x).w) <= 1 + 1e-12
