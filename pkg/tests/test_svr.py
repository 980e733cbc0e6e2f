import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import svr_dual_qp
from volsent import svr
from volsent.errors import DegenerateInput, DimensionMismatch, NonFiniteTarget
from volsent.svr import GridSpec, SvrHyperParams, SvrModel


def test_rbf_examples():
    assert svr.rbf_kernel([0.3, 1.0], [0.3, 1.0], 5.0) == 1.0
    assert svr.rbf_kernel([0.0], [1.0], 1.0) == pytest.approx(math.exp(-1), abs=1e-15)
    assert math.exp(-1) == pytest.approx(0.36788, abs=1e-5)
    with pytest.raises(DimensionMismatch):
        svr.rbf_kernel([0.0], [1.0, 2.0], 1.0)


@given(st.lists(st.floats(-3, 3), min_size=2, max_size=2), st.floats(0.01, 5), st.floats(1.01, 3))
def test_rbf_decreases_with_gamma(pair, gamma, factor):
    a, b = [pair[0]], [pair[1]]
    if abs(pair[0] - pair[1]) < 1e-3:
        return
    k1, k2 = svr.rbf_kernel(a, b, gamma), svr.rbf_kernel(a, b, gamma * factor)
    assert 0 < k2 < k1 <= 1


def test_kernel_matrix_matches_scalar():
    x = np.random.default_rng(0).normal(size=(5, 3))
    k = svr.kernel_matrix(x, x, 0.7)
    for i in range(5):
        for j in range(5):
            assert k[i, j] == pytest.approx(svr.rbf_kernel(x[i], x[j], 0.7), abs=1e-14)


def test_constant_target_inside_tube():
    xs = np.linspace(0, 1, 12)[:, None]
    model = svr.fit(xs, np.full(12, 0.4), SvrHyperParams(c=2, epsilon=0.01, gamma=1))
    assert model.dual_coeffs.size == 0
    assert model.bias == pytest.approx(0.4)
    assert svr.predict(model, [5.0]) == pytest.approx(0.4)


SIX_X = np.array([[-1.0], [-0.6], [-0.2], [0.2], [0.6], [1.0]])
SIX_Y = np.array([0.1, 0.7, 0.2, -0.5, 0.3, 0.9])


def test_six_point_matches_qp_oracle():
    hyper = SvrHyperParams(c=2, epsilon=0.01, gamma=1)
    k = svr.kernel_matrix(SIX_X, SIX_X, 1.0)
    beta, bias, _, converged = svr.solve_dual(k, SIX_Y, 2, 0.01)
    assert converged
    ref_beta, ref_obj, ref_bias = svr_dual_qp(k, SIX_Y, 2, 0.01)
    ours = svr.dual_objective(k, SIX_Y, beta, 0.01)
    assert abs(ours - ref_obj) <= 1e-5 * abs(ref_obj)
    model = svr.fit(SIX_X, SIX_Y, hyper)
    ref_pred = k @ ref_beta + ref_bias
    for x, want in zip(SIX_X, ref_pred):
        assert svr.predict(model, x) == pytest.approx(want, abs=1e-5)


def test_conflicting_duplicates_hit_the_box():
    xs = np.array([[0.5], [0.5]])
    ys = np.array([0.0, 1.0])
    c = 0.3
    model = svr.fit(xs, ys, SvrHyperParams(c=c, epsilon=0.01, gamma=1))
    assert sorted(model.dual_coeffs) == pytest.approx([-c, c])
    ref_beta, _, _ = svr_dual_qp(svr.kernel_matrix(xs, xs, 1.0), ys, c, 0.01)
    assert sorted(ref_beta) == pytest.approx([-c, c], abs=1e-6)


def test_predict_constant_and_far_field():
    m = SvrModel(np.zeros((0, 1)), np.zeros(0), 0.3, SvrHyperParams())
    assert svr.predict(m, [123.0]) == 0.3
    model = svr.fit(SIX_X, SIX_Y, SvrHyperParams(c=2, epsilon=0.01, gamma=1))
    assert svr.predict(model, [50.0]) == pytest.approx(model.bias, abs=1e-12)


def test_predict_dimension_mismatch():
    model = svr.fit(SIX_X, SIX_Y, SvrHyperParams(c=2, epsilon=0.01, gamma=1))
    with pytest.raises(DimensionMismatch):
        svr.predict(model, [0.1, 0.2])


def test_fit_errors():
    with pytest.raises(DegenerateInput):
        svr.fit(np.zeros((0, 1)), [])
    with pytest.raises(NonFiniteTarget):
        svr.fit([[0.0], [1.0]], [0.0, np.nan])


datasets = st.tuples(st.integers(2, 20), st.integers(0, 10_000), st.floats(0.1, 5), st.floats(0.0, 0.3))


@given(datasets)
def test_dual_feasibility_and_tube(params):
    n, seed, c, eps = params
    rng = np.random.default_rng(seed)
    xs = rng.uniform(-2, 2, size=(n, 2))
    ys = np.sin(xs[:, 0]) + 0.3 * rng.standard_normal(n)
    k = svr.kernel_matrix(xs, xs, 0.8)
    beta, bias, _, ok = svr.solve_dual(k, ys, c, eps)
    assert ok
    assert abs(beta.sum()) < 1e-9
    assert np.all(np.abs(beta) <= c + 1e-9)
    fitted = k @ beta + bias
    resid = np.abs(ys - fitted)
    inside = resid < eps - 1e-4
    assert np.all(beta[inside] == 0)
    assert svr.kkt_violation(beta, fitted, ys, c, eps) <= 1e-3
    free = (np.abs(beta) > 1e-9) & (np.abs(beta) < c - 1e-9)
    assert np.all(resid[free] <= eps + 1e-3)


@pytest.mark.parametrize("seed", range(5))
def test_objective_matches_oracle(seed):
    rng = np.random.default_rng(100 + seed)
    n = int(rng.integers(5, 21))
    xs = rng.uniform(-2, 2, size=(n, 1))
    ys = np.cos(2 * xs[:, 0]) + 0.2 * rng.standard_normal(n)
    k = svr.kernel_matrix(xs, xs, 1.5)
    beta, _, _, _ = svr.solve_dual(k, ys, 1.0, 0.05)
    _, ref_obj, _ = svr_dual_qp(k, ys, 1.0, 0.05)
    assert abs(svr.dual_objective(k, ys, beta, 0.05) - ref_obj) <= 1e-5 * abs(ref_obj)


def test_prediction_is_continuous():
    model = svr.fit(SIX_X, SIX_Y, SvrHyperParams(c=2, epsilon=0.01, gamma=1))
    for x in np.linspace(-1.5, 1.5, 13):
        d = abs(svr.predict(model, [x + 1e-6]) - svr.predict(model, [x]))
        assert d < 1e-4


def test_grid_single_point():
    rng = np.random.default_rng(1)
    xs = rng.uniform(0, 1, size=(30, 1))
    ys = xs[:, 0] ** 2
    h = SvrHyperParams(c=1.0, epsilon=0.01, gamma=0.5)
    best, score = svr.grid_search_cv(xs, ys, GridSpec((1.0,), (0.5,), (0.01,), folds=5))
    assert best == h
    manual = []
    for block in svr.contiguous_folds(30, 5):
        mask = np.ones(30, bool)
        mask[block] = False
        m = svr.fit(xs[mask], ys[mask], h)
        manual.append(math.sqrt(np.mean((svr.predict_many(m, xs[block]) - ys[block]) ** 2)))
    assert score == pytest.approx(np.mean(manual))


def qp_cv_score(xs, ys, c, eps, gamma, folds):
    scores = []
    for block in np.array_split(np.arange(len(ys)), folds):
        mask = np.ones(len(ys), bool)
        mask[block] = False
        k = svr.kernel_matrix(xs[mask], xs[mask], gamma)
        beta, _, bias = svr_dual_qp(k, ys[mask], c, eps)
        pred = svr.kernel_matrix(xs[block], xs[mask], gamma) @ beta + bias
        scores.append(math.sqrt(np.mean((pred - ys[block]) ** 2)))
    return float(np.mean(scores))


def test_grid_prefers_wide_kernel_for_smooth_target():
    xs = np.linspace(0, 20, 40)[:, None]
    ys = 0.1 * xs[:, 0]
    c, eps, folds = 100.0, 0.001, 5
    wide = qp_cv_score(xs, ys, c, eps, 0.001, folds)
    narrow = qp_cv_score(xs, ys, c, eps, 1.0, folds)
    assert narrow > 10 * wide
    best, _ = svr.grid_search_cv(xs, ys, GridSpec((c,), (0.001, 1.0), (eps,), folds=folds))
    assert best.gamma == 0.001


def test_grid_leave_one_out():
    xs = np.linspace(0, 1, 8)[:, None]
    best, score = svr.grid_search_cv(xs, xs[:, 0], GridSpec((1.0,), (1.0,), (0.01,), folds=8))
    assert math.isfinite(score)


def test_grid_too_few_points():
    with pytest.raises(DegenerateInput):
        svr.grid_search_cv(np.zeros((3, 1)), np.zeros(3), GridSpec(folds=5))


def test_lag_features():
    xs, ys = svr.lag_features([1.0, 2.0, 3.0, 4.0], lags=2)
    assert xs.tolist() == [[1.0, 2.0], [2.0, 3.0]]
    assert ys.tolist() == [3.0, 4.0]


def test_text_round_trip():
    model = svr.fit(SIX_X, SIX_Y, SvrHyperParams(c=2, epsilon=0.01, gamma=1))
    back = svr.from_text(svr.to_text(model))
    assert back.hyper == model.hyper and back.bias == model.bias
    np.testing.assert_array_equal(back.dual_coeffs, model.dual_coeffs)
    np.testing.assert_array_equal(back.support_inputs, model.support_inputs)
