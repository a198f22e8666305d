import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wrightiv.exceptions import DimensionError, LassoConvergenceError
from wrightiv.gmm import iterative_gmm
from wrightiv.partialing import (
    best_linear_predictor,
    default_lasso_penalty,
    lasso_fit,
    lasso_partial_out,
    partial_out,
)
from wrightiv.structural import Dataset, ShifterSpec, StructuralParams, simulate_dataset

from .oracles import ols


def test_perfect_fit_has_zero_residuals():
    rng = np.random.default_rng(0)
    m = rng.normal(size=(30, 3))
    v = m @ np.array([1.5, -2.0, 0.25])
    res = best_linear_predictor(v, m)
    assert np.max(np.abs(res.residuals)) < 1e-12
    assert not res.rank_deficient


def test_constant_regressor_on_centered_data():
    v = np.array([1.0, -2.0, 3.0, -2.0])
    res = best_linear_predictor(v, np.ones((4, 1)))
    assert res.coefficients[0] == pytest.approx(0.0, abs=1e-15)
    assert np.allclose(res.residuals, v, atol=1e-15)


def test_matches_full_pivot_oracle():
    rng = np.random.default_rng(50)
    m = rng.normal(size=(50, 3))
    v = m @ np.array([0.3, -1.0, 2.0]) + rng.normal(size=50)
    res = best_linear_predictor(v, m)
    assert np.max(np.abs(res.coefficients - ols(v, m))) < 1e-8


def test_rank_deficient_minimum_norm():
    rng = np.random.default_rng(1)
    x = rng.normal(size=40)
    m = np.column_stack([x, 2 * x])
    v = 3 * x + rng.normal(size=40) * 0.1
    res = best_linear_predictor(v, m)
    assert res.rank_deficient
    # minimum-norm solution lies in the row space: coef proportional to (1, 2)
    c = res.coefficients
    assert c[1] == pytest.approx(2 * c[0], rel=1e-10)
    assert np.max(np.abs(m.T @ res.residuals)) / 40 < 1e-8


def test_empty_response_rejected():
    with pytest.raises(DimensionError):
        best_linear_predictor(np.array([]), np.zeros((0, 1)))
    with pytest.raises(DimensionError):
        best_linear_predictor(np.ones(3), np.ones((4, 1)))


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 10_000), a=st.floats(-5, 5), b=st.floats(-5, 5),
       k=st.integers(1, 5))
def test_orthogonality_linearity_idempotence(seed, a, b, k):
    rng = np.random.default_rng(seed)
    n = 40
    m = rng.normal(size=(n, k))
    v1, v2 = rng.normal(size=n), rng.normal(size=n)
    r1 = best_linear_predictor(v1, m).residuals
    r2 = best_linear_predictor(v2, m).residuals
    assert np.max(np.abs(m.T @ r1)) / n <= 1e-8
    combo = best_linear_predictor(a * v1 + b * v2, m).residuals
    assert np.max(np.abs(combo - (a * r1 + b * r2))) <= 1e-10
    again = best_linear_predictor(r1, m).residuals
    assert np.max(np.abs(again - r1)) <= 1e-10


def test_partial_out_without_controls_returns_raw_columns():
    # no W and no Z^d: the demand-block projection is the identity
    rng = np.random.default_rng(2)
    n = 20
    cols = np.column_stack([rng.normal(size=n), rng.normal(size=n), rng.normal(size=n)])
    res = best_linear_predictor(cols, np.zeros((n, 0)))
    assert np.array_equal(res.residuals, cols)


def test_partial_out_requires_both_shifters():
    rng = np.random.default_rng(2)
    n = 20
    data = Dataset(p=rng.normal(size=n), y=rng.normal(size=n), zd=np.zeros((n, 0)),
                   zs=rng.normal(size=(n, 1)), w=np.zeros((n, 0)))
    with pytest.raises(DimensionError):
        partial_out(data)


def test_partial_out_collinear_instrument_zeroed():
    rng = np.random.default_rng(3)
    n = 30
    w = np.column_stack([np.ones(n), rng.normal(size=n)])
    data = Dataset(p=rng.normal(size=n), y=rng.normal(size=n), zd=rng.normal(size=(n, 1)),
                   zs=(2.0 - 3.0 * w[:, 1])[:, None], w=w)
    resid = partial_out(data)
    assert np.max(np.abs(resid.zs1)) < 1e-12


def test_partial_out_orthogonality(scalar_data):
    resid = partial_out(scalar_data)
    m1 = np.column_stack([scalar_data.w, scalar_data.zd])
    m2 = np.column_stack([scalar_data.w, scalar_data.zs])
    n = scalar_data.n
    for col in (resid.y1, resid.p1, resid.zs1[:, 0]):
        assert np.max(np.abs(m1.T @ col)) / n <= 1e-8
    for col in (resid.y2, resid.p2, resid.zd2[:, 0]):
        assert np.max(np.abs(m2.T @ col)) / n <= 1e-8
    assert resid.n == n and resid.method == "ols"


# ---- LASSO -----------------------------------------------------------------

def test_lasso_zero_penalty_equals_ols():
    rng = np.random.default_rng(4)
    m = rng.normal(size=(80, 4))
    v = 1.0 + m @ np.array([1.0, 0.0, -0.5, 2.0]) + rng.normal(size=80)
    fit = lasso_fit(v, m, 0.0)
    ref = best_linear_predictor(v, np.column_stack([np.ones(80), m]))
    assert np.max(np.abs(fit.coefficients - ref.coefficients[1:])) < 1e-6
    assert fit.intercept == pytest.approx(ref.coefficients[0], abs=1e-6)
    assert np.max(np.abs(fit.residuals - ref.residuals)) < 1e-6


def test_lasso_deadzone():
    rng = np.random.default_rng(5)
    m = rng.normal(size=(60, 5))
    v = rng.normal(size=60)
    xs = (m - m.mean(0)) / m.std(0)
    lam_max = np.max(np.abs(xs.T @ (v - v.mean()))) / 60
    fit = lasso_fit(v, m, lam_max * 1.0000001)
    assert np.all(fit.coefficients == 0)
    assert fit.intercept == pytest.approx(v.mean())


def test_lasso_univariate_soft_threshold():
    rng = np.random.default_rng(6)
    x = rng.normal(size=200)
    x = (x - x.mean()) / x.std()
    v = 0.4 * x + rng.normal(size=200)
    v = v - v.mean()
    fit = lasso_fit(v, x[:, None], 0.1)
    rho = x @ v / 200
    expected = np.sign(rho) * max(abs(rho) - 0.1, 0.0)
    assert fit.coefficients[0] == pytest.approx(expected, abs=1e-12)


def test_lasso_objective_monotone():
    rng = np.random.default_rng(7)
    m = rng.normal(size=(100, 8))
    m[:, 1] = m[:, 0] + 0.05 * rng.normal(size=100)
    v = m @ rng.normal(size=8) + rng.normal(size=100)
    fit = lasso_fit(v, m, 0.05)
    path = np.array(fit.objective_path)
    assert fit.n_sweeps >= 2
    assert np.all(np.diff(path) <= 1e-14)


def test_lasso_nonconvergence_reports_iterate():
    rng = np.random.default_rng(8)
    m = rng.normal(size=(50, 3))
    m[:, 1] = m[:, 0] + 1e-3 * rng.normal(size=50)
    v = m[:, 0] + rng.normal(size=50)
    with pytest.raises(LassoConvergenceError) as info:
        lasso_fit(v, m, 1e-4, max_sweeps=1)
    assert info.value.coefficients.shape == (3,)


def test_lasso_negative_penalty():
    with pytest.raises(ValueError):
        lasso_fit(np.ones(3), np.ones((3, 1)), -1.0)


def test_default_penalty_formula():
    rng = np.random.default_rng(9)
    v = rng.normal(size=100)
    lam = default_lasso_penalty(v, np.zeros((100, 5)))
    assert lam == pytest.approx(1.1 * v.std() * np.sqrt(2 * np.log(100) / 100))


def test_lasso_partial_out_zero_penalty_matches_ols(scalar_data):
    a = lasso_partial_out(scalar_data, lam=0.0)
    b = partial_out(scalar_data)
    assert a.method == "lasso"
    for name in ("y1", "p1", "zs1", "y2", "p2", "zd2"):
        assert np.max(np.abs(getattr(a, name) - getattr(b, name))) < 1e-6


def test_lasso_partialing_sparse_design_downstream():
    # many irrelevant controls; estimates agree with OLS partialing within 3 MC SEs
    params = StructuralParams(-0.8, 0.9, (1.0,), (1.0,), (0.5, 0.4) + (0.0,) * 18,
                              (-0.2, 0.3) + (0.0,) * 18)
    spec = ShifterSpec(dim_zd=1, dim_zs=1, dim_w=20, w_has_constant=True)
    ols_est, las_est = [], []
    for seed in range(40):
        data = simulate_dataset(params, spec, 400, 1000 + seed)
        ols_est.append(iterative_gmm(partial_out(data)).theta_hat)
        las_est.append(iterative_gmm(lasso_partial_out(data)).theta_hat)
    ols_est, las_est = np.array(ols_est), np.array(las_est)
    mc_se = las_est.std(axis=0, ddof=1) / np.sqrt(len(las_est))
    assert np.all(np.abs(las_est.mean(axis=0) - ols_est.mean(axis=0)) <= 3 * mc_se)
