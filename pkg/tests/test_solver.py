import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from srclasso.exceptions import NonConvergenceError, PreconditionError
from srclasso.solver import (kkt_report, lambda_max, lasso_objective, soft_threshold, solve_lasso,
                             solve_path)

from conftest import orthonormal_design


def proximal_gradient(X, y, lam, iters=20000):
    """Reference solver (ISTA with step 1/L) independent of coordinate descent."""
    L = np.linalg.eigvalsh(X.T @ X)[-1]
    b = np.zeros(X.shape[1])
    for _ in range(iters):
        g = X.T @ (X @ b - y)
        b = soft_threshold(b - g / L, lam / L)
    return b


def soft_threshold_oracle(X, y, lam):
    n = X.shape[0]
    z = X.T @ y / n
    return np.sign(z) * np.maximum(np.abs(z) - lam / n, 0)


def test_orthonormal_closed_form_value():
    n = 16
    X = orthonormal_design(n, 4)
    E = X.entries
    # z_1 = 0.5, lam / n = 0.2 -> beta_1 = 0.3
    y = E @ np.array([0.5, 0.0, -0.1, 0.3])
    sol = solve_lasso(X, y, 0.2 * n)
    assert sol.beta_hat[0] == pytest.approx(0.3, abs=1e-10)
    np.testing.assert_allclose(sol.beta_hat, soft_threshold_oracle(E, y, 0.2 * n), atol=1e-10)
    assert sol.selected == (0, 3)


def test_zero_above_lambda_max(rng):
    X = rng.standard_normal((20, 8))
    y = rng.standard_normal(20)
    lm = lambda_max(X, y)
    for lam in (lm, 2 * lm):
        sol = solve_lasso(X, y, lam)
        assert sol.q_hat == 0 and sol.kkt.satisfied


def test_random_perturbation_and_reference(rng):
    n, p = 20, 5
    X = rng.standard_normal((n, p))
    y = X @ rng.standard_normal(p) + rng.standard_normal(n)
    sol = solve_lasso(X, y, 1.0)
    f = lasso_objective(X, y, sol.beta_hat, 1.0)
    for _ in range(10_000):
        d = rng.standard_normal(p)
        d *= rng.uniform(0, 1e-2) / np.linalg.norm(d)
        assert f <= lasso_objective(X, y, sol.beta_hat + d, 1.0)
    ref = proximal_gradient(X, y, 1.0)
    assert lasso_objective(X, y, ref, 1.0) == pytest.approx(f, abs=1e-10)
    np.testing.assert_allclose(sol.beta_hat, ref, atol=1e-8)


def test_kkt_report_zero_vector(rng):
    X = rng.standard_normal((10, 4))
    y = rng.standard_normal(10)
    lm = lambda_max(X, y)
    r = kkt_report(X, y, np.zeros(4), lm)
    assert r.satisfied and r.inactive_excess == 0
    r = kkt_report(X, y, np.zeros(4), lm / 2)
    assert not r.satisfied
    assert r.inactive_excess == pytest.approx(lm / 2, rel=1e-12)


def test_kkt_report_soft_threshold_formula(rng):
    n = 32
    X = orthonormal_design(n, 6, seed=3)
    y = rng.standard_normal(n) * 2
    lam = 0.3 * n
    beta = soft_threshold_oracle(X.entries, y, lam)
    assert kkt_report(X, y, beta, lam, tol=1e-10).satisfied


def test_kkt_does_not_modify(rng):
    X = rng.standard_normal((6, 3))
    b = np.array([1.0, 0, -2])
    kkt_report(X, rng.standard_normal(6), b, 0.5)
    np.testing.assert_array_equal(b, [1.0, 0, -2])


def test_path_zero_grid(rng):
    X = rng.standard_normal((15, 6))
    y = rng.standard_normal(15)
    lm = lambda_max(X, y)
    sols = solve_path(X, y, [2 * lm, lm])
    assert all(s.q_hat == 0 for s in sols)


def test_path_orthonormal_matches_formula(rng):
    n = 40
    X = orthonormal_design(n, 10, seed=5)
    y = rng.standard_normal(n) * 3
    grid = np.geomspace(lambda_max(X, y) * 1.1, 0.5, 12)
    for s in solve_path(X, y, grid):
        np.testing.assert_allclose(s.beta_hat, soft_threshold_oracle(X.entries, y, s.lam),
                                   atol=1e-9)


def test_path_warm_equals_cold(rng):
    n, p = 30, 60
    X = rng.standard_normal((n, p))
    y = X[:, :4] @ np.array([3, -2, 2, 1.5]) + rng.standard_normal(n)
    grid = np.geomspace(lambda_max(X, y), 0.05 * lambda_max(X, y), 15)
    for s in solve_path(X, y, grid, tol=1e-10):
        cold = solve_lasso(X, y, s.lam, tol=1e-10)
        assert s.kkt.satisfied
        assert np.max(np.abs(s.beta_hat - cold.beta_hat)) <= 1e-6


def test_path_rejects_non_decreasing():
    with pytest.raises(PreconditionError):
        solve_path(np.eye(3), np.ones(3), [1.0, 1.0])


def test_negative_lambda():
    with pytest.raises(PreconditionError):
        solve_lasso(np.eye(3), np.ones(3), -1.0)


def test_non_convergence_carries_iterate(rng):
    X = rng.standard_normal((10, 30))
    y = rng.standard_normal(10)
    with pytest.raises(NonConvergenceError) as info:
        solve_lasso(X, y, 0.0, max_sweeps=3)
    best = info.value.solution
    assert best is not None and not best.kkt.satisfied
    assert best.beta_hat.shape == (30,)


def test_objective_non_increasing(rng):
    X = rng.standard_normal((40, 80))
    y = X[:, :5] @ np.ones(5) * 2 + rng.standard_normal(40)
    sol = solve_lasso(X, y, 0.1 * lambda_max(X, y), record_objective=True)
    h = np.array(sol.objective_history)
    assert np.all(np.diff(h) <= 1e-9 * np.abs(h[:-1]))


def test_exact_zero_storage(rng):
    X = rng.standard_normal((25, 50))
    y = rng.standard_normal(25)
    sol = solve_lasso(X, y, 0.3 * lambda_max(X, y))
    nz = sol.beta_hat[sol.beta_hat != 0]
    assert np.all(np.abs(nz) >= 1e-12)
    assert sol.q_hat == len(sol.selected)


def test_solution_json():
    sol = solve_lasso(np.eye(3) * 2, np.array([3.0, 0.1, -3.0]), 1.0)
    d = sol.to_dict()
    assert set(d) == {"lambda", "beta_hat", "selected", "q_hat", "kkt"}
    assert {"active_residual", "inactive_excess", "satisfied"} <= set(d["kkt"])


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.05, 0.9), st.floats(0.1, 50))
def test_scale_equivariance(seed, frac, s):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((20, 30))
    y = X[:, :3] @ np.array([2.0, -1, 1]) + rng.standard_normal(20)
    lam = frac * lambda_max(X, y)
    a = solve_lasso(X, y, lam, tol=1e-12)
    b = solve_lasso(X, s * y, s * lam, tol=1e-12)
    np.testing.assert_allclose(b.beta_hat, s * a.beta_hat, atol=1e-8 * max(s, 1))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.01, 1.0))
def test_every_solution_kkt(seed, frac):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((15, 25))
    y = rng.standard_normal(15)
    lam = frac * lambda_max(X, y)
    sol = solve_lasso(X, y, lam)
    assert kkt_report(X, y, sol.beta_hat, lam).satisfied
    if frac >= 1:
        assert sol.q_hat == 0
