import numpy as np
import pytest

from stabsel.errors import ConfigError, NumericalError
from stabsel.solvers import (
    glasso_kkt_gap,
    glasso_lambda_max,
    glasso_objective,
    graphical_lasso,
)


def random_cov(seed, d=10, n=60):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n, d))
    return A.T @ A / n


class TestGraphicalLasso:
    def test_large_penalty_gives_diagonal(self):
        S = random_cov(0, d=6)
        lam = glasso_lambda_max(S) * 1.01
        est = graphical_lasso(S, lam)
        assert np.allclose(est.theta, np.diag(1.0 / np.diag(S)), atol=1e-10)
        assert est.edges() == frozenset()

    def test_zero_penalty_inverts(self):
        S = random_cov(1, d=5, n=100)
        est = graphical_lasso(S, 0.0)
        assert np.abs(est.theta - np.linalg.inv(S)).max() <= 1e-6

    def test_two_by_two_closed_form(self):
        S = np.array([[1.0, 0.5], [0.5, 1.0]])
        est = graphical_lasso(S, 0.1)
        # the bivariate solution soft-shrinks the covariance by the penalty
        W = np.linalg.inv(est.theta)
        assert W[0, 1] == pytest.approx(0.4, abs=1e-8)
        assert W[0, 0] == pytest.approx(1.0, abs=1e-8)
        assert glasso_kkt_gap(est.theta, S, 0.1) <= 1e-6

    def test_kkt_certificate_random_instances(self):
        for seed in range(8):
            S = random_cov(seed, d=12)
            lam = 0.3 * glasso_lambda_max(S)
            est = graphical_lasso(S, lam)
            assert glasso_kkt_gap(est.theta, S, lam) <= 1e-6
            assert np.abs(est.theta - est.theta.T).max() <= 1e-10
            assert np.linalg.eigvalsh(est.theta).min() > 0

    def test_objective_non_increasing(self):
        S = random_cov(5, d=15)
        lam = 0.2 * glasso_lambda_max(S)
        est = graphical_lasso(S, lam, track_objective=True)
        objs = np.array(est.objective_path)
        assert objs.size >= 1
        assert np.all(np.diff(objs) <= 1e-9)

    def test_edges_match_support(self):
        S = random_cov(3, d=8)
        est = graphical_lasso(S, 0.4 * glasso_lambda_max(S))
        expected = {
            (j, k)
            for j in range(8)
            for k in range(j + 1, 8)
            if est.theta[j, k] != 0.0
        }
        assert est.edges() == frozenset(expected)

    def test_validation(self):
        with pytest.raises(ConfigError):
            graphical_lasso(np.array([[1.0, 0.2], [0.3, 1.0]]), 0.1)  # asymmetric
        with pytest.raises(ConfigError):
            graphical_lasso(np.eye(3), -0.1)
        with pytest.raises(ConfigError):
            graphical_lasso(np.diag([1.0, 0.0]), 0.1)  # nonpositive diagonal

    def test_singular_needs_penalty(self):
        x = np.array([[1.0, 1.0], [1.0, 1.0]])
        with pytest.raises(NumericalError):
            graphical_lasso(x + 1e-15 * np.eye(2), 0.0)

    def test_objective_function_matches_convention(self):
        S = np.eye(3)
        theta = np.eye(3) * 2.0
        val = glasso_objective(theta, S, 0.5)
        assert val == pytest.approx(-3 * np.log(2.0) + 6.0)

    def test_one_dimensional(self):
        est = graphical_lasso(np.array([[4.0]]), 0.3)
        assert est.theta[0, 0] == pytest.approx(0.25)


def test_cvxpy_cross_check():
    cp = pytest.importorskip("cvxpy")
    S = random_cov(9, d=4, n=50)
    lam = 0.25 * glasso_lambda_max(S)
    est = graphical_lasso(S, lam)
    T = cp.Variable((4, 4), symmetric=True)
    off_diagonal = T - cp.diag(cp.diag(T))
    penalty = lam * cp.sum(cp.abs(off_diagonal))
    prob = cp.Problem(cp.Minimize(-cp.log_det(T) + cp.trace(S @ T) + penalty))
    prob.solve(solver=cp.SCS, eps=1e-8)
    assert glasso_objective(est.theta, S, lam) <= prob.value + 1e-5
