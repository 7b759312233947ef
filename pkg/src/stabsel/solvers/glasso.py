"""L1-penalized precision-matrix estimation (graphical lasso).

Minimizes, over positive-definite symmetric Theta,

    -log det(Theta) + tr(S Theta) + lam * sum_{j != k} |Theta_jk|

with the diagonal unpenalized, via block coordinate descent on the
covariance estimate W = Theta^{-1}: each row/column update is an
l1-penalized quadratic solved by the shared kernel.  The stationarity
conditions are

    (Theta^-1)_jj = S_jj
    |(Theta^-1)_jk - S_jk| <= lam          (off-diagonal)
    (Theta^-1)_jk - S_jk = lam*sign(Theta_jk)  (nonzero entries)

and the solver iterates until this certificate holds at ``gap_tol``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, NumericalError
from ._quad_l1 import quad_l1_path

GAP_TOL = 1e-7
MAX_ITER = 500


@dataclass(frozen=True)
class PrecisionEstimate:
    """Symmetric positive-definite precision matrix from the penalized fit.

    The estimated edge set is the off-diagonal support
    ``{(j, k): j < k, theta_jk != 0}``.
    """

    theta: np.ndarray
    lam: float
    kkt_gap: float = 0.0
    n_iter: int = 0
    objective_path: tuple = ()

    def __post_init__(self):
        theta = np.array(self.theta, dtype=float)
        if theta.ndim != 2 or theta.shape[0] != theta.shape[1]:
            raise ConfigError("theta must be square")
        asym = float(np.abs(theta - theta.T).max()) if theta.size else 0.0
        if asym > 1e-8:
            raise NumericalError(f"theta asymmetric by {asym:.3e}")
        eigmin = float(np.linalg.eigvalsh(theta).min())
        if eigmin <= 0:
            raise NumericalError(f"theta not positive definite (min eigenvalue {eigmin:.3e})")
        theta.setflags(write=False)
        object.__setattr__(self, "theta", theta)

    @property
    def d(self) -> int:
        return self.theta.shape[0]

    def edges(self) -> frozenset:
        j, k = np.nonzero(np.triu(self.theta, 1))
        return frozenset(zip(j.tolist(), k.tolist()))


def _check_cov(cov, lam):
    cov = np.asarray(cov, dtype=float)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
        raise ConfigError("covariance must be a square matrix")
    if not np.all(np.isfinite(cov)):
        raise ConfigError("covariance has non-finite entries")
    if float(np.abs(cov - cov.T).max()) > 1e-10 * max(1.0, float(np.abs(cov).max())):
        raise ConfigError("covariance must be symmetric")
    if lam < 0:
        raise ConfigError(f"lam must be nonnegative, got {lam}")
    if np.any(np.diag(cov) <= 0):
        raise ConfigError("covariance has a nonpositive diagonal entry")
    return 0.5 * (cov + cov.T)


def glasso_objective(theta: np.ndarray, cov: np.ndarray, lam: float) -> float:
    """Objective value; +inf if theta is not positive definite."""
    sign, logdet = np.linalg.slogdet(theta)
    if sign <= 0:
        return float("inf")
    penalty = lam * (np.abs(theta).sum() - np.abs(np.diag(theta)).sum())
    return float(-logdet + np.sum(cov * theta) + penalty)


def glasso_kkt_gap(theta: np.ndarray, cov: np.ndarray, lam: float) -> float:
    """Max stationarity violation of a candidate precision matrix."""
    V = np.linalg.inv(theta)
    R = V - cov
    d = cov.shape[0]
    off = ~np.eye(d, dtype=bool)
    active = off & (theta != 0.0)
    inactive = off & (theta == 0.0)
    gap = float(np.abs(np.diag(R)).max()) if d else 0.0
    if inactive.any():
        gap = max(gap, float(np.maximum(np.abs(R[inactive]) - lam, 0.0).max()))
    if active.any():
        gap = max(gap, float(np.abs(R[active] - lam * np.sign(theta[active])).max()))
    return gap


def glasso_lambda_max(cov: np.ndarray) -> float:
    """Smallest penalty at which the estimated graph is empty."""
    cov = np.asarray(cov, dtype=float)
    off = np.abs(cov - np.diag(np.diag(cov)))
    return float(off.max())


def _assemble_theta(W, betas, cov):
    d = W.shape[0]
    theta = np.zeros((d, d))
    idx = np.arange(d)
    for j in range(d):
        others = idx != j
        beta = betas[:, j]
        w12 = W[others, j]
        tjj = 1.0 / (cov[j, j] - float(w12 @ beta))
        theta[j, j] = tjj
        theta[others, j] = -beta * tjj
    return 0.5 * (theta + theta.T)


def graphical_lasso(
    cov,
    lam: float,
    *,
    gap_tol: float = GAP_TOL,
    max_iter: int = MAX_ITER,
    track_objective: bool = False,
) -> PrecisionEstimate:
    """Fit the penalized precision matrix to a covariance estimate.

    Parameters
    ----------
    cov : ndarray (d, d)
        Symmetric positive-semidefinite covariance; must be strictly
        positive definite when ``lam == 0``.
    lam : float
        Off-diagonal penalty (the KKT margin; see module docstring).
    gap_tol : float
        Stationarity residual at which the fit is accepted.
    track_objective : bool
        Record the objective after every outer sweep (used by tests of the
        descent property).

    Raises
    ------
    NumericalError
        On non-convergence within ``max_iter`` sweeps or loss of positive
        definiteness.
    """
    cov = _check_cov(cov, lam)
    d = cov.shape[0]
    if d == 1:
        return PrecisionEstimate(np.array([[1.0 / cov[0, 0]]]), lam)

    if lam == 0.0:
        if np.linalg.cond(cov) > 1e12:
            raise NumericalError("covariance is singular; lam > 0 is required")
        theta = 0.5 * (np.linalg.inv(cov) + np.linalg.inv(cov).T)
        return PrecisionEstimate(theta, lam, kkt_gap=glasso_kkt_gap(theta, cov, lam))

    W = cov.copy()
    betas = np.zeros((d - 1, d))
    idx = np.arange(d)
    inner_gap = min(1e-9, gap_tol / 10.0)
    history = []
    for it in range(1, max_iter + 1):
        max_move = 0.0
        for j in range(d):
            others = idx != j
            W11 = np.ascontiguousarray(W[np.ix_(others, others)])
            s12 = cov[others, j]
            coefs, ok, _, gap = quad_l1_path(
                W11, s12, np.array([lam]), 1e-12, inner_gap, 100_000, betas[:, j].copy()
            )
            if not ok:
                raise NumericalError(
                    f"inner solve for column {j} stalled (gap {gap:.3e})"
                )
            beta = coefs[0]
            w12 = W11 @ beta
            max_move = max(max_move, float(np.abs(w12 - W[others, j]).max()))
            W[others, j] = w12
            W[j, others] = w12
            betas[:, j] = beta
        if track_objective:
            history.append(glasso_objective(_assemble_theta(W, betas, cov), cov, lam))
        if max_move < max(gap_tol, 1e-12 * float(np.abs(cov).max())):
            theta = _assemble_theta(W, betas, cov)
            gap = glasso_kkt_gap(theta, cov, lam)
            if gap <= gap_tol:
                return PrecisionEstimate(
                    theta, lam, kkt_gap=gap, n_iter=it, objective_path=tuple(history)
                )
    theta = _assemble_theta(W, betas, cov)
    raise NumericalError(
        f"graphical lasso did not converge in {max_iter} sweeps "
        f"(stationarity gap {glasso_kkt_gap(theta, cov, lam):.3e})"
    )
