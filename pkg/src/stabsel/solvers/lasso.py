"""Lasso path solver and its randomly reweighted variant.

The objective convention is exactly

    ||y - X beta||_2^2 + lam * sum_k |beta_k|

with no 1/n or 1/2 factor, so the null-model boundary is
``lam_max = 2 * max_k |X_k' y|`` and the KKT certificate reads
``|2 X_k'(y - X beta)| <= lam`` with equality and sign agreement on the
active set.  Fitting goes through the shared penalized-quadratic kernel on
the Gram matrix (the objective equals ``2 * (0.5 b'Gb - c'b + (lam/2)|b|_1)``
up to a constant), warm-started along the grid.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..data import CoefficientPath, Dataset, LambdaGrid
from ..errors import ConfigError, ConvergenceError
from ._quad_l1 import quad_l1_path

MOVE_TOL = 1e-8
GAP_TOL = 2.5e-7  # kernel scale; certificate-scale residual is twice this
MAX_SWEEPS = 100_000


@dataclass(frozen=True)
class WeightVector:
    """Random penalty weights for the reweighted Lasso.

    Under the two-point sampler each entry is ``weakness`` with probability
    ``p_w`` and 1 otherwise; smaller weakness means a stronger perturbation.
    """

    w: np.ndarray
    weakness: float
    p_w: float

    def __post_init__(self):
        if not 0 < self.weakness <= 1:
            raise ConfigError(f"weakness must be in (0, 1], got {self.weakness}")
        if not 0 < self.p_w < 1:
            raise ConfigError(f"p_w must be in (0, 1), got {self.p_w}")
        w = np.asarray(self.w, dtype=float).reshape(-1)
        if np.any(w < self.weakness - 1e-12) or np.any(w > 1 + 1e-12):
            raise ConfigError("weight entries must lie in [weakness, 1]")
        w = np.array(w)
        w.setflags(write=False)
        object.__setattr__(self, "w", w)

    @classmethod
    def sample(cls, p: int, weakness: float, p_w: float, rng: np.random.Generator) -> "WeightVector":
        w = np.where(rng.random(p) < p_w, weakness, 1.0)
        return cls(w, weakness, p_w)


def _gram_path(G, c, grid, move_tol, gap_tol, max_sweeps):
    coefs, ok, g_fail, gap = quad_l1_path(
        G, c, grid.values / 2.0, move_tol, gap_tol, max_sweeps, np.zeros(c.size)
    )
    if not ok:
        raise ConvergenceError(
            f"lasso did not converge at grid index {g_fail} "
            f"(lambda={grid.values[g_fail]:.6g}); stationarity gap {2 * gap:.3e}",
            grid_index=g_fail,
            gap=2 * gap,
        )
    return coefs.T


def lasso_path(
    data: Dataset,
    grid: LambdaGrid | None = None,
    *,
    move_tol: float = MOVE_TOL,
    gap_tol: float = GAP_TOL,
    max_sweeps: int = MAX_SWEEPS,
) -> CoefficientPath:
    """Coordinate-descent Lasso along a decreasing penalty grid.

    Expects a normalized dataset (unit-norm columns, centered response);
    the solve itself is valid for any design, but the default grid and the
    error-control calibrations assume that scaling.

    Raises
    ------
    ConvergenceError
        If a grid point fails to reach the stationarity tolerance within
        ``max_sweeps`` sweeps; the failing index and final gap are attached.
    """
    if data.y is None:
        raise ConfigError("lasso_path requires a dataset with a response")
    if grid is None:
        grid = LambdaGrid.for_data(data)
    G = data.X.T @ data.X
    c = data.X.T @ data.y
    return CoefficientPath(_gram_path(G, c, grid, move_tol, gap_tol, max_sweeps), grid)


def randomised_lasso_path(
    data: Dataset,
    grid: LambdaGrid | None = None,
    weakness: float = 0.5,
    p_w: float = 0.5,
    rng=None,
    weights: WeightVector | None = None,
    *,
    move_tol: float = MOVE_TOL,
    gap_tol: float = GAP_TOL,
    max_sweeps: int = MAX_SWEEPS,
) -> CoefficientPath:
    """Lasso with per-variable penalties ``lam / W_k`` for random weights.

    Solved by the reweighting reduction: a standard Lasso is fitted on the
    rescaled columns ``X_k * W_k`` and the coefficients are mapped back as
    ``beta_k = W_k * gamma_k``, which leaves the support unchanged.  With
    ``weakness=1`` the weights are all one and the output is bit-identical
    to :func:`lasso_path`.

    ``rng`` may be a Generator or an int seed; ``weights`` overrides the
    sampling for callers that need a specific weight vector.
    """
    if data.y is None:
        raise ConfigError("randomised_lasso_path requires a dataset with a response")
    if grid is None:
        grid = LambdaGrid.for_data(data)
    if weights is None:
        if weakness == 1.0:
            weights = WeightVector(np.ones(data.p), 1.0, p_w)
        else:
            if not isinstance(rng, np.random.Generator):
                rng = np.random.default_rng(rng)
            weights = WeightVector.sample(data.p, weakness, p_w, rng)
    w = weights.w
    if w.size != data.p:
        raise ConfigError(f"weight vector length {w.size} != p={data.p}")
    G = data.X.T @ data.X
    c = data.X.T @ data.y
    Gw = G * np.outer(w, w)
    cw = c * w
    gamma = _gram_path(Gw, cw, grid, move_tol, gap_tol, max_sweeps)
    return CoefficientPath(w[:, None] * gamma, grid)


def lasso_kkt_gap(data: Dataset, path: CoefficientPath) -> np.ndarray:
    """Per-grid-point KKT certificate residual for a fitted path.

    For each column the residual is the largest violation over variables of
    ``|2 X_k' r| <= lam`` (inactive) and ``2 X_k' r = lam * sign(beta_k)``
    (active).  A valid solve keeps every entry below the solver tolerance.
    """
    X, y = data.X, data.y
    gaps = np.empty(len(path.grid))
    for g, lam in enumerate(path.grid.values):
        beta = path.coef[:, g]
        corr = 2.0 * (X.T @ (y - X @ beta))
        active = beta != 0.0
        viol_zero = np.maximum(np.abs(corr[~active]) - lam, 0.0)
        viol_active = np.abs(corr[active] - lam * np.sign(beta[active]))
        parts = [v for v in (viol_zero, viol_active) if v.size]
        gaps[g] = max(float(v.max()) for v in parts) if parts else 0.0
    return gaps


def lasso_objective(data: Dataset, beta: np.ndarray, lam: float) -> float:
    r = data.y - data.X @ beta
    return float(r @ r + lam * np.abs(beta).sum())
