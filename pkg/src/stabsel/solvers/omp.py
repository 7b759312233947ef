"""Orthogonal matching pursuit and its randomized (weak) variant.

Both produce a nested trace of selected sets: step m adds one variable and
re-projects the response onto the span of the current selection, so
residual norms never increase.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..data import Dataset, SelectionSet
from ..errors import ConfigError, NumericalError

# Correlations at or below this (relative to ||y||) mean the residual is
# numerically orthogonal to every column.
DEGENERATE_RTOL = 1e-12


@dataclass(frozen=True)
class OmpTrace:
    """Nested selection trace S^1 c S^2 c ... c S^q with residual norms.

    ``order`` lists the variable added at each step; ``residual_norms[m]``
    is the residual norm after the step-m projection.  ``degenerate_at`` is
    the first step (0-based) at which every column was orthogonal to the
    residual, or None.
    """

    order: tuple
    residual_norms: tuple
    p: int
    degenerate_at: int | None = None

    def __post_init__(self):
        order = tuple(int(k) for k in self.order)
        if len(set(order)) != len(order):
            raise ConfigError("trace adds a variable twice")
        norms = tuple(float(v) for v in self.residual_norms)
        if len(norms) != len(order):
            raise ConfigError("one residual norm per step required")
        object.__setattr__(self, "order", order)
        object.__setattr__(self, "residual_norms", norms)

    @property
    def steps(self) -> int:
        return len(self.order)

    def support(self, m: int) -> SelectionSet:
        """Selected set after m steps (1-based m)."""
        if not 1 <= m <= self.steps:
            raise ConfigError(f"step {m} outside 1..{self.steps}")
        return SelectionSet(frozenset(self.order[:m]), self.p)

    def support_matrix(self) -> np.ndarray:
        """Boolean (p, steps) indicator; column m-1 is the support of S^m."""
        mask = np.zeros((self.p, self.steps), dtype=bool)
        for m, k in enumerate(self.order):
            mask[k, m:] = True
        return mask


def _project_residual(X, y, selected, step):
    Xs = X[:, selected]
    coef, _, rank, _ = np.linalg.lstsq(Xs, y, rcond=None)
    if rank < len(selected):
        raise NumericalError(
            f"rank-deficient projection at step {step}: selected columns "
            f"{selected} have rank {rank}"
        )
    return y - Xs @ coef


def omp(data: Dataset, q: int) -> OmpTrace:
    """Greedy forward search: each step adds the column most correlated
    with the current residual (ties broken by lowest index) and updates the
    residual by orthogonal projection."""
    return _pursuit(data, q, weakness=None, rng=None)


def romp(data: Dataset, q: int, weakness: float = 0.9, rng=None) -> OmpTrace:
    """Randomized pursuit: step m draws uniformly from the candidate set
    ``K = {k : |X_k' R| >= weakness * rho_max}``.

    As ``weakness -> 1`` the candidate set degenerates to the argmax and the
    trace matches :func:`omp`.  The trace distribution is determined by the
    seed.
    """
    if not 0 < weakness <= 1:
        raise ConfigError(f"weakness must be in (0, 1], got {weakness}")
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    return _pursuit(data, q, weakness=weakness, rng=rng)


def _pursuit(data, q, weakness, rng):
    if data.y is None:
        raise ConfigError("matching pursuit requires a dataset with a response")
    X, y = data.X, data.y
    n, p = X.shape
    limit = min(n - 1, p)
    if not 1 <= q <= limit:
        raise ConfigError(f"q={q} outside 1..min(n-1, p)={limit}")

    residual = y
    y_scale = max(1.0, float(np.linalg.norm(y)))
    order: list[int] = []
    norms: list[float] = []
    degenerate_at = None
    for step in range(q):
        corr = np.abs(X.T @ residual)
        corr[order] = 0.0  # already-selected columns are orthogonal to R up to round-off
        rho_max = float(corr.max())
        if rho_max <= DEGENERATE_RTOL * y_scale:
            if degenerate_at is None:
                degenerate_at = step
            candidates = np.setdiff1d(np.arange(p), order)
            k_sel = int(candidates[0]) if rng is None else int(rng.choice(candidates))
        elif weakness is None:
            k_sel = int(np.argmax(corr))
        else:
            candidates = np.nonzero(corr >= weakness * rho_max)[0]
            k_sel = int(candidates[rng.integers(candidates.size)])
        order.append(k_sel)
        residual = _project_residual(X, y, order, step + 1)
        norms.append(float(np.linalg.norm(residual)))
    return OmpTrace(tuple(order), tuple(norms), p, degenerate_at)
