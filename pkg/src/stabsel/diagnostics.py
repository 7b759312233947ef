"""Design-condition checks: how hard is support recovery on this design?

The two classical conditions compare, for each variable k outside the true
support S, the vector ``(X_S' X_S)^{-1} X_S' X_k`` against 1 — via a signed
inner product (the sign-consistency condition for l1 fits) or via its
l1-norm (the recovery condition for greedy forward search).  Sparse
eigenvalue extremes over bounded-size column subsets quantify conditioning,
and the ratio test on them decides whether the randomized-penalty route to
consistent selection applies.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset
from .errors import ConfigError, NumericalError

SUBSET_GUARD = 10**6


def _design_matrix(X) -> np.ndarray:
    if isinstance(X, Dataset):
        return X.X
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ConfigError("X must be a matrix")
    return X


def _support_coefficients(X, support):
    """Columns of (X_S' X_S)^{-1} X_S' X_N, keyed by the complement index."""
    p = X.shape[1]
    support = sorted(int(k) for k in support)
    if not support:
        raise ConfigError("support must be nonempty")
    rest = [k for k in range(p) if k not in set(support)]
    Xs = X[:, support]
    gram = Xs.T @ Xs
    cond = np.linalg.cond(gram)
    if not np.isfinite(cond) or cond > 1e12:
        raise NumericalError(
            f"support gram matrix is singular (condition number {cond:.3g})"
        )
    coef = np.linalg.solve(gram, Xs.T @ X[:, rest]) if rest else np.empty((len(support), 0))
    return support, rest, coef


def irrepresentable(X, support, signs=None):
    """Sign-consistency statistic per out-of-support variable.

    Returns ``(value, violating)`` where value is the max over k outside the
    support of ``|signs'(X_S'X_S)^{-1}X_S'X_k|`` and violating lists the
    variables with statistic >= 1.  When ``signs`` is omitted the
    conservative variant is reported: the max over all sign patterns, which
    equals the l1-norm of the coefficient vector (max_s |s'v| = ||v||_1), so
    no pattern enumeration is needed.
    """
    X = _design_matrix(X)
    support, rest, coef = _support_coefficients(X, support)
    if signs is None:
        stats = np.abs(coef).sum(axis=0)
    else:
        signs = np.asarray(signs, dtype=float).reshape(-1)
        if signs.shape[0] != len(support):
            raise ConfigError(f"{signs.shape[0]} signs for support of size {len(support)}")
        if not np.all(np.abs(signs) == 1.0):
            raise ConfigError("signs must be +1/-1")
        stats = np.abs(signs @ coef)
    if not rest:
        return 0.0, SelectionSetLike([], X.shape[1])
    violating = [rest[i] for i in np.nonzero(stats >= 1.0)[0]]
    return float(stats.max()), SelectionSetLike(violating, X.shape[1])


def exact_recovery(X, support) -> float:
    """Greedy-search recovery statistic: max_k ||(X_S'X_S)^{-1}X_S'X_k||_1."""
    X = _design_matrix(X)
    _, rest, coef = _support_coefficients(X, support)
    if not rest:
        return 0.0
    return float(np.abs(coef).sum(axis=0).max())


class SelectionSetLike(list):
    """Violating-variable list that also knows p (kept lightweight)."""

    def __init__(self, members, p):
        super().__init__(sorted(members))
        self.p = p


def _extreme_singular_values(M):
    sv = np.linalg.svd(M, compute_uv=False)
    smin = 0.0 if M.shape[1] > M.shape[0] else float(sv[-1])
    return smin, float(sv[0])


def sparse_eigenvalues(X, k: float, method: str = "exact"):
    """Extremes of ||X_K a|| / ||a|| over all column subsets |K| <= ceil(k).

    Exact mode enumerates the size-ceil(k) subsets (the extremes over
    ``|K| <= m`` are attained at ``|K| = m`` because singular-value extremes
    are monotone under adding columns) and is guarded at 10^6 subsets;
    beyond that, ``method="greedy"`` gives explicitly non-exact bounds: an
    upper bound for the minimum and a lower bound for the maximum, each from
    a greedily grown subset.
    """
    X = _design_matrix(X)
    p = X.shape[1]
    m = math.ceil(k)
    if not 1 <= m <= p:
        raise ConfigError(f"subset size ceil(k)={m} outside 1..{p}")
    if method == "exact":
        n_subsets = math.comb(p, m)
        if n_subsets > SUBSET_GUARD:
            raise ConfigError(
                f"exact enumeration needs C({p},{m})={n_subsets} subsets "
                f"(> {SUBSET_GUARD}); use method='greedy' for non-exact bounds"
            )
        phi_min, phi_max = np.inf, 0.0
        for K in itertools.combinations(range(p), m):
            smin, smax = _extreme_singular_values(X[:, K])
            phi_min = min(phi_min, smin)
            phi_max = max(phi_max, smax)
        return phi_min, phi_max
    if method == "greedy":
        return _greedy_phi(X, m, want_max=False), _greedy_phi(X, m, want_max=True)
    raise ConfigError(f"unknown method {method!r}")


def _greedy_phi(X, m, want_max):
    p = X.shape[1]
    chosen: list[int] = []
    value = None
    for _ in range(m):
        best_k, best_v = -1, None
        for k in range(p):
            if k in chosen:
                continue
            smin, smax = _extreme_singular_values(X[:, chosen + [k]])
            v = smax if want_max else smin
            if best_v is None or (v > best_v if want_max else v < best_v):
                best_k, best_v = k, v
        chosen.append(best_k)
        value = best_v
    return float(value)


@dataclass(frozen=True)
class AssumptionCheck:
    """Ratio test phi_max(m)/phi_min(m)^{3/2} < sqrt(C)/kappa at m = C*s^2."""

    s: int
    C: float
    kappa: float
    m: int
    phi_min: float
    phi_max: float
    lhs: float
    rhs: float
    satisfied: bool
    method: str = "exact"


def check_assumption_sparse(X, s: int, C: float, kappa: float, method: str = "exact") -> AssumptionCheck:
    """Evaluate the sparse-eigenvalue ratio condition for support size s.

    ``C > 1`` and ``kappa >= 9`` are enforced as inputs.  A zero minimal
    sparse eigenvalue makes the left side infinite, so the condition can
    never be satisfied on designs with duplicated columns.
    """
    X = _design_matrix(X)
    if C <= 1:
        raise ConfigError(f"C must be > 1, got {C}")
    if kappa < 9:
        raise ConfigError(f"kappa must be >= 9, got {kappa}")
    if s < 1:
        raise ConfigError(f"s must be >= 1, got {s}")
    m = math.ceil(C * s * s)
    if m > X.shape[1]:
        raise ConfigError(f"C*s^2={m} exceeds p={X.shape[1]}")
    phi_min, phi_max = sparse_eigenvalues(X, m, method=method)
    lhs = phi_max / phi_min**1.5 if phi_min > 0 else float("inf")
    rhs = math.sqrt(C) / kappa
    return AssumptionCheck(s, C, kappa, m, phi_min, phi_max, lhs, rhs, lhs < rhs, method)


@dataclass(frozen=True)
class MaxCorrelation:
    """Largest absolute inner product between a column and all others."""

    column: int
    value: float
    global_max: float


def max_correlation(X, rng=None) -> MaxCorrelation:
    """For a seeded random column j, max_{k != j} |X_j' X_k|, plus the
    global max over all j as a variant.  Expects unit-norm columns."""
    X = _design_matrix(X)
    p = X.shape[1]
    if p < 2:
        raise ConfigError("need at least 2 columns")
    norms = np.linalg.norm(X, axis=0)
    if np.any(np.abs(norms - 1.0) > 1e-6):
        raise ConfigError("columns must be unit-norm; normalize first")
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    gram = np.abs(X.T @ X)
    np.fill_diagonal(gram, 0.0)
    j = int(rng.integers(p))
    return MaxCorrelation(j, float(gram[j].max()), float(gram.max()))


@dataclass(frozen=True)
class ConditionReport:
    """Bundle of the design diagnostics for one (X, support) pair."""

    irc_value: float
    irc_violations: tuple
    erc_value: float
    max_cor: float
    max_cor_column: int
    max_cor_global: float
    phi: dict = field(default_factory=dict)  # subset size -> (phi_min, phi_max)

    @property
    def irc_violation_count(self) -> int:
        return len(self.irc_violations)

    def to_text(self, index_base: int = 0) -> str:
        lines = [
            f"irc_value\t{self.irc_value:.12g}",
            f"irc_violation_count\t{self.irc_violation_count}",
            f"irc_violations\t{','.join(str(v + index_base) for v in self.irc_violations)}",
            f"erc_value\t{self.erc_value:.12g}",
            f"max_cor\t{self.max_cor:.12g}",
            f"max_cor_column\t{self.max_cor_column + index_base}",
            f"max_cor_global\t{self.max_cor_global:.12g}",
        ]
        for size in sorted(self.phi):
            lo, hi = self.phi[size]
            lines.append(f"phi_min({size})\t{lo:.12g}")
            lines.append(f"phi_max({size})\t{hi:.12g}")
        return "\n".join(lines) + "\n"


def condition_report(X, support, signs=None, phi_sizes=(), rng=None) -> ConditionReport:
    irc_value, violating = irrepresentable(X, support, signs)
    erc_value = exact_recovery(X, support)
    mc = max_correlation(X, rng=rng)
    phi = {int(k): sparse_eigenvalues(X, k) for k in phi_sizes}
    return ConditionReport(
        irc_value=irc_value,
        irc_violations=tuple(violating),
        erc_value=erc_value,
        max_cor=mc.value,
        max_cor_column=mc.column,
        max_cor_global=mc.global_max,
        phi=phi,
    )
