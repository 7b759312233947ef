"""Synthetic designs, sparse coefficient vectors, calibrated noise, and
permutation nulls for both regression and graphical models.

Regression designs are drawn row-i.i.d. from a population covariance (or
built structurally for factor models) and then column-normalized.  The
signal-to-noise convention is ``snr = ||X beta||^2 / sigma^2`` with noise
entries N(0, sigma^2 / n): the 1/n rescaling matches unit-norm predictor
columns, and total noise energy sums to sigma^2.  Every generator is
deterministic under a fixed seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Literal

import numpy as np

from .data import Dataset, SelectionSet, normalize_columns
from .errors import ConfigError

DesignKind = Literal["independent", "block", "toeplitz", "factor", "two_correlated"]


@dataclass(frozen=True)
class DesignSpec:
    """Parameters of one synthetic design family.

    block: variables in the same residue class mod ``n_blocks`` share
    correlation ``block_rho``.  toeplitz: corr(k, m) = rho^|k-m|.
    two_correlated: identity except variables 1 and 2 each correlate rho
    with variable 3.  factor: each variable loads on ``n_factors`` latent
    standard normals plus idiosyncratic noise.
    """

    kind: DesignKind
    n: int
    p: int
    rho: float | None = None
    n_factors: int | None = None
    n_blocks: int = 10
    block_rho: float = 0.5

    def __post_init__(self):
        if self.n < 2 or self.p < 1:
            raise ConfigError(f"need n >= 2 and p >= 1, got n={self.n}, p={self.p}")
        if self.kind in ("toeplitz", "two_correlated"):
            if self.rho is None or not -1 < self.rho < 1:
                raise ConfigError(f"{self.kind} needs rho in (-1, 1), got {self.rho}")
        if self.kind == "two_correlated":
            if self.p < 3:
                raise ConfigError("two_correlated needs p >= 3")
            if 2 * self.rho**2 >= 1:
                raise ConfigError(
                    f"two_correlated covariance is not positive definite for "
                    f"|rho| >= 1/sqrt(2), got rho={self.rho}"
                )
        if self.kind == "factor" and (self.n_factors is None or self.n_factors < 1):
            raise ConfigError(f"factor design needs n_factors >= 1, got {self.n_factors}")
        if self.kind == "block" and self.n_blocks < 1:
            raise ConfigError("block design needs n_blocks >= 1")


DESIGN_PRESETS = {
    # paper-scale scenario matrix
    "A": DesignSpec("independent", n=100, p=1000),
    "A-1000": DesignSpec("independent", n=1000, p=1000),
    "B": DesignSpec("block", n=200, p=1000),
    "B-1000": DesignSpec("block", n=1000, p=1000),
    "C": DesignSpec("toeplitz", n=200, p=1000, rho=0.99),
    "C-1000": DesignSpec("toeplitz", n=1000, p=1000, rho=0.99),
    "D": DesignSpec("factor", n=200, p=1000, n_factors=2),
    "D-1000": DesignSpec("factor", n=1000, p=1000, n_factors=2),
    "E": DesignSpec("factor", n=200, p=1000, n_factors=10),
    "E-1000": DesignSpec("factor", n=1000, p=1000, n_factors=10),
    # desk-scale defaults for tests and CI
    "A-desk": DesignSpec("independent", n=100, p=200),
    "B-desk": DesignSpec("block", n=100, p=200),
    "C-desk": DesignSpec("toeplitz", n=100, p=200, rho=0.99),
    "D-desk": DesignSpec("factor", n=100, p=200, n_factors=2),
    "E-desk": DesignSpec("factor", n=100, p=200, n_factors=10),
}


def population_covariance(spec: DesignSpec) -> np.ndarray:
    """Population covariance implied by the spec (factor designs have no
    fixed covariance: loadings are redrawn per dataset)."""
    p = spec.p
    if spec.kind == "independent":
        return np.eye(p)
    if spec.kind == "block":
        groups = np.arange(p) % spec.n_blocks
        sigma = np.where(groups[:, None] == groups[None, :], spec.block_rho, 0.0)
        np.fill_diagonal(sigma, 1.0)
        return sigma
    if spec.kind == "toeplitz":
        idx = np.arange(p)
        return spec.rho ** np.abs(idx[:, None] - idx[None, :])
    if spec.kind == "two_correlated":
        sigma = np.eye(p)
        sigma[0, 2] = sigma[2, 0] = spec.rho
        sigma[1, 2] = sigma[2, 1] = spec.rho
        return sigma
    raise ConfigError(f"no population covariance for kind {spec.kind!r}")


def gen_design(spec: DesignSpec, rng: np.random.Generator, normalized: bool = True) -> Dataset:
    """Draw the design matrix, by default normalizing columns to unit norm.

    ``normalized=False`` returns the raw N(0, Sigma) scale, needed when the
    response is defined with an absolute noise variance on the raw
    covariates rather than an snr target on the normalized ones.
    """
    if spec.kind == "independent":
        X = rng.standard_normal((spec.n, spec.p))
    elif spec.kind == "factor":
        factors = rng.standard_normal((spec.n, spec.n_factors))
        loadings = rng.standard_normal((spec.n_factors, spec.p))
        X = factors @ loadings + rng.standard_normal((spec.n, spec.p))
    else:
        sigma = population_covariance(spec)
        L = np.linalg.cholesky(sigma)
        X = rng.standard_normal((spec.n, spec.p)) @ L.T
    return normalize_columns(X) if normalized else Dataset(X)


def exact_gram_design(sigma: np.ndarray) -> Dataset:
    """A p-by-p design whose Gram matrix equals ``sigma`` exactly (symmetric
    square root); used for population-level condition checks."""
    sigma = np.asarray(sigma, dtype=float)
    vals, vecs = np.linalg.eigh(0.5 * (sigma + sigma.T))
    if vals.min() < -1e-12:
        raise ConfigError("sigma must be positive semidefinite")
    X = vecs @ np.diag(np.sqrt(np.maximum(vals, 0.0))) @ vecs.T
    return Dataset(X)


@dataclass(frozen=True)
class SimTruth:
    """Planted coefficients with their noise calibration."""

    beta: np.ndarray
    support: SelectionSet
    sigma: float | None = None
    snr: float | None = None

    def noise_set(self) -> SelectionSet:
        mask = ~self.support.indicator()
        return SelectionSet.from_indicator(mask)


def gen_beta(
    p: int,
    s: int,
    value_dist: Literal["uniform01", "std_normal"] = "uniform01",
    rng: np.random.Generator | None = None,
) -> SimTruth:
    """Sparse coefficient vector: a uniformly drawn size-s support with
    i.i.d. values from the requested distribution; exact zeros elsewhere."""
    if rng is None:
        rng = np.random.default_rng()
    if not 0 <= s <= p:
        raise ConfigError(f"s={s} outside 0..p={p}")
    beta = np.zeros(p)
    support = np.sort(rng.choice(p, size=s, replace=False)) if s else np.array([], dtype=int)
    if s:
        if value_dist == "uniform01":
            beta[support] = rng.uniform(0.0, 1.0, s)
        elif value_dist == "std_normal":
            beta[support] = rng.standard_normal(s)
        else:
            raise ConfigError(f"unknown value_dist {value_dist!r}")
    return SimTruth(beta, SelectionSet(frozenset(support.tolist()), p))


def gen_response(
    data: Dataset, truth: SimTruth, snr: float, rng: np.random.Generator
) -> tuple[Dataset, SimTruth]:
    """Attach ``y = X beta + eps`` with noise variance calibrated to the
    target signal-to-noise ratio (``snr=math.inf`` gives the noiseless
    limit).  Returns the dataset with response plus the truth updated with
    the realized (sigma, snr)."""
    if not data.is_normalized(tol=1e-8):
        raise ConfigError("gen_response expects unit-norm columns; normalize first")
    beta = np.asarray(truth.beta, dtype=float)
    if beta.shape[0] != data.p:
        raise ConfigError(f"beta length {beta.shape[0]} != p={data.p}")
    signal = data.X @ beta
    if math.isinf(snr):
        return data.with_response(signal), replace(truth, sigma=0.0, snr=float("inf"))
    if snr <= 0:
        raise ConfigError(f"snr must be positive, got {snr}")
    energy = float(signal @ signal)
    if energy == 0.0:
        raise ConfigError("beta is zero: a finite snr target is undefined")
    sigma2 = energy / snr
    eps = rng.normal(0.0, math.sqrt(sigma2 / data.n), data.n)
    return data.with_response(signal + eps), replace(
        truth, sigma=math.sqrt(sigma2), snr=energy / sigma2
    )


def banded_precision(d: int, band: int = 1, off: float = 0.3) -> np.ndarray:
    """Unit-diagonal precision matrix with ``off`` on the first ``band``
    off-diagonals; keep ``off`` small enough for positive definiteness."""
    theta = np.eye(d)
    for b in range(1, band + 1):
        idx = np.arange(d - b)
        theta[idx, idx + b] = off
        theta[idx + b, idx] = off
    return theta


def ggm_edges(theta: np.ndarray) -> frozenset:
    """True edge set of a precision matrix: off-diagonal support, j < k."""
    j, k = np.nonzero(np.triu(np.asarray(theta), 1))
    return frozenset(zip(j.tolist(), k.tolist()))


def gen_ggm(d: int, theta: np.ndarray, n: int, rng: np.random.Generator) -> Dataset:
    """Rows i.i.d. multivariate normal with covariance ``theta^{-1}``."""
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (d, d):
        raise ConfigError(f"theta must be {d}x{d}, got {theta.shape}")
    if float(np.abs(theta - theta.T).max()) > 1e-10:
        raise ConfigError("theta must be symmetric")
    vals = np.linalg.eigvalsh(theta)
    if vals.min() <= 0:
        raise ConfigError(f"theta not positive definite (min eigenvalue {vals.min():.3g})")
    sigma = np.linalg.inv(theta)
    L = np.linalg.cholesky(0.5 * (sigma + sigma.T))
    X = rng.standard_normal((n, d)) @ L.T
    return Dataset(X)


def permute_null(
    data: Dataset,
    mode: Literal["per_column", "shared_except_k"],
    keep=None,
    rng: np.random.Generator | None = None,
) -> Dataset:
    """Break dependence structure by permuting rows within columns.

    ``per_column`` permutes every column independently (true support and
    graph become empty; column marginals are preserved exactly).
    ``shared_except_k`` applies one shared row permutation to every column
    outside ``keep``, preserving the cross-correlations among the permuted
    columns.  Any response passes through unchanged.
    """
    if rng is None:
        rng = np.random.default_rng()
    keep_set = frozenset(int(k) for k in keep) if keep is not None else frozenset()
    if keep_set and not all(0 <= k < data.p for k in keep_set):
        raise ConfigError(f"keep indices outside 0..{data.p - 1}")
    X = np.array(data.X)
    if mode == "per_column":
        for j in range(data.p):
            if j in keep_set:
                continue
            X[:, j] = X[rng.permutation(data.n), j]
    elif mode == "shared_except_k":
        if not keep_set:
            raise ConfigError("shared_except_k needs a nonempty keep set")
        perm = rng.permutation(data.n)
        for j in range(data.p):
            if j not in keep_set:
                X[:, j] = X[perm, j]
    else:
        raise ConfigError(f"unknown mode {mode!r}")
    return Dataset(X, data.y, data.names, data.scales)
