"""Core data containers shared by every other module.

``Dataset`` holds a design matrix with optional response, ``LambdaGrid`` an
ordered set of penalty values, ``SelectionSet`` a subset of variables, and
``CoefficientPath`` the coefficients of a path solver along a grid.  All
containers are immutable after construction and safe to share across
parallel workers.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ConfigError, DataError


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Dataset:
    """An n-by-p design matrix with optional response vector.

    Parameters
    ----------
    X : ndarray of shape (n, p)
        Columns are predictor variables.
    y : ndarray of shape (n,), optional
        Response vector; absent for graphical-model data.
    names : sequence of str, optional
        Column labels; defaults to ``x1 .. xp``.
    scales : ndarray of shape (p,), optional
        Euclidean norms of the raw columns recorded by
        :func:`normalize_columns`; needed to map coefficients back to the
        raw scale.  ``None`` for data that was never normalized.
    """

    X: np.ndarray
    y: np.ndarray | None = None
    names: tuple[str, ...] = ()
    scales: np.ndarray | None = None

    def __post_init__(self):
        X = _readonly(self.X)
        if X.ndim != 2:
            raise DataError(f"X must be a 2-d matrix, got ndim={X.ndim}")
        n, p = X.shape
        if n < 2:
            raise DataError(f"need at least 2 rows, got n={n}")
        if p < 1:
            raise DataError("need at least 1 column")
        if not np.all(np.isfinite(X)):
            bad = np.argwhere(~np.isfinite(X))[0]
            raise DataError(f"non-finite entry in X at row {bad[0]}, column {bad[1]}")
        object.__setattr__(self, "X", X)

        y = self.y
        if y is not None:
            y = _readonly(y).reshape(-1)
            if y.shape[0] != n:
                raise DataError(f"y has length {y.shape[0]}, expected n={n}")
            if not np.all(np.isfinite(y)):
                raise DataError("non-finite entry in y")
            object.__setattr__(self, "y", y)

        names = tuple(self.names) if self.names else tuple(f"x{k + 1}" for k in range(p))
        if len(names) != p:
            raise DataError(f"{len(names)} names for {p} columns")
        object.__setattr__(self, "names", names)

        if self.scales is not None:
            scales = _readonly(self.scales).reshape(-1)
            if scales.shape[0] != p:
                raise DataError("scales length mismatch")
            object.__setattr__(self, "scales", scales)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    def is_normalized(self, tol: float = 1e-10) -> bool:
        return bool(np.all(np.abs(np.linalg.norm(self.X, axis=0) - 1.0) <= tol))

    def restrict_rows(self, rows: np.ndarray) -> "Dataset":
        """Dataset restricted to the given row indices (used by subsampling).

        Column scaling is untouched: columns keep the whole-sample
        normalization so that selection frequencies across resamples refer
        to identically scaled variables.
        """
        y = self.y[rows] if self.y is not None else None
        return Dataset(self.X[rows], y, self.names, self.scales)

    def with_response(self, y: np.ndarray) -> "Dataset":
        return Dataset(self.X, y, self.names, self.scales)


def normalize_columns(X, y=None, names: Sequence[str] = ()) -> Dataset:
    """Scale every column of ``X`` to unit Euclidean norm.

    The original column norms are retained in ``Dataset.scales`` so that
    coefficients fitted on the normalized design can be mapped back
    (``beta_raw = beta / scales``).  When a response is given it is centered
    (mean subtracted), so the penalized fits downstream need no intercept.

    Accepts a raw matrix or an existing :class:`Dataset`; applying it twice
    is a no-op (scales compose).

    Raises
    ------
    DataError
        If a column has zero norm (the offending column index is named) or
        any entry is non-finite.
    """
    prior_scales = None
    if isinstance(X, Dataset):
        ds = X
        prior_scales = ds.scales
        if y is None:
            y = ds.y
        if not names:
            names = ds.names
        X = ds.X
    data = Dataset(X, y, tuple(names))
    norms = np.linalg.norm(data.X, axis=0)
    zero = np.nonzero(norms == 0.0)[0]
    if zero.size:
        raise DataError(f"column {zero[0]} ({data.names[zero[0]]}) has zero norm")
    Xn = data.X / norms
    yc = data.y - data.y.mean() if data.y is not None else None
    scales = norms if prior_scales is None else prior_scales * norms
    return Dataset(Xn, yc, data.names, scales)


def load_csv(path, has_header: bool = True, response_column: str | int | None = None) -> Dataset:
    """Read a rectangular numeric CSV into a :class:`Dataset`.

    Normalization is *not* applied implicitly; call
    :func:`normalize_columns` on the result before fitting.

    Parameters
    ----------
    path : str or Path
    has_header : bool
        Whether the first row carries column names.
    response_column : str or int, optional
        Column to extract as the response; a name requires a header row,
        an integer is a 0-based column position.
    """
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        rows = [row for row in reader if row]
    if not rows:
        raise DataError(f"{path}: empty file")

    header: list[str] | None = None
    if has_header:
        header = [c.strip() for c in rows[0]]
        rows = rows[1:]
        if not rows:
            raise DataError(f"{path}: no data rows below header")

    width = len(rows[0])
    values = np.empty((len(rows), width), dtype=float)
    for i, row in enumerate(rows):
        if len(row) != width:
            raise DataError(
                f"{path}: ragged row {i + 1}: {len(row)} cells, expected {width}"
            )
        for j, cell in enumerate(row):
            try:
                values[i, j] = float(cell)
            except ValueError:
                raise DataError(
                    f"{path}: non-numeric cell {cell!r} at row {i + 1}, column {j + 1}"
                ) from None

    if header is None:
        header = [f"x{j + 1}" for j in range(width)]
    elif len(header) != width:
        raise DataError(f"{path}: header has {len(header)} names for {width} columns")

    if response_column is None:
        return Dataset(values, None, tuple(header))

    if isinstance(response_column, str):
        if not has_header:
            raise DataError("response_column by name requires has_header=True")
        try:
            ycol = header.index(response_column)
        except ValueError:
            raise DataError(
                f"{path}: response column {response_column!r} not in header {header}"
            ) from None
    else:
        ycol = int(response_column)
        if not 0 <= ycol < width:
            raise DataError(f"{path}: response column index {ycol} out of range")
    keep = [j for j in range(width) if j != ycol]
    if not keep:
        raise DataError(f"{path}: no predictor columns left after removing the response")
    return Dataset(values[:, keep], values[:, ycol], tuple(header[j] for j in keep))


@dataclass(frozen=True)
class LambdaGrid:
    """Strictly decreasing positive regularization values shared across resamples."""

    values: np.ndarray

    def __post_init__(self):
        v = _readonly(self.values).reshape(-1)
        if v.size < 1:
            raise ConfigError("empty grid")
        if not np.all(np.isfinite(v)) or not np.all(v > 0):
            raise ConfigError("grid values must be finite and positive")
        if v.size > 1 and not np.all(np.diff(v) < 0):
            raise ConfigError("grid values must be strictly decreasing")
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return self.values.size

    def __iter__(self):
        return iter(self.values)

    @classmethod
    def geometric(cls, lam_max: float, num: int = 100, min_ratio: float = 1e-3) -> "LambdaGrid":
        """Geometric grid from ``lam_max`` down to ``min_ratio * lam_max``."""
        if lam_max <= 0:
            raise ConfigError(f"lam_max must be positive, got {lam_max}")
        if not 0 < min_ratio < 1:
            raise ConfigError(f"min_ratio must be in (0, 1), got {min_ratio}")
        if num < 2:
            raise ConfigError("geometric grid needs at least 2 points")
        return cls(np.geomspace(lam_max, lam_max * min_ratio, num))

    @classmethod
    def for_data(cls, data: Dataset, num: int = 100, min_ratio: float = 1e-3) -> "LambdaGrid":
        """Default grid with ``lam_max = 2 * max_k |X_k' y|``, the null-model boundary."""
        if data.y is None:
            raise ConfigError("for_data requires a dataset with a response")
        lam_max = 2.0 * float(np.abs(data.X.T @ data.y).max())
        if lam_max <= 0:
            raise ConfigError("response is orthogonal to every column; no usable lam_max")
        return cls.geometric(lam_max, num=num, min_ratio=min_ratio)

    @classmethod
    def single(cls, lam: float) -> "LambdaGrid":
        return cls(np.array([float(lam)]))

    @classmethod
    def steps(cls, num_steps: int) -> "LambdaGrid":
        """Pseudo-grid for step-indexed methods (forward selection).

        Grid position g stands for ``g + 1`` steps; the stored value is the
        inverse step index ``num_steps - g`` so that position 0 (one step)
        is the most regularized, matching the decreasing-grid convention.
        """
        if num_steps < 1:
            raise ConfigError("need at least one step")
        return cls(np.arange(num_steps, 0, -1, dtype=float))

    def window(self, lambda_min: float | None = None) -> int:
        """Index of the last grid column with value >= lambda_min.

        ``None`` means the whole grid.  Regularization windows are grid
        prefixes ``[lambda_min, lambda_max]``; arbitrary interior windows are
        not supported.
        """
        if lambda_min is None:
            return len(self) - 1
        idx = np.nonzero(self.values >= lambda_min - 1e-12)[0]
        if idx.size == 0:
            raise ConfigError(
                f"lambda_min={lambda_min} exceeds the largest grid value {self.values[0]}"
            )
        return int(idx[-1])


@dataclass(frozen=True)
class SelectionSet:
    """A subset of the p variables (bitset semantics, 0-based indices)."""

    members: frozenset
    p: int

    def __post_init__(self):
        members = frozenset(int(k) for k in self.members)
        if members and not all(0 <= k < self.p for k in members):
            raise ConfigError(f"members outside 0..{self.p - 1}")
        object.__setattr__(self, "members", members)

    @classmethod
    def from_indicator(cls, mask: np.ndarray) -> "SelectionSet":
        mask = np.asarray(mask, dtype=bool).reshape(-1)
        return cls(frozenset(np.nonzero(mask)[0].tolist()), mask.size)

    def indicator(self) -> np.ndarray:
        mask = np.zeros(self.p, dtype=bool)
        if self.members:
            mask[sorted(self.members)] = True
        return mask

    def __contains__(self, k) -> bool:
        return int(k) in self.members

    def __len__(self) -> int:
        return len(self.members)

    def sorted(self) -> list:
        return sorted(self.members)


@dataclass(frozen=True)
class CoefficientPath:
    """Coefficients of a path solver: one column per grid value."""

    coef: np.ndarray  # (p, G)
    grid: LambdaGrid

    def __post_init__(self):
        coef = _readonly(self.coef)
        if coef.ndim != 2 or coef.shape[1] != len(self.grid):
            raise ConfigError(
                f"coef shape {coef.shape} does not match grid of length {len(self.grid)}"
            )
        object.__setattr__(self, "coef", coef)

    @property
    def p(self) -> int:
        return self.coef.shape[0]

    def support(self, g: int) -> SelectionSet:
        return SelectionSet.from_indicator(self.coef[:, g] != 0.0)

    def support_matrix(self) -> np.ndarray:
        """Boolean (p, G) indicator of the nonzero pattern along the path."""
        return self.coef != 0.0
