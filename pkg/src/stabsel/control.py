"""Finite-sample false-discovery calibration.

The bound on the expected number of falsely selected variables is

    E(V) <= q^2 / ((2*threshold - 1) * p)

where q is the average number of variables the base procedure selects over
the regularization window and ``threshold`` the stability cutoff.  The three
functions below move between any two of (q, threshold, bound) and the
third; ``lambda_min_for_q`` realizes a target q by shrinking the window.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import ConfigError


def _check_threshold(threshold: float) -> None:
    if not 0.5 < threshold <= 1.0:
        raise ConfigError(
            f"threshold must be in (0.5, 1], got {threshold} (the bound needs "
            "2*threshold - 1 > 0)"
        )


def ev_bound(q: float, p: int, threshold: float) -> float:
    """Bound on the expected count of falsely selected variables."""
    _check_threshold(threshold)
    if q < 0:
        raise ConfigError(f"q must be nonnegative, got {q}")
    if p < 1:
        raise ConfigError(f"p must be >= 1, got {p}")
    return q * q / ((2.0 * threshold - 1.0) * p)


def calibrate_q(p: int, threshold: float, target_ev: float) -> float:
    """Largest average selection count q that keeps the bound at target_ev."""
    _check_threshold(threshold)
    if target_ev <= 0:
        raise ConfigError(f"target_ev must be positive, got {target_ev}")
    if p < 1:
        raise ConfigError(f"p must be >= 1, got {p}")
    return math.sqrt(target_ev * (2.0 * threshold - 1.0) * p)


def calibrate_threshold(p: int, q: float, target_ev: float) -> float:
    """Stability cutoff that keeps the bound at target_ev for a fixed q.

    Rejects targets that would need a cutoff outside (0.5, 1]; the message
    carries the attainable range for the given (p, q).
    """
    if q < 0:
        raise ConfigError(f"q must be nonnegative, got {q}")
    if target_ev <= 0:
        raise ConfigError(f"target_ev must be positive, got {target_ev}")
    if p < 1:
        raise ConfigError(f"p must be >= 1, got {p}")
    threshold = (q * q / (p * target_ev) + 1.0) / 2.0
    if threshold > 1.0:
        raise ConfigError(
            f"target_ev={target_ev} unattainable with q={q}, p={p}: it needs "
            f"threshold={threshold:.4g} > 1; attainable targets are >= {q * q / p:.6g}"
        )
    if threshold <= 0.5:
        raise ConfigError(
            f"q={q} gives threshold {threshold:.4g} <= 0.5, where the bound is undefined"
        )
    return threshold


@dataclass(frozen=True)
class ControlSpec:
    """A resolved (p, threshold, q, bound) quadruple.

    Exactly one of (q, threshold, target_ev) is derived from the other two;
    ``derived`` names which.  ``lambda_min`` is filled in once a run has
    realized the window.
    """

    p: int
    threshold: float
    q: float
    target_ev: float
    derived: str
    lambda_min: float | None = None

    @classmethod
    def from_threshold_and_ev(cls, p: int, threshold: float, target_ev: float) -> "ControlSpec":
        return cls(p, threshold, calibrate_q(p, threshold, target_ev), target_ev, "q")

    @classmethod
    def from_q_and_ev(cls, p: int, q: float, target_ev: float) -> "ControlSpec":
        return cls(p, calibrate_threshold(p, q, target_ev), q, target_ev, "threshold")

    @classmethod
    def from_threshold_and_q(cls, p: int, threshold: float, q: float) -> "ControlSpec":
        return cls(p, threshold, q, ev_bound(q, p, threshold), "target_ev")

    def with_lambda_min(self, lambda_min: float) -> "ControlSpec":
        return ControlSpec(self.p, self.threshold, self.q, self.target_ev, self.derived, lambda_min)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ControlSpec":
        return cls(**d)


@dataclass(frozen=True)
class LambdaMinResult:
    """Realized regularization window for a target q."""

    lambda_min: float
    grid_index: int
    realized_q: float


def lambda_min_from_frequencies(freq, q: float, strict: bool = False) -> LambdaMinResult:
    """Largest grid suffix whose per-resample path union stays within q.

    Works on the same resamples that produced the frequency matrix (the
    default q policy: q is an average across resamples; ``strict=True``
    caps every single resample instead).
    """
    if q < 1:
        raise ConfigError(f"q must be >= 1, got {q}")
    sizes = freq.union_sizes.max(axis=0) if strict else freq.union_sizes.mean(axis=0)
    within = np.nonzero(sizes <= q)[0]
    if within.size == 0:
        raise ConfigError(
            f"even the largest grid value selects {sizes[0]:.3g} variables "
            f"{'in some resample' if strict else 'on average'}, above q={q}"
        )
    g = int(within[-1])
    return LambdaMinResult(float(freq.grid.values[g]), g, float(sizes[g]))


def lambda_min_for_q(
    selector, data, grid, B: int, q: float, seed=None, strict: bool = False, threads: int = 1
) -> LambdaMinResult:
    """Run the subsampling engine and locate the window realizing q."""
    from .engine import selection_frequencies

    freq = selection_frequencies(selector, data, grid, B=B, seed=seed, threads=threads)
    return lambda_min_from_frequencies(freq, q, strict=strict)
