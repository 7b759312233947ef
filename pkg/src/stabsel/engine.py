"""Subsampling engine: selection frequencies over half-sample resamples,
stable sets, and complementary-pair simultaneous frequencies.

A *selector* is any callable ``(data, grid, rng) -> bool array (rows, G)``
mapping a (sub)dataset and a grid to per-grid-point selection indicators;
the rng carries the selector's own randomness (fresh weights per resample
for the randomized procedures).  Factories for the bundled solvers are
provided below.  Frequencies are stored as integer counts so exact rational
checks on them remain possible.

Per-resample seeds are derived from the master seed by a counter-based
split, so results are reproducible and independent of worker scheduling;
aggregation is a commutative integer sum, making parallel and serial runs
identical.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .control import ev_bound
from .data import Dataset, LambdaGrid, SelectionSet
from .errors import ConfigError, DataError
from .solvers import graphical_lasso, lasso_path, omp, randomised_lasso_path, romp
from .solvers.glasso import GAP_TOL as GLASSO_GAP_TOL

Selector = Callable[[Dataset, LambdaGrid, np.random.Generator], np.ndarray]


# ---------------------------------------------------------------------------
# selector factories

def lasso_selector() -> Selector:
    def select(data, grid, rng):
        return lasso_path(data, grid).support_matrix()

    return select


def randomised_lasso_selector(weakness: float = 0.5, p_w: float = 0.5) -> Selector:
    def select(data, grid, rng):
        return randomised_lasso_path(
            data, grid, weakness=weakness, p_w=p_w, rng=rng
        ).support_matrix()

    return select


def _freeze_degenerate_steps(trace) -> np.ndarray:
    """Support indicators with post-degeneracy picks dropped.

    Once the residual hits zero the trace's remaining additions are
    arbitrary (tie-break or random draw); counting them as selections would
    concentrate frequency mass on meaningless variables, so the selection
    is frozen at the state where the fit became exact.
    """
    mask = trace.support_matrix()
    if trace.degenerate_at is not None:
        m = trace.degenerate_at
        base = mask[:, m - 1] if m > 0 else np.zeros(mask.shape[0], dtype=bool)
        mask[:, m:] = base[:, None]
    return mask


def omp_selector() -> Selector:
    """Forward-selection selector; pair with ``LambdaGrid.steps`` so grid
    position g means g+1 steps."""

    def select(data, grid, rng):
        return _freeze_degenerate_steps(omp(data, len(grid)))

    return select


def romp_selector(weakness: float = 0.9) -> Selector:
    def select(data, grid, rng):
        return _freeze_degenerate_steps(
            romp(data, len(grid), weakness=weakness, rng=rng)
        )

    return select


def glasso_selector(gap_tol: float = GLASSO_GAP_TOL) -> Selector:
    """Edge selector for multivariate data without a response.

    Rows of the returned indicator are the d(d-1)/2 edges in
    ``edge_index`` order.
    """

    def select(data, grid, rng):
        d = data.p
        rows = d * (d - 1) // 2
        cov = np.cov(data.X, rowvar=False, bias=True)
        mask = np.zeros((rows, len(grid)), dtype=bool)
        iu = np.triu_indices(d, 1)
        for g, lam in enumerate(grid.values):
            est = graphical_lasso(cov, lam, gap_tol=gap_tol)
            mask[:, g] = est.theta[iu] != 0.0
        return mask

    return select


def edge_index(d: int) -> list:
    """Edge (j, k), j < k, for each row produced by ``glasso_selector``."""
    iu = np.triu_indices(d, 1)
    return list(zip(iu[0].tolist(), iu[1].tolist()))


def constant_selector(members: Sequence[int], p: int) -> Selector:
    """Selects a fixed set at every grid point (testing and calibration aid)."""
    mask_col = SelectionSet(frozenset(members), p).indicator()

    def select(data, grid, rng):
        return np.repeat(mask_col[:, None], len(grid), axis=1)

    return select


def group_selector(base: Selector, groups: Sequence[Sequence[int]]) -> Selector:
    """Track whole variable sets: group row g is on iff every member is
    selected (the set-inclusion hook on top of a single-variable selector)."""
    groups = [list(g) for g in groups]

    def select(data, grid, rng):
        mask = base(data, grid, rng)
        return np.vstack([mask[g].all(axis=0) for g in groups])

    return select


# ---------------------------------------------------------------------------
# resampling

def subsample(n: int, rng: np.random.Generator) -> np.ndarray:
    """A uniformly drawn size-floor(n/2) subset of {0..n-1}, sorted."""
    if n < 2:
        raise DataError(f"need n >= 2 to subsample, got {n}")
    return np.sort(rng.choice(n, size=n // 2, replace=False))


def _resample_rngs(entropy, b: int):
    child = np.random.SeedSequence(entropy=entropy, spawn_key=(b,))
    rows_ss, sel_ss = child.spawn(2)
    return np.random.default_rng(rows_ss), np.random.default_rng(sel_ss)


def _resolve_seed(seed) -> int:
    if seed is None:
        return int(np.random.SeedSequence().entropy % (2**63))
    return int(seed)


@dataclass(frozen=True)
class FrequencyMatrix:
    """Estimated selection probabilities as exact counts over B resamples.

    ``counts[k, g]`` is the number of resamples in which variable k was
    selected at grid point g; ``union_sizes[b, g]`` is the size of the
    cumulative selection union of resample b over grid points 0..g (the
    per-resample path union, used by the error-control calibrations).
    """

    counts: np.ndarray
    union_sizes: np.ndarray
    grid: LambdaGrid
    B: int
    seed: int

    @property
    def rows(self) -> int:
        return self.counts.shape[0]

    @property
    def pi_hat(self) -> np.ndarray:
        return self.counts / self.B

    def max_frequency(self, lambda_min: float | None = None) -> np.ndarray:
        """Per-variable max of pi_hat over the window [lambda_min, lambda_max]."""
        g_last = self.grid.window(lambda_min)
        return self.counts[:, : g_last + 1].max(axis=1) / self.B

    def mean_union_sizes(self) -> np.ndarray:
        """Average over resamples of the cumulative path-union size, per grid point."""
        return self.union_sizes.mean(axis=0)

    def to_tsv(self, stream, names: Sequence[str] | None = None) -> None:
        header = "variable\t" + "\t".join(f"{v:.12g}" for v in self.grid.values)
        stream.write(header + "\n")
        pi = self.pi_hat
        for k in range(self.rows):
            name = names[k] if names is not None else f"x{k + 1}"
            stream.write(name + "\t" + "\t".join(f"{v:.12g}" for v in pi[k]) + "\n")


@dataclass(frozen=True)
class StabilityResult:
    """Stable set with the calibration metadata that produced it."""

    selected: SelectionSet
    max_frequency: np.ndarray
    threshold: float
    q: float
    lambda_min: float
    bound: float
    B: int
    seed: int

    def to_dict(self) -> dict:
        return {
            "selected": self.selected.sorted(),
            "threshold": self.threshold,
            "q": self.q,
            "lambda_min": self.lambda_min,
            "ev_bound": self.bound,
            "B": self.B,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class SimultaneousFrequencyMatrix:
    """Counts of joint selection over disjoint half-sample pairs."""

    counts: np.ndarray
    grid: LambdaGrid
    pairs: int
    seed: int

    @property
    def pi_simult(self) -> np.ndarray:
        return self.counts / self.pairs


def _run_resamples(jobs, worker, threads: int):
    if threads <= 1:
        return [worker(b) for b in jobs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(worker, jobs))


def selection_frequencies(
    selector: Selector,
    data: Dataset,
    grid: LambdaGrid,
    B: int = 100,
    seed=None,
    threads: int = 1,
) -> FrequencyMatrix:
    """Selection frequency of every variable at every grid point over B
    half-sample resamples.

    Randomized selectors receive an independent weight stream per resample.
    Selector failures propagate with the resample index attached.
    """
    if B < 1:
        raise ConfigError(f"B must be >= 1, got {B}")
    entropy = _resolve_seed(seed)

    def worker(b):
        rng_rows, rng_sel = _resample_rngs(entropy, b)
        rows = subsample(data.n, rng_rows)
        try:
            mask = np.asarray(selector(data.restrict_rows(rows), grid, rng_sel), dtype=bool)
        except Exception as exc:
            raise type(exc)(f"selector failed on resample {b}: {exc}") from exc
        if mask.ndim != 2 or mask.shape[1] != len(grid):
            raise ConfigError(
                f"selector returned shape {mask.shape}, expected (rows, {len(grid)})"
            )
        sizes = np.logical_or.accumulate(mask, axis=1).sum(axis=0)
        return mask, sizes

    results = _run_resamples(range(B), worker, threads)
    counts = np.zeros(results[0][0].shape, dtype=np.int64)
    union_sizes = np.zeros((B, len(grid)), dtype=np.int64)
    for b, (mask, sizes) in enumerate(results):
        counts += mask
        union_sizes[b] = sizes
    return FrequencyMatrix(counts, union_sizes, grid, B, entropy)


def selection_frequencies_exact(
    selector: Selector, data: Dataset, grid: LambdaGrid, max_resamples: int = 10**6
) -> FrequencyMatrix:
    """Exact frequencies by enumerating every size-floor(n/2) subsample.

    Only meaningful for deterministic selectors (each enumeration entry gets
    a fixed-seed rng).
    """
    n = data.n
    total = math.comb(n, n // 2)
    if total > max_resamples:
        raise ConfigError(f"enumeration of {total} subsamples exceeds {max_resamples}")
    counts = None
    union_sizes = []
    for b, rows in enumerate(itertools.combinations(range(n), n // 2)):
        mask = np.asarray(
            selector(data.restrict_rows(np.array(rows)), grid, np.random.default_rng(0)),
            dtype=bool,
        )
        counts = mask.astype(np.int64) if counts is None else counts + mask
        union_sizes.append(np.logical_or.accumulate(mask, axis=1).sum(axis=0))
    return FrequencyMatrix(counts, np.array(union_sizes, dtype=np.int64), grid, total, 0)


def stable_set(
    freq: FrequencyMatrix, threshold: float, lambda_min: float | None = None
) -> StabilityResult:
    """Exact thresholding of the per-variable max frequency over the window.

    ``q`` is the average per-resample size of the path union over the
    window, and ``bound`` the resulting expected false-selection bound
    ``q^2 / ((2*threshold - 1) * rows)``.
    """
    if not 0.5 < threshold <= 1.0:
        raise ConfigError(
            f"threshold must be in (0.5, 1], got {threshold} (the error bound "
            "needs 2*threshold - 1 > 0)"
        )
    g_last = freq.grid.window(lambda_min)
    max_freq = freq.counts[:, : g_last + 1].max(axis=1) / freq.B
    selected = SelectionSet.from_indicator(max_freq >= threshold)
    q = float(freq.union_sizes[:, g_last].mean())
    return StabilityResult(
        selected=selected,
        max_frequency=max_freq,
        threshold=threshold,
        q=q,
        lambda_min=float(freq.grid.values[g_last]),
        bound=ev_bound(q, freq.rows, threshold),
        B=freq.B,
        seed=freq.seed,
    )


def pointwise_stability(
    selector: Selector,
    data: Dataset,
    lam: float,
    B: int = 100,
    threshold: float = 0.9,
    seed=None,
    threads: int = 1,
) -> StabilityResult:
    """Stability selection at a single regularization value.

    ``q`` becomes the average number of variables the base procedure selects
    at that value, and the bound is computed pointwise.
    """
    freq = selection_frequencies(selector, data, LambdaGrid.single(lam), B, seed, threads)
    return stable_set(freq, threshold)


def simultaneous_frequencies(
    selector: Selector,
    data: Dataset,
    grid: LambdaGrid,
    pairs: int = 100,
    seed=None,
    threads: int = 1,
) -> SimultaneousFrequencyMatrix:
    """Frequency of joint selection across random disjoint half-sample pairs."""
    if data.n < 4:
        raise DataError(f"need n >= 4 for two disjoint half-samples, got {data.n}")
    if pairs < 1:
        raise ConfigError(f"pairs must be >= 1, got {pairs}")
    entropy = _resolve_seed(seed)
    h = data.n // 2

    def worker(b):
        rng_rows, rng_sel = _resample_rngs(entropy, b)
        perm = rng_rows.permutation(data.n)
        half1, half2 = np.sort(perm[:h]), np.sort(perm[h : 2 * h])
        rng_a, rng_b = [np.random.default_rng(s) for s in rng_sel.bit_generator.seed_seq.spawn(2)]
        mask1 = np.asarray(selector(data.restrict_rows(half1), grid, rng_a), dtype=bool)
        mask2 = np.asarray(selector(data.restrict_rows(half2), grid, rng_b), dtype=bool)
        return mask1 & mask2

    results = _run_resamples(range(pairs), worker, threads)
    counts = np.zeros(results[0].shape, dtype=np.int64)
    for joint in results:
        counts += joint
    return SimultaneousFrequencyMatrix(counts, grid, pairs, entropy)


def simultaneous_frequencies_exact(
    selector: Selector, data: Dataset, grid: LambdaGrid, max_pairs: int = 10**6
) -> SimultaneousFrequencyMatrix:
    """Exact simultaneous frequencies over all ordered disjoint half-pairs."""
    n = data.n
    if n < 4:
        raise DataError(f"need n >= 4 for two disjoint half-samples, got {n}")
    h = n // 2
    total = math.comb(n, h) * math.comb(n - h, h)
    if total > max_pairs:
        raise ConfigError(f"enumeration of {total} pairs exceeds {max_pairs}")
    counts = None
    pairs = 0
    everyone = set(range(n))
    for half1 in itertools.combinations(range(n), h):
        rest = sorted(everyone - set(half1))
        mask1 = np.asarray(
            selector(data.restrict_rows(np.array(half1)), grid, np.random.default_rng(0)),
            dtype=bool,
        )
        for half2 in itertools.combinations(rest, h):
            mask2 = np.asarray(
                selector(data.restrict_rows(np.array(half2)), grid, np.random.default_rng(0)),
                dtype=bool,
            )
            joint = (mask1 & mask2).astype(np.int64)
            counts = joint if counts is None else counts + joint
            pairs += 1
    return SimultaneousFrequencyMatrix(counts, grid, pairs, 0)
