import math

import numpy as np
import pytest

from stabsel.diagnostics import irrepresentable
from stabsel.errors import ConfigError
from stabsel.simgen import (
    DESIGN_PRESETS,
    DesignSpec,
    banded_precision,
    exact_gram_design,
    gen_beta,
    gen_design,
    gen_ggm,
    gen_response,
    ggm_edges,
    permute_null,
    population_covariance,
)


class TestDesignSpec:
    def test_presets_valid(self):
        for name, spec in DESIGN_PRESETS.items():
            assert spec.n >= 2 and spec.p >= 1, name

    def test_two_correlated_needs_pd(self):
        with pytest.raises(ConfigError, match="positive definite"):
            DesignSpec("two_correlated", 10, 5, rho=0.75)

    def test_parameter_guards(self):
        with pytest.raises(ConfigError):
            DesignSpec("toeplitz", 10, 5)
        with pytest.raises(ConfigError):
            DesignSpec("factor", 10, 5)
        with pytest.raises(ConfigError):
            DesignSpec("two_correlated", 10, 2, rho=0.3)


class TestGenDesign:
    def test_deterministic(self):
        spec = DesignSpec("block", 50, 30)
        a = gen_design(spec, np.random.default_rng(3))
        b = gen_design(spec, np.random.default_rng(3))
        assert np.array_equal(a.X, b.X)

    def test_columns_unit_norm(self):
        spec = DesignSpec("toeplitz", 40, 20, rho=0.99)
        ds = gen_design(spec, np.random.default_rng(0))
        assert ds.is_normalized()

    def test_raw_scale_option(self):
        spec = DesignSpec("independent", 400, 5)
        ds = gen_design(spec, np.random.default_rng(1), normalized=False)
        # raw standard-normal columns have norm about sqrt(n)
        assert np.abs(np.linalg.norm(ds.X, axis=0) - 20.0).max() < 3.0

    def test_independent_near_zero_correlation(self):
        n = 4000
        ds = gen_design(DesignSpec("independent", n, 8), np.random.default_rng(2))
        gram = ds.X.T @ ds.X
        off = gram[~np.eye(8, dtype=bool)]
        # 28 pairs: widen the CLT band to keep the max statistic inside
        assert np.abs(off).max() <= 4.0 / math.sqrt(n)

    def test_block_structure(self):
        n = 10_000
        ds = gen_design(DesignSpec("block", n, 30), np.random.default_rng(4))
        corr = ds.X.T @ ds.X
        groups = np.arange(30) % 10
        same = groups[:, None] == groups[None, :]
        np.fill_diagonal(same, False)
        assert np.abs(corr[same] - 0.5).max() <= 0.05
        assert np.abs(corr[~same & ~np.eye(30, dtype=bool)]).max() <= 0.05

    def test_two_correlated_structure(self):
        n = 20_000
        ds = gen_design(DesignSpec("two_correlated", n, 6, rho=0.7), np.random.default_rng(5))
        corr = ds.X.T @ ds.X
        assert corr[0, 2] == pytest.approx(0.7, abs=0.03)
        assert corr[1, 2] == pytest.approx(0.7, abs=0.03)
        assert corr[0, 1] == pytest.approx(0.0, abs=0.03)

    def test_factor_model_rank_structure(self):
        ds = gen_design(DesignSpec("factor", 500, 40, n_factors=2), np.random.default_rng(6))
        # two shared factors leave a visible top-2 spectral footprint
        sv = np.linalg.svd(ds.X, compute_uv=False)
        assert sv[1] > 3 * sv[2]

    def test_population_gram_matches_diagnostics(self):
        # cross-module: the population design yields the 2*rho statistic
        sigma = population_covariance(DesignSpec("two_correlated", 10, 8, rho=0.45))
        value, violating = irrepresentable(exact_gram_design(sigma).X, [0, 1], signs=[1, 1])
        assert value == pytest.approx(0.9, abs=1e-10)
        assert list(violating) == []

    def test_exact_gram_design(self):
        sigma = population_covariance(DesignSpec("toeplitz", 5, 7, rho=0.8))
        X = exact_gram_design(sigma).X
        assert np.abs(X.T @ X - sigma).max() <= 1e-12


class TestGenBeta:
    def test_support_size_and_zeros(self):
        truth = gen_beta(50, 7, "uniform01", np.random.default_rng(0))
        assert len(truth.support) == 7
        assert np.count_nonzero(truth.beta) == 7
        off = np.ones(50, dtype=bool)
        off[truth.support.sorted()] = False
        assert np.all(truth.beta[off] == 0.0)

    def test_full_support(self):
        truth = gen_beta(10, 10, "uniform01", np.random.default_rng(1))
        assert np.all(truth.beta != 0.0)

    def test_empty_support(self):
        truth = gen_beta(10, 0, "uniform01", np.random.default_rng(2))
        assert np.all(truth.beta == 0.0)

    def test_uniform_moments(self):
        truth = gen_beta(10_000, 10_000, "uniform01", np.random.default_rng(3))
        assert truth.beta.min() >= 0.0 and truth.beta.max() <= 1.0
        assert truth.beta.mean() == pytest.approx(0.5, abs=0.02)

    def test_normal_values(self):
        truth = gen_beta(5000, 5000, "std_normal", np.random.default_rng(4))
        assert truth.beta.mean() == pytest.approx(0.0, abs=0.05)
        assert truth.beta.std() == pytest.approx(1.0, abs=0.05)

    def test_bad_size(self):
        with pytest.raises(ConfigError):
            gen_beta(5, 6, "uniform01", np.random.default_rng(0))


class TestGenResponse:
    def design(self, seed=0, n=50, p=10):
        return gen_design(DesignSpec("independent", n, p), np.random.default_rng(seed))

    def test_snr_identity(self):
        ds = self.design()
        truth = gen_beta(10, 3, "uniform01", np.random.default_rng(1))
        out, updated = gen_response(ds, truth, 2.0, np.random.default_rng(2))
        signal = ds.X @ truth.beta
        assert updated.snr == pytest.approx(2.0)
        assert float(signal @ signal) / updated.sigma**2 == pytest.approx(2.0)

    def test_noiseless_limit(self):
        ds = self.design(1)
        truth = gen_beta(10, 2, "uniform01", np.random.default_rng(3))
        out, updated = gen_response(ds, truth, math.inf, np.random.default_rng(4))
        assert np.array_equal(out.y, ds.X @ truth.beta)
        assert updated.sigma == 0.0

    def test_noise_variance_scaling(self):
        # residual entries have variance sigma^2 / n
        from stabsel.data import SelectionSet
        from stabsel.simgen import SimTruth

        ds = self.design(2, n=40, p=5)
        beta = np.zeros(5)
        beta[0] = 1.0
        truth = SimTruth(beta, SelectionSet(frozenset([0]), 5))
        rng = np.random.default_rng(5)
        pooled = []
        for _ in range(400):
            out, updated = gen_response(ds, truth, 2.0, rng)
            pooled.append(out.y - ds.X @ beta)
        var = np.concatenate(pooled).var()
        assert var == pytest.approx(updated.sigma**2 / ds.n, rel=0.1)

    def test_zero_beta_rejected(self):
        ds = self.design(3)
        truth = gen_beta(10, 0, "uniform01", np.random.default_rng(6))
        with pytest.raises(ConfigError, match="zero"):
            gen_response(ds, truth, 2.0, np.random.default_rng(7))

    def test_requires_normalized(self):
        from stabsel.data import Dataset

        raw = Dataset(np.random.default_rng(8).standard_normal((20, 4)) * 3)
        truth = gen_beta(4, 2, "uniform01", np.random.default_rng(9))
        with pytest.raises(ConfigError, match="normalize"):
            gen_response(raw, truth, 1.0, np.random.default_rng(10))


class TestGgm:
    def test_identity_precision(self):
        ds = gen_ggm(6, np.eye(6), 20_000, np.random.default_rng(0))
        cov = np.cov(ds.X, rowvar=False)
        assert np.abs(cov - np.eye(6)).max() <= 0.06

    def test_banded_edges(self):
        theta = banded_precision(10, band=1, off=0.3)
        edges = ggm_edges(theta)
        assert edges == frozenset((j, j + 1) for j in range(9))

    def test_large_sample_precision_recovery(self):
        theta = banded_precision(5, band=1, off=0.4)
        ds = gen_ggm(5, theta, 100_000, np.random.default_rng(1))
        prec = np.linalg.inv(np.cov(ds.X, rowvar=False))
        assert np.abs(prec - theta).max() <= 0.05 * np.abs(theta).max()

    def test_requires_pd(self):
        bad = np.eye(4)
        bad[0, 1] = bad[1, 0] = 2.0
        with pytest.raises(ConfigError, match="positive definite"):
            gen_ggm(4, bad, 10, np.random.default_rng(2))


class TestPermuteNull:
    def data(self, seed=0):
        return gen_design(DesignSpec("block", 30, 12), np.random.default_rng(seed))

    def test_per_column_preserves_marginals(self):
        ds = self.data()
        out = permute_null(ds, "per_column", rng=np.random.default_rng(1))
        for j in range(ds.p):
            assert sorted(out.X[:, j]) == sorted(ds.X[:, j])
        assert not np.array_equal(out.X, ds.X)

    def test_shared_preserves_cross_structure(self):
        ds = self.data(1)
        keep = [0, 1]
        out = permute_null(ds, "shared_except_k", keep=keep, rng=np.random.default_rng(2))
        assert np.array_equal(out.X[:, keep], ds.X[:, keep])
        # one shared permutation: inner products among permuted columns survive
        permuted = [j for j in range(ds.p) if j not in keep]
        before = ds.X[:, permuted].T @ ds.X[:, permuted]
        after = out.X[:, permuted].T @ out.X[:, permuted]
        assert np.allclose(before, after, atol=1e-12)

    def test_keep_everything_is_identity(self):
        ds = self.data(2)
        out = permute_null(ds, "shared_except_k", keep=range(ds.p), rng=np.random.default_rng(3))
        assert np.array_equal(out.X, ds.X)

    def test_shared_requires_keep(self):
        with pytest.raises(ConfigError):
            permute_null(self.data(), "shared_except_k", rng=np.random.default_rng(0))

    def test_keep_bounds(self):
        with pytest.raises(ConfigError):
            permute_null(self.data(), "per_column", keep=[99], rng=np.random.default_rng(0))
