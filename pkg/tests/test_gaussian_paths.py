"""Tests for the scalar Gaussian path samplers."""

import numpy as np
import pytest

from fdyson import (
    CovarianceModel,
    GridSpec,
    ScalarPath,
    SeedSpec,
    fbm_covariance,
    fgn_autocovariance,
    sample_fbm_circulant,
    sample_fbm_ensemble,
    sample_gaussian_cholesky,
)
from fdyson.gaussian_paths import _pivoted_cholesky_factor, write_path_csv


class TestCovariance:
    @pytest.mark.parametrize("H", [0.5, 0.6, 0.75, 0.9])
    def test_variance_on_diagonal(self, H):
        for t in (0.25, 1.0, 2.0):
            assert fbm_covariance(t, t, H) == pytest.approx(t ** (2 * H))

    def test_brownian_case_is_min(self):
        assert fbm_covariance(0.3, 0.7, 0.5) == pytest.approx(0.3)
        assert fbm_covariance(1.2, 0.4, 0.5) == pytest.approx(0.4)

    def test_symmetry_and_zero(self):
        assert fbm_covariance(0.3, 0.8, 0.75) == pytest.approx(
            fbm_covariance(0.8, 0.3, 0.75)
        )
        assert fbm_covariance(0.0, 0.9, 0.75) == 0.0

    def test_fgn_lag_one_correlation(self):
        # rho(1) = 2^{2H-1} - 1, about 0.4142 at H = 0.75
        rho = fgn_autocovariance(1, 0.75)
        assert rho == pytest.approx(2 ** 0.5 - 1, abs=1e-12)
        assert fgn_autocovariance(1, 0.5) == 0.0

    def test_gram_matches_pointwise(self):
        model = CovarianceModel.fbm(0.7)
        times = np.linspace(0.1, 1.0, 7)
        G = model.gram(times)
        for j, t in enumerate(times):
            for k, s in enumerate(times):
                assert G[j, k] == pytest.approx(fbm_covariance(t, s, 0.7))

    def test_custom_kernel(self):
        model = CovarianceModel.custom(lambda t, s: min(t, s) ** 1.4, gamma=0.7)
        assert model(0.5, 0.25) == pytest.approx(0.25 ** 1.4)
        with pytest.raises(ValueError):
            CovarianceModel.custom(lambda t, s: 0.0, gamma=0.4)


class TestGridAndPath:
    def test_nodes(self):
        g = GridSpec(2.0, 4)
        assert np.allclose(g.nodes(), [0.0, 0.5, 1.0, 1.5, 2.0])
        assert g.dt == 0.5

    def test_invalid_grid(self):
        with pytest.raises(ValueError):
            GridSpec(0.0, 4)
        with pytest.raises(ValueError):
            GridSpec(1.0, 0)

    def test_subsample(self):
        g = GridSpec(1.0, 8)
        p = ScalarPath(g, np.arange(9.0))
        q = p.subsample(4)
        assert np.allclose(q.values, [0, 2, 4, 6, 8])
        with pytest.raises(ValueError):
            p.subsample(3)

    def test_rejects_nan(self):
        with pytest.raises(ValueError):
            ScalarPath(GridSpec(1.0, 2), np.array([0.0, np.nan, 1.0]))


class TestPivotedCholesky:
    @pytest.mark.parametrize("H", [0.6, 0.75, 0.9])
    def test_exact_reconstruction(self, H):
        model = CovarianceModel.fbm(H)
        C = model.gram(GridSpec(1.0, 32).nodes()[1:])
        F = _pivoted_cholesky_factor(C)
        assert np.max(np.abs(F @ F.T - C)) < 1e-12

    def test_rank_deficient(self):
        v = np.array([1.0, 2.0, 3.0])
        C = np.outer(v, v)
        F = _pivoted_cholesky_factor(C)
        assert np.max(np.abs(F @ F.T - C)) < 1e-10


class TestSamplers:
    def test_cholesky_deterministic(self):
        model = CovarianceModel.fbm(0.75)
        g = GridSpec(1.0, 64)
        a = sample_gaussian_cholesky(model, g, SeedSpec(42))
        b = sample_gaussian_cholesky(model, g, SeedSpec(42))
        c = sample_gaussian_cholesky(model, g, SeedSpec(43))
        assert np.array_equal(a.values, b.values)
        assert not np.array_equal(a.values, c.values)
        assert a.values[0] == 0.0

    def test_circulant_deterministic_and_independent_streams(self):
        g = GridSpec(1.0, 128)
        a = sample_fbm_circulant(g, 0.75, SeedSpec(7, (1,)))
        b = sample_fbm_circulant(g, 0.75, SeedSpec(7, (1,)))
        c = sample_fbm_circulant(g, 0.75, SeedSpec(7, (2,)))
        assert np.array_equal(a.values, b.values)
        assert not np.array_equal(a.values, c.values)

    def test_ensemble_matches_single(self):
        g = GridSpec(1.0, 64)
        seeds = [SeedSpec(3, (k,)) for k in range(5)]
        rows = sample_fbm_ensemble(g, 0.75, seeds)
        for k, s in enumerate(seeds):
            single = sample_fbm_circulant(g, 0.75, s)
            assert np.allclose(rows[k], single.values, atol=1e-12)

    def test_increment_variance(self):
        # marginal variance of one increment is dt^{2H}, checked loosely
        H, n, M = 0.75, 64, 4000
        g = GridSpec(1.0, n)
        rows = sample_fbm_ensemble(g, H, [SeedSpec(11, (r,)) for r in range(M)])
        incr = np.diff(rows, axis=1)
        v = incr.var()
        target = g.dt ** (2 * H)
        print(f"increment variance {v:.3e} target {target:.3e}")
        assert abs(v / target - 1) < 0.1

    def test_hurst_validation(self):
        with pytest.raises(ValueError):
            sample_fbm_circulant(GridSpec(1.0, 8), 0.3, SeedSpec(0))
        with pytest.raises(ValueError):
            sample_fbm_circulant(GridSpec(1.0, 8), 1.0, SeedSpec(0))

    def test_csv_roundtrip(self, tmp_path):
        p = sample_fbm_circulant(GridSpec(1.0, 16), 0.75, SeedSpec(5))
        fname = tmp_path / "path.csv"
        write_path_csv(p, fname)
        data = np.loadtxt(fname, delimiter=",", skiprows=1)
        assert np.allclose(data[:, 0], p.grid.nodes())
        assert np.allclose(data[:, 1], p.values)


class TestSeedSpec:
    def test_child_extends_coords(self):
        s = SeedSpec(9, (1, 2))
        assert s.child(3).coords == (1, 2, 3)
        assert s.child(3, 4).coords == (1, 2, 3, 4)

    def test_streams_are_order_free(self):
        a = SeedSpec(1, (0, 5)).generator().standard_normal(4)
        b = SeedSpec(1, (0, 5)).generator().standard_normal(4)
        assert np.array_equal(a, b)
