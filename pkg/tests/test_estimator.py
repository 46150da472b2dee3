import math

import numpy as np
import pytest

from funcreg.basis import CoeffVector, RepresenterSpec
from funcreg.estimator import (
    EstimatorConfig,
    consistency_diagnostics,
    empirical_cov,
    empirical_g,
    inverse_spectral_norm,
    plug_in_estimate,
    plug_in_from_moments,
    threshold_alpha,
)
from funcreg.simulate import CovarianceModel, Dataset, DatasetMeta, derive_rng, sample_dataset
from funcreg.weights import ModelRegularity, WeightSpec

INV_SQUARE = WeightSpec("polynomial", 1.0, "decreasing")
META = DatasetMeta((0,), 1.0, "test", "test")


def make_dataset(y, x):
    return Dataset(np.asarray(y, float), np.asarray(x, float), META)


class TestEmpiricalMoments:
    def test_single_observation_cross_moment(self):
        data = make_dataset([2.0], [[1.0, 0.0, 0.0]])
        assert np.array_equal(empirical_g(data, 3).coeffs, [2.0, 0.0, 0.0])

    def test_cross_moment_linear_in_y(self):
        rng = np.random.default_rng(0)
        x = rng.standard_normal((50, 4))
        y = rng.standard_normal(50)
        g1 = empirical_g(make_dataset(y, x), 4).coeffs
        g2 = empirical_g(make_dataset(2.0 * y, x), 4).coeffs
        assert np.array_equal(g2, 2.0 * g1)

    def test_rank_one_outer_product(self):
        data = make_dataset([0.0], [[1.0, 1.0]])
        assert np.array_equal(empirical_cov(data, 2), [[1.0, 1.0], [1.0, 1.0]])

    def test_duplicating_samples_is_idempotent(self):
        rng = np.random.default_rng(1)
        x = rng.standard_normal((20, 3))
        y = rng.standard_normal(20)
        once = empirical_cov(make_dataset(y, x), 3)
        twice = empirical_cov(make_dataset(np.tile(y, 2), np.tile(x, (2, 1))), 3)
        assert np.allclose(once, twice, rtol=1e-14)

    def test_cov_concentrates_on_spectrum(self):
        model = CovarianceModel(INV_SQUARE, 6)
        data = sample_dataset(CoeffVector(np.zeros(1)), 0.0, model, 100_000, derive_rng(2, 0))
        cov = empirical_cov(data, 6)
        lams = model.eigenvalues()
        for i in range(6):
            for j in range(6):
                prods = data.x[:, i] * data.x[:, j]
                se = 3.0 * np.std(prods, ddof=1) / math.sqrt(data.n)
                target = lams[i] if i == j else 0.0
                assert abs(cov[i, j] - target) <= se

    def test_cross_moment_mean_under_known_slope(self):
        model = CovarianceModel(INV_SQUARE, 4)
        beta = CoeffVector(np.array([1.0]))
        data = sample_dataset(beta, 0.0, model, 100_000, derive_rng(3, 0))
        g = empirical_g(data, 1).coeffs[0]
        prods = data.y * data.x[:, 0]
        assert abs(g - 1.0) <= 3.0 * np.std(prods, ddof=1) / math.sqrt(data.n)

    def test_m_beyond_truncation_rejected(self):
        data = make_dataset([1.0], [[1.0, 2.0]])
        with pytest.raises(ValueError):
            empirical_g(data, 3)


class TestInverseSpectralNorm:
    def test_identity(self):
        assert inverse_spectral_norm(np.eye(3), 1e-12) == 1.0

    def test_diagonal(self):
        assert inverse_spectral_norm(np.diag([4.0, 0.25]), 1e-12) == 4.0

    def test_matches_svd_oracle(self):
        rng = np.random.default_rng(4)
        b = rng.standard_normal((8, 8))
        spd = b @ b.T + 0.5 * np.eye(8)
        mine = inverse_spectral_norm(spd, 0.0)
        oracle = 1.0 / np.linalg.svd(spd, compute_uv=False)[-1]
        assert mine == pytest.approx(oracle, rel=1e-10)

    def test_singular_marker(self):
        assert inverse_spectral_norm(np.zeros((2, 2)), 1e-12) is None
        near = np.diag([1.0, 1e-15])
        assert inverse_spectral_norm(near, 1e-12) is None


class TestPlugInEstimate:
    def test_forced_threshold_branch(self):
        model = CovarianceModel(INV_SQUARE, 4)
        data = sample_dataset(CoeffVector(np.ones(4)), 1.0, model, 100, derive_rng(5, 0))
        report = plug_in_estimate(CoeffVector(np.ones(4)), data, EstimatorConfig(m=4, alpha=1e-9))
        assert report.thresholded
        assert report.value == 0.0
        assert not report.singular

    def test_singular_matrix_flagged(self):
        data = make_dataset([1.0], [[1.0, 1.0]])  # rank one, m = 2
        report = plug_in_estimate(CoeffVector(np.ones(2)), data, EstimatorConfig(m=2, alpha=10.0))
        assert report.singular and report.thresholded
        assert report.spectral_norm_inv is None

    def test_scalar_dimension_closed_form(self):
        rng = np.random.default_rng(6)
        x = rng.standard_normal((40, 2))
        y = rng.standard_normal(40)
        data = make_dataset(y, x)
        h = CoeffVector(np.array([0.7]))
        report = plug_in_estimate(h, data, EstimatorConfig(m=1, alpha=100.0))
        t11 = float(x[:, 0] @ x[:, 0] / 40.0)
        g1 = float(y @ x[:, 0] / 40.0)
        assert report.value == 0.7 * g1 / t11

    def test_consistency_noiseless(self):
        model = CovarianceModel(INV_SQUARE, 4)
        beta = CoeffVector(np.array([1.0]))
        data = sample_dataset(beta, 0.0, model, 100_000, derive_rng(7, 0))
        report = plug_in_estimate(CoeffVector(np.array([1.0])), data, EstimatorConfig(m=1, alpha=5.0))
        assert report.value == pytest.approx(1.0, abs=1e-10)  # exact cancellation at m = 1

    def test_consistency_noisy(self):
        model = CovarianceModel(INV_SQUARE, 8)
        beta = CoeffVector(np.array([1.0, 0.5, -0.25]))
        data = sample_dataset(beta, 1.0, model, 100_000, derive_rng(8, 0))
        h = CoeffVector(np.array([1.0, 1.0, 1.0]))
        report = plug_in_estimate(h, data, EstimatorConfig(m=3, alpha=5.0))
        assert not report.thresholded
        assert report.value == pytest.approx(1.25, abs=0.05)

    def test_linearity_in_representer(self):
        rng = np.random.default_rng(9)
        x = rng.standard_normal((200, 5))
        y = rng.standard_normal(200)
        data = make_dataset(y, x)
        cfg = EstimatorConfig(m=5, alpha=50.0)
        h1 = CoeffVector(rng.standard_normal(5))
        h2 = CoeffVector(rng.standard_normal(5))
        combo = CoeffVector(3.0 * h1.coeffs + h2.coeffs)
        v1 = plug_in_estimate(h1, data, cfg).value
        v2 = plug_in_estimate(h2, data, cfg).value
        vc = plug_in_estimate(combo, data, cfg).value
        assert vc == pytest.approx(3.0 * v1 + v2, rel=1e-10)

    def test_threshold_monotone_in_alpha(self):
        rng = np.random.default_rng(10)
        for trial in range(30):
            x = rng.standard_normal((12, 4)) * rng.uniform(0.05, 2.0)
            y = rng.standard_normal(12)
            data = make_dataset(y, x)
            alphas = sorted(rng.uniform(1e-6, 10.0, size=2))
            low = plug_in_estimate(CoeffVector(np.ones(4)), data, EstimatorConfig(m=4, alpha=alphas[0]))
            high = plug_in_estimate(CoeffVector(np.ones(4)), data, EstimatorConfig(m=4, alpha=alphas[1]))
            if high.thresholded and not high.singular:
                assert low.thresholded

    def test_diagonal_moment_oracle_is_exact(self):
        # with the true diagonal operator substituted for the empirical one,
        # the solve collapses to the coordinatewise quotient, bitwise
        rng = np.random.default_rng(11)
        m = 6
        ups = np.arange(1, m + 1, dtype=float) ** -2.0
        g = rng.standard_normal(m)
        h = rng.standard_normal(m)
        report = plug_in_from_moments(
            CoeffVector(h), np.diag(ups), g, 10_000, EstimatorConfig(m=m, alpha=10.0)
        )
        assert report.value == float(np.dot(h, g / ups))

    def test_scale_equivariance(self):
        rng = np.random.default_rng(12)
        x = rng.standard_normal((100, 3))
        y = rng.standard_normal(100)
        h = CoeffVector(np.ones(3))
        cfg = EstimatorConfig(m=3, alpha=50.0)
        base = plug_in_estimate(h, make_dataset(y, x), cfg)
        doubled = plug_in_estimate(h, make_dataset(2.0 * y, x), cfg)
        assert doubled.value == 2.0 * base.value  # powers of two scale exactly
        odd = plug_in_estimate(h, make_dataset(3.7 * y, x), cfg)
        assert odd.value == pytest.approx(3.7 * base.value, rel=1e-12)
        assert odd.thresholded == base.thresholded  # gate looks at X only

    def test_solve_residual_small(self):
        rng = np.random.default_rng(13)
        from funcreg.galerkin import solve_spd
        for _ in range(20):
            x = rng.standard_normal((60, 5))
            data = make_dataset(rng.standard_normal(60), x)
            cov = empirical_cov(data, 5)
            g = empirical_g(data, 5).coeffs
            sol = solve_spd(cov, g)
            assert np.linalg.norm(cov @ sol - g) <= 1e-8 * max(np.linalg.norm(g), 1e-300)

    def test_m_exceeding_dataset_truncation(self):
        data = make_dataset([1.0], [[1.0, 2.0]])
        with pytest.raises(ValueError, match=r"m=3.*M=2"):
            plug_in_estimate(CoeffVector(np.ones(3)), data, EstimatorConfig(m=3, alpha=1.0))


class TestThresholdAlpha:
    def test_unit_branch(self):
        assert threshold_alpha(1.0, 1.0, 8.0) == 1.0

    def test_formula_branch(self):
        assert threshold_alpha(1.0, 0.5, 1.0) == 16.0

    def test_boundary_tie(self):
        assert threshold_alpha(2.0, 1.0, 64.0) == 1.0

    def test_domain_checks(self):
        with pytest.raises(ValueError):
            threshold_alpha(0.5, 1.0, 1.0)
        with pytest.raises(ValueError):
            threshold_alpha(1.0, 0.0, 1.0)
        with pytest.raises(ValueError):
            threshold_alpha(1.0, 1.0, 0.5)


class TestConsistencyDiagnostics:
    REG = ModelRegularity(
        WeightSpec("polynomial", 1.0, "increasing"),
        WeightSpec("polynomial", 1.0, "decreasing"),
    )

    def test_spectrum_floor_value(self):
        report = consistency_diagnostics(self.REG, CoeffVector(np.ones(10)), n=10_000, m=10)
        assert report.spectrum_floor == pytest.approx(0.01, rel=1e-14)

    def test_load_for_first_coordinate(self):
        h = CoeffVector(np.array([1.0]))
        report = consistency_diagnostics(self.REG, h, n=500, m=7)
        assert report.representer_load == pytest.approx(1.0 / 500.0, rel=1e-14)

    def test_decreasing_along_n_for_point_eval(self):
        from funcreg.rates import compute_kstar, default_m_max
        h = RepresenterSpec("point_eval", t0=0.3)
        loads = []
        for n in (2**8, 2**10, 2**12, 2**14):
            m = compute_kstar(self.REG, n, default_m_max(n)).k_star
            loads.append(consistency_diagnostics(self.REG, h, n, m).representer_load)
        assert all(b < a for a, b in zip(loads, loads[1:]))

    def test_ceiling_flags(self):
        report = consistency_diagnostics(
            self.REG, CoeffVector(np.ones(4)), n=2, m=4, floor_ceiling=0.1
        )
        assert not report.floor_ok
