import numpy as np
import pytest

from funcreg.basis import CoeffVector, RepresenterSpec
from funcreg.experiments import (
    AlphaPolicy,
    SlopeSpec,
    StudyConfig,
    _mc_run,
    lower_bound_value,
    mc_mse,
    rate_study,
    representer_class_bound,
    worst_case_representer,
)
from funcreg.rates import compute_delta_star, compute_delta_star_class
from funcreg.simulate import CovarianceModel
from funcreg.weights import ModelRegularity, WeightSpec

REG = ModelRegularity(
    WeightSpec("polynomial", 1.0, "increasing"),
    WeightSpec("polynomial", 1.0, "decreasing"),
)


def small_config(**overrides):
    base = dict(
        regularity=REG,
        representer=RepresenterSpec("interval_average", b=0.5),
        slope=SlopeSpec(decay=2.0, seed=11),
        sigma=1.0,
        n_grid=(64, 128, 256, 512),
        replications=16,
        master_seed=77,
        kappa_n_max=600,
    )
    base.update(overrides)
    return StudyConfig(**base)


class TestBounds:
    def test_lower_bound_substitution(self):
        # (1/4) * min(2/(2*1), 10) * 1, with sigma^2 = 2 up to the sqrt round-trip
        value = lower_bound_value(sigma=np.sqrt(2.0), d=1.0, rho=10.0, kappa=1.0, delta_star=1.0)
        assert value == pytest.approx(0.25, rel=1e-15)

    def test_lower_bound_vanishes_with_radius(self):
        assert lower_bound_value(1.0, 1.0, 0.0, 1.0, 1.0) == 0.0

    def test_class_bound_reduces_at_unit_radius(self):
        args = dict(sigma=1.3, d=1.5, rho=0.8, kappa=0.5)
        assert representer_class_bound(tau=1.0, delta_star_class=0.2, **args) == lower_bound_value(
            delta_star=0.2, **args
        )

    def test_class_bound_linear_in_order(self):
        one = representer_class_bound(0.5, 2.0, 1.0, 1.0, 1.0, 1e-3)
        two = representer_class_bound(0.5, 2.0, 1.0, 1.0, 1.0, 2e-3)
        assert two == pytest.approx(2.0 * one, rel=1e-14)

    def test_domain_checks(self):
        with pytest.raises(ValueError):
            lower_bound_value(1.0, 1.0, 1.0, 0.0, 1.0)
        with pytest.raises(ValueError):
            representer_class_bound(0.5, 0.0, 1.0, 1.0, 1.0, 1.0)


class TestWorstCaseRepresenter:
    def test_risk_order_saturates_class_order(self):
        reg = ModelRegularity(
            WeightSpec("polynomial", 1.0, "increasing"),
            WeightSpec("polynomial", 1.0, "decreasing"),
            omega=WeightSpec("polynomial", 0.5, "increasing"),
            representer_radius=2.0,
        )
        for n in (17, 256, 4096):
            h_star = worst_case_representer(reg, n)
            ds = compute_delta_star(h_star, reg, n)
            dc = compute_delta_star_class(reg, n)
            assert ds.value == pytest.approx(2.0 * dc.value, rel=1e-12)
            assert ds.tail == 0.0

    def test_requires_class_parameters(self):
        with pytest.raises(ValueError):
            worst_case_representer(REG, 100)


class TestMcRun:
    def test_zero_truth_always_thresholded_gives_zero_mse(self):
        cfg = small_config(alpha_policy=AlphaPolicy("fixed", 1e-12))
        model = CovarianceModel(REG.upsilon, 16)
        beta0 = CoeffVector(np.zeros(16))
        risk = _mc_run(cfg, 64, model, beta0, np.array([1.0, 0.5]), 0.0, 2, 1e-12)
        assert risk.mse == 0.0
        assert risk.threshold_rate == 1.0
        assert risk.singular_rate == 0.0

    def test_noiseless_first_coordinate_converges(self):
        cfg = small_config(sigma=0.0, n_grid=(64, 10_000), replications=20)
        model = CovarianceModel(REG.upsilon, 16)
        beta = CoeffVector(np.array([1.0]))
        risk = _mc_run(cfg, 10_000, model, beta, np.array([1.0]), 1.0, 1, 5.0)
        assert risk.mse < 1e-2
        assert risk.threshold_rate == 0.0

    def test_mc_mse_requires_grid_membership(self):
        with pytest.raises(ValueError):
            mc_mse(small_config(), 100)

    def test_mc_mse_runs_on_grid_point(self):
        risk = mc_mse(small_config(replications=8, kappa_n_max=200), 128)
        assert risk.mse > 0
        assert 0.0 <= risk.threshold_rate <= 1.0


class TestStudyConfigValidation:
    def test_grid_must_increase(self):
        with pytest.raises(ValueError):
            small_config(n_grid=(128, 64))

    def test_needs_replications(self):
        with pytest.raises(ValueError):
            small_config(replications=1)

    def test_fixed_policy_needs_value(self):
        with pytest.raises(ValueError):
            AlphaPolicy("fixed")

    def test_study_needs_three_octaves(self):
        cfg = small_config(n_grid=(64, 96, 128))
        with pytest.raises(ValueError, match="octave"):
            rate_study(cfg)


@pytest.fixture(scope="module")
def small_study():
    return rate_study(small_config(replications=48, kappa_n_max=600))


class TestRateStudy:

    def test_reports_every_grid_point(self, small_study):
        assert tuple(r.n for r in small_study.per_n) == (64, 128, 256, 512)
        assert small_study.case_tag == "ppp"
        assert small_study.catalog_n_power == -0.75

    def test_mse_not_below_projection_bias_floor(self, small_study):
        for row in small_study.per_n:
            assert row.mse >= row.bias_floor_sq - 2.0 * row.mse_se

    def test_lower_bound_direction(self, small_study):
        for row in small_study.per_n:
            assert row.lower_bound <= row.mse

    def test_threshold_rate_decays_within_noise(self, small_study):
        rates = [r.threshold_rate for r in small_study.per_n]
        ses = [
            2.0 * np.sqrt(max(rate * (1 - rate), 1e-12) / 48.0) for rate in rates
        ]
        for i in range(len(rates) - 1):
            assert rates[i + 1] <= rates[i] + ses[i]

    def test_reproducible_across_worker_counts(self):
        cfg = small_config(replications=12, kappa_n_max=200)
        serial = rate_study(cfg, workers=1)
        parallel = rate_study(cfg, workers=3)
        assert serial == parallel  # dataclass equality covers every field

    def test_different_seed_changes_risk(self):
        r1 = rate_study(small_config(replications=12, kappa_n_max=200, master_seed=1))
        r2 = rate_study(small_config(replications=12, kappa_n_max=200, master_seed=2))
        assert r1.per_n[0].mse != r2.per_n[0].mse
