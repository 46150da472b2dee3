import numpy as np
import pytest

from funcreg.basis import CoeffVector, synth_slope
from funcreg.galerkin import (
    GalerkinSolution,
    NotSPDError,
    bias_report,
    galerkin_solve,
    projection_bias_sq,
    solve_spd,
)
from funcreg.simulate import CovarianceModel
from funcreg.weights import ModelRegularity, WeightSpec

REG = ModelRegularity(
    WeightSpec("polynomial", 1.0, "increasing"),
    WeightSpec("polynomial", 1.0, "decreasing"),
)


class TestSolveSpd:
    def test_diagonal_is_exact_division(self):
        diag = np.diag([4.0, 0.25, 9.0])
        rhs = np.array([1.0, 3.0, -2.0])
        assert np.array_equal(solve_spd(diag, rhs), rhs / np.array([4.0, 0.25, 9.0]))

    def test_rejects_asymmetric(self):
        with pytest.raises(NotSPDError):
            solve_spd(np.array([[1.0, 2.0], [0.0, 1.0]]), np.ones(2))

    def test_rejects_indefinite(self):
        with pytest.raises(NotSPDError):
            solve_spd(np.array([[1.0, 0.0], [0.0, -1.0]]), np.ones(2))

    def test_general_spd(self):
        rng = np.random.default_rng(0)
        b = rng.standard_normal((6, 6))
        spd = b @ b.T + np.eye(6)
        rhs = rng.standard_normal(6)
        x = solve_spd(spd, rhs)
        assert np.linalg.norm(spd @ x - rhs) <= 1e-10 * np.linalg.norm(rhs)


class TestGalerkinSolve:
    def test_diagonal_cancellation(self):
        ups = np.arange(1, 9, dtype=float) ** -2.0
        beta = np.array([1.0, -0.5, 0.25, 0.1, 0.0, 0.3, -0.2, 0.05])
        g = ups * beta
        sol = galerkin_solve(np.diag(ups), g, 5)
        assert np.allclose(sol.coeffs, beta[:5], rtol=0, atol=1e-12)

    def test_scalar_section(self):
        sol = galerkin_solve(np.array([[0.5]]), np.array([2.0]), 1)
        assert sol.coeffs[0] == 4.0

    def test_residual_at_machine_scale(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            model = CovarianceModel(REG.upsilon, 16, tuple(rng.uniform(0, 1.5, size=7)))
            t = model.matrix()
            g = rng.standard_normal(16) * np.arange(1, 17.0) ** -1.5
            m = int(rng.integers(1, 17))
            sol = galerkin_solve(t, g, m)
            assert sol.residual_norm <= 1e-10 * max(np.linalg.norm(g[:m]), 1e-300)

    def test_rejects_nonspd_section(self):
        with pytest.raises(NotSPDError):
            galerkin_solve(np.array([[1.0, 2.0], [2.0, 1.0]]), np.ones(2), 2)  # indefinite

    def test_matches_least_squares_on_complete_blocks(self):
        # pair rotations couple indices (2k, 2k+1); odd m keeps blocks whole,
        # and there the section solve is the least-squares minimizer itself
        rng = np.random.default_rng(2)
        model = CovarianceModel(REG.upsilon, 9, (0.7, 1.2, 0.4, 0.9))
        t = model.matrix()
        g = t @ rng.standard_normal(9)
        for m in (1, 3, 5, 7):
            sol = galerkin_solve(t, g, m)
            ls, *_ = np.linalg.lstsq(t[:, :m], g, rcond=None)
            assert np.allclose(sol.coeffs, ls, rtol=1e-9, atol=1e-12)

    def test_beats_random_competitors(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            angles = tuple(rng.uniform(0, np.pi / 2, size=7))
            model = CovarianceModel(REG.upsilon, 16, angles)
            t = model.matrix()
            beta = rng.standard_normal(16) * np.arange(1, 17.0) ** -2.0
            g = t @ beta
            m = int(rng.integers(1, 16))
            sol = galerkin_solve(t, g, m)
            residual = np.linalg.norm(g - t[:, :m] @ sol.coeffs)
            scale = max(np.linalg.norm(sol.coeffs), 1.0)
            competitors = rng.standard_normal((m, 100)) * scale
            comp_res = np.linalg.norm(g[:, None] - t[:, :m] @ competitors, axis=0)
            assert np.all(residual <= comp_res + 1e-12)


class TestBiasReport:
    def test_representer_inside_section_diagonal(self):
        beta = synth_slope(2.0, 4, REG.gamma, 1.0, 32)
        t = np.diag(REG.upsilon.weights(1, 32))
        sol = galerkin_solve(t, t @ beta.coeffs, 8)
        h = CoeffVector(np.array([0.3, -0.4, 1.0]))  # supported inside the section
        bb = bias_report(h, beta, sol, REG, 8)
        assert bb.lhs == pytest.approx(0.0, abs=1e-24)
        assert bb.rhs >= 0.0

    def test_slope_inside_section(self):
        beta = CoeffVector(np.array([1.0, -2.0, 0.5]))
        t = np.diag(REG.upsilon.weights(1, 16))
        sol = galerkin_solve(t, t @ beta.padded(16), 8)
        h = CoeffVector(np.ones(16))
        bb = bias_report(h, beta, sol, REG, 8)
        assert bb.lhs == pytest.approx(0.0, abs=1e-24)

    def test_certificate_holds_on_random_draws(self):
        rng = np.random.default_rng(5)
        m_sim = 24
        for trial in range(200):
            angles = tuple(rng.uniform(0, np.pi / 2, size=(m_sim - 1) // 2)) if trial % 2 else ()
            model = CovarianceModel(REG.upsilon, m_sim, angles)
            t = model.matrix()
            d = model.link_constant()
            beta = synth_slope(2.0, int(rng.integers(2**31)), REG.gamma, 1.0, m_sim)
            h = CoeffVector(rng.standard_normal(m_sim) * np.arange(1, m_sim + 1.0) ** -1.0)
            m = int(rng.integers(1, m_sim))
            sol = galerkin_solve(t, t @ beta.coeffs, m)
            bb = bias_report(h, beta, sol, REG, m, d=d)
            assert bb.holds, f"certificate violated at trial {trial}: {bb.lhs} > {bb.rhs}"

    def test_dimension_mismatch_rejected(self):
        sol = GalerkinSolution(3, np.zeros(3), 0.0)
        with pytest.raises(ValueError):
            bias_report(CoeffVector(np.ones(4)), CoeffVector(np.ones(4)), sol, REG, 4)


class TestProjectionBias:
    def test_zero_for_fully_resolved_slope(self):
        t = np.diag(REG.upsilon.weights(1, 8))
        beta = CoeffVector(np.array([1.0, 2.0]))
        h = CoeffVector(np.ones(8))
        assert projection_bias_sq(h, beta, t, 4) == pytest.approx(0.0, abs=1e-28)

    def test_positive_when_slope_truncated(self):
        t = np.diag(REG.upsilon.weights(1, 8))
        beta = CoeffVector(np.ones(8) * np.arange(1, 9.0) ** -2.0)
        h = CoeffVector(np.ones(8))
        assert projection_bias_sq(h, beta, t, 2) > 0.0
