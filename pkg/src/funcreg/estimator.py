"""Plug-in estimation of <h, beta> behind a spectral-norm threshold gate.

The moment estimates are the empirical cross second moments of (Y, X); the
estimator solves their m-dimensional section and returns 0 whenever the
section is numerically singular or its inverse exceeds the gate alpha * n.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .basis import CoeffVector, RepresenterSpec, coeff_block
from .galerkin import solve_spd
from .simulate import Dataset
from .weights import ModelRegularity


@dataclass(frozen=True)
class EstimatorConfig:
    """Dimension m, threshold coefficient alpha, and the positive-definiteness
    floor below which the empirical matrix is declared singular (default:
    1e-12 times its spectral norm)."""

    m: int
    alpha: float
    pd_tolerance: Optional[float] = None

    def __post_init__(self) -> None:
        if self.m < 1:
            raise ValueError(f"m must be >= 1, got {self.m}")
        if not (self.alpha > 0):
            raise ValueError(f"alpha must be positive, got {self.alpha}")


@dataclass(frozen=True)
class EstimateReport:
    """Estimator output with the gate diagnostics.

    ``thresholded`` marks the zero branch (gate failed or matrix singular);
    ``singular`` marks the numerically-singular sub-case.  The inverse
    spectral norm is reported whenever the matrix was invertible.
    """

    value: float
    thresholded: bool
    singular: bool
    spectral_norm_inv: Optional[float]
    m_used: int
    alpha_used: float

    def __post_init__(self) -> None:
        if self.thresholded and self.value != 0.0:
            raise ValueError("a thresholded estimate must be exactly 0")


def empirical_g(data: Dataset, m: int) -> CoeffVector:
    """Empirical cross moment: component j is mean of Y_i * X_ij, j <= m."""
    if m < 1 or m > data.m_sim:
        raise ValueError(f"m={m} outside the stored truncation {data.m_sim}")
    return CoeffVector(data.y @ data.x[:, :m] / data.n)


def empirical_cov(data: Dataset, m: int) -> np.ndarray:
    """Empirical second-moment matrix of the first m regressor coefficients."""
    if m < 1 or m > data.m_sim:
        raise ValueError(f"m={m} outside the stored truncation {data.m_sim}")
    xm = data.x[:, :m]
    t_hat = xm.T @ xm / data.n
    return (t_hat + t_hat.T) / 2.0


def inverse_spectral_norm(mat: np.ndarray, pd_tolerance: float) -> Optional[float]:
    """Spectral norm of the inverse of a symmetric matrix, or None when the
    smallest eigenvalue does not clear the positive-definiteness floor."""
    eigs = np.linalg.eigvalsh(np.asarray(mat, dtype=np.float64))
    smallest = float(eigs[0])
    if smallest <= pd_tolerance:
        return None
    return 1.0 / smallest


def _resolve_pd_tolerance(cfg: EstimatorConfig, spectral_norm: float) -> float:
    if cfg.pd_tolerance is not None:
        return cfg.pd_tolerance
    return 1e-12 * max(spectral_norm, np.finfo(np.float64).tiny)


def plug_in_from_moments(
    h: Union[CoeffVector, RepresenterSpec, np.ndarray],
    cov_m: np.ndarray,
    g_m: np.ndarray,
    n: int,
    cfg: EstimatorConfig,
) -> EstimateReport:
    """Gate-and-solve on explicit moment inputs.

    Solves the symmetric m x m system by factorization (never an explicit
    inverse) and takes the inner product with the representer coefficients.
    The gate is evaluated through the extreme eigenvalues of the section, not
    through a conditioning estimate of the factorization.
    """
    m = cfg.m
    if isinstance(h, (CoeffVector, RepresenterSpec)):
        h_m = np.asarray(coeff_block(h, 1, m), dtype=np.float64)
    else:
        h_m = np.zeros(m, dtype=np.float64)
        src = np.asarray(h, dtype=np.float64)
        h_m[: min(m, src.size)] = src[:m]
    cov_m = np.asarray(cov_m, dtype=np.float64)
    g_m = np.asarray(g_m, dtype=np.float64)
    if cov_m.shape != (m, m) or g_m.shape != (m,):
        raise ValueError(f"moment shapes {cov_m.shape}, {g_m.shape} disagree with m={m}")
    eigs = np.linalg.eigvalsh(cov_m)
    smallest, largest = float(eigs[0]), float(eigs[-1])
    pd_tol = _resolve_pd_tolerance(cfg, largest)
    if smallest <= pd_tol:
        return EstimateReport(0.0, True, True, None, m, cfg.alpha)
    inv_norm = 1.0 / smallest
    if inv_norm > cfg.alpha * n:
        return EstimateReport(0.0, True, False, inv_norm, m, cfg.alpha)
    if m == 1:
        value = float(h_m[0] * g_m[0] / cov_m[0, 0])
    else:
        value = float(h_m @ solve_spd(cov_m, g_m))
    return EstimateReport(value, False, False, inv_norm, m, cfg.alpha)


def plug_in_estimate(
    h: Union[CoeffVector, RepresenterSpec],
    data: Dataset,
    cfg: EstimatorConfig,
) -> EstimateReport:
    """The thresholded plug-in estimate of <h, beta> from one dataset."""
    if cfg.m > data.m_sim:
        raise ValueError(
            f"estimator dimension m={cfg.m} exceeds the dataset truncation M={data.m_sim}"
        )
    cov_m = empirical_cov(data, cfg.m)
    g_m = empirical_g(data, cfg.m).coeffs
    return plug_in_from_moments(h, cov_m, g_m, data.n, cfg)


def threshold_alpha(d: float, kappa: float, gamma_kstar: float) -> float:
    """The gate coefficient that makes the threshold inactive with high
    probability at the balance dimension: max(8 d^3 / (kappa * gamma_kstar), 1)."""
    if not (d >= 1.0):
        raise ValueError(f"link constant d must be >= 1, got {d}")
    if not (0.0 < kappa <= 1.0):
        raise ValueError(f"kappa must lie in (0, 1], got {kappa}")
    if not (gamma_kstar >= 1.0):
        raise ValueError(f"gamma at k_star must be >= 1, got {gamma_kstar}")
    return max(8.0 * d**3 / (kappa * gamma_kstar), 1.0)


@dataclass(frozen=True)
class ConsistencyReport:
    """Advisory consistency diagnostics.

    ``spectrum_floor`` is 1/(n * upsilon_m): the effective noise amplification
    at the chosen dimension.  ``representer_load`` is the per-sample inverse-
    spectrum energy of h up to m.  Both must vanish along n for the estimate
    to converge; the flags compare them against configurable ceilings.
    """

    spectrum_floor: float
    representer_load: float
    floor_ok: bool
    load_ok: bool
    floor_ceiling: float
    load_ceiling: float


def consistency_diagnostics(
    reg: ModelRegularity,
    h: Union[CoeffVector, RepresenterSpec],
    n: int,
    m: int,
    floor_ceiling: float = 1.0,
    load_ceiling: float = 1.0,
) -> ConsistencyReport:
    if n < 1 or m < 1:
        raise ValueError("n and m must be >= 1")
    ups = reg.upsilon.weights(1, m)
    floor = 1.0 / (n * float(ups[-1]))
    h_m = np.asarray(coeff_block(h, 1, m), dtype=np.float64)
    load = float(np.sum(h_m**2 / ups)) / n
    return ConsistencyReport(
        floor, load, floor <= floor_ceiling, load <= load_ceiling, floor_ceiling, load_ceiling
    )
