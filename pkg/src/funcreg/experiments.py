"""Monte Carlo risk estimation and rate-slope certification.

A study fixes one model, one representer and one synthetic slope, runs R
independent replications of sample-then-estimate per grid point n, and fits
the log-log slope of the mean squared error against the catalog order.
Replication r of grid point n draws from the stream (master_seed, n, r), so
results are bit-identical for any worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.stats

from .basis import (
    CoeffVector,
    RepresenterSpec,
    coeff_block,
    linear_functional,
    representer_coeffs,
    synth_slope,
)
from .estimator import EstimatorConfig, plug_in_estimate, threshold_alpha
from .galerkin import projection_bias_sq
from .rates import (
    KappaResult,
    compute_delta_star,
    compute_kappa,
    compute_kstar,
    case_tag_for,
    default_m_max,
    rate_exponent_catalog,
    tail_energy_over_gamma,
)
from .simulate import CovarianceModel, derive_rng, sample_dataset
from .weights import ModelRegularity

ALPHA_POLICIES = ("rate_optimal", "fixed", "unit")


@dataclass(frozen=True)
class AlphaPolicy:
    """How the gate coefficient is chosen per grid point: from the balance
    quantities ("rate_optimal"), a fixed value, or the unit gate."""

    kind: str
    value: Optional[float] = None

    def __post_init__(self) -> None:
        if self.kind not in ALPHA_POLICIES:
            raise ValueError(f"alpha policy must be one of {ALPHA_POLICIES}, got {self.kind!r}")
        if self.kind == "fixed" and (self.value is None or not self.value > 0):
            raise ValueError("fixed alpha policy needs a positive value")
        if self.kind != "fixed" and self.value is not None:
            raise ValueError(f"{self.kind!r} policy takes no value")


@dataclass(frozen=True)
class SlopeSpec:
    """Synthetic slope parameters: coefficient decay and the sign seed."""

    decay: float
    seed: int = 0


@dataclass(frozen=True)
class StudyConfig:
    regularity: ModelRegularity
    representer: RepresenterSpec
    slope: SlopeSpec
    sigma: float
    n_grid: tuple[int, ...]
    replications: int
    master_seed: int
    alpha_policy: AlphaPolicy = field(default_factory=lambda: AlphaPolicy("rate_optimal"))
    rotation_angles: tuple[float, ...] = field(default_factory=tuple)
    m_sim: Optional[int] = None
    kappa_n_max: int = 10_000

    def __post_init__(self) -> None:
        grid = tuple(int(n) for n in self.n_grid)
        if len(grid) < 1 or any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("n_grid must be strictly increasing")
        if any(n < 2 for n in grid):
            raise ValueError("all n must be >= 2")
        object.__setattr__(self, "n_grid", grid)
        if self.replications < 2:
            raise ValueError("need at least 2 replications")
        if not (self.sigma >= 0):
            raise ValueError("sigma must be nonnegative")


@dataclass(frozen=True)
class McRisk:
    mse: float
    se: float
    threshold_rate: float
    singular_rate: float


@dataclass(frozen=True)
class PerNResult:
    n: int
    m_used: int
    alpha_used: float
    mse: float
    mse_se: float
    threshold_rate: float
    singular_rate: float
    delta_star: float
    lower_bound: float
    bias_floor_sq: float


@dataclass(frozen=True)
class StudyResult:
    per_n: tuple[PerNResult, ...]
    fitted_slope: float
    slope_se: float
    catalog_text: str
    catalog_n_power: float
    case_tag: str
    kappa: float
    kappa_grid_n_max: int
    link_constant: float
    truth: float
    truth_truncation_floor: float
    m_sim: int
    excluded_n: tuple[int, ...]


@dataclass(frozen=True)
class _RepTask:
    master_seed: int
    n: int
    r: int
    sigma: float
    model: CovarianceModel
    beta: CoeffVector
    h_m: tuple[float, ...]
    truth: float
    m: int
    alpha: float


def _run_replication(task: _RepTask) -> tuple[int, float, bool, bool]:
    rng = derive_rng(task.master_seed, task.n, task.r)
    data = sample_dataset(task.beta, task.sigma, task.model, task.n, rng)
    cfg = EstimatorConfig(m=task.m, alpha=task.alpha)
    report = plug_in_estimate(np.asarray(task.h_m), data, cfg)
    return task.r, (report.value - task.truth) ** 2, report.thresholded, report.singular


def _mc_run(
    cfg: StudyConfig,
    n: int,
    model: CovarianceModel,
    beta: CoeffVector,
    h_m: np.ndarray,
    truth: float,
    m: int,
    alpha: float,
    workers: int = 1,
) -> McRisk:
    tasks = [
        _RepTask(
            cfg.master_seed, n, r, cfg.sigma, model, beta, tuple(float(v) for v in h_m), truth, m, alpha
        )
        for r in range(cfg.replications)
    ]
    if workers <= 1:
        raw = [_run_replication(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunk = max(1, len(tasks) // (4 * workers))
            raw = list(pool.map(_run_replication, tasks, chunksize=chunk))
    raw.sort(key=lambda item: item[0])
    sq = np.array([item[1] for item in raw])
    thresholded = np.array([item[2] for item in raw])
    singular = np.array([item[3] for item in raw])
    mse = float(np.mean(sq))
    se = float(np.std(sq, ddof=1) / math.sqrt(len(sq)))
    return McRisk(mse, se, float(np.mean(thresholded)), float(np.mean(singular)))


def _study_m_sim(cfg: StudyConfig) -> int:
    if cfg.m_sim is not None:
        return cfg.m_sim
    # one truncation for the whole study, wide enough for the largest grid point
    k_top = compute_kstar(cfg.regularity, cfg.n_grid[-1], default_m_max(cfg.n_grid[-1])).k_star
    return max(4 * k_top, 64)


def _resolve_alpha(cfg: StudyConfig, kappa: float, d: float, k_star: int) -> float:
    if cfg.alpha_policy.kind == "unit":
        return 1.0
    if cfg.alpha_policy.kind == "fixed":
        return float(cfg.alpha_policy.value)
    return threshold_alpha(d, kappa, cfg.regularity.gamma.weight_at(k_star))


def mc_mse(cfg: StudyConfig, n: int, workers: int = 1) -> McRisk:
    """Monte Carlo risk at one sample size, at the balance dimension and the
    configured gate policy, against the exact functional of the study slope."""
    if n not in cfg.n_grid:
        raise ValueError(f"n={n} is not on the configured grid {cfg.n_grid}")
    reg = cfg.regularity
    m_sim = _study_m_sim(cfg)
    model = CovarianceModel(reg.upsilon, m_sim, cfg.rotation_angles)
    d = model.link_constant()
    kappa = compute_kappa(reg, cfg.kappa_n_max).value
    beta = synth_slope(cfg.slope.decay, cfg.slope.seed, reg.gamma, reg.slope_radius, m_sim)
    h_full = representer_coeffs(cfg.representer, m_sim)
    truth = linear_functional(h_full, beta)
    ks = compute_kstar(reg, n, default_m_max(n))
    alpha = _resolve_alpha(cfg, kappa, d, ks.k_star)
    h_m = np.asarray(coeff_block(cfg.representer, 1, ks.k_star))
    return _mc_run(cfg, n, model, beta, h_m, truth, ks.k_star, alpha, workers)


def lower_bound_value(
    sigma: float, d: float, rho: float, kappa: float, delta_star: float
) -> float:
    """Minimax lower bound for a fixed representer:
    (kappa/4) * min(sigma^2/(2d), rho) * delta_star."""
    for name, v in (("sigma", sigma), ("d", d), ("rho", rho), ("delta_star", delta_star)):
        if not (v >= 0):
            raise ValueError(f"{name} must be nonnegative, got {v}")
    if not (0.0 < kappa <= 1.0):
        raise ValueError(f"kappa must lie in (0, 1], got {kappa}")
    return (kappa / 4.0) * min(sigma**2 / (2.0 * d), rho) * delta_star


def representer_class_bound(
    kappa: float, tau: float, sigma: float, d: float, rho: float, delta_star_class: float
) -> float:
    """Minimax lower bound uniform over the representer ellipsoid of radius tau:
    (kappa * tau / 4) * min(sigma^2/(2d), rho) * Delta_star."""
    if not (tau > 0):
        raise ValueError(f"tau must be positive, got {tau}")
    return tau * lower_bound_value(sigma, d, rho, kappa, delta_star_class)


def worst_case_representer(reg: ModelRegularity, n: int, m_max: Optional[int] = None) -> CoeffVector:
    """The extremal representer of the omega-ellipsoid: all mass on the index
    j <= k_star maximizing 1/(omega_j * upsilon_j), scaled to radius tau."""
    if reg.omega is None or reg.representer_radius is None:
        raise ValueError("worst-case representer needs omega and representer_radius")
    ks = compute_kstar(reg, n, m_max if m_max is not None else default_m_max(n))
    ups = reg.upsilon.weights(1, ks.k_star)
    om = reg.omega.weights(1, ks.k_star)
    j_star = int(np.argmax(1.0 / (ups * om))) + 1
    coeffs = np.zeros(j_star)
    coeffs[j_star - 1] = math.sqrt(reg.representer_radius / om[j_star - 1])
    return CoeffVector(coeffs)


def rate_study(cfg: StudyConfig, workers: int = 1) -> StudyResult:
    """Full study: per-n Monte Carlo risk, minimax quantities, and the fitted
    log-log slope, excluding grid points where the gate fired in more than 10%
    of replications (thresholded zeros bias the risk reading)."""
    if cfg.n_grid[-1] < 8 * cfg.n_grid[0]:
        raise ValueError("n_grid must span at least three octaves for a slope fit")
    reg = cfg.regularity
    m_sim = _study_m_sim(cfg)
    model = CovarianceModel(reg.upsilon, m_sim, cfg.rotation_angles)
    d = model.link_constant()
    kappa_res: KappaResult = compute_kappa(reg, cfg.kappa_n_max)
    beta = synth_slope(cfg.slope.decay, cfg.slope.seed, reg.gamma, reg.slope_radius, m_sim)
    h_full = representer_coeffs(cfg.representer, m_sim)
    truth = linear_functional(h_full, beta)
    tail_energy, _ = tail_energy_over_gamma(cfg.representer, reg, m_sim + 1)
    truth_floor = math.sqrt(tail_energy * reg.slope_radius)
    case_tag, p, a, s = case_tag_for(reg, cfg.representer)
    orders = rate_exponent_catalog(case_tag, p, a, s)
    t_full = model.matrix()

    rows = []
    for n in cfg.n_grid:
        ks = compute_kstar(reg, n, default_m_max(n))
        alpha = _resolve_alpha(cfg, kappa_res.value, d, ks.k_star)
        h_m = np.asarray(coeff_block(cfg.representer, 1, ks.k_star))
        risk = _mc_run(cfg, n, model, beta, h_m, truth, ks.k_star, alpha, workers)
        ds = compute_delta_star(cfg.representer, reg, n)
        bound = lower_bound_value(cfg.sigma, d, reg.slope_radius, kappa_res.value, ds.value)
        bias_sq = projection_bias_sq(h_full, beta, t_full, ks.k_star)
        rows.append(
            PerNResult(
                n=n,
                m_used=ks.k_star,
                alpha_used=alpha,
                mse=risk.mse,
                mse_se=risk.se,
                threshold_rate=risk.threshold_rate,
                singular_rate=risk.singular_rate,
                delta_star=ds.value,
                lower_bound=bound,
                bias_floor_sq=bias_sq,
            )
        )

    included = [row for row in rows if row.threshold_rate <= 0.10 and row.mse > 0.0]
    excluded = tuple(row.n for row in rows if row not in included)
    if len(included) < 3:
        raise RuntimeError(
            "fewer than 3 usable grid points for the slope fit "
            f"(excluded: {excluded}); widen the grid or raise alpha"
        )
    fit = scipy.stats.linregress(
        np.log([row.n for row in included]), np.log([row.mse for row in included])
    )
    return StudyResult(
        per_n=tuple(rows),
        fitted_slope=float(fit.slope),
        slope_se=float(fit.stderr),
        catalog_text=orders.fixed_representer.text,
        catalog_n_power=orders.fixed_representer.n_power,
        case_tag=case_tag,
        kappa=kappa_res.value,
        kappa_grid_n_max=kappa_res.n_max,
        link_constant=d,
        truth=truth,
        truth_truncation_floor=truth_floor,
        m_sim=m_sim,
        excluded_n=excluded,
    )
