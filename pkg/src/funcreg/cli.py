"""Command line entry point: rates tables, dataset simulation, single
estimates, and certified rate studies, all driven by one YAML config.

Exit codes: 0 success (and certification pass), 1 usage or configuration
error, 2 certification failure.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import yaml

from .basis import representer_coeffs, synth_slope
from .config import ConfigError, LoadedConfig, load_config
from .estimator import EstimateReport, EstimatorConfig, plug_in_estimate
from .experiments import StudyResult, rate_study
from .rates import compute_kappa, rates_profile
from .simulate import CovarianceModel, Dataset, DatasetMeta, derive_rng, sample_dataset


def _fmt(value) -> str:
    """Full round-trip precision for floats; plain text otherwise."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if value is None:
        return ""
    return str(value)


def _write_csv(path: Path, header: Sequence[str], rows, preamble: Sequence[str]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        for line in preamble:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _preamble(cfg: LoadedConfig, seed: Optional[int]) -> list[str]:
    lines = [f"config: {cfg.canonical_json()}"]
    if seed is not None:
        lines.append(f"seed: {seed}")
    return lines


def cmd_rates(cfg: LoadedConfig, out: Path, seed: Optional[int]) -> int:
    rates_cfg = cfg.require("rates")
    representer = cfg.require("representer")
    reg = cfg.regularity
    if rates_cfg.include_representer_class and reg.omega is None:
        raise ConfigError("regularity.omega", "required when rates.include_representer_class is true")
    kappa = compute_kappa(reg, rates_cfg.kappa_n_max)
    header = [
        "n", "k_star", "a_star", "kappa", "delta_star",
        "delta_tail_terms", "delta_tail_last_increment",
        "Delta_star", "case", "delta_order",
    ]
    rows = []
    for n in rates_cfg.n_list:
        profile = rates_profile(
            reg, representer, n, kappa_result=kappa,
            include_class=rates_cfg.include_representer_class,
        )
        rows.append([
            n, profile.k_star, profile.a_star, profile.kappa, profile.delta_star,
            profile.tail_diag.terms_used, profile.tail_diag.last_rel_increment,
            profile.delta_star_class, profile.case_tag, profile.exponent_descriptor,
        ])
    preamble = _preamble(cfg, seed)
    preamble.append(f"kappa approximated on the grid n <= {kappa.n_max} (infimum over all n)")
    _write_csv(out / "rates.csv", header, rows, preamble)
    print(f"wrote {out / 'rates.csv'}")
    return 0


def _simulation_model(cfg: LoadedConfig, m_sim: int) -> CovarianceModel:
    return CovarianceModel(cfg.regularity.upsilon, m_sim, cfg.covariance.rotation_angles)


DATASET_META_SUFFIX = ".meta.yaml"


def write_dataset(path: Path, data: Dataset, cfg: LoadedConfig, seed: int) -> None:
    header = ["Y"] + [f"X_{j}" for j in range(1, data.m_sim + 1)]
    preamble = _preamble(cfg, seed)
    preamble.append("coefficient columns X_j are indexed from j = 1")
    rows = ([y] + list(xrow) for y, xrow in zip(data.y, data.x))
    _write_csv(path, header, rows, preamble)
    meta = {
        "seed": seed,
        "sigma": data.meta.sigma,
        "beta_id": data.meta.beta_id,
        "covariance_id": data.meta.covariance_id,
        "n": data.n,
        "m_sim": data.m_sim,
    }
    with open(path.with_suffix(path.suffix + DATASET_META_SUFFIX), "w", encoding="utf-8") as fh:
        yaml.safe_dump(meta, fh, sort_keys=True)


def read_dataset(path: Path) -> tuple[Dataset, dict]:
    meta_path = path.with_suffix(path.suffix + DATASET_META_SUFFIX)
    meta = {}
    if meta_path.exists():
        with open(meta_path, "r", encoding="utf-8") as fh:
            meta = yaml.safe_load(fh) or {}
    with open(path, "r", encoding="utf-8") as fh:
        reader = csv.reader(line for line in fh if not line.startswith("#"))
        header = next(reader)
        if not header or header[0] != "Y":
            raise ValueError(f"{path}: expected a dataset header starting with Y")
        rows = [[float(v) for v in row] for row in reader]
    arr = np.asarray(rows, dtype=np.float64)
    ds_meta = DatasetMeta(
        seed_path=(int(meta.get("seed", 0)),),
        sigma=float(meta.get("sigma", float("nan"))),
        beta_id=str(meta.get("beta_id", "unknown")),
        covariance_id=str(meta.get("covariance_id", "unknown")),
    )
    return Dataset(arr[:, 0], arr[:, 1:], ds_meta), meta


def cmd_simulate(cfg: LoadedConfig, out: Path, seed_override: Optional[int]) -> int:
    sim = cfg.require("simulate")
    slope = cfg.require("slope")
    seed = seed_override if seed_override is not None else sim.seed
    m_sim = sim.m_sim if sim.m_sim is not None else (cfg.covariance.m_sim or 64)
    model = _simulation_model(cfg, m_sim)
    beta = synth_slope(slope.decay, slope.seed, cfg.regularity.gamma, cfg.regularity.slope_radius, m_sim)
    rng = derive_rng(seed, 0)
    beta_id = f"synth(decay={slope.decay:g},seed={slope.seed})"
    data = sample_dataset(beta, cfg.sigma, model, sim.n, rng, seed_path=(seed,), beta_id=beta_id)
    write_dataset(out / "dataset.csv", data, cfg, seed)
    print(f"wrote {out / 'dataset.csv'} ({data.n} rows, {data.m_sim} coefficient columns)")
    return 0


ESTIMATE_HEADER = ["value", "thresholded", "singular", "spectral_norm_inv", "m", "alpha", "n", "seed"]


def estimate_row(report: EstimateReport, n: int, seed) -> list:
    return [
        report.value, report.thresholded, report.singular,
        report.spectral_norm_inv, report.m_used, report.alpha_used, n, seed,
    ]


def cmd_estimate(cfg: LoadedConfig, out: Path, seed: Optional[int]) -> int:
    est = cfg.require("estimate")
    representer = cfg.require("representer")
    data, meta = read_dataset(Path(est.dataset))
    h = representer_coeffs(representer, max(est.m, 1))
    report = plug_in_estimate(h, data, EstimatorConfig(m=est.m, alpha=est.alpha))
    row = estimate_row(report, data.n, meta.get("seed", ""))
    _write_csv(out / "estimate.csv", ESTIMATE_HEADER, [row], _preamble(cfg, seed))
    print(f"wrote {out / 'estimate.csv'} (value={report.value!r}, thresholded={report.thresholded})")
    return 0


PER_N_HEADER = [
    "n", "m_used", "alpha_used", "mse", "mse_se", "threshold_rate",
    "singular_rate", "delta_star", "lower_bound", "bias_floor_sq",
]
SUMMARY_HEADER = [
    "fitted_slope", "slope_se", "catalog_exponent", "catalog_order", "case",
    "kappa", "kappa_grid_n_max", "link_constant", "truth",
    "truth_truncation_floor", "m_sim", "excluded_n", "tolerance", "certified",
]


def write_study(out: Path, result: StudyResult, cfg: LoadedConfig, seed: int,
                tolerance: Optional[float], certified: Optional[bool]) -> None:
    preamble = _preamble(cfg, seed)
    rows = [
        [r.n, r.m_used, r.alpha_used, r.mse, r.mse_se, r.threshold_rate,
         r.singular_rate, r.delta_star, r.lower_bound, r.bias_floor_sq]
        for r in result.per_n
    ]
    _write_csv(out / "study_per_n.csv", PER_N_HEADER, rows, preamble)
    summary = [[
        result.fitted_slope, result.slope_se, result.catalog_n_power,
        result.catalog_text, result.case_tag, result.kappa,
        result.kappa_grid_n_max, result.link_constant, result.truth,
        result.truth_truncation_floor, result.m_sim,
        ";".join(str(n) for n in result.excluded_n), tolerance, certified,
    ]]
    _write_csv(out / "study_summary.csv", SUMMARY_HEADER, summary, preamble)


def _run_study(cfg: LoadedConfig, out: Path, seed_override: Optional[int],
               workers: int, tolerance: Optional[float], require_tolerance: bool) -> int:
    study = cfg.require("study")
    seed = seed_override if seed_override is not None else study.master_seed
    tol = tolerance if tolerance is not None else study.tolerance
    if require_tolerance and tol is None:
        raise ConfigError("study.tolerance", "certification needs a tolerance (config key or --tolerance)")
    result = rate_study(cfg.study_config(master_seed=seed), workers=workers)
    certified: Optional[bool] = None
    if tol is not None:
        certified = abs(result.fitted_slope - result.catalog_n_power) <= tol
    write_study(out, result, cfg, seed, tol, certified)
    print(
        f"fitted slope {result.fitted_slope:.4f} (se {result.slope_se:.4f}) "
        f"vs catalog {result.catalog_n_power:g} [{result.catalog_text}]"
    )
    if certified is None:
        return 0
    if certified:
        print(f"certified: |slope - catalog| <= {tol}")
        return 0
    print(f"CERTIFICATION FAILED: |{result.fitted_slope:.4f} - {result.catalog_n_power:g}| > {tol}")
    return 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="funcreg",
        description="Estimation of linear functionals of the slope in functional "
        "linear regression: rate tables, simulation, estimation, and Monte Carlo "
        "rate certification.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("rates", "write the rate quantities per sample size as CSV"),
        ("simulate", "draw a dataset from the configured model and write it as CSV"),
        ("estimate", "run the thresholded estimator on a stored dataset"),
        ("study", "run the Monte Carlo rate study (certifies when a tolerance is set)"),
        ("certify", "run the study and require the slope to match the catalog"),
    ):
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--config", required=True, help="YAML configuration path")
        cmd.add_argument("--out", default="out", help="output directory (default: ./out)")
        cmd.add_argument("--seed", type=int, default=None, help="master seed override")
        cmd.add_argument("--workers", type=int, default=1, help="parallel replication workers")
        cmd.add_argument("--tolerance", type=float, default=None, help="certification tolerance override")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    out = Path(args.out)
    try:
        cfg = load_config(args.config)
        if args.command == "rates":
            return cmd_rates(cfg, out, args.seed)
        if args.command == "simulate":
            return cmd_simulate(cfg, out, args.seed)
        if args.command == "estimate":
            return cmd_estimate(cfg, out, args.seed)
        if args.command == "study":
            return _run_study(cfg, out, args.seed, args.workers, args.tolerance, False)
        return _run_study(cfg, out, args.seed, args.workers, args.tolerance, True)
    except (ConfigError, ValueError, OSError, RuntimeError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
