"""Strict YAML configuration: sections mirror the library's own types, and
unknown keys are errors rather than silently ignored (a typo in a study
config must fail loudly, not corrupt the study)."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any, Optional

import yaml

from .basis import RepresenterSpec
from .experiments import AlphaPolicy, SlopeSpec, StudyConfig
from .weights import ModelRegularity, WeightSpec


class ConfigError(ValueError):
    """Configuration problem, tagged with the offending field path."""

    def __init__(self, path: str, message: str) -> None:
        self.path = path
        super().__init__(f"{path}: {message}")


def _require_mapping(node: Any, path: str) -> dict:
    if not isinstance(node, dict):
        raise ConfigError(path, f"expected a mapping, got {type(node).__name__}")
    return node


def _check_keys(node: dict, allowed: set[str], required: set[str], path: str) -> None:
    for key in node:
        if key not in allowed:
            raise ConfigError(f"{path}.{key}", "unknown key")
    for key in required:
        if key not in node:
            raise ConfigError(f"{path}.{key}", "missing required key")


def _number(node: dict, key: str, path: str, default=None, required: bool = False):
    if key not in node:
        if required:
            raise ConfigError(f"{path}.{key}", "missing required key")
        return default
    value = node[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}.{key}", f"expected a number, got {value!r}")
    return value


def _integer(node: dict, key: str, path: str, default=None, required: bool = False):
    value = _number(node, key, path, default=default, required=required)
    if value is None:
        return None
    if isinstance(value, float) and not value.is_integer():
        raise ConfigError(f"{path}.{key}", f"expected an integer, got {value!r}")
    return int(value)


def parse_weight_spec(node: Any, path: str) -> WeightSpec:
    node = _require_mapping(node, path)
    _check_keys(node, {"family", "exponent", "direction", "scale"}, {"family", "exponent", "direction"}, path)
    try:
        return WeightSpec(
            family=node["family"],
            exponent=float(_number(node, "exponent", path, required=True)),
            direction=node["direction"],
            scale=float(_number(node, "scale", path, default=1.0)),
        )
    except ValueError as err:
        raise ConfigError(path, str(err)) from err


def parse_regularity(node: Any, path: str = "regularity") -> ModelRegularity:
    node = _require_mapping(node, path)
    allowed = {"gamma", "upsilon", "omega", "slope_radius", "representer_radius", "link_constant"}
    _check_keys(node, allowed, {"gamma", "upsilon"}, path)
    omega = None
    if "omega" in node:
        omega = parse_weight_spec(node["omega"], f"{path}.omega")
    try:
        return ModelRegularity(
            gamma=parse_weight_spec(node["gamma"], f"{path}.gamma"),
            upsilon=parse_weight_spec(node["upsilon"], f"{path}.upsilon"),
            omega=omega,
            slope_radius=float(_number(node, "slope_radius", path, default=1.0)),
            representer_radius=(
                float(node["representer_radius"]) if "representer_radius" in node else None
            ),
            link_constant=float(_number(node, "link_constant", path, default=1.0)),
        )
    except ValueError as err:
        raise ConfigError(path, str(err)) from err


def parse_representer(node: Any, path: str = "representer") -> RepresenterSpec:
    node = _require_mapping(node, path)
    _check_keys(node, {"kind", "t0", "b", "decay"}, {"kind"}, path)
    kind = node.get("kind")
    try:
        if kind == "point_eval":
            _check_keys(node, {"kind", "t0"}, {"kind", "t0"}, path)
            return RepresenterSpec("point_eval", t0=float(_number(node, "t0", path, required=True)))
        if kind == "interval_average":
            _check_keys(node, {"kind", "b"}, {"kind", "b"}, path)
            return RepresenterSpec("interval_average", b=float(_number(node, "b", path, required=True)))
        if kind == "synthetic":
            _check_keys(node, {"kind", "decay"}, {"kind", "decay"}, path)
            return RepresenterSpec("synthetic", decay=parse_weight_spec(node["decay"], f"{path}.decay"))
    except ConfigError:
        raise
    except ValueError as err:
        raise ConfigError(path, str(err)) from err
    raise ConfigError(f"{path}.kind", f"unknown representer kind {kind!r}")


@dataclass(frozen=True)
class CovarianceSection:
    rotation_angles: tuple[float, ...]
    m_sim: Optional[int]


def parse_covariance(node: Any, path: str = "covariance") -> CovarianceSection:
    if node is None:
        return CovarianceSection((), None)
    node = _require_mapping(node, path)
    _check_keys(node, {"rotation_angles", "m_sim"}, set(), path)
    angles: tuple[float, ...] = ()
    if "rotation_angles" in node:
        raw = node["rotation_angles"]
        if not isinstance(raw, list) or not all(isinstance(v, (int, float)) for v in raw):
            raise ConfigError(f"{path}.rotation_angles", "expected a list of numbers")
        angles = tuple(float(v) for v in raw)
    return CovarianceSection(angles, _integer(node, "m_sim", path))


def parse_slope(node: Any, path: str = "slope") -> SlopeSpec:
    node = _require_mapping(node, path)
    _check_keys(node, {"decay", "seed"}, {"decay"}, path)
    return SlopeSpec(
        decay=float(_number(node, "decay", path, required=True)),
        seed=_integer(node, "seed", path, default=0),
    )


def parse_alpha_policy(raw: Any, path: str) -> AlphaPolicy:
    if isinstance(raw, str):
        if raw in ("rate_optimal", "unit"):
            return AlphaPolicy(raw)
        raise ConfigError(path, f"unknown alpha policy {raw!r}")
    node = _require_mapping(raw, path)
    _check_keys(node, {"fixed"}, {"fixed"}, path)
    value = _number(node, "fixed", path, required=True)
    try:
        return AlphaPolicy("fixed", float(value))
    except ValueError as err:
        raise ConfigError(path, str(err)) from err


@dataclass(frozen=True)
class StudySection:
    n_grid: tuple[int, ...]
    replications: int
    master_seed: int
    alpha_policy: AlphaPolicy
    tolerance: Optional[float]
    kappa_n_max: int


def parse_study(node: Any, path: str = "study") -> StudySection:
    node = _require_mapping(node, path)
    allowed = {"n_grid", "replications", "master_seed", "alpha_policy", "tolerance", "kappa_n_max"}
    _check_keys(node, allowed, {"n_grid", "replications", "master_seed"}, path)
    raw_grid = node["n_grid"]
    if not isinstance(raw_grid, list) or not raw_grid:
        raise ConfigError(f"{path}.n_grid", "expected a non-empty list of integers")
    grid = []
    for i, v in enumerate(raw_grid):
        if isinstance(v, bool) or not isinstance(v, int):
            raise ConfigError(f"{path}.n_grid[{i}]", f"expected an integer, got {v!r}")
        grid.append(v)
    policy = parse_alpha_policy(node.get("alpha_policy", "rate_optimal"), f"{path}.alpha_policy")
    tolerance = _number(node, "tolerance", path)
    return StudySection(
        n_grid=tuple(grid),
        replications=_integer(node, "replications", path, required=True),
        master_seed=_integer(node, "master_seed", path, required=True),
        alpha_policy=policy,
        tolerance=float(tolerance) if tolerance is not None else None,
        kappa_n_max=_integer(node, "kappa_n_max", path, default=10_000),
    )


@dataclass(frozen=True)
class RatesSection:
    n_list: tuple[int, ...]
    include_representer_class: bool
    kappa_n_max: int


def parse_rates(node: Any, path: str = "rates") -> RatesSection:
    node = _require_mapping(node, path)
    _check_keys(node, {"n_list", "include_representer_class", "kappa_n_max"}, {"n_list"}, path)
    raw = node["n_list"]
    if not isinstance(raw, list) or not raw or not all(isinstance(v, int) and not isinstance(v, bool) for v in raw):
        raise ConfigError(f"{path}.n_list", "expected a non-empty list of integers")
    include = node.get("include_representer_class", True)
    if not isinstance(include, bool):
        raise ConfigError(f"{path}.include_representer_class", "expected a boolean")
    return RatesSection(tuple(raw), include, _integer(node, "kappa_n_max", path, default=10_000))


@dataclass(frozen=True)
class SimulateSection:
    n: int
    seed: int
    m_sim: Optional[int]


def parse_simulate(node: Any, path: str = "simulate") -> SimulateSection:
    node = _require_mapping(node, path)
    _check_keys(node, {"n", "seed", "m_sim"}, {"n"}, path)
    return SimulateSection(
        n=_integer(node, "n", path, required=True),
        seed=_integer(node, "seed", path, default=0),
        m_sim=_integer(node, "m_sim", path),
    )


@dataclass(frozen=True)
class EstimateSection:
    dataset: str
    m: int
    alpha: float


def parse_estimate(node: Any, path: str = "estimate") -> EstimateSection:
    node = _require_mapping(node, path)
    _check_keys(node, {"dataset", "m", "alpha"}, {"dataset", "m", "alpha"}, path)
    if not isinstance(node["dataset"], str):
        raise ConfigError(f"{path}.dataset", "expected a file path string")
    return EstimateSection(
        dataset=node["dataset"],
        m=_integer(node, "m", path, required=True),
        alpha=float(_number(node, "alpha", path, required=True)),
    )


TOP_LEVEL_SECTIONS = {
    "regularity",
    "representer",
    "covariance",
    "slope",
    "noise",
    "study",
    "rates",
    "simulate",
    "estimate",
}


@dataclass(frozen=True)
class LoadedConfig:
    raw: dict
    regularity: ModelRegularity
    representer: Optional[RepresenterSpec]
    covariance: CovarianceSection
    slope: Optional[SlopeSpec]
    sigma: float
    study: Optional[StudySection]
    rates: Optional[RatesSection]
    simulate: Optional[SimulateSection]
    estimate: Optional[EstimateSection]

    def canonical_json(self) -> str:
        return json.dumps(self.raw, sort_keys=True, separators=(",", ":"))

    def require(self, name: str):
        value = getattr(self, name)
        if value is None:
            raise ConfigError(name, "missing required section")
        return value

    def study_config(self, master_seed: Optional[int] = None) -> StudyConfig:
        study = self.require("study")
        representer = self.require("representer")
        slope = self.require("slope")
        return StudyConfig(
            regularity=self.regularity,
            representer=representer,
            slope=slope,
            sigma=self.sigma,
            n_grid=study.n_grid,
            replications=study.replications,
            master_seed=master_seed if master_seed is not None else study.master_seed,
            alpha_policy=study.alpha_policy,
            rotation_angles=self.covariance.rotation_angles,
            m_sim=self.covariance.m_sim,
            kappa_n_max=study.kappa_n_max,
        )


def load_config(path: str) -> LoadedConfig:
    with open(path, "r", encoding="utf-8") as fh:
        raw = yaml.safe_load(fh)
    raw = _require_mapping(raw, "<top level>")
    for key in raw:
        if key not in TOP_LEVEL_SECTIONS:
            raise ConfigError(key, "unknown section")
    if "regularity" not in raw:
        raise ConfigError("regularity", "missing required section")
    noise = raw.get("noise")
    sigma = 1.0
    if noise is not None:
        noise = _require_mapping(noise, "noise")
        _check_keys(noise, {"sigma"}, set(), "noise")
        sigma = float(_number(noise, "sigma", "noise", default=1.0))
    return LoadedConfig(
        raw=raw,
        regularity=parse_regularity(raw["regularity"]),
        representer=parse_representer(raw["representer"]) if "representer" in raw else None,
        covariance=parse_covariance(raw.get("covariance")),
        slope=parse_slope(raw["slope"]) if "slope" in raw else None,
        sigma=sigma,
        study=parse_study(raw["study"]) if "study" in raw else None,
        rates=parse_rates(raw["rates"]) if "rates" in raw else None,
        simulate=parse_simulate(raw["simulate"]) if "simulate" in raw else None,
        estimate=parse_estimate(raw["estimate"]) if "estimate" in raw else None,
    )
