"""Parametrized weight sequences and the model regularity classes built from them.

Every smoothness or decay assumption in this package is expressed through a
positive sequence ``w_1, w_2, ...`` on the basis index.  Two families cover the
standard regimes: polynomial weights (Sobolev-type classes, finitely smoothing
covariances) and exponential weights (analytic classes, infinitely smoothing
covariances).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

FAMILIES = ("polynomial", "exponential")
DIRECTIONS = ("increasing", "decreasing")


class WeightSpecError(ValueError):
    """Invalid weight-sequence parametrization."""


@dataclass(frozen=True)
class WeightSpec:
    """One parametrized weight sequence.

    ``exponent`` is the half-exponent r of the family:

        polynomial  increasing   w_j = scale * j^(2r),        r >= 0
        polynomial  decreasing   w_j = scale * j^(-2r),       r > 0
        exponential increasing   w_j = scale * exp(j^(2r)-1), r > 0
        exponential decreasing   w_j = scale * exp(1-j^(2r)), r > 0

    The -1 offsets in the exponential forms pin w_1 = scale, so the default
    scale 1.0 gives the normalization w_1 = 1 required of model sequences.
    """

    family: str
    exponent: float
    direction: str
    scale: float = 1.0

    def __post_init__(self) -> None:
        if self.family not in FAMILIES:
            raise WeightSpecError(f"family must be one of {FAMILIES}, got {self.family!r}")
        if self.direction not in DIRECTIONS:
            raise WeightSpecError(
                f"direction must be one of {DIRECTIONS}, got {self.direction!r}"
            )
        if not math.isfinite(self.exponent):
            raise WeightSpecError(f"exponent must be finite, got {self.exponent!r}")
        if not (self.scale > 0 and math.isfinite(self.scale)):
            raise WeightSpecError(f"scale must be a positive real, got {self.scale!r}")
        if self.family == "polynomial" and self.direction == "increasing":
            if self.exponent < 0:
                raise WeightSpecError("polynomial increasing requires exponent >= 0")
        elif self.exponent <= 0:
            raise WeightSpecError(f"{self.family} {self.direction} requires exponent > 0")

    def weight_at(self, j: int) -> float:
        """Exact j-th weight; j >= 1.

        Delegates to the block evaluator so scalar and vectorized call sites
        agree bitwise (libm and numpy pow can differ in the last ulp).
        """
        if j < 1:
            raise WeightSpecError(f"index must be >= 1, got {j}")
        return float(self.weights(j, j)[0])

    def weights(self, j_lo: int, j_hi: int) -> np.ndarray:
        """Weights for the index block j_lo..j_hi inclusive, vectorized."""
        if j_lo < 1 or j_hi < j_lo:
            raise WeightSpecError(f"bad index block [{j_lo}, {j_hi}]")
        j = np.arange(j_lo, j_hi + 1, dtype=np.float64)
        two_r = 2.0 * self.exponent
        if self.family == "polynomial":
            power = two_r if self.direction == "increasing" else -two_r
            return self.scale * j**power
        arg = j**two_r - 1.0
        if self.direction == "decreasing":
            arg = -arg
        # saturating to inf (overflow) or 0.0 (underflow) is the intended
        # float64 representation of extreme weights
        with np.errstate(over="ignore", under="ignore"):
            return self.scale * np.exp(arg)

    def is_summable(self) -> bool:
        """Whether sum_j w_j converges (meaningful for decreasing sequences)."""
        if self.direction == "increasing":
            return False
        if self.family == "polynomial":
            return self.exponent > 0.5  # sum j^(-2r) < inf iff 2r > 1
        return True


def growth_signature(spec: WeightSpec) -> tuple[float, float, float]:
    """(exp_sign, exp_power, poly_power) with log w_j ~ exp_sign*j^exp_power + poly_power*log j."""
    sign = 1.0 if spec.direction == "increasing" else -1.0
    if spec.family == "polynomial":
        return (0.0, 0.0, sign * 2.0 * spec.exponent)
    return (sign, 2.0 * spec.exponent, 0.0)


def product_bounded_below(a: WeightSpec, b: WeightSpec) -> bool:
    """True when inf_j a_j * b_j > 0, decided from the family parametrizations."""
    ea, pa, qa = growth_signature(a)
    eb, pb, qb = growth_signature(b)
    exp_terms = [(p, e) for e, p in ((ea, pa), (eb, pb)) if e != 0.0]
    if exp_terms:
        if len(exp_terms) == 2 and exp_terms[0][0] != exp_terms[1][0]:
            # distinct exponential speeds: the faster one decides
            dom = max(exp_terms, key=lambda t: t[0])
            return dom[1] > 0
        net = sum(e for _, e in exp_terms)
        if net != 0.0:
            return net > 0
        # exponential parts cancel exactly; fall through to polynomial parts
    return qa + qb >= 0.0


def ratio_summable_against(numerator_decay: tuple[str, float], gamma: WeightSpec) -> bool:
    """Whether sum_j d_j / gamma_j converges for d_j ~ j^(-2s) or exp(-j^(2s)).

    ``numerator_decay`` is ("polynomial", s) or ("exponential", s), describing
    the squared-coefficient decay of a representer.
    """
    family, s = numerator_decay
    if family == "exponential":
        return True
    if gamma.family == "exponential":
        return True  # gamma is increasing by model convention
    p = gamma.exponent if gamma.direction == "increasing" else -gamma.exponent
    return 2.0 * s + 2.0 * p > 1.0


class RegularityError(ValueError):
    """Inconsistent model regularity configuration."""


@dataclass(frozen=True)
class ModelRegularity:
    """Smoothness of the slope, decay of the covariance spectrum, and the
    representer class, bundled with their radii and the link constant.

    gamma grows (slope smoothness), upsilon decays and is summable (spectrum),
    omega, when present, defines the representer ellipsoid.  All three must be
    normalized to value 1 at j=1.
    """

    gamma: WeightSpec
    upsilon: WeightSpec
    omega: Optional[WeightSpec] = None
    slope_radius: float = 1.0
    representer_radius: Optional[float] = None
    link_constant: float = 1.0

    def __post_init__(self) -> None:
        if self.gamma.direction != "increasing":
            raise RegularityError("gamma must be an increasing weight sequence")
        if self.upsilon.direction != "decreasing":
            raise RegularityError("upsilon must be a decreasing weight sequence")
        if not self.upsilon.is_summable():
            raise RegularityError(
                "upsilon must be summable: polynomial decay needs exponent > 1/2"
            )
        for name, spec in (("gamma", self.gamma), ("upsilon", self.upsilon), ("omega", self.omega)):
            if spec is not None and spec.scale != 1.0:
                raise RegularityError(f"{name} must be normalized to 1 at j=1 (scale == 1)")
        if self.omega is not None and not product_bounded_below(self.omega, self.gamma):
            raise RegularityError(
                "omega * gamma must be bounded below (representers must embed in the dual class)"
            )
        if not (self.slope_radius > 0):
            raise RegularityError("slope_radius must be positive")
        if self.representer_radius is not None and not (self.representer_radius > 0):
            raise RegularityError("representer_radius must be positive")
        if not (self.link_constant >= 1.0):
            raise RegularityError("link_constant must be >= 1")

    def balance_ratio(self, m: int) -> float:
        """upsilon_m / gamma_m, the decay-to-smoothness ratio; non-increasing in m."""
        g = self.gamma.weight_at(m)
        u = self.upsilon.weight_at(m)
        if math.isinf(g):
            return 0.0
        return u / g

    def balance_ratios(self, m_lo: int, m_hi: int) -> np.ndarray:
        g = self.gamma.weights(m_lo, m_hi)
        u = self.upsilon.weights(m_lo, m_hi)
        out = np.zeros_like(u)
        finite = np.isfinite(g)
        out[finite] = u[finite] / g[finite]
        return out
