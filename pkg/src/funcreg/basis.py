"""Trigonometric basis on [0,1], coefficient vectors, and concrete representers."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .weights import WeightSpec

SQRT2 = math.sqrt(2.0)


def eval_basis(j, t):
    """Value of the j-th basis function at t.

    Index 1 is the constant function; even indices 2k are sqrt(2)*cos(2*pi*k*t)
    and odd indices 2k+1 are sqrt(2)*sin(2*pi*k*t).  Accepts scalars or arrays
    in either argument.
    """
    j_arr = np.asarray(j)
    if np.any(j_arr < 1):
        raise ValueError("basis index must be >= 1")
    k = j_arr // 2
    arg = 2.0 * np.pi * k * np.asarray(t, dtype=np.float64)
    vals = np.where(
        j_arr == 1,
        1.0,
        np.where(j_arr % 2 == 0, SQRT2 * np.cos(arg), SQRT2 * np.sin(arg)),
    )
    if np.isscalar(j) and np.isscalar(t):
        return float(vals)
    return vals


@dataclass(frozen=True)
class TailRule:
    """Analytic envelope for coefficients beyond a finite truncation.

    Predicted magnitude at index j: amplitude * j^(-exponent) for the
    polynomial family, amplitude * exp((1 - j^(2*exponent))/2) for the
    exponential family (so squared coefficients decay like exp(-j^(2s))).
    """

    family: str
    exponent: float
    amplitude: float = 1.0

    def __post_init__(self) -> None:
        if self.family not in ("polynomial", "exponential"):
            raise ValueError(f"unknown tail family {self.family!r}")
        if not (self.amplitude > 0):
            raise ValueError("tail amplitude must be positive")

    def predicted_abs(self, j) -> np.ndarray:
        j = np.asarray(j, dtype=np.float64)
        if self.family == "polynomial":
            return self.amplitude * j ** (-self.exponent)
        arg = (1.0 - j ** (2.0 * self.exponent)) / 2.0
        with np.errstate(under="ignore"):
            return self.amplitude * np.exp(arg)


@dataclass(eq=False)
class CoeffVector:
    """Coefficients [f]_1..[f]_M in the trigonometric basis (index origin 1).

    ``coeffs[i]`` holds [f]_{i+1}.  An optional tail rule describes the
    magnitude of coefficients beyond M, enabling tail sums; a consistency
    guard checks the stored trailing coefficients against the rule (on a
    trailing window, because individual trigonometric coefficients can be
    exact zeros).
    """

    coeffs: np.ndarray
    tail_rule: Optional[TailRule] = None

    def __post_init__(self) -> None:
        self.coeffs = np.asarray(self.coeffs, dtype=np.float64)
        if self.coeffs.ndim != 1 or self.coeffs.size < 1:
            raise ValueError("coeffs must be a non-empty 1-d array")
        if not np.all(np.isfinite(self.coeffs)):
            raise ValueError("all coefficients must be finite")
        if self.tail_rule is not None:
            m = self.coeffs.size
            window = self.coeffs[max(0, m - 8) :]
            observed = float(np.max(np.abs(window)))
            predicted = float(np.max(self.tail_rule.predicted_abs(np.arange(max(1, m - 7), m + 1))))
            if predicted > 0 and not (predicted / 10.0 <= observed <= predicted * 10.0):
                raise ValueError(
                    f"trailing coefficients (max |.| = {observed:.3e}) disagree with the "
                    f"tail rule prediction {predicted:.3e} by more than a factor 10"
                )

    def __len__(self) -> int:
        return int(self.coeffs.size)

    def padded(self, m: int) -> np.ndarray:
        """First m coefficients, zero-padded past the truncation."""
        if m <= len(self):
            return self.coeffs[:m].copy()
        out = np.zeros(m, dtype=np.float64)
        out[: len(self)] = self.coeffs
        return out


REPRESENTER_KINDS = ("point_eval", "interval_average", "synthetic")


@dataclass(frozen=True)
class RepresenterSpec:
    """Target linear functional: evaluation at a point, an interval average,
    or a synthetic representer with prescribed coefficient decay."""

    kind: str
    t0: Optional[float] = None
    b: Optional[float] = None
    decay: Optional[WeightSpec] = None

    def __post_init__(self) -> None:
        if self.kind not in REPRESENTER_KINDS:
            raise ValueError(f"kind must be one of {REPRESENTER_KINDS}, got {self.kind!r}")
        if self.kind == "point_eval":
            if self.t0 is None or not (0.0 <= self.t0 <= 1.0):
                raise ValueError("point_eval requires t0 in [0, 1]")
        elif self.kind == "interval_average":
            if self.b is None or not (0.0 < self.b < 1.0):
                raise ValueError("interval_average requires b strictly inside (0, 1)")
        else:
            if self.decay is None or self.decay.direction != "decreasing":
                raise ValueError("synthetic requires a decreasing decay spec")


def representer_coeff_block(spec: RepresenterSpec, j_lo: int, j_hi: int) -> np.ndarray:
    """Coefficients [h]_{j_lo}..[h]_{j_hi} of the representer, closed form.

    For the interval average over [0, b] the forms are the integrals of the
    basis functions: [h]_1 = b, [h]_{2k} = sin(2*pi*k*b)/(sqrt(2)*pi*k) and
    [h]_{2k+1} = (1 - cos(2*pi*k*b))/(sqrt(2)*pi*k), each checked against
    adaptive quadrature in the test suite.
    """
    if j_lo < 1 or j_hi < j_lo:
        raise ValueError(f"bad index block [{j_lo}, {j_hi}]")
    j = np.arange(j_lo, j_hi + 1)
    if spec.kind == "point_eval":
        return np.asarray(eval_basis(j, spec.t0), dtype=np.float64)
    if spec.kind == "interval_average":
        k = j // 2
        safe_k = np.maximum(k, 1)
        arg = 2.0 * np.pi * safe_k * spec.b
        even = np.sin(arg) / (SQRT2 * np.pi * safe_k)
        odd = (1.0 - np.cos(arg)) / (SQRT2 * np.pi * safe_k)
        return np.where(j == 1, spec.b, np.where(j % 2 == 0, even, odd))
    return np.sqrt(spec.decay.weights(j_lo, j_hi))


def representer_tail_rule(spec: RepresenterSpec) -> TailRule:
    if spec.kind == "point_eval":
        return TailRule("polynomial", 0.0, SQRT2)
    if spec.kind == "interval_average":
        return TailRule("polynomial", 1.0, SQRT2 / np.pi)
    # |h_j| = sqrt(w_j): halve the exponential argument, halve the polynomial power
    if spec.decay.family == "polynomial":
        return TailRule("polynomial", spec.decay.exponent, math.sqrt(spec.decay.scale))
    return TailRule("exponential", spec.decay.exponent, math.sqrt(spec.decay.scale))


def representer_coeffs(spec: RepresenterSpec, m: int) -> CoeffVector:
    """Representer truncated at m, carrying its analytic tail rule."""
    if m < 1:
        raise ValueError("truncation level must be >= 1")
    return CoeffVector(representer_coeff_block(spec, 1, m), representer_tail_rule(spec))


Representer = Union[CoeffVector, RepresenterSpec]


def coeff_block(h: Representer, j_lo: int, j_hi: int) -> np.ndarray:
    """Coefficients of h for an arbitrary index block.

    CoeffVector entries are exact up to the truncation; beyond it the tail
    rule supplies analytic magnitudes (zero when no rule is attached).
    """
    if isinstance(h, RepresenterSpec):
        return representer_coeff_block(h, j_lo, j_hi)
    j = np.arange(j_lo, j_hi + 1)
    out = np.zeros(j.size, dtype=np.float64)
    stored = j <= len(h)
    out[stored] = h.coeffs[j[stored] - 1]
    if h.tail_rule is not None:
        beyond = ~stored
        out[beyond] = h.tail_rule.predicted_abs(j[beyond])
    return out


def squared_decay_profile(h: Representer) -> Optional[tuple[str, float]]:
    """(family, s) with h_j^2 ~ j^(-2s) or exp(-j^(2s)); None for finite support."""
    if isinstance(h, RepresenterSpec):
        rule = representer_tail_rule(h)
        return (rule.family, rule.exponent)
    if h.tail_rule is None:
        return None
    return (h.tail_rule.family, h.tail_rule.exponent)


def weighted_norm_sq(f: Union[CoeffVector, np.ndarray], w: WeightSpec) -> float:
    """sum_j w_j * f_j^2 over the stored coefficients."""
    coeffs = f.coeffs if isinstance(f, CoeffVector) else np.asarray(f, dtype=np.float64)
    if coeffs.size == 0:
        return 0.0
    return float(np.sum(w.weights(1, coeffs.size) * coeffs**2))


class MembershipError(ValueError):
    """The requested decay cannot realize a member of the smoothness class."""


def synth_slope(
    decay: float, sign_seed: int, gamma: WeightSpec, rho: float, m: int
) -> CoeffVector:
    """A slope with coefficients c * zeta_j * j^(-decay), zeta_j random signs,
    scaled so the gamma-weighted squared norm equals rho exactly over j <= m.

    Requires the decay to keep gamma_j * j^(-2*decay) from growing, so the
    class membership survives refinement of the truncation; the boundary
    (harmonic) case is allowed because the truncated norm is pinned exactly.
    """
    if not (rho > 0):
        raise ValueError("rho must be positive")
    if m < 1:
        raise ValueError("truncation level must be >= 1")
    if gamma.family == "exponential" and gamma.direction == "increasing":
        raise MembershipError(
            "polynomially decaying coefficients never lie in an exponential smoothness class"
        )
    p = gamma.exponent if gamma.direction == "increasing" else -gamma.exponent
    if 2.0 * decay - 2.0 * p < 1.0:
        raise MembershipError(
            f"decay {decay} too slow for the class: requires 2*decay - 2*p >= 1 with p={p}"
        )
    rng = np.random.default_rng(sign_seed)
    signs = np.where(rng.random(m) < 0.5, -1.0, 1.0)
    j = np.arange(1, m + 1, dtype=np.float64)
    shape = signs * j ** (-decay)
    norm = weighted_norm_sq(shape, gamma)
    scale = math.sqrt(rho / norm)
    return CoeffVector(scale * shape)


def linear_functional(h: Representer, beta: CoeffVector) -> float:
    """<h, beta> over the stored truncations (shorter side zero-padded)."""
    if isinstance(h, RepresenterSpec):
        h_vec = representer_coeff_block(h, 1, len(beta))
        return float(np.dot(h_vec, beta.coeffs))
    m = max(len(h), len(beta))
    return float(np.dot(h.padded(m), beta.padded(m)))
