"""Balance dimension, rate driver, and the risk functionals built on them.

For sample size n the balance objective over dimensions m is

    f(m) = min(upsilon_m/gamma_m, 1/n) / max(upsilon_m/gamma_m, 1/n),

maximized where the spectrum-to-smoothness ratio crosses 1/n.  Its argmax
k_star and the driver a_star = max(upsilon/gamma at k_star, 1/n) determine the
attainable accuracy delta_star for a fixed representer and Delta_star for the
worst representer of an ellipsoid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Union

import numpy as np

from .basis import CoeffVector, RepresenterSpec, coeff_block, squared_decay_profile
from .weights import ModelRegularity, ratio_summable_against

_TAIL_CHUNK = 4096


class KStarWindowError(RuntimeError):
    """The balance objective is still increasing at m_max: k_star not bracketed."""


class AssumptionError(RuntimeError):
    """A per-n balance term vanished, so no uniform lower constant exists."""


class TailDivergenceError(ValueError):
    """The representer tail series over gamma diverges (h outside the dual class)."""


@dataclass(frozen=True)
class KStarResult:
    k_star: int
    a_star: float
    objective: float


@dataclass(frozen=True)
class KappaResult:
    """Finite-grid approximation of the uniform balance constant.

    The true constant is an infimum over all n >= 1; ``n_max`` records the grid
    actually searched and ``attained_n`` where the minimum occurred (a minimum
    at the grid edge suggests the infimum may lie beyond it).
    """

    value: float
    attained_n: int
    n_max: int


@dataclass(frozen=True)
class TailDiagnostic:
    terms_used: int
    last_rel_increment: float
    hit_cap: bool


@dataclass(frozen=True)
class DeltaStarResult:
    value: float
    head: float
    tail: float
    k_star: int
    a_star: float
    tail_diag: TailDiagnostic


def _objective(ratio: float, inv_n: float) -> float:
    return min(ratio, inv_n) / max(ratio, inv_n)


def compute_kstar(reg: ModelRegularity, n: int, m_max: int) -> KStarResult:
    """Argmax of the balance objective over m in {1..m_max}, ties to smallest m.

    Exploits that upsilon_m/gamma_m is non-increasing: the objective rises
    while the ratio exceeds 1/n and falls after the crossing, so only the two
    dimensions adjacent to the crossing can win.  Raises KStarWindowError when
    the crossing lies beyond m_max (the objective would still be rising there).
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if m_max < 1:
        raise ValueError(f"m_max must be >= 1, got {m_max}")
    inv_n = 1.0 / n
    r1 = reg.balance_ratio(1)
    if r1 <= inv_n:
        # already at or below the crossing: objective is non-increasing from m=1
        return KStarResult(1, max(r1, inv_n), _objective(r1, inv_n))
    r_last = reg.balance_ratio(m_max)
    if r_last > inv_n:
        raise KStarWindowError(
            f"balance ratio still above 1/n at m_max={m_max} "
            f"(ratio={r_last:.3e} > 1/n={inv_n:.3e}); enlarge the search window"
        )
    # binary search for the first m with ratio <= 1/n; invariant: lo above, hi at/below
    lo, hi = 1, m_max
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if reg.balance_ratio(mid) <= inv_n:
            hi = mid
        else:
            lo = mid
    above, below = lo, hi
    f_above = _objective(reg.balance_ratio(above), inv_n)
    f_below = _objective(reg.balance_ratio(below), inv_n)
    if f_above >= f_below:
        k, f_k = above, f_above
        # float plateaus tie toward the smallest index with the same ratio
        r_k = reg.balance_ratio(k)
        lo2, hi2 = 0, k
        while hi2 - lo2 > 1:
            mid = (lo2 + hi2) // 2
            if reg.balance_ratio(mid) <= r_k:
                hi2 = mid
            else:
                lo2 = mid
        k = hi2
    else:
        k, f_k = below, f_below
    ratio_k = reg.balance_ratio(k)
    return KStarResult(k, max(ratio_k, inv_n), _objective(ratio_k, inv_n))


def default_m_max(n: int) -> int:
    """Window guaranteed to bracket k_star: summability of upsilon forces the
    balance ratio at m=n below 1/n for every admissible family."""
    return max(n, 2)


def compute_kappa(
    reg: ModelRegularity, n_max: int = 10_000, m_max: Optional[int] = None
) -> KappaResult:
    """min over n in {1..n_max} of the balance objective at k_star(n).

    Each per-n term is min/max of the same two quantities, hence lies in (0,1];
    the grid minimum approximates the infimum over all n and is flagged with
    the grid size in the result.
    """
    if n_max < 1:
        raise ValueError(f"n_max must be >= 1, got {n_max}")
    best = math.inf
    best_n = 1
    for n in range(1, n_max + 1):
        res = compute_kstar(reg, n, m_max if m_max is not None else default_m_max(n))
        if res.objective <= 0.0:
            raise AssumptionError(
                f"balance objective vanished at n={n}: no uniform constant for this model"
            )
        if res.objective < best:
            best = res.objective
            best_n = n
    return KappaResult(best, best_n, n_max)


Representer = Union[CoeffVector, RepresenterSpec]


def tail_energy_over_gamma(
    h: Representer,
    reg: ModelRegularity,
    j_start: int,
    rel_tol: float = 1e-10,
    hard_cap: int = 10_000_000,
) -> tuple[float, TailDiagnostic]:
    """sum_{j >= j_start} h_j^2 / gamma_j by term accumulation.

    Terms are processed in vectorized blocks; the stop fires when the largest
    term of a block falls below rel_tol times the running total, so exact
    trigonometric zeros inside a block cannot trigger it spuriously.
    """
    decay = squared_decay_profile(h)
    if decay is not None and not ratio_summable_against(decay, reg.gamma):
        family, s = decay
        p = reg.gamma.exponent if reg.gamma.family == "polynomial" else math.inf
        raise TailDivergenceError(
            "tail series of h over gamma diverges: "
            f"{family} squared decay s={s} against gamma exponent p={p} "
            "needs 2s + 2p > 1"
        )
    finite_m = len(h) if isinstance(h, CoeffVector) and h.tail_rule is None else None
    total = 0.0
    terms = 0
    last_rel = 0.0
    hit_cap = False
    j = j_start
    while True:
        if finite_m is not None and j > finite_m:
            break
        j_hi = j + _TAIL_CHUNK - 1
        if finite_m is not None:
            j_hi = min(j_hi, finite_m)
        vals = np.asarray(coeff_block(h, j, j_hi), dtype=np.float64) ** 2
        g = reg.gamma.weights(j, j_hi)
        block = vals / g  # finite/inf underflows to 0, as it should
        total += float(block.sum())
        terms += j_hi - j + 1
        last_rel = float(block.max()) / total if total > 0.0 else 0.0
        j = j_hi + 1
        if total > 0.0 and last_rel < rel_tol:
            break
        if total == 0.0 and terms >= 2 * _TAIL_CHUNK:
            break
        if terms >= hard_cap:
            hit_cap = True
            break
    return total, TailDiagnostic(terms, last_rel, hit_cap)


def compute_delta_star(
    h: Representer,
    reg: ModelRegularity,
    n: int,
    m_max: Optional[int] = None,
    rel_tol: float = 1e-10,
    hard_cap: int = 10_000_000,
) -> DeltaStarResult:
    """Risk order for the fixed representer h at sample size n:

        max( a_star * sum_{j<=k_star} h_j^2 / upsilon_j ,
             sum_{j>k_star} h_j^2 / gamma_j ).

    The infinite tail is accumulated until the relative block increment falls
    below ``rel_tol`` or ``hard_cap`` terms are spent; the truncation
    diagnostic is returned alongside the value.
    """
    ks = compute_kstar(reg, n, m_max if m_max is not None else default_m_max(n))
    head_coeffs = np.asarray(coeff_block(h, 1, ks.k_star), dtype=np.float64)
    ups = reg.upsilon.weights(1, ks.k_star)
    head = ks.a_star * float(np.sum(head_coeffs**2 / ups))
    tail, diag = tail_energy_over_gamma(h, reg, ks.k_star + 1, rel_tol, hard_cap)
    return DeltaStarResult(max(head, tail), head, tail, ks.k_star, ks.a_star, diag)


class RegularityMissingOmega(ValueError):
    """An operation over the representer class was requested without omega."""


@dataclass(frozen=True)
class DeltaStarClassResult:
    value: float
    k_star: int
    a_star: float
    peak_index: int


def compute_delta_star_class(
    reg: ModelRegularity, n: int, m_max: Optional[int] = None
) -> DeltaStarClassResult:
    """Risk order for the worst representer of the omega-ellipsoid:

        max_{1<=j<=k_star} 1/(upsilon_j * omega_j) * a_star.
    """
    if reg.omega is None:
        raise RegularityMissingOmega(
            "omega is required to bound risk uniformly over a representer class"
        )
    ks = compute_kstar(reg, n, m_max if m_max is not None else default_m_max(n))
    ups = reg.upsilon.weights(1, ks.k_star)
    om = reg.omega.weights(1, ks.k_star)
    inv = 1.0 / (ups * om)
    peak_index = int(np.argmax(inv)) + 1
    return DeltaStarClassResult(float(inv[peak_index - 1]) * ks.a_star, ks.k_star, ks.a_star, peak_index)


class SideConditionError(ValueError):
    """A rate-case side condition is violated."""


@dataclass(frozen=True)
class RateOrder:
    """Asymptotic order c * n^n_power * [log n]^log_power (constants unspecified).

    ``loglog`` marks the boundary order n^-1 * log(log n).  ``text`` is the
    canonical human-readable form.
    """

    text: str
    n_power: float
    log_power: float = 0.0
    loglog: bool = False


@dataclass(frozen=True)
class CaseOrders:
    case_tag: str
    fixed_representer: RateOrder
    representer_class: RateOrder


def _frac(x: float) -> str:
    f = Fraction(x).limit_denominator(1_000)
    if abs(float(f) - x) > 1e-12:
        return f"{x:.6g}"
    if f.denominator == 1:
        return str(f.numerator)
    return f"{f.numerator}/{f.denominator}"


def _power_text(n_power: float, log_power: float = 0.0, loglog: bool = False) -> str:
    parts = []
    if n_power != 0.0:
        parts.append(f"n^{{-{_frac(-n_power)}}}" if n_power < 0 else f"n^{{{_frac(n_power)}}}")
    if loglog:
        parts.append("log(log(n))")
    elif log_power != 0.0:
        if log_power == 1.0:
            parts.append("log(n)")
        else:
            parts.append(f"[log(n)]^{{{_frac(log_power)}}}")
    return "·".join(parts) if parts else "1"


def _order(n_power: float, log_power: float = 0.0, loglog: bool = False) -> RateOrder:
    return RateOrder(_power_text(n_power, log_power, loglog), n_power, log_power, loglog)


def rate_exponent_catalog(case_tag: str, p: float, a: float, s: float) -> CaseOrders:
    """Symbolic risk orders for the four family combinations.

    The tag letters give the families of (slope weights, spectrum, representer
    decay): p for polynomial, e for exponential.  Orders only; the
    proportionality constants are not identified.
    """
    if case_tag == "ppp":
        if p < 0:
            raise SideConditionError(f"case (ppp) requires p >= 0, got p={p}")
        if not a > 0.5:
            raise SideConditionError(f"case (ppp) requires a > 1/2, got a={a}")
        if not s > 0.5 - p:
            raise SideConditionError(f"case (ppp) requires s > 1/2 - p, got s={s}, p={p}")
        if s - a < 0.5:
            fixed = _order(-(2 * p + 2 * s - 1) / (2 * p + 2 * a))
        elif s - a == 0.5:
            fixed = _order(-1.0, log_power=1.0)
        else:
            fixed = _order(-1.0)
        klass = _order(-1.0) if s >= a else _order(-(p + s) / (p + a))
        return CaseOrders(case_tag, fixed, klass)
    if case_tag == "pep":
        if p < 0:
            raise SideConditionError(f"case (pep) requires p >= 0, got p={p}")
        if not a > 0:
            raise SideConditionError(f"case (pep) requires a > 0, got a={a}")
        if not s > 0.5 - p:
            raise SideConditionError(f"case (pep) requires s > 1/2 - p, got s={s}, p={p}")
        fixed = _order(0.0, log_power=-(2 * p + 2 * s - 1) / (2 * a))
        klass = _order(0.0, log_power=-(p + s) / a)
        return CaseOrders(case_tag, fixed, klass)
    if case_tag == "epp":
        if not p > 0:
            raise SideConditionError(f"case (epp) requires p > 0, got p={p}")
        if not a > 0:
            raise SideConditionError(f"case (epp) requires a > 0, got a={a}")
        if s - a < 0.5:
            fixed = _order(-1.0, log_power=(2 * a - 2 * s + 1) / (2 * p))
        elif s - a == 0.5:
            fixed = _order(-1.0, loglog=True)
        else:
            fixed = _order(-1.0)
        klass = _order(-1.0) if s >= a else _order(-1.0, log_power=(a - s) / p)
        return CaseOrders(case_tag, fixed, klass)
    if case_tag == "ppe":
        if p < 0:
            raise SideConditionError(f"case (ppe) requires p >= 0, got p={p}")
        if not a > 0.5:
            raise SideConditionError(f"case (ppe) requires a > 1/2, got a={a}")
        if not s > 0:
            raise SideConditionError(f"case (ppe) requires s > 0, got s={s}")
        return CaseOrders(case_tag, _order(-1.0), _order(-1.0))
    raise SideConditionError(f"unknown case tag {case_tag!r}; expected ppp, pep, epp or ppe")


def case_tag_for(reg: ModelRegularity, h: Representer) -> tuple[str, float, float, float]:
    """Map (gamma, upsilon, h-decay) families onto a catalog case and its (p, a, s)."""
    decay = squared_decay_profile(h)
    if decay is None:
        raise SideConditionError(
            "representer has no analytic decay profile; cannot classify the rate case"
        )
    h_family, s = decay
    g_poly = reg.gamma.family == "polynomial"
    u_poly = reg.upsilon.family == "polynomial"
    h_poly = h_family == "polynomial"
    tag = ("p" if g_poly else "e") + ("p" if u_poly else "e") + ("p" if h_poly else "e")
    if tag not in ("ppp", "pep", "epp", "ppe"):
        raise SideConditionError(f"family combination {tag!r} is outside the rate catalog")
    p = reg.gamma.exponent
    a = reg.upsilon.exponent
    return tag, p, a, s


@dataclass(frozen=True)
class RatesProfile:
    """All rate quantities for one (model, representer, n) triple."""

    n: int
    k_star: int
    a_star: float
    kappa: float
    delta_star: float
    delta_star_class: Optional[float]
    case_tag: str
    exponent_descriptor: str
    tail_diag: TailDiagnostic
    kappa_grid_n_max: int


def rates_profile(
    reg: ModelRegularity,
    h: Representer,
    n: int,
    kappa_result: Optional[KappaResult] = None,
    m_max: Optional[int] = None,
    include_class: bool = True,
) -> RatesProfile:
    if kappa_result is None:
        kappa_result = compute_kappa(reg)
    ds = compute_delta_star(h, reg, n, m_max=m_max)
    klass = None
    if include_class:
        klass = compute_delta_star_class(reg, n, m_max=m_max).value
    tag, p, a, s = case_tag_for(reg, h)
    orders = rate_exponent_catalog(tag, p, a, s)
    return RatesProfile(
        n=n,
        k_star=ds.k_star,
        a_star=ds.a_star,
        kappa=kappa_result.value,
        delta_star=ds.value,
        delta_star_class=klass,
        case_tag=tag,
        exponent_descriptor=orders.fixed_representer.text,
        tail_diag=ds.tail_diag,
        kappa_grid_n_max=kappa_result.n_max,
    )
