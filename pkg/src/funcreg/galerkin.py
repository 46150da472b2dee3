"""Population-level projection solution of the normal equations and the
certificate bounding the functional bias it induces."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
import scipy.linalg

from .basis import CoeffVector, linear_functional
from .weights import ModelRegularity


class NotSPDError(ValueError):
    """The matrix handed to the solver is not symmetric positive definite."""


def solve_spd(mat: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve mat @ x = rhs for symmetric positive definite mat.

    Diagonal matrices are solved by exact elementwise division (this keeps the
    diagonal-model oracles bitwise reproducible); everything else goes through
    a Cholesky factorization, never an explicit inverse.
    """
    mat = np.asarray(mat, dtype=np.float64)
    rhs = np.asarray(rhs, dtype=np.float64)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1] or mat.shape[0] != rhs.shape[0]:
        raise ValueError(f"shape mismatch: mat {mat.shape}, rhs {rhs.shape}")
    if not np.allclose(mat, mat.T, rtol=0.0, atol=1e-12 * max(1.0, float(np.abs(mat).max()))):
        raise NotSPDError("matrix is not symmetric")
    off_diag = mat - np.diag(np.diagonal(mat))
    if not off_diag.any():
        diag = np.diagonal(mat)
        if np.any(diag <= 0):
            raise NotSPDError("diagonal matrix has a non-positive entry")
        return rhs / diag
    if mat.shape[0] == 1:
        if mat[0, 0] <= 0:
            raise NotSPDError("1x1 matrix is not positive")
        return rhs / mat[0, 0]
    try:
        factor = scipy.linalg.cho_factor(mat, lower=True, check_finite=False)
    except scipy.linalg.LinAlgError as err:
        raise NotSPDError(f"Cholesky factorization failed: {err}") from err
    return scipy.linalg.cho_solve(factor, rhs, check_finite=False)


@dataclass(frozen=True)
class GalerkinSolution:
    """Solution of the m-dimensional section of the normal equations."""

    m: int
    coeffs: np.ndarray
    residual_norm: float

    def as_coeff_vector(self) -> CoeffVector:
        return CoeffVector(self.coeffs)


def galerkin_solve(
    t_matrix: np.ndarray, g: Union[CoeffVector, np.ndarray], m: int
) -> GalerkinSolution:
    """Solve the m x m section [T]_m x = [g]_m.

    For diagonal T this collapses to coordinatewise division, so the solution
    equals the plain truncation of the underlying slope.  The reported
    residual is over the m-dimensional section and sits at machine scale.
    """
    t_matrix = np.asarray(t_matrix, dtype=np.float64)
    g_vec = g.coeffs if isinstance(g, CoeffVector) else np.asarray(g, dtype=np.float64)
    if m < 1 or m > t_matrix.shape[0] or m > g_vec.size:
        raise ValueError(f"dimension m={m} outside the available truncation")
    t_m = t_matrix[:m, :m]
    g_m = g_vec[:m]
    x = solve_spd(t_m, g_m)
    residual = float(np.linalg.norm(t_m @ x - g_m))
    return GalerkinSolution(m, x, residual)


@dataclass(frozen=True)
class BiasBound:
    """Squared functional bias and its certificate; lhs <= rhs must hold."""

    lhs: float
    rhs: float
    tail_term: float
    head_term: float

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs * (1.0 + 1e-12) + 1e-300


def bias_report(
    h: CoeffVector,
    beta: CoeffVector,
    beta_m: GalerkinSolution,
    reg: ModelRegularity,
    m: int,
    d: Optional[float] = None,
) -> BiasBound:
    """Certificate for the bias the m-dimensional projection puts on <h, beta>:

        |<h, beta - beta_m>|^2  <=  2 ||beta||_gamma^2 *
            ( sum_{j>m} h_j^2/gamma_j
              + 2 (1 + d^4) (upsilon_m/gamma_m) sum_{j<=m} h_j^2/upsilon_j ).

    d defaults to the model's link constant.  Sums run over the stored
    truncation of h.
    """
    if d is None:
        d = reg.link_constant
    if m != beta_m.m:
        raise ValueError(f"m={m} disagrees with the solution dimension {beta_m.m}")
    big_m = max(len(h), len(beta), m)
    h_full = h.padded(big_m)
    diff = beta.padded(big_m)
    diff[:m] -= beta_m.coeffs
    lhs = float(np.dot(h_full, diff)) ** 2

    gamma_w = reg.gamma.weights(1, big_m)
    ups_w = reg.upsilon.weights(1, m)
    beta_full = beta.padded(big_m)
    norm_gamma_sq = float(np.sum(gamma_w * beta_full**2))
    tail_term = float(np.sum(h_full[m:] ** 2 / gamma_w[m:]))
    head_term = (
        2.0
        * (1.0 + d**4)
        * reg.balance_ratio(m)
        * float(np.sum(h_full[:m] ** 2 / ups_w))
    )
    rhs = 2.0 * norm_gamma_sq * (tail_term + head_term)
    return BiasBound(lhs, rhs, tail_term, head_term)


def projection_bias_sq(
    h: CoeffVector, beta: CoeffVector, t_matrix: np.ndarray, m: int
) -> float:
    """|<h, beta - beta_m>|^2 with beta_m solved from the supplied operator
    section and g = T beta computed on the stored truncation."""
    big_m = t_matrix.shape[0]
    g = t_matrix @ beta.padded(big_m)
    sol = galerkin_solve(t_matrix, g, m)
    value = linear_functional(h, beta) - float(np.dot(h.padded(m), sol.coeffs))
    return value**2
