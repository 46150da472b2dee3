"""Gaussian regressors with a prescribed covariance spectrum and samples from
the scalar-response linear model Y = <beta, X> + sigma * eps."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.special import zeta as hurwitz_zeta

from .basis import CoeffVector
from .weights import WeightSpec


def derive_rng(master_seed: int, *path: int) -> np.random.Generator:
    """Counter-based generator for the stream addressed by (master_seed, *path).

    Streams are independent of creation order and of how work is scheduled
    across workers, so parallel replications reproduce bit-identically.
    """
    seq = np.random.SeedSequence(master_seed, spawn_key=tuple(int(p) for p in path))
    return np.random.Generator(np.random.Philox(seq))


class CovarianceError(ValueError):
    """Invalid covariance model configuration."""


@dataclass(frozen=True)
class CovarianceModel:
    """Covariance operator truncated to the first m_sim basis coefficients.

    Without rotation the operator is diagonal with eigenvalues given by the
    spectrum sequence.  Rotation angles mix consecutive cosine/sine coefficient
    pairs (basis indices (2k, 2k+1)) through Givens rotations, producing a
    non-diagonal matrix with the same eigenvalues; the constant of the
    spectrum sandwich is then computed rather than exactly 1.
    """

    spectrum: WeightSpec
    m_sim: int
    rotation_angles: tuple[float, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        if self.m_sim < 1:
            raise CovarianceError(f"m_sim must be >= 1, got {self.m_sim}")
        if self.spectrum.direction != "decreasing":
            raise CovarianceError("spectrum must be a decreasing weight sequence")
        if not self.spectrum.is_summable():
            raise CovarianceError(
                "spectrum must be summable (nuclear operator): polynomial decay needs exponent > 1/2"
            )
        n_pairs = (self.m_sim - 1) // 2
        if len(self.rotation_angles) > n_pairs:
            raise CovarianceError(
                f"{len(self.rotation_angles)} rotation angles but only {n_pairs} "
                f"coefficient pairs fit below m_sim={self.m_sim}"
            )

    def eigenvalues(self) -> np.ndarray:
        return self.spectrum.weights(1, self.m_sim)

    def _pairs(self):
        # basis pair (2k, 2k+1) sits at zero-based columns (2k-1, 2k)
        for k, theta in enumerate(self.rotation_angles, start=1):
            yield 2 * k - 1, 2 * k, theta

    def rotate(self, x: np.ndarray) -> np.ndarray:
        """Apply the pair rotations to rows of x (n, m_sim); returns x itself."""
        for i, j, theta in self._pairs():
            c, s = math.cos(theta), math.sin(theta)
            xi = x[..., i].copy()
            xj = x[..., j]
            x[..., i] = c * xi - s * xj
            x[..., j] = s * xi + c * xj
        return x

    def matrix(self) -> np.ndarray:
        """Dense covariance matrix on the first m_sim coordinates."""
        t = np.diag(self.eigenvalues())
        for i, j, theta in self._pairs():
            c, s = math.cos(theta), math.sin(theta)
            g = np.eye(self.m_sim)
            g[i, i] = c
            g[j, j] = c
            g[i, j] = -s
            g[j, i] = s
            t = g @ t @ g.T
        return (t + t.T) / 2.0

    def link_constant(self) -> float:
        """Smallest d >= 1 with ||f||_{spec^2}/d^2 <= ||Tf||^2 <= d^2 ||f||_{spec^2}
        on the truncation; exactly 1 in the diagonal case."""
        if not self.rotation_angles:
            return 1.0
        t = self.matrix()
        a = t / self.eigenvalues()[:, None]  # D^-1 T; spectrum of A A^T = spectrum of D^-1 T^2 D^-1
        s = a @ a.T
        s = (s + s.T) / 2.0
        eig = np.linalg.eigvalsh(s)
        d_sq = max(float(eig[-1]), 1.0 / float(eig[0]))
        return max(math.sqrt(d_sq), 1.0)

    def spectrum_tail(self) -> float:
        """sum_{j > m_sim} of the spectrum: the trace mass lost to truncation."""
        spec = self.spectrum
        if spec.family == "polynomial":
            return spec.scale * float(hurwitz_zeta(2.0 * spec.exponent, self.m_sim + 1))
        total = 0.0
        j = self.m_sim + 1
        while True:
            block = spec.weights(j, j + 4095)
            inc = float(block.sum())
            total += inc
            if inc <= 1e-16 * max(total, 1e-300):
                return total
            j += 4096

    def identifier(self) -> str:
        rot = ",".join(f"{a:g}" for a in self.rotation_angles)
        return (
            f"{self.spectrum.family[:4]}(r={self.spectrum.exponent:g},"
            f"scale={self.spectrum.scale:g})xM{self.m_sim}"
            + (f"+rot[{rot}]" if rot else "")
        )


@dataclass(frozen=True)
class DatasetMeta:
    seed_path: tuple[int, ...]
    sigma: float
    beta_id: str
    covariance_id: str


@dataclass(eq=False)
class Dataset:
    """n paired observations: responses y and regressor coefficient rows x."""

    y: np.ndarray
    x: np.ndarray
    meta: DatasetMeta

    def __post_init__(self) -> None:
        # contiguous layout keeps moment computations bitwise reproducible
        # whether the data arrived from sampling or from a file slice
        self.y = np.ascontiguousarray(self.y, dtype=np.float64)
        self.x = np.ascontiguousarray(self.x, dtype=np.float64)
        if self.x.ndim != 2 or self.y.ndim != 1 or self.y.size != self.x.shape[0]:
            raise ValueError(
                f"inconsistent dataset shapes: y {self.y.shape}, x {self.x.shape}"
            )
        if not np.all(np.isfinite(self.y)):
            raise ValueError("responses must be finite")

    @property
    def n(self) -> int:
        return int(self.y.size)

    @property
    def m_sim(self) -> int:
        return int(self.x.shape[1])


def sample_regressor(model: CovarianceModel, rng: np.random.Generator) -> CoeffVector:
    """One mean-zero Gaussian regressor: coefficient j has variance lambda_j
    (diagonal case), mixed by the pair rotations when present."""
    x = rng.standard_normal(model.m_sim) * np.sqrt(model.eigenvalues())
    model.rotate(x)
    return CoeffVector(x)


def sample_dataset(
    beta: CoeffVector,
    sigma: float,
    model: CovarianceModel,
    n: int,
    rng: np.random.Generator,
    seed_path: tuple[int, ...] = (),
    beta_id: str = "custom",
) -> Dataset:
    """n independent draws of (Y, X) with Y_i = <beta, X_i> + sigma * eps_i.

    The noise is standard normal and independent of the regressor.  beta must
    not extend past the simulation truncation.
    """
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    if len(beta) > model.m_sim:
        raise ValueError(
            f"beta truncation {len(beta)} exceeds simulation truncation {model.m_sim}"
        )
    x = rng.standard_normal((n, model.m_sim)) * np.sqrt(model.eigenvalues())[None, :]
    model.rotate(x)
    eps = rng.standard_normal(n)
    y = x[:, : len(beta)] @ beta.coeffs + sigma * eps
    meta = DatasetMeta(seed_path, sigma, beta_id, model.identifier())
    return Dataset(y, x, meta)
