"""Projection estimators of the intensity and their exact risk functionals."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike
from scipy.linalg import toeplitz

from pppconc.basis import (
    CoeffVector,
    GammaFamily,
    GammaSequence,
    complex_coeffs,
    gamma_value,
    synthesize,
    trig_sums,
    true_coeffs,
)
from pppconc.pointprocess import IntensityModel, SampleSet
from shared.errors import DomainError

logger = logging.getLogger("pppconc.estimator")


@dataclass(frozen=True)
class EmpiricalCoeffs:
    """beta_hat_j = (1/n) sum_i sum_{x in pattern i} phi_j(x)."""

    coeffs: CoeffVector
    n: int

    @property
    def beta0(self) -> float:
        return self.coeffs[0]


@dataclass(frozen=True)
class ProjectionEstimate:
    """lambda_hat_k = sum_{|j|<=k} beta_hat_j phi_j."""

    k: int
    coeffs: CoeffVector
    n: int

    def __post_init__(self) -> None:
        if self.coeffs.J != self.k:
            raise DomainError(f"estimate of dimension {self.k} holds J={self.coeffs.J}")

    def as_emp(self) -> EmpiricalCoeffs:
        return EmpiricalCoeffs(self.coeffs, self.n)

    def __call__(self, t: ArrayLike) -> object:
        return synthesize(self.coeffs, t)


@dataclass(frozen=True)
class OracleResult:
    k_star: int
    psi_n: float
    at_cap: bool = False


@dataclass(frozen=True)
class RateTarget:
    """Theoretical log-log slope of the minimax rate and its display form."""

    exponent: float
    label: str


def empirical_coeffs(samples: SampleSet, J: int) -> EmpiricalCoeffs:
    """Unbiased coefficient estimates from pooled points."""
    if J < 0:
        raise DomainError(f"J must be nonnegative, got {J}")
    sums = trig_sums(samples.points, J)
    return EmpiricalCoeffs(CoeffVector(sums / samples.n), samples.n)


def project(emp: EmpiricalCoeffs, k: int) -> ProjectionEstimate:
    """Truncate to |j| <= k."""
    if k < 0 or k > emp.coeffs.J:
        raise DomainError(f"dimension {k} exceeds available J={emp.coeffs.J}")
    return ProjectionEstimate(k, emp.coeffs.truncate(k), emp.n)


def eval_positive_part(est: ProjectionEstimate, t: ArrayLike) -> object:
    """max(lambda_hat_k(t), 0)."""
    values = synthesize(est.coeffs, t)
    if isinstance(values, float):
        return max(values, 0.0)
    return np.maximum(values, 0.0)


def default_k_cap(n: int) -> int:
    """4 ceil(sqrt n) + 64."""
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    return 4 * (math.isqrt(n - 1) + 1) + 64


def oracle_dimension(gamma: GammaSequence, n: int, k_cap: int) -> OracleResult:
    """
    k* = argmin_k max{gamma_k^-2, (2k+1)/n} by exhaustive search over 0..k_cap.

    The first minimizer wins ties. The search stops once (2k+1)/n alone
    exceeds the best objective, since that term only grows.
    """
    if k_cap < 1:
        raise DomainError(f"k_cap must be >= 1, got {k_cap}")
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")

    best_k, best = 0, math.inf
    bracketed = False
    for k in range(k_cap + 1):
        variance = (2 * k + 1) / n
        if variance > best:
            bracketed = True
            break
        g = float(gamma_value(gamma, k))
        objective = max(1.0 / (g * g), variance)
        if objective < best:
            best_k, best = k, objective

    at_cap = not bracketed and best_k == k_cap
    if at_cap:
        logger.warning(f"Oracle minimizer sits at k_cap={k_cap} for n={n}; widen the search")
    return OracleResult(k_star=best_k, psi_n=best, at_cap=at_cap)


def rate_target(gamma: GammaSequence) -> RateTarget:
    """Log-log slope of Psi_n in n for each weight family."""
    if gamma.family is GammaFamily.POLYNOMIAL:
        assert gamma.p is not None
        return RateTarget(-2.0 * gamma.p / (2.0 * gamma.p + 1.0), "n^{-2p/(2p+1)}")
    if gamma.family is GammaFamily.ANALYTIC:
        return RateTarget(-1.0, "log n / n")
    return RateTarget(-1.0, "(log n)^{1/p} / n")


def mise_exact(est: ProjectionEstimate, truth: CoeffVector, tail_sq: float) -> float:
    """||lambda_hat_k - lambda||^2 in coefficient space (Parseval)."""
    if truth.J < est.k:
        raise DomainError(f"truth J={truth.J} shorter than estimate k={est.k}")
    if tail_sq < 0:
        raise DomainError(f"tail_sq must be nonnegative, got {tail_sq}")
    lo, hi = truth.J - est.k, truth.J + est.k + 1
    variance = float(np.sum((est.coeffs.values - truth.values[lo:hi]) ** 2))
    bias = float(np.sum(truth.values[:lo] ** 2) + np.sum(truth.values[hi:] ** 2))
    return variance + bias + tail_sq


def sup_ball_stat(emp: EmpiricalCoeffs, truth: CoeffVector, k: int) -> float:
    """sup over the unit ball of S_k of <lambda_hat_n - lambda_n, t>^2."""
    if k < 0 or k > min(emp.coeffs.J, truth.J):
        raise DomainError(f"k={k} outside the available coefficient range")
    diff = emp.coeffs.truncate(k).values - truth.truncate(k).values
    return float(np.dot(diff, diff))


def ball_variance(truth: CoeffVector, k: int) -> float:
    """
    sup over unit t in S_k of int t^2 dLambda.

    Equals the largest eigenvalue of the Hermitian Toeplitz matrix built from
    the exponential coefficients <lambda>_d, d = 0..2k, and is bounded by
    sqrt(2k+1) ||lambda||.
    """
    if truth.J < 2 * k:
        raise DomainError(f"ball variance at k={k} needs truth coefficients up to {2 * k}")
    exp_coeffs = complex_coeffs(truth.truncate(2 * k))
    column = exp_coeffs[2 * k :]
    matrix = toeplitz(column)
    return float(np.linalg.eigvalsh(matrix)[-1])


def campbell_variances(model: IntensityModel, J: int) -> CoeffVector:
    """int phi_j^2 dLambda for |j| <= J, i.e. n Var(beta_hat_j).

    phi_j^2 = 1 + phi_{2j}/sqrt2 and phi_{-j}^2 = 1 - phi_{2j}/sqrt2.
    """
    beta = true_coeffs(model, 2 * J)
    out = np.empty(2 * J + 1)
    out[J] = beta[0]
    for j in range(1, J + 1):
        shift = beta[2 * j] / math.sqrt(2.0)
        out[J + j] = beta[0] + shift
        out[J - j] = beta[0] - shift
    return CoeffVector(out)
