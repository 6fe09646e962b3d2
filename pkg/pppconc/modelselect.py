"""Penalized-contrast selection of the projection dimension.

The contrast of lambda_hat_k is -sum_{|j|<=k} beta_hat_j^2 and the penalty is
24 (beta0 v 1)(2k+1)/n, where beta0 is the empirical mass by default (the
penalty is then random and computable) or the true mass when running the
oracle calibration.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from numpy.typing import NDArray

from pppconc.estimator import EmpiricalCoeffs, ProjectionEstimate, empirical_coeffs, project
from pppconc.pointprocess import SampleSet
from shared.errors import DomainError, InvariantViolation

logger = logging.getLogger("pppconc.modelselect")

PENALTY_CONSTANT = 24.0


class PenaltyScale(str, Enum):
    """Which mass scales the penalty."""

    EMPIRICAL = "empirical"
    ORACLE = "oracle"


@dataclass(frozen=True)
class SelectionTrace:
    """Criterion values for k = 0..k_max and the selected dimension."""

    k_hat: int
    contrast: NDArray[np.float64]
    penalty: NDArray[np.float64]
    pen_scale: float
    n: int

    @property
    def k_max(self) -> int:
        return int(self.contrast.size - 1)

    @property
    def criterion(self) -> NDArray[np.float64]:
        return self.contrast + self.penalty

    @property
    def at_range_edge(self) -> bool:
        """True when the minimizer is the last admissible k."""
        return self.k_hat == self.k_max

    def rows(self) -> list[tuple[int, float, float, float]]:
        crit = self.criterion
        return [
            (k, float(self.contrast[k]), float(self.penalty[k]), float(crit[k]))
            for k in range(self.k_max + 1)
        ]

    def verify(self) -> None:
        """Brute-force re-check of the argmin and the criterion structure."""
        crit = self.criterion
        for k in range(self.k_max + 1):
            if crit[k] < crit[self.k_hat] or (crit[k] == crit[self.k_hat] and k < self.k_hat):
                raise InvariantViolation(
                    "selection argmin", f"k={k} beats k_hat={self.k_hat}"
                )
        if np.any(np.diff(self.contrast) > 0):
            raise InvariantViolation("contrast nonincreasing in k")
        if np.any(np.diff(self.penalty) <= 0):
            raise InvariantViolation("penalty strictly increasing in k")


def contrast_at(emp: EmpiricalCoeffs, k: int) -> float:
    """Upsilon_n(lambda_hat_k) = -sum_{|j|<=k} beta_hat_j^2."""
    if k < 0 or k > emp.coeffs.J:
        raise DomainError(f"k={k} outside 0..{emp.coeffs.J}")
    kept = emp.coeffs.truncate(k).values
    return -float(np.dot(kept, kept))


def penalty_scale(emp: EmpiricalCoeffs, beta0: float | None = None) -> float:
    """beta0 v 1, using the empirical mass unless a true mass is supplied."""
    mass = emp.beta0 if beta0 is None else beta0
    return max(mass, 1.0)


def penalty_at(emp: EmpiricalCoeffs, k: int, beta0: float | None = None) -> float:
    """24 (beta0 v 1)(2k+1)/n."""
    if k < 0:
        raise DomainError(f"k must be nonnegative, got {k}")
    return PENALTY_CONSTANT * penalty_scale(emp, beta0) * (2 * k + 1) / emp.n


def select_dimension(
    emp: EmpiricalCoeffs,
    k_max: int,
    scale: PenaltyScale = PenaltyScale.EMPIRICAL,
    beta0_true: float | None = None,
) -> SelectionTrace:
    """Minimize contrast + penalty over k = 0..k_max; smallest k on ties."""
    if k_max < 0 or k_max > emp.coeffs.J:
        raise DomainError(f"k_max={k_max} outside 0..{emp.coeffs.J}")
    if scale is PenaltyScale.ORACLE and beta0_true is None:
        raise DomainError("oracle penalty scale needs the true beta0")
    beta0 = beta0_true if scale is PenaltyScale.ORACLE else None

    J = emp.coeffs.J
    values = emp.coeffs.values
    # squared coefficients paired by |j|: c(k) = -(b_0^2 + sum_{1<=j<=k} b_j^2 + b_-j^2)
    shells = np.empty(k_max + 1)
    shells[0] = values[J] ** 2
    if k_max:
        shells[1:] = values[J + 1 : J + k_max + 1] ** 2 + values[J - k_max : J][::-1] ** 2
    contrast = -np.cumsum(shells)
    pen_scale = penalty_scale(emp, beta0)
    ks = np.arange(k_max + 1)
    penalty = PENALTY_CONSTANT * pen_scale * (2 * ks + 1) / emp.n

    k_hat = int(np.argmin(contrast + penalty))
    trace = SelectionTrace(k_hat, contrast, penalty, pen_scale, emp.n)
    if trace.at_range_edge and k_max > 0:
        logger.warning(f"Selected k_hat={k_hat} equals k_max; the search range may be too small")
    return trace


def adaptive_estimate(
    samples: SampleSet,
    k_max: int,
    scale: PenaltyScale = PenaltyScale.EMPIRICAL,
    beta0_true: float | None = None,
) -> tuple[ProjectionEstimate, SelectionTrace]:
    """empirical_coeffs -> select_dimension -> project at k_hat."""
    if k_max > samples.n:
        raise DomainError(f"k_max={k_max} exceeds the sample size n={samples.n}")
    emp = empirical_coeffs(samples, k_max)
    trace = select_dimension(emp, k_max, scale, beta0_true)
    return project(emp, trace.k_hat), trace


def xi_indicator(emp: EmpiricalCoeffs, beta0_true: float) -> bool:
    """(beta0 v 1)/2 <= beta_hat_0 v 1 <= 2 (beta0 v 1)."""
    truth = max(beta0_true, 1.0)
    observed = max(emp.beta0, 1.0)
    return truth / 2.0 <= observed <= 2.0 * truth


def chernoff_omegas(eta: float) -> tuple[float, float]:
    """omega1 = 1 - eta + eta log eta and omega2 = 1 - 1/eta - (log eta)/eta."""
    if not 0.0 < eta < 1.0:
        raise DomainError(f"eta must lie in (0,1), got {eta}")
    log_eta = math.log(eta)
    return 1.0 - eta + eta * log_eta, 1.0 - 1.0 / eta - log_eta / eta


def xi_failure_bound(n: int, eta: float = 0.5) -> float:
    """exp(-2 omega1(eta) n) + exp(-omega2(eta) n)."""
    omega1, omega2 = chernoff_omegas(eta)
    return math.exp(-2.0 * omega1 * n) + math.exp(-omega2 * n)
