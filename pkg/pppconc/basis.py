"""Trigonometric basis of L2[0,1], Fourier analysis/synthesis and smoothness classes.

Basis convention: phi_0 = 1, phi_j = sqrt(2) cos(2 pi j t) and
phi_{-j} = sqrt(2) sin(2 pi j t) for j > 0. Coefficient vectors store the
symmetric block j = -J..J contiguously with offset J, so a projection onto
dimension k is the centre slice ``values[J-k : J+k+1]``.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Mapping
from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING, Any, Literal

import numpy as np
from numpy.typing import ArrayLike, NDArray
from pydantic import BaseModel, ConfigDict, Field, model_validator

from pppconc.quadrature import integrate_values, panel_count, simpson_grid
from shared.config import get_settings
from shared.errors import DomainError

if TYPE_CHECKING:
    from pppconc.pointprocess import IntensityModel

logger = logging.getLogger("pppconc.basis")

SQRT2 = math.sqrt(2.0)
FloatArray = NDArray[np.float64]

# Upper bound on design-matrix cells materialised at once
_DESIGN_CELLS = 2**21


@dataclass(frozen=True, eq=False)
class CoeffVector:
    """Coefficients c_j for j = -J..J in the basis {phi_j}."""

    values: FloatArray

    def __post_init__(self) -> None:
        arr = np.array(self.values, dtype=np.float64).ravel()
        if arr.size % 2 != 1:
            raise DomainError(f"coefficient vector needs odd length 2J+1, got {arr.size}")
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    @property
    def J(self) -> int:
        return (self.values.size - 1) // 2

    @property
    def indices(self) -> NDArray[np.int64]:
        return np.arange(-self.J, self.J + 1)

    def __getitem__(self, j: int) -> float:
        if abs(j) > self.J:
            raise DomainError(f"index {j} outside -{self.J}..{self.J}")
        return float(self.values[self.J + j])

    def coeff(self, j: int) -> float:
        """Coefficient at ``j``; zero beyond the stored range."""
        return float(self.values[self.J + j]) if abs(j) <= self.J else 0.0

    def truncate(self, k: int) -> CoeffVector:
        """Keep indices |j| <= k."""
        if k < 0 or k > self.J:
            raise DomainError(f"cannot truncate J={self.J} vector to k={k}")
        return CoeffVector(self.values[self.J - k : self.J + k + 1])

    def pad(self, J: int) -> CoeffVector:
        """Zero-extend to a larger index range."""
        if J < self.J:
            raise DomainError(f"cannot pad J={self.J} vector down to {J}")
        out = np.zeros(2 * J + 1)
        out[J - self.J : J + self.J + 1] = self.values
        return CoeffVector(out)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CoeffVector):
            return NotImplemented
        return bool(np.array_equal(self.values, other.values))

    def __hash__(self) -> int:
        return hash(self.values.tobytes())

    @classmethod
    def zeros(cls, J: int) -> CoeffVector:
        return cls(np.zeros(2 * J + 1))

    @classmethod
    def from_terms(cls, terms: Mapping[int, float], J: int | None = None) -> CoeffVector:
        """Build from a sparse {j: c_j} mapping."""
        top = max((abs(j) for j in terms), default=0)
        J = top if J is None else J
        if top > J:
            raise DomainError(f"term index {top} exceeds J={J}")
        out = np.zeros(2 * J + 1)
        for j, c in terms.items():
            out[J + j] = c
        return cls(out)

    def to_dict(self) -> dict[str, Any]:
        return {"J": self.J, "values": [float(v) for v in self.values]}

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> CoeffVector:
        vec = cls(np.asarray(doc["values"], dtype=np.float64))
        if vec.J != int(doc["J"]):
            raise DomainError(f"declared J={doc['J']} does not match {vec.values.size} values")
        return vec


def phi(j: int, t: ArrayLike) -> Any:
    """Basis function phi_j evaluated at ``t`` (scalar or array)."""
    x = np.asarray(t, dtype=np.float64)
    if j == 0:
        out = np.ones_like(x)
    elif j > 0:
        out = SQRT2 * np.cos(2.0 * np.pi * j * x)
    else:
        out = SQRT2 * np.sin(2.0 * np.pi * (-j) * x)
    return float(out) if out.ndim == 0 else out


def _rows_per_chunk(J: int) -> int:
    return max(1, _DESIGN_CELLS // (2 * J + 1))


def trig_design(points: ArrayLike, J: int) -> FloatArray:
    """Matrix of phi_j(x) with rows over points and columns j = -J..J."""
    if J < 0:
        raise DomainError(f"J must be nonnegative, got {J}")
    x = np.asarray(points, dtype=np.float64).ravel()
    out = np.empty((x.size, 2 * J + 1))
    out[:, J] = 1.0
    if J == 0:
        return out
    waves = np.exp(2j * np.pi * np.outer(x, np.arange(1, J + 1)))
    out[:, J + 1 :] = SQRT2 * waves.real
    out[:, :J] = SQRT2 * waves.imag[:, ::-1]
    return out


def trig_sums(points: ArrayLike, J: int) -> FloatArray:
    """Sum over points of phi_j(x) for j = -J..J, evaluated in chunks."""
    x = np.asarray(points, dtype=np.float64).ravel()
    total = np.zeros(2 * J + 1)
    step = _rows_per_chunk(J)
    for start in range(0, x.size, step):
        total += trig_design(x[start : start + step], J).sum(axis=0)
    return total


def synthesize(coeffs: CoeffVector, t: ArrayLike) -> Any:
    """Evaluate sum_{|j|<=J} c_j phi_j(t)."""
    x = np.asarray(t, dtype=np.float64)
    flat = x.ravel()
    out = np.empty(flat.size)
    step = _rows_per_chunk(coeffs.J)
    for start in range(0, flat.size, step):
        out[start : start + step] = trig_design(flat[start : start + step], coeffs.J) @ (
            coeffs.values
        )
    return float(out[0]) if x.ndim == 0 else out.reshape(x.shape)


def synthesize_grid(coeffs: CoeffVector, m: int) -> FloatArray:
    """Evaluate the series at t = i/m for i = 0..m with an inverse real FFT."""
    J = coeffs.J
    stride = max(1, math.ceil((2 * J + 2) / m))
    size = m * stride
    spectrum = np.zeros(size // 2 + 1, dtype=np.complex128)
    spectrum[0] = size * coeffs.values[J]
    if J > 0:
        cos_part = coeffs.values[J + 1 :]
        sin_part = coeffs.values[J - 1 :: -1]
        spectrum[1 : J + 1] = size * (cos_part - 1j * sin_part) / SQRT2
    wave = np.fft.irfft(spectrum, n=size)[::stride]
    # periodic: value at t = 1 equals value at t = 0
    return np.append(wave, wave[0])


def l2_norm_sq(coeffs: CoeffVector) -> float:
    """Parseval: squared L2 norm of the synthesized function."""
    return float(np.dot(coeffs.values, coeffs.values))


def complex_coeffs(coeffs: CoeffVector) -> NDArray[np.complex128]:
    """Exponential-basis coefficients <f, e_m> for m = -J..J."""
    J = coeffs.J
    out = np.empty(2 * J + 1, dtype=np.complex128)
    out[J] = coeffs.values[J]
    if J > 0:
        positive = (coeffs.values[J + 1 :] - 1j * coeffs.values[J - 1 :: -1]) / SQRT2
        out[J + 1 :] = positive
        out[:J] = np.conj(positive)[::-1]
    return out


def true_coeffs(
    model: IntensityModel,
    J: int,
    method: Literal["auto", "quadrature"] = "auto",
) -> CoeffVector:
    """
    Fourier coefficients beta_j = int lambda phi_j for |j| <= J.

    Fourier-defined models return their exact coefficients. Otherwise (or
    with ``method="quadrature"``) the integrals use composite Simpson with
    max(default, 64 J) panels.
    """
    if J < 0:
        raise DomainError(f"J must be nonnegative, got {J}")
    if method == "auto":
        exact = model.fourier_coeffs(J)
        if exact is not None:
            return exact

    panels = panel_count(minimum=64 * J)
    t = simpson_grid(panels)
    lam = model.values_on_grid(panels)
    out = np.empty(2 * J + 1)
    out[J] = float(integrate_values(lam))
    block = 32
    for lo in range(1, J + 1, block):
        freqs = np.arange(lo, min(lo + block, J + 1))
        angle = 2.0 * np.pi * np.outer(freqs, t)
        out[J + freqs] = integrate_values(SQRT2 * np.cos(angle) * lam)
        out[J - freqs] = integrate_values(SQRT2 * np.sin(angle) * lam)
    logger.debug(f"Quadrature coefficients for {model.model_id} up to J={J} ({panels} panels)")
    return CoeffVector(out)


class GammaFamily(str, Enum):
    """Weight sequence families."""

    POLYNOMIAL = "polynomial"
    ANALYTIC = "analytic"
    GENERALIZED = "generalized"


class GammaSequence(BaseModel):
    """Symmetric weights gamma_j with gamma_0 = 1, nondecreasing in |j|.

    polynomial: |j|^p; analytic: exp(rho |j|); generalized: exp(2 rho |j|^p).
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    family: GammaFamily
    p: float | None = Field(default=None, gt=0, description="Polynomial exponent")
    rho: float | None = Field(default=None, gt=0, description="Exponential rate")

    @model_validator(mode="after")
    def _check_params(self) -> GammaSequence:
        needs_p = self.family in (GammaFamily.POLYNOMIAL, GammaFamily.GENERALIZED)
        needs_rho = self.family in (GammaFamily.ANALYTIC, GammaFamily.GENERALIZED)
        if needs_p and self.p is None:
            raise ValueError(f"{self.family.value} weights need p")
        if needs_rho and self.rho is None:
            raise ValueError(f"{self.family.value} weights need rho")
        return self


def gamma_value(seq: GammaSequence, j: ArrayLike) -> Any:
    """gamma_j for scalar or array ``j``."""
    aj = np.abs(np.asarray(j, dtype=np.float64))
    with np.errstate(over="ignore"):
        if seq.family is GammaFamily.POLYNOMIAL:
            assert seq.p is not None
            out = np.where(aj == 0, 1.0, aj ** seq.p)
        elif seq.family is GammaFamily.ANALYTIC:
            assert seq.rho is not None
            out = np.exp(seq.rho * aj)
        else:
            assert seq.p is not None and seq.rho is not None
            out = np.exp(2.0 * seq.rho * aj ** seq.p)
    out = np.where(aj == 0, 1.0, out)
    return float(out) if out.ndim == 0 else out


def gamma_norm_sq(coeffs: CoeffVector, seq: GammaSequence) -> float:
    """sum_{|j|<=J} gamma_j^2 c_j^2."""
    g = gamma_value(seq, coeffs.indices)
    c = coeffs.values
    with np.errstate(over="ignore", invalid="ignore"):
        terms = np.where(c != 0.0, (g * c) ** 2, 0.0)
    return float(terms.sum())


class SmoothnessClass(BaseModel):
    """Ball {lambda >= 0 : ||lambda||_gamma <= L}."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    gamma: GammaSequence
    L: float = Field(gt=0, description="Radius")

    def contains(
        self,
        target: CoeffVector | IntensityModel,
        tol: float = 1e-12,
        J: int = 64,
    ) -> bool:
        """Membership test on a coefficient vector or a model truncated at J."""
        if isinstance(target, CoeffVector):
            coeffs = target
            settings = get_settings()
            grid = synthesize_grid(coeffs, settings.nonneg_check_points - 1)
            if float(grid.min()) < -settings.nonneg_tolerance:
                return False
        else:
            # models are nonnegative by construction
            coeffs = true_coeffs(target, J)
        norm = gamma_norm_sq(coeffs, self.gamma)
        return norm <= self.L**2 + tol * max(1.0, self.L**2)
