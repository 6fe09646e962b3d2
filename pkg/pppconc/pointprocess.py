"""Poisson point processes on [0,1]: intensity models, exact simulation and
distributional utilities used by the tests and the harness.

A pattern is simulated by drawing its count from Poisson(total mass) and its
locations i.i.d. from lambda / total mass by inverse-CDF on a precomputed grid.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
from abc import ABC, abstractmethod
from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Any, ClassVar

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import stats
from scipy.integrate import cumulative_trapezoid
from scipy.special import gammaln

from pppconc.basis import CoeffVector, l2_norm_sq, synthesize, synthesize_grid, true_coeffs
from pppconc.quadrature import integrate_values, panel_count, simpson_grid
from pppconc.streams import make_stream
from shared.config import get_settings
from shared.errors import DomainError, InvariantViolation, ModelError

# Set up module logger
logger = logging.getLogger("pppconc.pointprocess")

SQRT2 = math.sqrt(2.0)
FloatArray = NDArray[np.float64]


class IntensityFamily(str, Enum):
    """Available intensity families."""

    CONSTANT = "constant"
    FINITE_FOURIER = "finite-fourier"
    SOBOLEV_DECAY = "sobolev-decay"
    ANALYTIC_DECAY = "analytic-decay"
    CUSTOM_GRID = "custom-grid"


class IntensityModel(ABC):
    """A nonnegative intensity function on [0,1] with its cached total mass.

    Instances are immutable after construction. Construction rejects models
    that dip below ``-nonneg_tolerance`` on the check grid and clamps smaller
    dips to zero.
    """

    family: ClassVar[IntensityFamily]

    def __init__(self, params: Mapping[str, Any], label: str | None = None):
        self.params: dict[str, Any] = dict(params)
        self.label = label
        settings = get_settings()

        check = self._raw_grid(settings.nonneg_check_points - 1)
        low = float(check.min())
        if low < -settings.nonneg_tolerance:
            raise ModelError(
                f"{self.family.value} intensity dips to {low:.3e} "
                f"(tolerance {settings.nonneg_tolerance:g})"
            )

        panels = panel_count()
        self._fine_t = simpson_grid(panels)
        self._fine = self.values_on_grid(panels)
        mass = float(integrate_values(self._fine))
        exact = self._exact_total_mass()
        if exact is not None:
            if abs(mass - exact) > 1e-8 * max(abs(exact), 1.0):
                raise InvariantViolation(
                    "total_mass", f"quadrature {mass!r} vs coefficient {exact!r}"
                )
            mass = exact
        if mass < 0:
            raise ModelError(f"negative total mass {mass}")
        self._total_mass = mass

        cumulative = cumulative_trapezoid(self._fine, self._fine_t, initial=0.0)
        self._cumulative = cumulative
        knots = np.linspace(0.0, 1.0, settings.cdf_knots)
        self._knots = knots
        if cumulative[-1] > 0:
            cdf = np.interp(knots, self._fine_t, cumulative) / cumulative[-1]
            cdf = np.maximum.accumulate(cdf)
            cdf[0], cdf[-1] = 0.0, 1.0
        else:
            cdf = knots.copy()
        self._cdf = cdf
        logger.debug(f"Built {self.model_id}: total mass {mass:.6g}, {settings.cdf_knots} knots")

    # -- family hooks ---------------------------------------------------------

    @abstractmethod
    def _raw(self, t: FloatArray) -> FloatArray:
        """Unclamped intensity values."""

    def _raw_grid(self, m: int) -> FloatArray:
        """Unclamped values at t = i/m for i = 0..m."""
        return self._raw(np.linspace(0.0, 1.0, m + 1))

    def _exact_total_mass(self) -> float | None:
        return None

    def fourier_coeffs(self, J: int) -> CoeffVector | None:
        """Exact coefficients for |j| <= J, or None when only quadrature applies."""
        return None

    @property
    def sup_bound(self) -> float | None:
        """An upper bound on sup lambda, when one is known."""
        return None

    def tail_sq(self, J: int) -> float:
        """sum_{|j|>J} beta_j^2."""
        return max(self.l2_norm_sq() - l2_norm_sq(true_coeffs(self, J)), 0.0)

    def l2_norm_sq(self) -> float:
        """||lambda||^2 by quadrature."""
        return float(integrate_values(self._fine**2))

    # -- shared behaviour -----------------------------------------------------

    @property
    def total_mass(self) -> float:
        return self._total_mass

    @property
    def is_zero(self) -> bool:
        return self._total_mass == 0.0

    def eval(self, t: ArrayLike) -> Any:
        """lambda(t) for scalar or array ``t``."""
        x = np.asarray(t, dtype=np.float64)
        out = np.maximum(self._raw(np.atleast_1d(x)), 0.0)
        return float(out[0]) if x.ndim == 0 else out.reshape(x.shape)

    __call__ = eval

    def values_on_grid(self, m: int) -> FloatArray:
        """Clamped values at t = i/m for i = 0..m."""
        return np.maximum(self._raw_grid(m), 0.0)

    def cumulative_mass(self, t: ArrayLike) -> Any:
        """Lambda([0, t]) from the fine quadrature grid."""
        scale = self._total_mass / self._cumulative[-1] if self._cumulative[-1] > 0 else 0.0
        out = np.interp(np.asarray(t, dtype=np.float64), self._fine_t, self._cumulative) * scale
        return float(out) if np.ndim(out) == 0 else out

    def inverse_cdf(self, u: ArrayLike) -> FloatArray:
        """Map uniforms through the inverse of the normalized CDF."""
        return np.interp(np.asarray(u, dtype=np.float64), self._cdf, self._knots)

    @property
    def model_id(self) -> str:
        if self.label:
            return self.label
        digest = hashlib.sha256(
            json.dumps(self.to_dict()["params"], sort_keys=True).encode("utf-8")
        ).hexdigest()
        return f"{self.family.value}-{digest[:12]}"

    def to_dict(self) -> dict[str, Any]:
        return {"family": self.family.value, "params": self.params, "label": self.label}

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.params!r}, label={self.label!r})"


class ConstantIntensity(IntensityModel):
    """lambda = c."""

    family = IntensityFamily.CONSTANT

    def __init__(self, c: float, label: str | None = None):
        if not math.isfinite(c) or c < 0:
            raise ModelError(f"constant intensity must be finite and >= 0, got {c}")
        self.c = float(c)
        super().__init__({"c": self.c}, label)

    def _raw(self, t: FloatArray) -> FloatArray:
        return np.full(t.shape, self.c)

    def _exact_total_mass(self) -> float:
        return self.c

    def fourier_coeffs(self, J: int) -> CoeffVector:
        return CoeffVector.from_terms({0: self.c}, J)

    @property
    def sup_bound(self) -> float:
        return self.c

    def tail_sq(self, J: int) -> float:
        return 0.0

    def l2_norm_sq(self) -> float:
        return self.c**2


class FourierIntensity(IntensityModel):
    """lambda = sum_{|j|<=J} c_j phi_j with explicit coefficients."""

    family = IntensityFamily.FINITE_FOURIER

    def __init__(self, coeffs: Sequence[float] | CoeffVector, label: str | None = None):
        vec = coeffs if isinstance(coeffs, CoeffVector) else CoeffVector(np.asarray(coeffs))
        if not np.all(np.isfinite(vec.values)):
            raise ModelError("finite-fourier coefficients must be finite")
        self.coeffs = vec
        super().__init__({"coeffs": [float(v) for v in vec.values]}, label)

    @classmethod
    def from_terms(cls, terms: Mapping[int, float], label: str | None = None) -> FourierIntensity:
        return cls(CoeffVector.from_terms(terms), label)

    def _raw(self, t: FloatArray) -> FloatArray:
        return np.asarray(synthesize(self.coeffs, t))

    def _raw_grid(self, m: int) -> FloatArray:
        return synthesize_grid(self.coeffs, m)

    def _exact_total_mass(self) -> float:
        return self.coeffs[0]

    def fourier_coeffs(self, J: int) -> CoeffVector:
        if J >= self.coeffs.J:
            return self.coeffs.pad(J)
        return self.coeffs.truncate(J)

    @property
    def sup_bound(self) -> float:
        off_centre = float(np.abs(self.coeffs.values).sum()) - abs(self.coeffs[0])
        return self.coeffs[0] + SQRT2 * off_centre

    def tail_sq(self, J: int) -> float:
        if J >= self.coeffs.J:
            return 0.0
        return l2_norm_sq(self.coeffs) - l2_norm_sq(self.coeffs.truncate(J))

    def l2_norm_sq(self) -> float:
        return l2_norm_sq(self.coeffs)


class SobolevDecayIntensity(IntensityModel):
    """Cosine series with beta_j = a j^{-(p+1/2)} for 1 <= j <= terms, beta_0 = base.

    The coefficients make sum_j j^{2p} beta_j^2 grow only logarithmically in
    ``terms``, so the bias of a k-term projection decays like k^{-2p}.
    """

    family = IntensityFamily.SOBOLEV_DECAY

    def __init__(
        self,
        p: float,
        a: float,
        base: float,
        terms: int = 2048,
        label: str | None = None,
    ):
        if p <= 0 or a < 0 or base < 0 or terms < 1:
            raise ModelError(
                f"sobolev-decay needs p > 0, a >= 0, base >= 0, terms >= 1 "
                f"(got p={p}, a={a}, base={base}, terms={terms})"
            )
        self.p, self.a, self.base, self.terms = float(p), float(a), float(base), int(terms)
        j = np.arange(1, self.terms + 1, dtype=np.float64)
        self._beta = self.a * j ** (-(self.p + 0.5))
        super().__init__(
            {"p": self.p, "a": self.a, "base": self.base, "terms": self.terms}, label
        )

    def _series(self) -> CoeffVector:
        return CoeffVector(np.concatenate([np.zeros(self.terms), [self.base], self._beta]))

    def _raw(self, t: FloatArray) -> FloatArray:
        return np.asarray(synthesize(self._series(), t))

    def _raw_grid(self, m: int) -> FloatArray:
        return synthesize_grid(self._series(), m)

    def _exact_total_mass(self) -> float:
        return self.base

    def fourier_coeffs(self, J: int) -> CoeffVector:
        out = np.zeros(2 * J + 1)
        out[J] = self.base
        top = min(J, self.terms)
        out[J + 1 : J + 1 + top] = self._beta[:top]
        return CoeffVector(out)

    @property
    def sup_bound(self) -> float:
        return self.base + SQRT2 * float(self._beta.sum())

    def tail_sq(self, J: int) -> float:
        return float(np.sum(self._beta[J:] ** 2)) if J < self.terms else 0.0

    def l2_norm_sq(self) -> float:
        return self.base**2 + float(np.sum(self._beta**2))


class AnalyticDecayIntensity(IntensityModel):
    """Cosine series with beta_j = a e^{-rho j} for j >= 1, beta_0 = base.

    Summed in closed form with the Poisson kernel
    sum_{j>=1} r^j cos(x) = (r cos x - r^2) / (1 - 2 r cos x + r^2), r = e^{-rho}.
    """

    family = IntensityFamily.ANALYTIC_DECAY

    def __init__(self, rho: float, a: float, base: float, label: str | None = None):
        if rho <= 0 or a < 0 or base < 0:
            raise ModelError(
                f"analytic-decay needs rho > 0, a >= 0, base >= 0 (got {rho}, {a}, {base})"
            )
        self.rho, self.a, self.base = float(rho), float(a), float(base)
        self.r = math.exp(-self.rho)
        super().__init__({"rho": self.rho, "a": self.a, "base": self.base}, label)

    def _raw(self, t: FloatArray) -> FloatArray:
        cos = np.cos(2.0 * np.pi * t)
        r = self.r
        kernel = (r * cos - r * r) / (1.0 - 2.0 * r * cos + r * r)
        return self.base + SQRT2 * self.a * kernel

    def _exact_total_mass(self) -> float:
        return self.base

    def fourier_coeffs(self, J: int) -> CoeffVector:
        out = np.zeros(2 * J + 1)
        out[J] = self.base
        out[J + 1 :] = self.a * self.r ** np.arange(1, J + 1, dtype=np.float64)
        return CoeffVector(out)

    @property
    def sup_bound(self) -> float:
        return self.base + SQRT2 * self.a * self.r / (1.0 - self.r)

    def tail_sq(self, J: int) -> float:
        r2 = self.r * self.r
        return self.a**2 * r2 ** (J + 1) / (1.0 - r2)

    def l2_norm_sq(self) -> float:
        r2 = self.r * self.r
        return self.base**2 + self.a**2 * r2 / (1.0 - r2)


class GridIntensity(IntensityModel):
    """Piecewise-linear intensity through values on a uniform knot grid."""

    family = IntensityFamily.CUSTOM_GRID

    def __init__(
        self,
        values: Sequence[float],
        sup_bound: float | None = None,
        label: str | None = None,
    ):
        arr = np.asarray(values, dtype=np.float64).ravel()
        if arr.size < 2 or not np.all(np.isfinite(arr)):
            raise ModelError("custom-grid needs at least two finite knot values")
        if sup_bound is not None and sup_bound < float(arr.max()):
            raise ModelError(f"sup_bound {sup_bound} below the largest knot {arr.max()}")
        self.values = arr
        self.knots = np.linspace(0.0, 1.0, arr.size)
        self._sup = float(arr.max()) if sup_bound is None else float(sup_bound)
        params: dict[str, Any] = {"values": [float(v) for v in arr]}
        if sup_bound is not None:
            params["sup_bound"] = float(sup_bound)
        super().__init__(params, label)

    def _raw(self, t: FloatArray) -> FloatArray:
        return np.interp(t, self.knots, self.values)

    @property
    def sup_bound(self) -> float:
        return self._sup


_FAMILIES: dict[IntensityFamily, type[IntensityModel]] = {
    IntensityFamily.CONSTANT: ConstantIntensity,
    IntensityFamily.FINITE_FOURIER: FourierIntensity,
    IntensityFamily.SOBOLEV_DECAY: SobolevDecayIntensity,
    IntensityFamily.ANALYTIC_DECAY: AnalyticDecayIntensity,
    IntensityFamily.CUSTOM_GRID: GridIntensity,
}


class IntensityFactory:
    """Factory for intensity models from their serialized form."""

    @staticmethod
    def create(
        family: IntensityFamily | str,
        params: Mapping[str, Any],
        label: str | None = None,
    ) -> IntensityModel:
        """Create a model of ``family`` from keyword parameters."""
        try:
            kind = IntensityFamily(family)
        except ValueError as e:
            raise ModelError(f"unknown intensity family {family!r}") from e

        logger.debug(f"Creating {kind.value} intensity model")
        try:
            return _FAMILIES[kind](**params, label=label)  # type: ignore[arg-type]
        except TypeError as e:
            logger.error(f"Invalid parameters for {kind.value}: {str(e)}", exc_info=True)
            raise ModelError(f"invalid parameters for {kind.value}: {e}") from e

    @staticmethod
    def from_dict(doc: Mapping[str, Any]) -> IntensityModel:
        """Inverse of ``IntensityModel.to_dict``."""
        return IntensityFactory.create(doc["family"], doc.get("params", {}), doc.get("label"))


@dataclass(frozen=True, eq=False)
class PointPattern:
    """One realization: sorted points in [0,1]."""

    points: FloatArray

    def __post_init__(self) -> None:
        pts = np.array(self.points, dtype=np.float64).ravel()
        if pts.size:
            if pts[0] < 0.0 or pts[-1] > 1.0:
                raise DomainError("pattern points must lie in [0,1]")
            if np.any(np.diff(pts) < 0):
                raise DomainError("pattern points must be sorted ascending")
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)

    @property
    def count(self) -> int:
        return int(self.points.size)

    @classmethod
    def empty(cls) -> PointPattern:
        return cls(np.empty(0))

    @classmethod
    def from_unsorted(cls, points: ArrayLike) -> PointPattern:
        return cls(np.sort(np.asarray(points, dtype=np.float64).ravel()))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PointPattern):
            return NotImplemented
        return bool(np.array_equal(self.points, other.points))

    def __hash__(self) -> int:
        return hash(self.points.tobytes())

    def __len__(self) -> int:
        return self.count


@dataclass(frozen=True, eq=False)
class SampleSet:
    """n i.i.d. patterns stored pooled: pattern i is ``points[offsets[i]:offsets[i+1]]``."""

    points: FloatArray
    offsets: NDArray[np.int64]
    seed: int | None
    model_id: str

    def __post_init__(self) -> None:
        pts = np.array(self.points, dtype=np.float64).ravel()
        offs = np.array(self.offsets, dtype=np.int64).ravel()
        if offs.size < 2 or offs[0] != 0 or offs[-1] != pts.size or np.any(np.diff(offs) < 0):
            raise DomainError("sample offsets must run from 0 to the pooled size")
        pts.flags.writeable = False
        offs.flags.writeable = False
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "offsets", offs)

    @property
    def n(self) -> int:
        return int(self.offsets.size - 1)

    @property
    def counts(self) -> NDArray[np.int64]:
        return np.diff(self.offsets)

    @cached_property
    def patterns(self) -> tuple[PointPattern, ...]:
        return tuple(
            PointPattern(self.points[lo:hi])
            for lo, hi in zip(self.offsets[:-1], self.offsets[1:], strict=True)
        )

    @classmethod
    def from_patterns(
        cls,
        patterns: Sequence[PointPattern],
        seed: int | None,
        model_id: str,
    ) -> SampleSet:
        if not patterns:
            raise DomainError("a sample set needs at least one pattern")
        counts = np.array([p.count for p in patterns], dtype=np.int64)
        offsets = np.concatenate([[0], np.cumsum(counts)])
        pooled = np.concatenate([p.points for p in patterns]) if counts.sum() else np.empty(0)
        return cls(pooled, offsets, seed, model_id)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SampleSet):
            return NotImplemented
        return (
            self.seed == other.seed
            and self.model_id == other.model_id
            and bool(np.array_equal(self.offsets, other.offsets))
            and bool(np.array_equal(self.points, other.points))
        )

    def __hash__(self) -> int:
        return hash((self.points.tobytes(), self.offsets.tobytes(), self.seed, self.model_id))


def total_mass(model: IntensityModel) -> float:
    """Lambda([0,1]) = beta_0."""
    return model.total_mass


def sample_pattern(model: IntensityModel, stream: np.random.Generator) -> PointPattern:
    """Draw one realization of PPP(lambda) from ``stream``."""
    if model.is_zero:
        return PointPattern.empty()
    count = int(stream.poisson(model.total_mass))
    return PointPattern(np.sort(model.inverse_cdf(stream.random(count))))


def sample_pattern_rejection(model: IntensityModel, stream: np.random.Generator) -> PointPattern:
    """Draw one realization by thinning a homogeneous PPP at the model's sup bound."""
    bound = model.sup_bound
    if bound is None:
        raise DomainError(f"{model.model_id} declares no sup bound for rejection sampling")
    if bound <= 0:
        return PointPattern.empty()
    count = int(stream.poisson(bound))
    candidates = stream.random(count)
    keep = stream.random(count) * bound < model.eval(candidates)
    return PointPattern(np.sort(candidates[keep]))


def sample_many(model: IntensityModel, n: int, seed: int) -> SampleSet:
    """n independent patterns; pattern i draws from the stream keyed (seed, i)."""
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    patterns = [sample_pattern(model, make_stream(seed, i)) for i in range(n)]
    return SampleSet.from_patterns(patterns, seed, model.model_id)


def sample_replication(
    model: IntensityModel,
    n: int,
    stream: np.random.Generator,
    seed: int | None = None,
) -> SampleSet:
    """
    n independent patterns drawn from one stream.

    Counts are drawn as a vector, locations pooled through one inverse-CDF
    call and sorted within each pattern. Monte-Carlo loops use this with one
    derived stream per replication.
    """
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    if model.is_zero:
        return SampleSet(np.empty(0), np.zeros(n + 1, dtype=np.int64), seed, model.model_id)
    counts = stream.poisson(model.total_mass, size=n).astype(np.int64)
    locations = model.inverse_cdf(stream.random(int(counts.sum())))
    owner = np.repeat(np.arange(n), counts)
    order = np.lexsort((locations, owner))
    offsets = np.concatenate([[0], np.cumsum(counts)])
    return SampleSet(locations[order], offsets, seed, model.model_id)


def superpose(patterns: Sequence[PointPattern]) -> PointPattern:
    """Merged sorted multiset union of the patterns."""
    if not patterns:
        return PointPattern.empty()
    return PointPattern(np.sort(np.concatenate([p.points for p in patterns])))


def poisson_pmf(k: ArrayLike, mean: float) -> Any:
    """e^{-mean} mean^k / k!, evaluated in log space."""
    if not mean > 0:
        raise DomainError(f"Poisson mean must be positive, got {mean}")
    kk = np.asarray(k, dtype=np.float64)
    if np.any(kk < 0) or np.any(kk != np.floor(kk)):
        raise DomainError("k must be a nonnegative integer")
    out = np.exp(kk * math.log(mean) - mean - gammaln(kk + 1.0))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class CountMoments:
    """Sample moments of pattern counts with their standard errors."""

    mean: float
    variance: float
    se_mean: float
    se_variance: float
    replications: int


def count_moments(counts: ArrayLike) -> CountMoments:
    """Mean and variance of counts; SE of the variance uses the fourth central moment."""
    c = np.asarray(counts, dtype=np.float64).ravel()
    if c.size < 2:
        raise DomainError("count moments need at least two replications")
    mean = float(c.mean())
    var = float(c.var(ddof=1))
    m4 = float(np.mean((c - mean) ** 4))
    return CountMoments(
        mean=mean,
        variance=var,
        se_mean=math.sqrt(var / c.size),
        se_variance=math.sqrt(max(m4 - var**2, 0.0) / c.size),
        replications=int(c.size),
    )


def uniformity_pvalue(points: ArrayLike) -> float:
    """Kolmogorov-Smirnov p-value against Uniform[0,1]."""
    return float(stats.kstest(np.asarray(points, dtype=np.float64), "uniform").pvalue)


def poisson_count_pvalue(counts: ArrayLike, mean: float) -> float:
    """Chi-square goodness-of-fit p-value of counts against Poisson(mean).

    Bins are merged from the left, and the final bin absorbs the upper tail,
    until every bin expects at least five observations.
    """
    c = np.asarray(counts, dtype=np.int64).ravel()
    reps = c.size
    top = int(c.max()) if reps else 0
    probs = np.asarray(poisson_pmf(np.arange(top + 1), mean), dtype=np.float64)
    probs[-1] += float(stats.poisson.sf(top, mean))
    observed = np.bincount(c, minlength=top + 1)

    exp_bins: list[float] = []
    obs_bins: list[float] = []
    acc_e = acc_o = 0.0
    for e, o in zip(probs * reps, observed, strict=True):
        acc_e += e
        acc_o += o
        if acc_e >= 5.0:
            exp_bins.append(acc_e)
            obs_bins.append(acc_o)
            acc_e = acc_o = 0.0
    if acc_e > 0 or acc_o > 0:
        if exp_bins:
            exp_bins[-1] += acc_e
            obs_bins[-1] += acc_o
        else:
            exp_bins.append(acc_e)
            obs_bins.append(acc_o)
    if len(exp_bins) < 2:
        return 1.0
    f_exp = np.asarray(exp_bins)
    f_obs = np.asarray(obs_bins)
    # rescale away floating drift so the totals match exactly
    f_exp *= f_obs.sum() / f_exp.sum()
    return float(stats.chisquare(f_obs, f_exp).pvalue)
