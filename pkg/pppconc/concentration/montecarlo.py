"""Monte-Carlo verification of the concentration bounds.

One replication draws n patterns from its own derived stream, evaluates
S_n(s) for every member of the class and records the sup and the sup of
absolute values. Everything downstream (parameters, tail report, variance
and MGF checks) reads those samples.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray
from scipy import stats
from scipy.special import logsumexp

from pppconc.basis import true_coeffs
from pppconc.concentration.bounds import (
    DEFAULT_C1,
    DEFAULT_C3,
    ball_constants,
    bound_abs_sup,
    bound_integrated,
    bound_left_lmgf,
    bound_left_tail,
    bound_right_lmgf,
    bound_right_log,
    bound_right_tail,
    c_eps,
)
from pppconc.concentration.functions import FunctionClass
from pppconc.estimator import empirical_coeffs, sup_ball_stat
from pppconc.parallel import ReplicationPool
from pppconc.pointprocess import IntensityModel, sample_replication
from pppconc.streams import TAG_BALL, TAG_BOOTSTRAP, make_stream
from shared.errors import DomainError

logger = logging.getLogger("pppconc.concentration")

FloatArray = NDArray[np.float64]

MIN_TAIL_REPLICATIONS = 1000

RIGHT_BOUNDS = ("right_log", "right_sharp", "right_loose")
LEFT_BOUNDS = ("left_poisson", "left_sharp", "left_loose")


@dataclass(frozen=True)
class ZSamples:
    """Per-replication sup and sup-abs of S_n over the class."""

    z_sup: FloatArray
    z_sup_abs: FloatArray
    n: int
    seed: int

    @property
    def R(self) -> int:
        return int(self.z_sup.size)


@dataclass(frozen=True)
class ConcParams:
    """Plug-in scales entering the bounds."""

    EZ_hat: float
    EZ_se: float
    EZ_exact: bool
    EZ_abs_hat: float
    EZ_abs_se: float
    V: float
    upsilon: float
    upsilon_plus: float
    upsilon0: float


@dataclass
class TailReport:
    """Empirical tails with binomial SEs against every bound, per x."""

    x_grid: FloatArray
    columns: dict[str, FloatArray]
    R: int
    flags: list[tuple[float, str]] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    @property
    def column_names(self) -> list[str]:
        return ["x", *self.columns]

    def rows(self) -> list[list[float]]:
        return [
            [float(x), *(float(col[i]) for col in self.columns.values())]
            for i, x in enumerate(self.x_grid)
        ]


@dataclass(frozen=True)
class VarianceCheck:
    var_hat: float
    se: float
    bound: float
    passed: bool


@dataclass(frozen=True)
class MgfCheck:
    t: float
    side: str
    log_mgf: float
    se: float
    bound: float
    passed: bool


@dataclass(frozen=True)
class BallExcessReport:
    """E[(sup-ball statistic - c(eps) H^2)_+] against the integrated bound."""

    k: int
    n: int
    threshold: float
    excess_mean: float
    excess_se: float
    bound: float
    passed: bool


def mc_sup_samples(
    function_class: FunctionClass,
    model: IntensityModel,
    n: int,
    R: int,
    seed: int,
    pool: ReplicationPool | None = None,
) -> ZSamples:
    """R replications of (sup_s S_n(s), sup_s |S_n(s)|); replication r uses stream (seed, r)."""
    if R < 1 or n < 1:
        raise DomainError(f"need R >= 1 and n >= 1, got R={R}, n={n}")
    pool = pool or ReplicationPool()
    centre = n * function_class.compensators(model)

    def run_block(block: range) -> FloatArray:
        out = np.empty((len(block), 2))
        for row, r in enumerate(block):
            sample = sample_replication(model, n, make_stream(seed, r), seed)
            values = function_class.evaluate_matrix(sample.points).sum(axis=1) - centre
            out[row, 0] = values.max()
            out[row, 1] = np.abs(values).max()
        return out

    blocks = pool.map_chunks(run_block, R)
    stacked = np.concatenate(blocks, axis=0)
    logger.debug(f"Drew {R} sup samples (n={n}, class size {function_class.size})")
    return ZSamples(stacked[:, 0].copy(), stacked[:, 1].copy(), n, seed)


def _mean_se(values: FloatArray) -> tuple[float, float]:
    if values.size < 2:
        return float(values.mean()), 0.0
    return float(values.mean()), float(values.std(ddof=1) / math.sqrt(values.size))


def conc_params(
    zs: ZSamples,
    function_class: FunctionClass,
    model: IntensityModel,
) -> ConcParams:
    """
    Plug-in scales from the samples.

    V = n max int s^2 dLambda is exact. For a one-member class Z = S_n(s) is
    centred, so EZ = 0 exactly; otherwise EZ is the sample mean and the
    bounds use upsilon_plus = 2 max(EZ_hat + 3 SE, 0) + V.
    """
    V = zs.n * float(np.max(function_class.second_moments(model)))
    exact = function_class.size == 1
    if exact:
        ez, ez_se = 0.0, 0.0
    else:
        ez, ez_se = _mean_se(zs.z_sup)
    ez_abs, ez_abs_se = _mean_se(zs.z_sup_abs)
    return ConcParams(
        EZ_hat=ez,
        EZ_se=ez_se,
        EZ_exact=exact,
        EZ_abs_hat=ez_abs,
        EZ_abs_se=ez_abs_se,
        V=V,
        upsilon=2.0 * ez + V,
        upsilon_plus=2.0 * max(ez + 3.0 * ez_se, 0.0) + V,
        upsilon0=V,
    )


def _binomial(hits: NDArray[np.bool_]) -> tuple[float, float]:
    p = float(hits.mean())
    return p, math.sqrt(p * (1.0 - p) / hits.size)


def _exact_constant_tails(
    level: float,
    mean_count: float,
    centre: float,
    x_grid: Sequence[float],
) -> tuple[FloatArray, FloatArray]:
    """Exact tails of Z = level (N - mean_count) with N ~ Poisson(mean_count)."""
    right = np.empty(len(x_grid))
    left = np.empty(len(x_grid))
    for i, x in enumerate(x_grid):
        upper = math.ceil(mean_count + (centre + x) / level - 1e-9)
        lower = math.floor(mean_count + (centre - x) / level + 1e-9)
        if mean_count == 0.0:
            right[i] = 1.0 if upper <= 0 else 0.0
            left[i] = 1.0 if lower >= 0 else 0.0
            continue
        right[i] = float(stats.poisson.sf(upper - 1, mean_count))
        left[i] = float(stats.poisson.cdf(lower, mean_count)) if lower >= 0 else 0.0
    return right, left


def verify_tails(
    zs: ZSamples,
    params: ConcParams,
    x_grid: Sequence[float],
    *,
    eps: float = 1.0,
    function_class: FunctionClass | None = None,
    model: IntensityModel | None = None,
) -> TailReport:
    """
    Empirical P(Z >= EZ + x), P(Z <= EZ - x) and every bound at (x, upsilon_plus).

    The sup-abs bound is checked at its own centring (1 + eps) E sup|S_n| + x.
    A point is flagged for a bound when empirical - 3 SE exceeds it. When the
    class is a positive constant singleton the exact Poisson tails are added.
    """
    if zs.R < MIN_TAIL_REPLICATIONS:
        raise DomainError(
            f"tail verification needs R >= {MIN_TAIL_REPLICATIONS}, got {zs.R}"
        )
    xs = np.asarray(x_grid, dtype=np.float64)
    if xs.size == 0 or np.any(xs < 0):
        raise DomainError("x grid must be nonempty and nonnegative")

    ups = params.upsilon_plus
    names = [
        "emp_right", "se_right", "emp_left", "se_left",
        *RIGHT_BOUNDS, *LEFT_BOUNDS,
        "emp_abs", "se_abs", "abs_sup",
    ]
    columns: dict[str, FloatArray] = {name: np.empty(xs.size) for name in names}
    abs_centre = (1.0 + eps) * params.EZ_abs_hat

    for i, x in enumerate(xs):
        columns["emp_right"][i], columns["se_right"][i] = _binomial(zs.z_sup >= params.EZ_hat + x)
        columns["emp_left"][i], columns["se_left"][i] = _binomial(zs.z_sup <= params.EZ_hat - x)
        columns["emp_abs"][i], columns["se_abs"][i] = _binomial(zs.z_sup_abs >= abs_centre + x)
        if ups > 0:
            columns["right_log"][i] = bound_right_log(x, ups)
            columns["right_sharp"][i], columns["right_loose"][i] = bound_right_tail(x, ups)
            (
                columns["left_poisson"][i],
                columns["left_sharp"][i],
                columns["left_loose"][i],
            ) = bound_left_tail(x, ups)
        else:
            # degenerate class: Z = 0, every tail at x > 0 is empty
            for name in (*RIGHT_BOUNDS, *LEFT_BOUNDS):
                columns[name][i] = 1.0 if x == 0 else 0.0
        columns["abs_sup"][i] = bound_abs_sup(x, eps, params.upsilon0)

    notes = [
        f"upsilon_plus={ups!r} (EZ_hat={params.EZ_hat!r}, SE={params.EZ_se!r}, V={params.V!r})",
        f"abs_sup bound centred at (1+eps)*EZ_abs_hat + x with eps={eps!r}",
    ]
    if params.EZ_exact:
        notes.append("EZ = 0 exactly for a one-member class")

    level = function_class.constant_singleton if function_class is not None else None
    if level is not None and model is not None:
        exact_right, exact_left = _exact_constant_tails(
            level, zs.n * model.total_mass, params.EZ_hat, xs.tolist()
        )
        columns["exact_right"] = exact_right
        columns["exact_left"] = exact_left

    report = TailReport(xs, columns, zs.R, notes=notes)
    checks = [
        ("emp_right", "se_right", RIGHT_BOUNDS),
        ("emp_left", "se_left", LEFT_BOUNDS),
        ("emp_abs", "se_abs", ("abs_sup",)),
    ]
    for i, x in enumerate(xs):
        for emp_name, se_name, bound_names in checks:
            low = columns[emp_name][i] - 3.0 * columns[se_name][i]
            for bound_name in bound_names:
                if low > columns[bound_name][i]:
                    report.flags.append((float(x), bound_name))
    for x, bound_name in report.flags:
        logger.warning(f"Empirical tail exceeds {bound_name} at x={x} beyond 3 SE")
    return report


def variance_check(zs: ZSamples, params: ConcParams) -> VarianceCheck:
    """Var Z <= V + 2 EZ, with 4 SE slack on the sample variance."""
    z = zs.z_sup
    var_hat = float(z.var(ddof=1))
    m4 = float(np.mean((z - z.mean()) ** 4))
    se = math.sqrt(max(m4 - var_hat**2, 0.0) / z.size)
    bound = params.V + 2.0 * params.EZ_hat
    return VarianceCheck(var_hat, se, bound, var_hat - 4.0 * se <= bound)


def mgf_check(
    zs: ZSamples,
    params: ConcParams,
    t_grid: Sequence[float] = (0.05, 0.1, 0.2),
    n_boot: int = 200,
) -> list[MgfCheck]:
    """
    log-mean-exp of +-tZ against the log-MGF bounds.

    Both bounds are affine in EZ once upsilon = 2 EZ + V is substituted, so
    they are evaluated at EZ_hat +- 3 SE and the larger value kept. The
    left-hand side carries a bootstrap SE.
    """
    z = zs.z_sup
    R = z.size
    rng = make_stream(zs.seed, TAG_BOOTSTRAP)
    resamples = [z[rng.integers(0, R, size=R)] for _ in range(n_boot)]
    ez_range = (max(params.EZ_hat - 3.0 * params.EZ_se, 0.0), params.EZ_hat + 3.0 * params.EZ_se)

    checks: list[MgfCheck] = []
    for t in t_grid:
        for side, sign in (("right", 1.0), ("left", -1.0)):
            lhs = float(logsumexp(sign * t * z) - math.log(R))
            boot = np.array([logsumexp(sign * t * b) - math.log(R) for b in resamples])
            se = float(boot.std(ddof=1)) if n_boot > 1 else 0.0
            fn = bound_right_lmgf if side == "right" else bound_left_lmgf
            bound = max(fn(t, ez, 2.0 * ez + params.V) for ez in ez_range)
            checks.append(MgfCheck(t, side, lhs, se, bound, lhs <= bound + 3.0 * se))
    return checks


def integrated_excess(statistics: FloatArray, threshold: float) -> tuple[float, float]:
    """Mean and SE of (statistic - threshold)_+."""
    excess = np.maximum(np.asarray(statistics, dtype=np.float64) - threshold, 0.0)
    return _mean_se(excess)


def mc_ball_stats(
    model: IntensityModel,
    k: int,
    n: int,
    R: int,
    seed: int,
    pool: ReplicationPool | None = None,
) -> FloatArray:
    """R draws of sum_{|j|<=k} (beta_hat_j - beta_j)^2; replication r uses (seed, TAG_BALL, r)."""
    pool = pool or ReplicationPool()
    truth = true_coeffs(model, k)

    def run_block(block: range) -> FloatArray:
        out = np.empty(len(block))
        for row, r in enumerate(block):
            sample = sample_replication(model, n, make_stream(seed, TAG_BALL, r), seed)
            out[row] = sup_ball_stat(empirical_coeffs(sample, k), truth, k)
        return out

    return np.concatenate(pool.map_chunks(run_block, R))


def ball_excess_check(
    model: IntensityModel,
    k: int,
    n: int,
    R: int,
    seed: int,
    *,
    eps: float = 0.25,
    c1: float = DEFAULT_C1,
    c3: float = DEFAULT_C3,
    pool: ReplicationPool | None = None,
) -> BallExcessReport:
    """Monte-Carlo excess over c(eps) H^2 against the integrated bound.

    At eps = 1/4 the threshold is 3 (beta0 v 1)(2k+1)/n.
    """
    if model.is_zero:
        raise DomainError("the ball excess check needs a model with positive mass")
    consts = ball_constants(k, model.total_mass, math.sqrt(model.l2_norm_sq()), n)
    threshold = c_eps(eps) * consts.H**2
    stats_ = mc_ball_stats(model, k, n, R, seed, pool)
    mean, se = integrated_excess(stats_, threshold)
    bound = bound_integrated(eps, consts.H, consts.upsilon, consts.M1, n, c1, c3)
    return BallExcessReport(k, n, threshold, mean, se, bound, mean - 3.0 * se <= bound)
