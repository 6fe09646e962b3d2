"""Experiment orchestration for every harness subcommand.

Each runner consumes a validated ``ExperimentConfig``, does its computation
through the library modules and hands rows/payloads to ``shared.artifacts``.
Only this module touches the filesystem.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from functools import partial
from pathlib import Path

import numpy as np

from pppconc.basis import CoeffVector, GammaSequence, true_coeffs
from pppconc.concentration.bounds import (
    bound_abs_sup,
    bound_left_tail,
    bound_right_log,
    bound_right_tail,
)
from pppconc.concentration.functions import FunctionClass
from pppconc.concentration.montecarlo import (
    ConcParams,
    MgfCheck,
    TailReport,
    VarianceCheck,
    ZSamples,
    ball_excess_check,
    conc_params,
    mc_sup_samples,
    mgf_check,
    variance_check,
    verify_tails,
)
from pppconc.estimator import (
    EmpiricalCoeffs,
    RateTarget,
    default_k_cap,
    empirical_coeffs,
    eval_positive_part,
    mise_exact,
    oracle_dimension,
    project,
    rate_target,
)
from pppconc.harness.config import Experiment, ExperimentConfig
from pppconc.harness.models import (
    AdaptSummary,
    CheckResult,
    ConcSummary,
    EstimateSummary,
    RateFit,
    RiskSummary,
)
from pppconc.modelselect import PenaltyScale, adaptive_estimate, select_dimension, xi_indicator
from pppconc.parallel import ReplicationPool
from pppconc.pointprocess import IntensityModel, sample_many, sample_replication
from pppconc.quadrature import integrate, panel_count
from pppconc.streams import TAG_RISK, make_stream
from shared.artifacts import ArtifactHeader, config_hash, write_csv, write_json
from shared.errors import (
    DomainError,
    ExitCode,
    InvariantViolation,
    PPPConcError,
    exit_code_for,
)

# Set up module logger
logger = logging.getLogger("pppconc.harness")

RISK_COLUMNS = ["n", "rep", "k", "mise", "k_star", "psi_n", "estimator"]
# log-residuals below this are rounding noise
RESIDUAL_FLOOR = 1e-9

BOUND_COLUMNS = [
    "x",
    "right_log",
    "right_sharp",
    "right_loose",
    "left_poisson",
    "left_sharp",
    "left_loose",
    "abs_sup",
]


@dataclass
class RiskResult:
    rows: list[tuple[int, int, int, float, int, float, str]]
    summary: RiskSummary


@dataclass
class ConcResult:
    samples: ZSamples
    params: ConcParams
    report: TailReport
    variance: VarianceCheck
    mgf: list[MgfCheck]


def fit_rate(
    n_grid: Sequence[int],
    medians: Sequence[float],
    target: RateTarget,
    slope_tolerance: float = 0.15,
    spread_target: float = 3.0,
) -> RateFit:
    """
    OLS slope of log(median MISE) on log(n).

    The smallest n is dropped when its residual exceeds twice every other
    residual, and the fit is repeated without it. A single n or a zero median
    leaves the slope NaN.
    """
    ns = np.asarray(n_grid, dtype=np.float64)
    ms = np.asarray(medians, dtype=np.float64)
    if ns.size != ms.size or ns.size == 0:
        raise DomainError(f"{ns.size} sample sizes for {ms.size} medians")
    order = np.argsort(ns)
    ns, ms = ns[order], ms[order]
    if ns.size == 1 or np.any(ms <= 0):
        logger.warning(
            "A single sample size or a zero median carries no slope; the fit is left undefined"
        )
        return RateFit(
            n_grid=[int(v) for v in ns],
            median_mise=[float(v) for v in ms],
            slope=math.nan,
            intercept=math.nan,
            residual_rms=0.0,
            target_exponent=target.exponent,
            target_label=target.label,
            slope_tolerance=slope_tolerance,
            slope_ok=False,
            spread_target=spread_target,
        )
    log_n, log_m = np.log(ns), np.log(ms)
    slope, intercept = np.polyfit(log_n, log_m, 1)
    residuals = log_m - (slope * log_n + intercept)
    dropped: list[int] = []
    others = max(float(np.max(np.abs(residuals[1:]))), RESIDUAL_FLOOR)
    if ns.size >= 3 and abs(residuals[0]) > 2.0 * others:
        dropped.append(int(ns[0]))
        logger.warning(f"Dropping n={int(ns[0])} from the slope fit (pre-asymptotic residual)")
        log_n, log_m = log_n[1:], log_m[1:]
        slope, intercept = np.polyfit(log_n, log_m, 1)
        residuals = log_m - (slope * log_n + intercept)

    spread: float | None = None
    spread_ok: bool | None = None
    usable = ns > 1
    if np.count_nonzero(usable) >= 2:
        scaled = ms[usable] * ns[usable] / np.log(ns[usable])
        spread = float(scaled.max() / scaled.min())
        spread_ok = spread <= spread_target

    return RateFit(
        n_grid=[int(v) for v in ns],
        median_mise=[float(v) for v in ms],
        slope=float(slope),
        intercept=float(intercept),
        residual_rms=float(np.sqrt(np.mean(residuals**2))),
        dropped_n=dropped,
        target_exponent=target.exponent,
        target_label=target.label,
        slope_tolerance=slope_tolerance,
        slope_ok=abs(float(slope) - target.exponent) <= slope_tolerance,
        normalized_spread=spread,
        spread_target=spread_target,
        spread_ok=spread_ok,
    )


def resolve_k_max(n: int, k_max: int | None) -> int:
    """Configured k_max clipped to n, or min(n, k_cap(n)) when unset."""
    if k_max is None:
        return min(default_k_cap(n), n)
    if k_max > n:
        logger.warning(f"k_max={k_max} exceeds n={n}; clipped to {n}")
        return n
    return k_max


def _risk_replication(
    r: int,
    *,
    model: IntensityModel,
    n: int,
    seed: int,
    km: int,
    J: int,
    k_star: int,
    truth: CoeffVector,
    tail: float,
    scale: PenaltyScale,
) -> tuple[float, int, float, bool]:
    sample = sample_replication(model, n, make_stream(seed, TAG_RISK, n, r), seed)
    emp = empirical_coeffs(sample, J)
    mise_oracle = mise_exact(project(emp, k_star), truth, tail)
    trace = select_dimension(
        EmpiricalCoeffs(emp.coeffs.truncate(km), n), km, scale, model.total_mass
    )
    trace.verify()
    mise_adaptive = mise_exact(project(emp, trace.k_hat), truth, tail)
    return mise_oracle, trace.k_hat, mise_adaptive, trace.at_range_edge and km > 0


def risk_sweep(
    model: IntensityModel,
    gamma: GammaSequence,
    n_grid: Sequence[int],
    R: int,
    seed: int,
    *,
    k_max: int | None = None,
    scale: PenaltyScale = PenaltyScale.EMPIRICAL,
    pool: ReplicationPool | None = None,
) -> RiskResult:
    """
    Exact MISE of the oracle-k* and adaptive estimators over replications.

    Replication r at sample size n draws from the stream (seed, TAG_RISK, n, r),
    and both estimators share that draw.
    """
    pool = pool or ReplicationPool()
    rows: list[tuple[int, int, int, float, int, float, str]] = []
    medians_oracle: list[float] = []
    medians_adaptive: list[float] = []
    k_stars: list[int] = []
    psis: list[float] = []
    edge_hits: list[int] = []
    k_maxes: list[int] = []

    for n in n_grid:
        oracle = oracle_dimension(gamma, n, max(default_k_cap(n), 1))
        km = resolve_k_max(n, k_max)
        J = max(km, oracle.k_star)
        truth = true_coeffs(model, J)
        tail = model.tail_sq(J)
        logger.info(f"Risk sweep n={n}: k*={oracle.k_star}, k_max={km}, R={R}")

        replicate = partial(
            _risk_replication,
            model=model,
            n=n,
            seed=seed,
            km=km,
            J=J,
            k_star=oracle.k_star,
            truth=truth,
            tail=tail,
            scale=scale,
        )
        results = pool.map(replicate, R)
        for r, (mise_o, k_hat, mise_a, _) in enumerate(results):
            rows.append((n, r, oracle.k_star, mise_o, oracle.k_star, oracle.psi_n, "oracle"))
            rows.append((n, r, k_hat, mise_a, oracle.k_star, oracle.psi_n, "adaptive"))
        medians_oracle.append(float(np.median([res[0] for res in results])))
        medians_adaptive.append(float(np.median([res[2] for res in results])))
        hits = sum(1 for res in results if res[3])
        if hits:
            logger.warning(f"n={n}: k_hat reached k_max={km} in {hits}/{R} replications")
        k_stars.append(oracle.k_star)
        psis.append(oracle.psi_n)
        edge_hits.append(hits)
        k_maxes.append(km)

    target = rate_target(gamma)
    summary = RiskSummary(
        oracle=fit_rate(n_grid, medians_oracle, target),
        adaptive=fit_rate(n_grid, medians_adaptive, target),
        k_star=k_stars,
        psi_n=psis,
        adaptive_over_oracle=[
            a / o if o > 0 else math.nan
            for a, o in zip(medians_adaptive, medians_oracle, strict=True)
        ],
        range_edge_hits=edge_hits,
        k_max=k_maxes,
    )
    return RiskResult(rows, summary)


def conc_sweep(
    function_class: FunctionClass,
    model: IntensityModel,
    n: int,
    R: int,
    x_grid: Sequence[float],
    seed: int,
    *,
    eps: float = 1.0,
    t_grid: Sequence[float] = (0.05, 0.1, 0.2),
    pool: ReplicationPool | None = None,
) -> ConcResult:
    """One Z-sample pass feeding both tails, the variance check and the MGF check."""
    samples = mc_sup_samples(function_class, model, n, R, seed, pool)
    params = conc_params(samples, function_class, model)
    report = verify_tails(
        samples, params, x_grid, eps=eps, function_class=function_class, model=model
    )
    return ConcResult(
        samples=samples,
        params=params,
        report=report,
        variance=variance_check(samples, params),
        mgf=mgf_check(samples, params, t_grid),
    )


def bounds_table(
    x_grid: Sequence[float], upsilon: float, upsilon0: float, eps: float = 1.0
) -> list[list[float]]:
    """Pure bound values per x; no randomness involved."""
    rows: list[list[float]] = []
    for x in x_grid:
        sharp_r, loose_r = bound_right_tail(x, upsilon)
        poisson_l, sharp_l, loose_l = bound_left_tail(x, upsilon)
        rows.append(
            [
                x,
                bound_right_log(x, upsilon),
                sharp_r,
                loose_r,
                poisson_l,
                sharp_l,
                loose_l,
                bound_abs_sup(x, eps, upsilon0),
            ]
        )
    return rows


# -- subcommand runners -------------------------------------------------------


def _header(config: ExperimentConfig, notes: Sequence[str] = ()) -> ArtifactHeader:
    return ArtifactHeader(
        experiment=config.experiment.value,
        config_hash=config_hash(config.hash_payload()),
        seed=config.seed,
        notes=list(notes),
    )


def _paths(config: ExperimentConfig) -> tuple[Path, Path]:
    stem = config.experiment.value
    return config.out_dir / f"{stem}.csv", config.out_dir / f"{stem}.json"


def _model(config: ExperimentConfig) -> IntensityModel:
    assert config.model is not None
    return config.model.build()


def _pool(config: ExperimentConfig) -> ReplicationPool:
    return ReplicationPool(threads=config.threads)


def run_simulate(config: ExperimentConfig) -> list[Path]:
    model = _model(config)
    samples = sample_many(model, config.n, config.seed)
    rows = [(i, float(x)) for i, pattern in enumerate(samples.patterns) for x in pattern.points]
    header = _header(config)
    csv_path, json_path = _paths(config)
    counts = samples.counts
    payload = {
        "model": model.to_dict(),
        "model_id": samples.model_id,
        "n": samples.n,
        "counts": counts,
        "mean_count": float(counts.mean()),
        "total_mass": model.total_mass,
    }
    return [
        write_csv(csv_path, header, ["pattern", "x"], rows),
        write_json(json_path, header, payload),
    ]


def run_coeffs(config: ExperimentConfig) -> list[Path]:
    model = _model(config)
    J = config.J if config.J is not None else (config.k_max if config.k_max is not None else 8)
    samples = sample_many(model, config.n, config.seed)
    emp = empirical_coeffs(samples, J)
    truth = true_coeffs(model, J)
    rows = [(int(j), emp.coeffs[int(j)], truth[int(j)]) for j in emp.coeffs.indices]
    header = _header(config)
    csv_path, json_path = _paths(config)
    payload = {"n": emp.n, "J": J, "beta_hat": emp.coeffs.to_dict(), "beta": truth.to_dict()}
    return [
        write_csv(csv_path, header, ["j", "beta_hat", "beta_true"], rows),
        write_json(json_path, header, payload),
    ]


def run_estimate(config: ExperimentConfig) -> list[Path]:
    model = _model(config)
    n = config.n
    if config.k is not None:
        k, from_oracle = config.k, False
    else:
        assert config.gamma is not None
        k, from_oracle = oracle_dimension(config.gamma, n, default_k_cap(n)).k_star, True

    samples = sample_many(model, n, config.seed)
    est = project(empirical_coeffs(samples, k), k)
    truth = true_coeffs(model, k)
    mise = mise_exact(est, truth, model.tail_sq(k))

    def positive_part_error(t: np.ndarray) -> np.ndarray:
        return (np.asarray(eval_positive_part(est, t)) - model.eval(t)) ** 2

    # kinks where lambda_hat crosses zero defeat the half-grid check
    mise_plus = integrate(positive_part_error, panels=4 * panel_count(), check=False)
    t = np.linspace(0.0, 1.0, config.grid_points + 1)
    lam_hat = np.asarray(est(t))
    lam_plus = np.maximum(lam_hat, 0.0)
    lam_true = model.eval(t)
    rows = [
        (float(t[i]), float(lam_hat[i]), float(lam_plus[i]), float(lam_true[i]))
        for i in range(t.size)
    ]
    header = _header(config)
    csv_path, json_path = _paths(config)
    summary = EstimateSummary(
        n=n, k=k, oracle_k=from_oracle, mise=mise, mise_positive_part=mise_plus
    )
    return [
        write_csv(csv_path, header, ["t", "lambda_hat", "lambda_hat_plus", "lambda_true"], rows),
        write_json(json_path, header, summary.model_dump()),
    ]


def run_adapt(config: ExperimentConfig) -> list[Path]:
    model = _model(config)
    n = config.n
    km = resolve_k_max(n, config.k_max)
    samples = sample_many(model, n, config.seed)
    est, trace = adaptive_estimate(samples, km, config.penalty_scale, model.total_mass)
    trace.verify()
    truth = true_coeffs(model, km)
    emp = empirical_coeffs(samples, 0)
    summary = AdaptSummary(
        n=n,
        k_max=km,
        k_hat=trace.k_hat,
        pen_scale=trace.pen_scale,
        at_range_edge=trace.at_range_edge,
        mise_if_truth_known=mise_exact(est, truth, model.tail_sq(km)),
        xi=xi_indicator(emp, model.total_mass),
    )
    notes = []
    if trace.at_range_edge and km > 0:
        notes.append("k_hat equals k_max; the search range may be too small")
    header = _header(config, notes)
    csv_path, json_path = _paths(config)
    return [
        write_csv(csv_path, header, ["k", "contrast", "penalty", "criterion"], trace.rows()),
        write_json(json_path, header, summary.model_dump()),
    ]


def run_risk(config: ExperimentConfig) -> list[Path]:
    model = _model(config)
    assert config.gamma is not None
    result = risk_sweep(
        model,
        config.gamma,
        config.n_grid,
        config.R,
        config.seed,
        k_max=config.k_max,
        scale=config.penalty_scale,
        pool=_pool(config),
    )
    summary = result.summary
    for name, fit in (("oracle", summary.oracle), ("adaptive", summary.adaptive)):
        logger.info(
            f"{name} slope {fit.slope:.3f} (target {fit.target_exponent:.3f}, "
            f"{fit.target_label}); spread {fit.normalized_spread}"
        )
    header = _header(config)
    csv_path, json_path = _paths(config)
    return [
        write_csv(csv_path, header, RISK_COLUMNS, result.rows),
        write_json(json_path, header, summary.model_dump()),
    ]


def _check(name: str, value: float, bound: float, se: float, passed: bool) -> CheckResult:
    return CheckResult(name=name, value=value, bound=bound, se=se, passed=passed)


def run_conc(config: ExperimentConfig) -> list[Path]:
    model = _model(config)
    assert config.function_class is not None
    pool = _pool(config)
    result = conc_sweep(
        config.function_class,
        model,
        config.n,
        config.R,
        config.x_grid.expand(),
        config.seed,
        eps=config.eps,
        t_grid=config.t_grid,
        pool=pool,
    )
    ball = []
    for k in config.ball_dims:
        check = ball_excess_check(
            model, k, config.n, config.R, config.seed, c1=config.c1, c3=config.c3, pool=pool
        )
        ball.append(
            _check(
                f"ball_excess_k{k}", check.excess_mean, check.bound, check.excess_se, check.passed
            )
        )

    params, report = result.params, result.report
    var = result.variance
    summary = ConcSummary(
        n=config.n,
        R=config.R,
        class_size=config.function_class.size,
        symmetric=config.function_class.is_symmetric,
        EZ_hat=params.EZ_hat,
        EZ_se=params.EZ_se,
        EZ_abs_hat=params.EZ_abs_hat,
        V=params.V,
        upsilon=params.upsilon,
        upsilon_plus=params.upsilon_plus,
        upsilon0=params.upsilon0,
        flag_count=len(report.flags),
        flags=report.flags,
        variance_check=_check("variance", var.var_hat, var.bound, var.se, var.passed),
        mgf_checks=[
            _check(f"mgf_{m.side}_t{m.t!r}", m.log_mgf, m.bound, m.se, m.passed)
            for m in result.mgf
        ],
        ball_excess=ball,
    )
    header = _header(config, report.notes)
    csv_path, json_path = _paths(config)
    return [
        write_csv(csv_path, header, report.column_names, report.rows()),
        write_json(json_path, header, summary.model_dump()),
    ]


def run_bounds_table(config: ExperimentConfig) -> list[Path]:
    upsilon0 = config.upsilon0 if config.upsilon0 is not None else config.upsilon
    rows = bounds_table(config.x_grid.expand(), config.upsilon, upsilon0, config.eps)
    header = _header(config, [f"upsilon={config.upsilon!r}", f"upsilon0={upsilon0!r}"])
    csv_path, _ = _paths(config)
    return [write_csv(csv_path, header, BOUND_COLUMNS, rows)]


RUNNERS: dict[Experiment, Callable[[ExperimentConfig], list[Path]]] = {
    Experiment.SIMULATE: run_simulate,
    Experiment.COEFFS: run_coeffs,
    Experiment.ESTIMATE: run_estimate,
    Experiment.ADAPT: run_adapt,
    Experiment.RISK: run_risk,
    Experiment.CONC: run_conc,
    Experiment.BOUNDS_TABLE: run_bounds_table,
}


def run_experiment(config: ExperimentConfig) -> list[Path]:
    """Dispatch to the subcommand runner; returns the artifact paths."""
    logger.info(
        f"Starting {config.experiment.value} (seed={config.seed}, threads={config.threads})"
    )
    paths = RUNNERS[config.experiment](config)
    logger.info(f"Finished {config.experiment.value}: {', '.join(str(p) for p in paths)}")
    return paths


def run(config: ExperimentConfig) -> ExitCode:
    """Run one experiment, mapping failures to an exit status."""
    try:
        run_experiment(config)
    except InvariantViolation as e:
        logger.error(f"{config.experiment.value} failed: {e.invariant} ({e.detail})", exc_info=True)
        return ExitCode.INVARIANT
    except (OSError, PPPConcError, ValueError, ArithmeticError) as e:
        logger.error(f"{config.experiment.value} failed: {str(e)}", exc_info=True)
        return exit_code_for(e)
    return ExitCode.OK
