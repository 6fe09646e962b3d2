"""Empirical-process concentration: function classes, closed-form bounds, Monte-Carlo checks."""

from pppconc.concentration.bounds import (
    BallConstants,
    C_eps,
    ball_constants,
    bound_abs_sup,
    bound_integrated,
    bound_left_lmgf,
    bound_left_tail,
    bound_nu_deviation,
    bound_right_lmgf,
    bound_right_log,
    bound_right_tail,
    c_eps,
    h,
    kappa,
)
from pppconc.concentration.functions import (
    ConstantFn,
    FunctionClass,
    ScaledTrig,
    StepFn,
    centered_integral,
    sn_statistic,
    wimpy_variance,
)
from pppconc.concentration.montecarlo import (
    ConcParams,
    TailReport,
    ZSamples,
    ball_excess_check,
    conc_params,
    integrated_excess,
    mc_ball_stats,
    mc_sup_samples,
    mgf_check,
    variance_check,
    verify_tails,
)

__all__ = [
    "BallConstants",
    "C_eps",
    "ConcParams",
    "ConstantFn",
    "FunctionClass",
    "ScaledTrig",
    "StepFn",
    "TailReport",
    "ZSamples",
    "ball_constants",
    "ball_excess_check",
    "bound_abs_sup",
    "bound_integrated",
    "bound_left_lmgf",
    "bound_left_tail",
    "bound_nu_deviation",
    "bound_right_lmgf",
    "bound_right_log",
    "bound_right_tail",
    "c_eps",
    "centered_integral",
    "conc_params",
    "h",
    "integrated_excess",
    "kappa",
    "mc_ball_stats",
    "mc_sup_samples",
    "mgf_check",
    "sn_statistic",
    "variance_check",
    "verify_tails",
    "wimpy_variance",
]
