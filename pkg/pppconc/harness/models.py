"""Result models written to the JSON summaries."""

from pydantic import BaseModel, Field


class RateFit(BaseModel):
    """Log-log least-squares fit of median MISE against n."""

    n_grid: list[int]
    median_mise: list[float]
    slope: float
    intercept: float
    residual_rms: float = Field(description="RMS residual of the retained points")
    dropped_n: list[int] = Field(default_factory=list)
    target_exponent: float
    target_label: str
    slope_tolerance: float = 0.15
    slope_ok: bool
    normalized_spread: float | None = Field(
        default=None, description="max/min over n of median * n / log n"
    )
    spread_target: float = 3.0
    spread_ok: bool | None = None


class RiskSummary(BaseModel):
    """Oracle and adaptive rate fits with per-n diagnostics."""

    oracle: RateFit
    adaptive: RateFit
    k_star: list[int]
    psi_n: list[float]
    adaptive_over_oracle: list[float] = Field(description="median adaptive / median oracle")
    range_edge_hits: list[int] = Field(description="replications with k_hat == k_max, per n")
    k_max: list[int]


class AdaptSummary(BaseModel):
    """One adaptive run."""

    n: int
    k_max: int
    k_hat: int
    pen_scale: float
    at_range_edge: bool
    mise_if_truth_known: float
    xi: bool


class EstimateSummary(BaseModel):
    n: int
    k: int
    oracle_k: bool = Field(description="k taken from the oracle dimension")
    mise: float
    mise_positive_part: float


class CheckResult(BaseModel):
    """A named pass/fail comparison."""

    name: str
    value: float
    bound: float
    se: float = 0.0
    passed: bool


class ConcSummary(BaseModel):
    n: int
    R: int
    class_size: int
    symmetric: bool
    EZ_hat: float
    EZ_se: float
    EZ_abs_hat: float
    V: float
    upsilon: float
    upsilon_plus: float
    upsilon0: float
    flag_count: int
    flags: list[tuple[float, str]]
    variance_check: CheckResult
    mgf_checks: list[CheckResult]
    ball_excess: list[CheckResult] = Field(default_factory=list)
