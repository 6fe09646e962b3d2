"""Experiment configuration.

A single JSON document is read through pydantic-settings and CLI flags are
merged on top. Unknown keys are rejected and every field is validated before
any experiment runs.
"""

from __future__ import annotations

from enum import Enum
from pathlib import Path
from typing import Any, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PositiveInt, model_validator
from pydantic_settings import (
    BaseSettings,
    JsonConfigSettingsSource,
    PydanticBaseSettingsSource,
    SettingsConfigDict,
)

from pppconc.basis import GammaSequence
from pppconc.concentration.bounds import DEFAULT_C1, DEFAULT_C3
from pppconc.concentration.functions import FunctionClass
from pppconc.concentration.montecarlo import MIN_TAIL_REPLICATIONS
from pppconc.modelselect import PenaltyScale
from pppconc.pointprocess import IntensityFactory, IntensityFamily, IntensityModel
from shared.errors import ConfigError


class Experiment(str, Enum):
    """Harness subcommands."""

    SIMULATE = "simulate"
    COEFFS = "coeffs"
    ESTIMATE = "estimate"
    ADAPT = "adapt"
    RISK = "risk"
    CONC = "conc"
    BOUNDS_TABLE = "bounds-table"


class IntensitySpec(BaseModel):
    """Serialized intensity model: {family, params, label}."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    family: IntensityFamily
    params: dict[str, Any] = Field(default_factory=dict)
    label: str | None = None

    def build(self) -> IntensityModel:
        return IntensityFactory.create(self.family, self.params, self.label)


class XGridSpec(BaseModel):
    """Deviation grid: explicit values, or start..stop (inclusive) by step."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    values: list[float] | None = None
    start: float = Field(default=0.5, ge=0)
    stop: float = Field(default=8.0, ge=0)
    step: float = Field(default=0.5, gt=0)

    def expand(self) -> list[float]:
        if self.values is not None:
            return list(self.values)
        count = int(np.floor((self.stop - self.start) / self.step + 1e-9)) + 1
        return [self.start + i * self.step for i in range(max(count, 0))]

    @model_validator(mode="after")
    def _check(self) -> XGridSpec:
        grid = self.expand()
        if not grid or any(x < 0 for x in grid):
            raise ValueError("x grid must be nonempty and nonnegative")
        return self


class ExperimentConfig(BaseSettings):
    """Validated experiment document."""

    model_config = SettingsConfigDict(extra="forbid")

    experiment: Experiment
    model: IntensitySpec | None = None
    gamma: GammaSequence | None = None
    n_grid: list[PositiveInt] = Field(default_factory=lambda: [100], min_length=1)
    R: PositiveInt = 1
    seed: int = Field(default=0, ge=0, lt=2**64)

    # single-sample experiments
    J: int | None = Field(default=None, ge=0, description="Coefficient range for coeffs")
    k: int | None = Field(default=None, ge=0, description="Fixed projection dimension")
    grid_points: PositiveInt = 256

    # selection
    k_max: int | None = Field(default=None, ge=0, description="None: min(n, k_cap(n))")
    penalty_scale: PenaltyScale = PenaltyScale.EMPIRICAL

    # concentration
    function_class: FunctionClass | None = None
    x_grid: XGridSpec = Field(default_factory=XGridSpec)
    eps: float = Field(default=1.0, gt=0)
    t_grid: list[float] = Field(default_factory=lambda: [0.05, 0.1, 0.2])
    ball_dims: list[int] = Field(default_factory=list)
    c1: float = Field(default=DEFAULT_C1, gt=0)
    c3: float = Field(default=DEFAULT_C3, gt=0)

    # bounds-table
    upsilon: float = Field(default=1.0, gt=0)
    upsilon0: float | None = Field(default=None, gt=0)

    # execution
    out_dir: Path = Path("out")
    threads: PositiveInt = 1
    log_level: Literal["DEBUG", "INFO", "WARNING", "ERROR"] = "INFO"

    @classmethod
    def settings_customise_sources(
        cls,
        settings_cls: type[BaseSettings],
        init_settings: PydanticBaseSettingsSource,
        env_settings: PydanticBaseSettingsSource,
        dotenv_settings: PydanticBaseSettingsSource,
        file_secret_settings: PydanticBaseSettingsSource,
    ) -> tuple[PydanticBaseSettingsSource, ...]:
        # JSON is merged by load(); the environment is never consulted
        return (init_settings,)

    @model_validator(mode="after")
    def _check_experiment(self) -> ExperimentConfig:
        needs_model = self.experiment is not Experiment.BOUNDS_TABLE
        if needs_model and self.model is None:
            raise ValueError(f"experiment {self.experiment.value} needs a model")
        if self.experiment is Experiment.RISK and self.gamma is None:
            raise ValueError("risk experiment needs a gamma sequence")
        if self.experiment is Experiment.CONC:
            if self.function_class is None:
                raise ValueError("conc experiment needs a function_class")
            if self.R < MIN_TAIL_REPLICATIONS:
                raise ValueError(
                    f"conc needs R >= {MIN_TAIL_REPLICATIONS} for meaningful binomial SEs"
                )
        if self.experiment is Experiment.ESTIMATE and self.k is None and self.gamma is None:
            raise ValueError("estimate needs a dimension k or a gamma sequence for the oracle")
        if any(t < 0 for t in self.t_grid):
            raise ValueError("t grid must be nonnegative")
        if any(k < 0 for k in self.ball_dims):
            raise ValueError("ball dimensions must be nonnegative")
        if self.penalty_scale is PenaltyScale.ORACLE and self.model is None:
            raise ValueError("oracle penalty scale needs a model")
        return self

    @property
    def n(self) -> int:
        """Sample size of single-sample experiments."""
        return self.n_grid[0]

    def hash_payload(self) -> dict[str, Any]:
        """Fields that determine the numeric output (execution knobs excluded)."""
        return self.model_dump(mode="json", exclude={"out_dir", "threads", "log_level"})

    @classmethod
    def load(
        cls,
        path: str | Path | None = None,
        overrides: dict[str, Any] | None = None,
    ) -> ExperimentConfig:
        """Read the JSON document at ``path`` and apply non-None ``overrides``."""
        data: dict[str, Any] = {}
        if path is not None:
            json_path = Path(path)
            if not json_path.is_file():
                raise FileNotFoundError(f"config file not found: {json_path}")
            data = dict(JsonConfigSettingsSource(cls, json_file=json_path)())
        for key, value in (overrides or {}).items():
            if value is not None:
                data[key] = value
        if "experiment" not in data:
            raise ConfigError("config names no experiment")
        return cls(**data)
