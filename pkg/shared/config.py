"""Shared configuration settings for all modules."""

from functools import lru_cache
from typing import Literal

from pydantic import Field
from pydantic_settings import BaseSettings, PydanticBaseSettingsSource, SettingsConfigDict


class Settings(BaseSettings):
    """Numerics defaults shared by the simulation, estimation and harness layers."""

    # Tool identity (written into artifact headers)
    tool_name: str = "pppconc"
    tool_version: str = "0.1.0"

    # Composite Simpson panels for every intensity integral
    quadrature_panels: int = Field(default=2**14, ge=2)

    # Knots of the normalized CDF grid used by inverse-CDF sampling
    cdf_knots: int = Field(default=2**12 + 1, ge=3)

    # Nonnegativity check on intensity construction
    nonneg_check_points: int = Field(default=4097, ge=3)
    nonneg_tolerance: float = Field(default=1e-9, ge=0.0)

    # Relative agreement required between Simpson at N and N/2 panels
    quadrature_rtol: float = Field(default=1e-6, gt=0.0)

    log_level: Literal["DEBUG", "INFO", "WARNING", "ERROR"] = "INFO"

    model_config = SettingsConfigDict(extra="forbid", frozen=True)

    @classmethod
    def settings_customise_sources(
        cls,
        settings_cls: type[BaseSettings],
        init_settings: PydanticBaseSettingsSource,
        env_settings: PydanticBaseSettingsSource,
        dotenv_settings: PydanticBaseSettingsSource,
        file_secret_settings: PydanticBaseSettingsSource,
    ) -> tuple[PydanticBaseSettingsSource, ...]:
        # All state comes from flags or the config document, never the environment
        return (init_settings,)


@lru_cache
def get_settings() -> Settings:
    """Get cached base settings."""
    return Settings()
