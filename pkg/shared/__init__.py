"""Shared settings, logging, errors and artifact writers."""

from shared.artifacts import ArtifactHeader, read_csv, write_csv, write_json
from shared.config import Settings, get_settings
from shared.errors import (
    ConfigError,
    DomainError,
    ExitCode,
    InvariantViolation,
    ModelError,
    PPPConcError,
    QuadratureError,
)
from shared.logging_config import setup_logging

__all__ = [
    "ArtifactHeader",
    "ConfigError",
    "DomainError",
    "ExitCode",
    "InvariantViolation",
    "ModelError",
    "PPPConcError",
    "QuadratureError",
    "Settings",
    "get_settings",
    "read_csv",
    "setup_logging",
    "write_csv",
    "write_json",
]
