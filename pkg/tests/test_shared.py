"""Tests for shared settings, logging, errors and artifact writers."""

import json
import logging
import math

import numpy as np
import pytest
from pydantic import ValidationError

from shared.artifacts import (
    ArtifactHeader,
    config_hash,
    csv_body,
    format_value,
    read_csv,
    to_jsonable,
    write_csv,
    write_json,
)
from shared.config import Settings, get_settings
from shared.errors import (
    ConfigError,
    DomainError,
    ExitCode,
    InvariantViolation,
    ModelError,
    QuadratureError,
    exit_code_for,
)
from shared.logging_config import setup_logging


def test_settings_defaults():
    """Test the numerics defaults."""
    settings = get_settings()

    assert settings.quadrature_panels == 2**14
    assert settings.cdf_knots == 2**12 + 1
    assert settings.nonneg_check_points == 4097
    assert settings.nonneg_tolerance == 1e-9


def test_settings_cached():
    """Test that get_settings returns one instance."""
    assert get_settings() is get_settings()


def test_settings_ignore_environment(monkeypatch):
    """Test that environment variables never reach the settings."""
    monkeypatch.setenv("QUADRATURE_PANELS", "8")
    assert Settings().quadrature_panels == 2**14


def test_settings_reject_unknown_keys():
    """Test that unknown settings are rejected."""
    with pytest.raises(ValidationError):
        Settings(bogus=1)


def test_setup_logging_idempotent():
    """Test that repeated setup does not stack handlers."""
    logger = setup_logging("pppconc-test", "DEBUG")
    again = setup_logging("pppconc-test", "WARNING")

    assert logger is again
    assert len(logger.handlers) == 1
    assert logger.level == logging.WARNING


def test_invariant_violation_message():
    """Test that the message names the violated invariant."""
    err = InvariantViolation("total_mass", "1.0 vs 2.0")

    assert err.invariant == "total_mass"
    assert "invariant violated: total_mass" in str(err)
    assert "1.0 vs 2.0" in str(err)


def test_exit_codes():
    """Test the exception to exit status mapping."""
    assert exit_code_for(InvariantViolation("x")) is ExitCode.INVARIANT
    assert exit_code_for(FileNotFoundError("missing")) is ExitCode.IO
    assert exit_code_for(ConfigError("bad")) is ExitCode.CONFIG
    assert exit_code_for(ModelError("bad")) is ExitCode.CONFIG
    assert exit_code_for(DomainError("bad")) is ExitCode.CONFIG
    assert exit_code_for(QuadratureError("bad")) is ExitCode.CONFIG


def test_config_hash_is_order_independent():
    """Test that key order does not change the hash."""
    assert config_hash({"a": 1, "b": [1.5, 2]}) == config_hash({"b": [1.5, 2], "a": 1})
    assert config_hash({"a": 1}) != config_hash({"a": 2})


def test_format_value():
    """Test exact float formatting and booleans."""
    assert format_value(0.1) == "0.1"
    assert format_value(np.float64(1 / 3)) == repr(1 / 3)
    assert format_value(True) == "true"
    assert format_value(np.int64(7)) == "7"
    assert format_value(None) == ""


def test_to_jsonable():
    """Test numpy and non-finite conversion."""
    out = to_jsonable({"a": np.arange(3), "b": np.bool_(True), "c": math.inf})

    assert out == {"a": [0, 1, 2], "b": True, "c": "inf"}


def test_write_csv_roundtrip(tmp_path):
    """Test writing and reading a CSV artifact."""
    header = ArtifactHeader(experiment="demo", config_hash="abc", seed=7, notes=["hello"])
    path = write_csv(tmp_path / "out" / "demo.csv", header, ["x", "y"], [(1, 0.5), (2, 0.25)])

    meta, columns, rows = read_csv(path)
    assert meta["experiment"] == "demo"
    assert meta["seed"] == "7"
    assert meta["tool"] == "pppconc"
    assert meta["notes"] == "hello\n"
    assert columns == ["x", "y"]
    assert rows == [["1", "0.5"], ["2", "0.25"]]
    assert csv_body(path) == "x,y\n1,0.5\n2,0.25\n"
    assert not (tmp_path / "out" / "demo.csv.tmp").exists()


def test_write_csv_rejects_ragged_rows(tmp_path):
    """Test that a row of the wrong width is refused."""
    header = ArtifactHeader(experiment="demo", config_hash="abc")
    with pytest.raises(ValueError):
        write_csv(tmp_path / "demo.csv", header, ["x", "y"], [(1,)])


def test_write_json(tmp_path):
    """Test that the header lands under meta."""
    header = ArtifactHeader(experiment="demo", config_hash="abc", seed=1)
    path = write_json(tmp_path / "demo.json", header, {"value": np.float64(2.5)})

    doc = json.loads(path.read_text())
    assert doc["meta"]["experiment"] == "demo"
    assert doc["meta"]["config_hash"] == "abc"
    assert doc["value"] == 2.5
