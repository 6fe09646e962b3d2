"""Tests for experiment configuration, runners and the command line."""

import json
import math

import pytest
from pydantic import ValidationError

from pppconc.basis import GammaSequence
from pppconc.concentration.functions import FunctionClass
from pppconc.estimator import rate_target
from pppconc.harness import experiments
from pppconc.harness.cli import build_parser, main
from pppconc.harness.config import Experiment, ExperimentConfig, XGridSpec
from pppconc.harness.experiments import (
    RISK_COLUMNS,
    fit_rate,
    resolve_k_max,
    risk_sweep,
    run,
    run_experiment,
)
from pppconc.parallel import ReplicationPool
from pppconc.pointprocess import ConstantIntensity
from shared.artifacts import csv_body, read_csv
from shared.errors import DomainError, ExitCode, InvariantViolation, exit_code_for

CONST2 = {"family": "constant", "params": {"c": 2.0}}
CONST3 = {"family": "constant", "params": {"c": 3.0}}
COSINE = {"family": "finite-fourier", "params": {"coeffs": [0.0, 2.0, 1.0 / math.sqrt(2.0)]}}
POLY2 = {"family": "polynomial", "p": 2.0}
SINGLETON_ONE = {"members": [{"kind": "constant", "c": 1.0}]}
SOBOLEV2 = {"family": "sobolev-decay", "params": {"p": 2.0, "a": 30.0, "base": 39.0}}


def _config(tmp_path, **fields) -> ExperimentConfig:
    return ExperimentConfig(out_dir=tmp_path, **fields)


def _write(tmp_path, doc: dict) -> str:
    path = tmp_path / "config.json"
    path.write_text(json.dumps(doc))
    return str(path)


def test_config_rejects_unknown_key():
    """Test extra="forbid" on the experiment document."""
    with pytest.raises(ValidationError):
        ExperimentConfig(experiment="simulate", model=CONST3, colour="blue")


def test_config_requires_model():
    """Test that sampling experiments need a model."""
    with pytest.raises(ValidationError):
        ExperimentConfig(experiment="simulate")
    assert ExperimentConfig(experiment="bounds-table").model is None


def test_config_conc_needs_replications():
    """Test the R >= 1000 floor for tail verification."""
    with pytest.raises(ValidationError) as info:
        ExperimentConfig(experiment="conc", model=CONST3, function_class=SINGLETON_ONE, R=10)
    assert exit_code_for(info.value) is ExitCode.CONFIG


def test_config_risk_needs_gamma():
    """Test that the risk experiment needs weights."""
    with pytest.raises(ValidationError):
        ExperimentConfig(experiment="risk", model=CONST3)


def test_config_parses_nested_models():
    """Test intensity, gamma and function-class parsing."""
    config = ExperimentConfig(
        experiment="conc",
        model=COSINE,
        gamma=POLY2,
        function_class={"members": [{"kind": "scaled-trig", "j": 1}, {"kind": "constant", "c": 1}]},
        R=1000,
    )

    assert config.model.build().total_mass == 2.0
    assert config.gamma.p == 2.0
    assert config.function_class.size == 2
    assert config.n == 100


def test_x_grid_expand():
    """Test explicit and ranged deviation grids."""
    assert XGridSpec(start=0.0, stop=2.0, step=1.0).expand() == [0.0, 1.0, 2.0]
    assert XGridSpec(values=[3.0]).expand() == [3.0]
    assert len(XGridSpec().expand()) == 16
    with pytest.raises(ValidationError):
        XGridSpec(values=[])


def test_load_with_overrides(tmp_path):
    """Test that non-None overrides win over the JSON document."""
    path = _write(tmp_path, {"experiment": "simulate", "model": CONST3, "seed": 1})
    config = ExperimentConfig.load(path, {"seed": 9, "threads": None})

    assert config.seed == 9
    assert config.threads == 1
    assert config.experiment is Experiment.SIMULATE


def test_load_missing_file(tmp_path):
    """Test that a missing document is an IO failure."""
    with pytest.raises(FileNotFoundError) as info:
        ExperimentConfig.load(tmp_path / "absent.json")
    assert exit_code_for(info.value) is ExitCode.IO


def test_hash_ignores_execution_knobs(tmp_path):
    """Test that threads and out_dir do not enter the config hash payload."""
    one = _config(tmp_path, experiment="simulate", model=CONST3, threads=1)
    four = _config(tmp_path / "b", experiment="simulate", model=CONST3, threads=4)

    assert one.hash_payload() == four.hash_payload()


def test_resolve_k_max():
    """Test the default cap and the clip at n."""
    assert resolve_k_max(10, None) == 10
    assert resolve_k_max(1000, None) == 192
    assert resolve_k_max(5, 3) == 3
    assert resolve_k_max(2, 7) == 2


def test_resolve_k_max_warns_on_clip(caplog):
    """Test that clipping a configured k_max is logged and an unset one is silent."""
    with caplog.at_level("WARNING", logger="pppconc.harness"):
        assert resolve_k_max(4, None) == 4
        assert "clipped" not in caplog.text
        assert resolve_k_max(2, 7) == 2
    assert "k_max=7 exceeds n=2; clipped to 2" in caplog.text


def test_fit_rate_exact_power_law():
    """Test the slope on exact n^-0.8 data."""
    ns = [100, 1000, 10_000, 100_000]
    fit = fit_rate(ns, [3.0 * n**-0.8 for n in ns], rate_target(GammaSequence(**POLY2)))

    assert fit.slope == pytest.approx(-0.8)
    assert fit.dropped_n == []
    assert fit.residual_rms == pytest.approx(0.0, abs=1e-9)
    assert fit.target_exponent == pytest.approx(-0.8)
    assert fit.slope_ok


def test_fit_rate_drops_pre_asymptotic_point():
    """Test that a far-off smallest n is dropped and the fit repeated."""
    ns = [2**k for k in range(4, 14)]
    medians = [n**-0.8 for n in ns]
    medians[0] *= 10.0
    fit = fit_rate(ns, medians, rate_target(GammaSequence(**POLY2)))

    assert fit.dropped_n == [16]
    assert fit.slope == pytest.approx(-0.8)
    assert fit.slope_ok


def test_fit_rate_single_point():
    """Test that one sample size leaves the slope undefined."""
    fit = fit_rate([50], [0.1], rate_target(GammaSequence(**POLY2)))

    assert math.isnan(fit.slope)
    assert not fit.slope_ok


def test_risk_sweep_rows():
    """Test two rows per replication, sharing each draw."""
    result = risk_sweep(ConstantIntensity(3.0), GammaSequence(**POLY2), [20, 40], 3, 5)

    assert len(result.rows) == 2 * 3 * 2
    assert {row[-1] for row in result.rows} == {"oracle", "adaptive"}
    assert len(RISK_COLUMNS) == len(result.rows[0])
    assert result.summary.k_max == [20, 40]


def test_bounds_table_run(tmp_path):
    """Test bound values for upsilon = 1 at x = 0, 1, 2."""
    config = _config(tmp_path, experiment="bounds-table", x_grid={"values": [0.0, 1.0, 2.0]})

    assert run(config) is ExitCode.OK
    meta, columns, rows = read_csv(tmp_path / "bounds-table.csv")
    assert meta["experiment"] == "bounds-table"
    assert columns[0] == "x"
    assert all(float(v) == 1.0 for v in rows[0][1:])
    right_loose = columns.index("right_loose")
    assert float(rows[1][right_loose]) == pytest.approx(math.exp(-0.2))
    assert not (tmp_path / "bounds-table.json").exists()


def test_simulate_run(tmp_path):
    """Test the pattern CSV and count summary."""
    config = _config(tmp_path, experiment="simulate", model=CONST3, n_grid=[5], seed=1)
    run_experiment(config)

    summary = json.loads((tmp_path / "simulate.json").read_text())
    _, columns, rows = read_csv(tmp_path / "simulate.csv")
    assert columns == ["pattern", "x"]
    assert summary["n"] == 5
    assert len(rows) == sum(summary["counts"])
    assert summary["meta"]["seed"] == 1


def test_coeffs_run(tmp_path):
    """Test one row per index and exact true coefficients."""
    config = _config(tmp_path, experiment="coeffs", model=COSINE, n_grid=[50], J=3)
    run_experiment(config)

    _, columns, rows = read_csv(tmp_path / "coeffs.csv")
    assert columns == ["j", "beta_hat", "beta_true"]
    assert [int(r[0]) for r in rows] == list(range(-3, 4))
    assert float(rows[3][2]) == 2.0


def test_estimate_run(tmp_path):
    """Test the estimate grid and its risk summary."""
    config = _config(
        tmp_path, experiment="estimate", model=COSINE, n_grid=[200], k=1, grid_points=16
    )
    run_experiment(config)

    summary = json.loads((tmp_path / "estimate.json").read_text())
    _, _, rows = read_csv(tmp_path / "estimate.csv")
    assert len(rows) == 17
    assert summary["k"] == 1
    assert not summary["oracle_k"]
    assert summary["mise_positive_part"] <= summary["mise"] + 1e-9


def test_estimate_run_oracle_dimension(tmp_path):
    """Test that k falls back to the oracle dimension."""
    config = _config(tmp_path, experiment="estimate", model=CONST3, gamma=POLY2, n_grid=[1000])
    run_experiment(config)

    summary = json.loads((tmp_path / "estimate.json").read_text())
    assert summary["k"] == 4
    assert summary["oracle_k"]


def test_adapt_run(tmp_path):
    """Test the criterion trace and the adaptive summary."""
    config = _config(tmp_path, experiment="adapt", model=COSINE, n_grid=[100], k_max=6)
    run_experiment(config)

    summary = json.loads((tmp_path / "adapt.json").read_text())
    _, columns, rows = read_csv(tmp_path / "adapt.csv")
    assert columns == ["k", "contrast", "penalty", "criterion"]
    assert len(rows) == 7
    assert 0 <= summary["k_hat"] <= 6
    assert summary["k_max"] == 6


def test_risk_smoke(tmp_path):
    """Test R = 1, n = 1."""
    config = _config(tmp_path, experiment="risk", model=CONST3, gamma=POLY2, n_grid=[1], R=1)

    assert run(config) is ExitCode.OK
    _, columns, rows = read_csv(tmp_path / "risk.csv")
    assert columns == RISK_COLUMNS
    assert len(rows) == 2
    summary = json.loads((tmp_path / "risk.json").read_text())
    assert summary["k_star"] == [0]


def test_conc_run(tmp_path):
    """Test the tail report for {1} under lambda = 5 at n = 1."""
    config = _config(
        tmp_path,
        experiment="conc",
        model={"family": "constant", "params": {"c": 5.0}},
        function_class=SINGLETON_ONE,
        n_grid=[1],
        R=2000,
        x_grid={"values": [1.0, 3.0]},
        ball_dims=[0],
    )
    run_experiment(config)

    summary = json.loads((tmp_path / "conc.json").read_text())
    meta, columns, rows = read_csv(tmp_path / "conc.csv")
    assert summary["flag_count"] == 0
    assert summary["EZ_hat"] == 0.0
    assert summary["V"] == 5.0
    assert len(summary["ball_excess"]) == 1
    assert "exact_right" in columns
    assert len(rows) == 2
    assert "EZ = 0 exactly" in meta["notes"]


@pytest.mark.parametrize(
    "fields",
    [
        {"experiment": "risk", "model": COSINE, "gamma": POLY2, "n_grid": [20, 40], "R": 40},
        {
            "experiment": "conc",
            "model": COSINE,
            "function_class": SINGLETON_ONE,
            "n_grid": [3],
            "R": 1000,
        },
        {
            "experiment": "conc",
            "model": CONST2,
            "function_class": FunctionClass.symmetric_trig(2),
            "n_grid": [10],
            "R": 5000,
        },
        {
            "experiment": "risk",
            "model": SOBOLEV2,
            "gamma": POLY2,
            "n_grid": [128, 256],
            "R": 16,
            "k_max": 40,
        },
    ],
)
def test_output_independent_of_threads(tmp_path, monkeypatch, fields):
    """Test byte-identical CSV bodies for one and four threads."""
    monkeypatch.setattr(experiments, "_pool", lambda c: ReplicationPool(c.threads, chunk_size=8))
    bodies = []
    for threads in (1, 4):
        out = tmp_path / f"t{threads}"
        paths = run_experiment(_config(out, threads=threads, **fields))
        bodies.append(csv_body(paths[0]))

    assert bodies[0] == bodies[1]


def test_run_maps_invariant_violation(tmp_path, monkeypatch):
    """Test that a failed post-condition exits with status 4."""

    def broken(config):
        raise InvariantViolation("selection argmin", "k=2 beats k_hat=1")

    monkeypatch.setitem(experiments.RUNNERS, Experiment.SIMULATE, broken)
    config = _config(tmp_path, experiment="simulate", model=CONST3)

    assert run(config) is ExitCode.INVARIANT


def test_run_maps_runner_failures(tmp_path, monkeypatch):
    """Test status 2 for a precondition failure and 3 for a write failure."""
    config = _config(tmp_path, experiment="simulate", model=CONST3)

    def out_of_domain(config):
        raise DomainError("k_max=9 exceeds the sample size n=3")

    def unwritable(config):
        raise PermissionError("out is read-only")

    monkeypatch.setitem(experiments.RUNNERS, Experiment.SIMULATE, out_of_domain)
    assert run(config) is ExitCode.CONFIG
    monkeypatch.setitem(experiments.RUNNERS, Experiment.SIMULATE, unwritable)
    assert run(config) is ExitCode.IO


def test_cli_parser_subcommands():
    """Test that every experiment has a subcommand."""
    parser = build_parser()
    for experiment in Experiment:
        args = parser.parse_args([experiment.value, "--seed", "3"])
        assert args.experiment == experiment.value
        assert args.seed == 3


def test_cli_bounds_table(tmp_path):
    """Test a full CLI run writing its CSV."""
    path = _write(tmp_path, {"experiment": "bounds-table", "x_grid": {"values": [0.0, 1.0]}})

    assert main(["bounds-table", "--config", path, "--out", str(tmp_path / "out")]) == 0
    assert (tmp_path / "out" / "bounds-table.csv").is_file()


def test_cli_subcommand_overrides_document(tmp_path):
    """Test that the subcommand names the experiment run."""
    path = _write(tmp_path, {"experiment": "simulate", "x_grid": {"values": [1.0]}})

    assert main(["bounds-table", "--config", path, "--out", str(tmp_path)]) == 0
    assert (tmp_path / "bounds-table.csv").is_file()


def test_cli_exit_codes(tmp_path):
    """Test status 3 for a missing document and 2 for an invalid one."""
    assert main(["simulate", "--config", str(tmp_path / "absent.json")]) == ExitCode.IO

    path = _write(tmp_path, {"experiment": "conc", "model": CONST3, "R": 10})
    assert main(["conc", "--config", path, "--out", str(tmp_path)]) == ExitCode.CONFIG


def test_cli_reproducible(tmp_path):
    """Test that the same seed gives byte-identical output."""
    path = _write(tmp_path, {"experiment": "simulate", "model": CONST3, "n_grid": [10]})
    for name in ("a", "b"):
        out = str(tmp_path / name)
        assert main(["simulate", "--config", path, "--seed", "7", "--out", out]) == 0

    assert csv_body(tmp_path / "a" / "simulate.csv") == csv_body(tmp_path / "b" / "simulate.csv")
