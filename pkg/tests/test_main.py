import json

import pytest
from unittest.mock import MagicMock, patch

from app.api.schemas.experiment_schemas import ExperimentTally, MergeSummary, ReportRow
from app.core.errors import PreconditionError, ReportFormatError, UsageError
from app.main import build_parser, create_lab, load_configs, main
from app.core.config import Settings


def make_row(status):
    return ReportRow(run_id="abc", experiment="normality-scan", row=0, case="ratio", seed=0,
                     status=status, witness=None if status == "PASS" else {"x": 1})


@pytest.fixture
def mock_runner():
    runner = MagicMock()
    runner.run.return_value = [make_row("PASS")]
    with patch("app.main.create_lab", return_value=runner):
        yield runner


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    for name in ("LATLAB_OUT_DIR", "LATLAB_SEED", "LATLAB_LOG_LEVEL", "LATLAB_REPORT_DB"):
        monkeypatch.delenv(name, raising=False)


def test_run_exits_zero_when_every_row_passes(mock_runner):
    assert main(["normality-scan"]) == 0
    (config,), _ = mock_runner.run.call_args
    assert config.experiment == "normality-scan"


def test_run_exits_one_on_a_fail_row(mock_runner):
    mock_runner.run.return_value = [make_row("PASS"), make_row("FAIL")]

    assert main(["normality-scan", "renorm-audit"]) == 1
    assert mock_runner.run.call_count == 2


def test_seed_flag_applies_to_every_experiment(mock_runner):
    main(["renorm-audit", "normality-scan", "--seed", "9"])

    experiments = sorted(call.args[0].experiment for call in mock_runner.run.call_args_list)
    assert experiments == ["normality-scan", "renorm-audit"]
    assert {call.args[0].seed for call in mock_runner.run.call_args_list} == {9}


@pytest.mark.parametrize("argv", [
    [],
    ["no-such-experiment"],
    ["normality-scan", "--seed", "-3"],
    ["normality-scan", "--config", "missing.json"],
])
def test_usage_errors_exit_two(mock_runner, argv):
    assert main(argv) == 2
    mock_runner.run.assert_not_called()


def test_config_file_supplies_experiment_and_fields(tmp_path):
    # Arrange
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"experiment": "renorm-audit", "domain": {"kind": "interval", "n": 8}, "seed": 2}))
    args = build_parser().parse_args(["--config", str(path), "--out", "out"])

    # Act
    (config,) = load_configs(args, Settings())

    # Assert
    assert config.experiment == "renorm-audit"
    assert config.domain.n == 8
    assert config.seed == 2
    assert config.out == "out"


def test_settings_seed_is_the_default(tmp_path):
    args = build_parser().parse_args(["normality-scan"])

    (config,) = load_configs(args, Settings(seed=13))

    assert config.seed == 13


def test_merge_prints_summary(mock_runner, capsys):
    mock_runner.report_merge.return_value = MergeSummary(
        status="PASS", experiments={"normality-scan": ExperimentTally(passed=3, runs=["abc"])}
    )

    assert main(["merge", "a.csv", "b.csv"]) == 0

    mock_runner.report_merge.assert_called_once_with(["a.csv", "b.csv"])
    printed = json.loads(capsys.readouterr().out)
    assert printed["experiments"]["normality-scan"]["pass"] == 3


def test_merge_exits_one_on_fail(mock_runner):
    mock_runner.report_merge.return_value = MergeSummary(status="FAIL", experiments={})

    assert main(["merge", "a.csv"]) == 1


def test_merge_of_malformed_report_exits_one(mock_runner):
    mock_runner.report_merge.side_effect = ReportFormatError("bad row", "a.csv", 3)

    assert main(["merge", "a.csv"]) == 1


def test_merge_without_paths_is_a_usage_error(mock_runner):
    with pytest.raises(SystemExit) as error:
        main(["merge"])

    assert error.value.code == 2


def test_invalid_environment_exits_two(mock_runner, monkeypatch):
    monkeypatch.setenv("LATLAB_LOG_LEVEL", "chatty")

    assert main(["normality-scan"]) == 2


def test_non_numeric_seed_in_environment_exits_two(mock_runner, monkeypatch):
    monkeypatch.setenv("LATLAB_SEED", "seven")

    assert main(["normality-scan"]) == 2
    mock_runner.run.assert_not_called()


@pytest.mark.parametrize("params", [
    {"generator": {"kind": "multiplication"}},
    {"samples": 0},
    {"samples": "many"},
    {"eps": [2.0]},
    {"unknown_knob": 1},
])
def test_invalid_params_exit_two_with_field_diagnostics(mock_runner, tmp_path, params):
    # Arrange
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"experiment": "extrapolation-demo", "params": params}))
    args = build_parser().parse_args(["--config", str(path)])

    # Act
    with pytest.raises(UsageError) as error:
        load_configs(args, Settings())

    # Assert
    assert main(["--config", str(path)]) == 2
    assert any(field.startswith("params") for field in error.value.fields)
    mock_runner.run.assert_not_called()


def test_alias_runs_the_registered_experiment(mock_runner):
    assert main(["dominant-demo"]) == 0

    (config,), _ = mock_runner.run.call_args
    assert config.experiment == "prop35-demo"


@pytest.mark.parametrize("error, code", [
    (PreconditionError("lambda must be positive"), 1),
    (UsageError("no handler"), 2),
])
def test_errors_from_a_run_keep_their_exit_code(mock_runner, error, code):
    mock_runner.run.side_effect = error

    assert main(["normality-scan", "renorm-audit"]) == code


def test_create_lab_uses_the_configured_report_database(tmp_path):
    # Arrange
    path = tmp_path / "reports.db"
    settings = Settings(out_dir=str(tmp_path / "results"), report_db=str(path))

    # Act
    lab = create_lab(settings)

    # Assert
    assert lab.dependency.db.database.database == str(path)
    assert lab.dependency.db.database.table_exists("report_rows")
    assert path.exists()
    lab.dependency.db.close()
