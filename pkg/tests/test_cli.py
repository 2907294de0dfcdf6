"""Tests for the CLI module."""

from unittest.mock import patch

import pandas as pd
import pytest

from nru_offload.cli import create_main_parser, load_scenario, main
from nru_offload.config import ConfigManager, ScenarioConfig, parse_scenario_text
from nru_offload.export import RunManifest, read_manifest
from nru_offload.pipeline import REPORT_COLUMNS
from nru_offload.validation import CheckResult, ValidationReport


@pytest.fixture(autouse=True)
def isolated(tmp_path, monkeypatch):
    """Run every command in an empty directory without default config files."""
    monkeypatch.chdir(tmp_path)
    monkeypatch.setattr(ConfigManager, "DEFAULT_CONFIG_PATHS", [])
    for name in ("NRU_OFFLOAD_SEED", "NRU_OFFLOAD_JOBS", "NRU_OFFLOAD_LOG_LEVEL"):
        monkeypatch.delenv(name, raising=False)


@pytest.fixture
def config_file(tmp_path):
    """A YAML scenario overriding the minimum rate."""
    path = tmp_path / "scenario.yaml"
    path.write_text("traffic:\n  min_rate: 7.5e+7\n", encoding="utf-8")
    return path


class TestCreateParser:
    """Tests for the create_main_parser function."""

    def test_parser_creation(self):
        """Test that parser is created with expected commands."""
        parser = create_main_parser()
        assert parser.prog == "nru-offload"

    def test_version_argument(self):
        """Test version argument."""
        parser = create_main_parser()
        with patch("sys.stdout"):
            with pytest.raises(SystemExit) as exc_info:
                parser.parse_args(["--version"])
            assert exc_info.value.code == 0

    def test_common_options(self):
        """Test options shared by every subcommand."""
        parser = create_main_parser()
        args = parser.parse_args(["point", "-c", "s.toml", "-o", "out", "-j", "4", "--seed", "3", "-q"])
        assert args.command == "point"
        assert str(args.config) == "s.toml"
        assert str(args.out) == "out"
        assert args.jobs == 4
        assert args.seed == 3
        assert args.quiet is True

    def test_sweep_arguments(self):
        """Test sweep command arguments."""
        parser = create_main_parser()
        args = parser.parse_args(
            ["sweep", "--parameter", "min_rate", "--values", "5e7,1e8", "--target-loss", "0.1", "--no-plot"]
        )
        assert args.parameter == "min_rate"
        assert args.values == "5e7,1e8"
        assert args.target_loss == 0.1
        assert args.no_plot is True

    def test_invalid_strategy(self):
        """Test strategy choices are enforced."""
        parser = create_main_parser()
        with patch("sys.stderr"):
            with pytest.raises(SystemExit):
                parser.parse_args(["point", "--strategy", "medium"])


class TestLoadScenario:
    """Tests for command-line overrides."""

    def test_overrides(self, config_file):
        """Test seed, jobs and strategy overrides on top of a file."""
        args = create_main_parser().parse_args(
            ["point", "-c", str(config_file), "--seed", "5", "-j", "2", "--strategy", "fat"]
        )
        scenario = load_scenario(args)
        assert scenario.traffic.min_rate == 75e6
        assert scenario.validation.seed == 5
        assert scenario.sweep.jobs == 2
        assert scenario.strategies.evaluate == ("fat",)

    def test_all_strategies(self):
        """Test the 'all' strategy choice."""
        args = create_main_parser().parse_args(["point", "--strategy", "all"])
        assert load_scenario(args).strategies.evaluate == ("baseline", "fat", "slim")


class TestMain:
    """Tests for the main entry point."""

    def test_no_command(self, capsys):
        """Test help is printed without a command."""
        assert main([]) == 2
        assert "usage" in capsys.readouterr().out

    def test_mcs_without_subcommand(self):
        """Test the mcs group needs a subcommand."""
        assert main(["mcs"]) == 2

    def test_dump_config(self, capsys):
        """Test the effective configuration parses back."""
        assert main(["point", "--dump-config", "-q"]) == 0
        assert parse_scenario_text(capsys.readouterr().out) == ScenarioConfig()

    def test_dump_config_keeps_stdout_clean(self, capsys):
        """Test the dump parses back without quiet mode while logs share stdout."""
        assert main(["point", "--dump-config"]) == 0
        assert parse_scenario_text(capsys.readouterr().out) == ScenarioConfig()

    def test_mcs_dump_raw(self, capsys):
        """Test the raw MCS table output."""
        assert main(["mcs", "dump", "--raw", "-q"]) == 0
        out = capsys.readouterr().out
        assert "-8.97" in out
        assert "nr_28ghz.mcs" in out

    def test_missing_config(self, tmp_path):
        """Test a missing config file exits with the configuration code."""
        assert main(["point", "-c", str(tmp_path / "absent.toml"), "-q"]) == 2

    def test_unknown_stage(self):
        """Test an unknown validation stage."""
        assert main(["validate", "--stages", "bogus", "-q"]) == 2

    def test_sweep_needs_values(self, tmp_path):
        """Test sweeping another parameter without a grid."""
        assert main(["sweep", "--parameter", "min_rate", "-o", str(tmp_path / "out"), "-q"]) == 2

    def test_bad_grid(self, tmp_path):
        """Test a non-numeric grid."""
        assert main(["sweep", "--values", "a,b", "-o", str(tmp_path / "out"), "-q"]) == 2

    def test_point(self, tmp_path):
        """Test the point command writes results and a manifest."""
        out = tmp_path / "point"
        assert main(["point", "-o", str(out), "-q"]) == 0
        frame = pd.read_csv(out / "results.csv")
        assert tuple(frame.columns) == REPORT_COLUMNS
        assert list(frame["strategy"]) == ["baseline", "fat", "slim"]
        entries = read_manifest(out / "manifest.txt")
        assert [e.path for e in entries] == ["results.csv"]
        assert RunManifest("point", out, entries=entries).verify() == []

    def test_sweep(self, tmp_path):
        """Test a minimum-rate sweep with its plot script."""
        out = tmp_path / "sweep"
        code = main([
            "sweep", "--parameter", "min_rate", "--values", "5e7,1e8",
            "--strategy", "baseline", "-o", str(out), "-q",
        ])
        assert code == 0
        frame = pd.read_csv(out / "results.csv")
        assert list(frame["value"]) == [5e7, 1e8]
        assert (out / "plot_min_rate.gp").exists()
        assert {e.path for e in read_manifest(out / "manifest.txt")} == {"results.csv", "plot_min_rate.gp"}

    def test_density_sweep(self, tmp_path):
        """Test a density sweep reports the minimal densities."""
        out = tmp_path / "density"
        code = main([
            "sweep", "--values", "5e-5,1e-4", "--target-loss", "1.0",
            "--strategy", "slim", "--no-plot", "-o", str(out), "-q",
        ])
        assert code == 0
        targets = pd.read_csv(out / "target_density.csv")
        assert list(targets["strategy"]) == ["slim"]
        assert targets["minimal_density"].iloc[0] == pytest.approx(5e-5)
        assert not (out / "plot_bs_density.gp").exists()

    def test_validate_pipeline(self, tmp_path):
        """Test a passing validation stage exits 0 and writes its table."""
        out = tmp_path / "validate"
        assert main(["validate", "--stages", "pipeline", "-o", str(out), "-q"]) == 0
        frame = pd.read_csv(out / "validation.csv")
        assert set(frame["stage"]) == {"pipeline"}
        assert frame["passed"].all()

    def test_validate_failure_exit_code(self, tmp_path):
        """Test a failing gating check exits 4 after writing its table."""
        report = ValidationReport([
            CheckResult("lbt", "collision probability", 0.30, 0.20, 0.02, passed=False),
            CheckResult("trend", "informational", 1.0, 0.0, 0.0, passed=False, gating=False),
        ])
        out = tmp_path / "failing"
        with patch("nru_offload.cli.run_validation", return_value=report):
            assert main(["validate", "--stages", "lbt", "-o", str(out), "-q"]) == 4
        frame = pd.read_csv(out / "validation.csv")
        assert list(frame["passed"]) == [False, False]
        assert any(e.path == "validation.csv" for e in read_manifest(out / "manifest.txt"))
