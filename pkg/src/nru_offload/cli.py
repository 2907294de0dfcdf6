#!/usr/bin/env python3
"""Command-line interface for the NR-U offloading engine.

Subcommands evaluate one scenario (``point``), sweep a parameter (``sweep``),
cross-check every stage against its oracle (``validate``) and print the MCS
tables in use (``mcs dump``).
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

import pandas as pd
from rich.console import Console
from rich.table import Table

from . import __version__
from . import constants as C
from .chanstat import load_mcs_table
from .config import STRATEGIES, SWEEP_PARAMETERS, ConfigManager, ScenarioConfig, dump_scenario
from .exceptions import EXIT_CONFIG, EXIT_OK, ConfigError, NruOffloadError, ValidationMismatchError
from .export import RunManifest, gnuplot_script, write_csv, write_text
from .logger import level_from_name, setup_logger
from .pipeline import REPORT_COLUMNS, density_sweep, evaluate_point, parameter_sweep, reports_frame
from .validation import STAGES, run_validation

logger = logging.getLogger(__name__)


def _add_common_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", "-c", type=Path, help="Scenario file (TOML or YAML)")
    parser.add_argument("--out", "-o", type=Path, default=Path("results"), help="Output directory")
    parser.add_argument("--jobs", "-j", type=int, help="Parallel workers (overrides sweep.jobs)")
    parser.add_argument("--seed", type=int, help="Simulation seed (overrides validation.seed)")
    parser.add_argument(
        "--strategy",
        choices=list(STRATEGIES) + ["all"],
        default=None,
        help="Strategy to evaluate; default is strategies.evaluate from the config",
    )
    parser.add_argument(
        "--dump-config",
        action="store_true",
        help="Print the effective configuration as TOML and exit",
    )
    parser.add_argument("--verbose", "-v", action="store_true", help="Enable debug output")
    parser.add_argument("--quiet", "-q", action="store_true", help="Suppress non-error output")


def create_main_parser() -> argparse.ArgumentParser:
    """Create parser for the main CLI.

    Returns:
        Configured ArgumentParser
    """
    parser = argparse.ArgumentParser(
        prog="nru-offload",
        description="Session loss of NR-U licensed/unlicensed offloading strategies",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
        epilog="""
Exit codes:
  0  success
  2  configuration error
  3  numerical failure
  4  validation mismatch
        """,
    )
    parser.add_argument("--version", "-V", action="version", version=f"nru-offload {__version__}")

    subparsers = parser.add_subparsers(
        dest="command",
        title="commands",
        description="Available commands",
        help="Command to execute",
    )

    point_parser = subparsers.add_parser("point", help="Evaluate one scenario")
    _add_common_options(point_parser)

    sweep_parser = subparsers.add_parser("sweep", help="Sweep one parameter over a grid")
    _add_common_options(sweep_parser)
    sweep_parser.add_argument(
        "--parameter", choices=SWEEP_PARAMETERS, help="Swept parameter (default: sweep.parameter)"
    )
    sweep_parser.add_argument(
        "--values",
        type=str,
        help="Comma-separated ascending grid (default: sweep.values)",
    )
    sweep_parser.add_argument("--target-loss", type=float, help="Target Q_s for the density report")
    sweep_parser.add_argument("--no-plot", action="store_true", help="Do not write a gnuplot script")

    validate_parser = subparsers.add_parser("validate", help="Check analytical stages against oracles")
    _add_common_options(validate_parser)
    validate_parser.add_argument(
        "--stages",
        type=str,
        default=",".join(STAGES),
        help="Comma-separated stages to run",
    )

    mcs_parser = subparsers.add_parser("mcs", help="MCS table commands")
    mcs_subparsers = mcs_parser.add_subparsers(dest="mcs_command", help="MCS command to execute")
    dump_parser = mcs_subparsers.add_parser("dump", help="Print the active MCS tables")
    _add_common_options(dump_parser)
    dump_parser.add_argument("--raw", action="store_true", help="Print the table file format")

    return parser


def load_scenario(args: argparse.Namespace) -> ScenarioConfig:
    """Load the scenario and apply command-line overrides."""
    scenario = ConfigManager(args.config).load()
    if args.seed is not None:
        scenario = scenario.with_values("validation", seed=args.seed)
    if args.jobs is not None:
        scenario = scenario.with_values("sweep", jobs=args.jobs)
    if args.strategy is not None:
        chosen = STRATEGIES if args.strategy == "all" else (args.strategy,)
        scenario = scenario.with_values("strategies", evaluate=tuple(chosen))
    return scenario.validate()


def _parse_grid(text: str) -> List[float]:
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"Grid values must be numbers: {text!r}") from None
    if not values:
        raise ConfigError("Sweep grid is empty")
    return values


def _manifest(args: argparse.Namespace, scenario: ScenarioConfig) -> RunManifest:
    args.out.mkdir(parents=True, exist_ok=True)
    return RunManifest(
        subcommand=args.command,
        output_dir=args.out,
        config_path=args.config,
        seed=scenario.validation.seed,
    )


def _summary_table(rows: Sequence[Dict[str, object]], title: str) -> Table:
    table = Table(title=title)
    for name in ("strategy", "pi_sl", "pi_su", "success_nru", "q_su", "q_s"):
        table.add_column(name, justify="right" if name != "strategy" else "left")
    for row in rows:
        table.add_row(*(
            str(row[name]) if name == "strategy" else f"{float(row[name]):.6g}"  # type: ignore[arg-type]
            for name in ("strategy", "pi_sl", "pi_su", "success_nru", "q_su", "q_s")
        ))
    return table


def point_command(args: argparse.Namespace, scenario: ScenarioConfig) -> int:
    """Evaluate the configured strategies at one scenario and write results.csv."""
    reports = evaluate_point(scenario, jobs=scenario.sweep.jobs)
    frame = reports_frame(reports)
    manifest = _manifest(args, scenario)
    manifest.record(write_csv(frame, args.out / C.RESULTS_FILENAME))
    manifest.write()
    if not args.quiet:
        Console().print(_summary_table([r.to_row() for r in reports], "Strategy comparison"))
    return EXIT_OK


def sweep_command(args: argparse.Namespace, scenario: ScenarioConfig) -> int:
    """Sweep one parameter and write the long-format results table."""
    parameter = args.parameter or scenario.sweep.parameter
    if args.values is not None:
        values = _parse_grid(args.values)
    elif parameter == scenario.sweep.parameter:
        values = list(scenario.sweep.values)
    else:
        raise ConfigError(f"--values is required when sweeping {parameter}")
    progress = not args.quiet
    manifest = _manifest(args, scenario)

    if parameter == "bs_density":
        result = density_sweep(
            scenario, values, target_loss=args.target_loss, jobs=scenario.sweep.jobs, progress=progress,
        )
        sweep = result.sweep
        targets = pd.DataFrame({
            "strategy": list(result.minimal_density),
            "target_loss": result.target_loss,
            "minimal_density": list(result.minimal_density.values()),
        })
        manifest.record(write_csv(targets, args.out / "target_density.csv"))
    else:
        sweep = parameter_sweep(
            scenario, parameter, values, jobs=scenario.sweep.jobs, progress=progress,
        )

    frame = sweep.to_frame()
    manifest.record(write_csv(frame, args.out / C.RESULTS_FILENAME))

    if scenario.sweep.plot_script and not args.no_plot:
        script = gnuplot_script(
            C.RESULTS_FILENAME,
            ["parameter", "value", *REPORT_COLUMNS],
            "value",
            "q_s",
            scenario.strategies.evaluate,
            title=f"Eventual loss vs {parameter}",
            log_x=parameter == "bs_density",
        )
        manifest.record(write_text(args.out / f"plot_{parameter}.gp", script))

    manifest.write()
    logger.info(f"Sweep over {parameter}: {len(frame)} rows written to {args.out}")
    return EXIT_OK


def validate_command(args: argparse.Namespace, scenario: ScenarioConfig) -> int:
    """Run the validation stages; exit 4 when a gating check fails."""
    stages = [s.strip() for s in args.stages.split(",") if s.strip()]
    unknown = [s for s in stages if s not in STAGES]
    if unknown or not stages:
        raise ConfigError(f"Unknown validation stages: {unknown}; choose from {list(STAGES)}")

    report = run_validation(scenario, stages)
    manifest = _manifest(args, scenario)
    manifest.record(write_csv(report.to_frame(), args.out / C.VALIDATION_FILENAME))
    manifest.write()
    if not args.quiet:
        report.render()

    if not report.passed:
        for check in report.failures:
            logger.error(
                f"{check.stage}: {check.name} differs by {check.difference:.3g} "
                f"(tolerance {check.tolerance:.3g})"
            )
        raise ValidationMismatchError(f"{len(report.failures)} validation checks failed", stage="validate")
    return EXIT_OK


def mcs_dump_command(args: argparse.Namespace, scenario: ScenarioConfig) -> int:
    """Print the licensed and unlicensed MCS tables in use."""
    tables = [
        load_mcs_table(scenario.licensed, C.NR_MCS_TABLE),
        load_mcs_table(scenario.unlicensed, C.WIGIG_MCS_TABLE),
    ]
    if args.raw:
        for table in tables:
            sys.stdout.write(table.to_text())
        return EXIT_OK

    console = Console()
    for mcs in tables:
        table = Table(title=mcs.name)
        table.add_column("Row", justify="right")
        table.add_column("SINR threshold (dB)", justify="right")
        table.add_column("Efficiency (bit/s/Hz)", justify="right")
        for k, (threshold, efficiency) in enumerate(mcs.rows):
            table.add_row(str(k), f"{threshold:g}", f"{efficiency:g}")
        console.print(table)
    return EXIT_OK


COMMANDS: Dict[str, Callable[[argparse.Namespace, ScenarioConfig], int]] = {
    "point": point_command,
    "sweep": sweep_command,
    "validate": validate_command,
    "mcs": mcs_dump_command,
}


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point for the CLI.

    Args:
        argv: Command-line arguments (defaults to sys.argv[1:] if None).

    Returns:
        Exit code.
    """
    parser = create_main_parser()
    args = parser.parse_args(argv)

    if not args.command or (args.command == "mcs" and not args.mcs_command):
        parser.print_help()
        return EXIT_CONFIG

    if args.quiet:
        log_level = logging.ERROR
    elif args.verbose:
        log_level = logging.DEBUG
    elif args.dump_config:
        # stdout carries the dump
        log_level = logging.WARNING
    else:
        log_level = logging.INFO
    setup_logger(level=log_level)

    try:
        scenario = load_scenario(args)
        if not (args.quiet or args.verbose or args.dump_config):
            setup_logger(level=level_from_name(scenario.logging.level))
        if args.dump_config:
            sys.stdout.write(dump_scenario(scenario))
            return EXIT_OK
        return COMMANDS[args.command](args, scenario)
    except NruOffloadError as e:
        logger.error(str(e))
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
