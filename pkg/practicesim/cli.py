#!/usr/bin/env python3
"""
psim - run practice simulations from scenario files.

Status lines and diagnostics go to stderr; logs, summaries and sweep tables
go to files. Exit codes: 0 success, 1 invalid scenario or sweep parameter,
2 runtime or usage error.
"""

import json
import logging
import re
import sys
from pathlib import Path

import click
from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

from practicesim.engine import run as run_scenario
from practicesim.metrics import LOG_FORMATS, emit_log, emit_summary, summarize
from practicesim.practice import Diagnostic
from practicesim.scenario import (
    BUILTIN_SCENARIOS,
    Scenario,
    ScenarioError,
    emit_scenario,
    load_builtin,
    load_scenario,
)
from practicesim.sweep import ParameterPathError, emit_sweep, sweep
from practicesim.validate_scenarios import scenario_diagnostics

EXIT_INVALID = 1
EXIT_RUNTIME = 2

console = Console(stderr=True, soft_wrap=True, highlight=False, emoji=False)
stdout = Console(soft_wrap=True, highlight=False, emoji=False)

FILE_ARGUMENT = click.Path(exists=True, dir_okay=False, path_type=Path)


def report(path: Path | str, diagnostics: list[Diagnostic]):
    for diagnostic in diagnostics:
        console.print(f"❌ {path}: {diagnostic}", style="red", markup=False)


def fail(message: str, code: int = EXIT_RUNTIME):
    console.print(f"❌ {message}", style="red", markup=False)
    sys.exit(code)


def load(path: Path) -> Scenario:
    """Load a scenario, exiting with code 1 when it is invalid."""
    try:
        return load_scenario(path)
    except ScenarioError as e:
        report(path, e.diagnostics)
        sys.exit(EXIT_INVALID)
    except (OSError, UnicodeDecodeError) as e:
        fail(f"{path}: Error reading file: {e}")


def parse_seeds(ctx, param, value: str) -> list[int]:
    """``A..B`` (inclusive) or a single seed."""
    match = re.fullmatch(r"\s*(-?\d+)\s*(?:\.\.\s*(-?\d+)\s*)?", value)
    if not match:
        raise click.BadParameter("expected A..B or a single integer")
    start = int(match.group(1))
    end = int(match.group(2)) if match.group(2) is not None else start
    if end < start:
        raise click.BadParameter(f"empty seed range {value}")
    return list(range(start, end + 1))


def parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def parse_params(ctx, param, values: tuple[str, ...]) -> dict[str, list]:
    """``PATH=v1,v2,...`` options into an ordered parameter grid."""
    grid: dict[str, list] = {}
    for item in values:
        path, sep, raw = item.partition("=")
        path = path.strip()
        if not sep or not path or not raw:
            raise click.BadParameter(f"expected PATH=v1,v2,... got '{item}'")
        if path in grid:
            raise click.BadParameter(f"parameter given twice: {path}")
        grid[path] = [parse_value(v.strip()) for v in raw.split(",")]
    return grid


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Log simulation progress")
@click.version_option(package_name="practicesim")
def cli(verbose: bool):
    """Agent-based simulation of social practices and context."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(message)s",
        handlers=[RichHandler(console=console, show_path=False)],
        force=True,
    )


@cli.command()
@click.argument("files", nargs=-1, required=True, type=FILE_ARGUMENT)
def validate(files: tuple[Path, ...]):
    """Check scenario files; silent when every file is valid."""
    all_valid = True
    for path in files:
        try:
            diagnostics = scenario_diagnostics(path)
        except (OSError, UnicodeDecodeError) as e:
            fail(f"{path}: Error reading file: {e}")
        if diagnostics:
            report(path, diagnostics)
            all_valid = False
    if not all_valid:
        sys.exit(EXIT_INVALID)


@cli.command("run")
@click.argument("file", type=FILE_ARGUMENT)
@click.option("--seed", type=int, default=0, show_default=True, help="Master seed")
@click.option(
    "--ticks",
    type=click.IntRange(min=0),
    default=None,
    help="Number of ticks (default: the scenario's own)",
)
@click.option(
    "--out",
    type=click.Path(file_okay=False, path_type=Path),
    required=True,
    help="Output directory",
)
@click.option(
    "--format",
    "log_format",
    type=click.Choice(LOG_FORMATS),
    default="csv",
    show_default=True,
)
def run_command(file: Path, seed: int, ticks: int | None, out: Path, log_format: str):
    """Run one simulation and write its log and summary."""
    scenario = load(file)
    try:
        log = run_scenario(scenario, seed, ticks)
        summary = summarize(
            log.records,
            scenario.consensus.threshold,
            scenario.consensus.window,
            practices=sorted(scenario.registry.practice_ids),
        )
        out.mkdir(parents=True, exist_ok=True)
        log_path = out / f"log.{log_format}"
        log_path.write_bytes(emit_log(log.records, log_format))
        (out / "summary.json").write_bytes(emit_summary(log.header, summary))
    except ScenarioError as e:
        report(file, e.diagnostics)
        sys.exit(EXIT_INVALID)
    except Exception as e:
        fail(f"Run failed: {e}")

    console.print(
        f"✅ {len(log.records)} ticks of '{scenario.name}' written to {out}",
        style="green",
        markup=False,
    )


@cli.command("sweep")
@click.argument("file", type=FILE_ARGUMENT)
@click.option(
    "--param",
    "params",
    multiple=True,
    required=True,
    callback=parse_params,
    help="Dotted scenario path and values, e.g. world.agent_count=5,10,20",
)
@click.option(
    "--seeds", required=True, callback=parse_seeds, help="Seed range A..B (inclusive)"
)
@click.option(
    "--out",
    type=click.Path(dir_okay=False, path_type=Path),
    required=True,
    help="Output CSV file",
)
@click.option("--ticks", type=click.IntRange(min=0), default=None)
@click.option(
    "--jobs",
    type=click.IntRange(min=1),
    default=1,
    show_default=True,
    envvar="PSIM_JOBS",
    help="Worker processes",
)
def sweep_command(
    file: Path,
    params: dict[str, list],
    seeds: list[int],
    out: Path,
    ticks: int | None,
    jobs: int,
):
    """Run a scenario over a parameter grid and a range of seeds."""
    scenario = load(file)
    try:
        table = sweep(scenario, params, seeds, ticks=ticks, jobs=jobs)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_bytes(emit_sweep(table))
    except ScenarioError as e:
        report(file, e.diagnostics)
        sys.exit(EXIT_INVALID)
    except ParameterPathError as e:
        fail(str(e), EXIT_INVALID)
    except Exception as e:
        fail(f"Sweep failed: {e}")

    console.print(
        f"✅ {len(table.rows)} runs written to {out}", style="green", markup=False
    )


@cli.group()
def scenarios():
    """Built-in scenarios."""


@scenarios.command("list")
def list_scenarios():
    """Show the built-in scenarios."""
    table = Table(title="Built-in scenarios")
    table.add_column("Name", style="cyan")
    table.add_column("Agents", justify="right")
    table.add_column("Practices", justify="right")
    table.add_column("Description")
    for name in BUILTIN_SCENARIOS:
        scenario = load_builtin(name)
        agents = len(scenario.agents) + (scenario.agent_count or 0)
        table.add_row(
            name,
            str(agents),
            str(len(scenario.registry.practices)),
            scenario.description,
        )
    stdout.print(table)


@scenarios.command("export")
@click.argument("name", type=click.Choice(BUILTIN_SCENARIOS))
@click.argument("directory", type=click.Path(file_okay=False, path_type=Path))
def export_scenario(name: str, directory: Path):
    """Write a built-in scenario to DIRECTORY/NAME.json."""
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / f"{name}.json"
    path.write_bytes(emit_scenario(load_builtin(name)).encode())
    console.print(f"✅ Exported {name} to {path}", style="green", markup=False)
