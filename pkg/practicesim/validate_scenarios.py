#!/usr/bin/env python3
"""
Validate scenario files.
"""

import sys
from pathlib import Path

import click

from practicesim.practice import Diagnostic
from practicesim.scenario import ScenarioError, load_scenario


def scenario_diagnostics(filepath: Path) -> list[Diagnostic]:
    """Every diagnostic for a scenario file; empty when it is valid."""
    try:
        load_scenario(filepath)
    except ScenarioError as e:
        return e.diagnostics
    return []


def validate_scenario_file(filepath: Path) -> bool:
    """Validate one scenario file, reporting the result."""
    try:
        diagnostics = scenario_diagnostics(filepath)
    except (OSError, UnicodeDecodeError) as e:
        click.echo(f"❌ {filepath}: Error reading file: {e}")
        return False

    if diagnostics:
        for diagnostic in diagnostics:
            click.echo(f"❌ {filepath}: {diagnostic}")
        return False

    click.echo(f"✅ {filepath}: Valid scenario")
    return True


@click.command()
@click.argument("files", nargs=-1, type=click.Path(exists=True))
def main(files):
    """Validate scenario files."""
    if not files:
        sys.exit(0)

    all_valid = True
    for filepath in files:
        path = Path(filepath)
        if path.suffix == ".json":
            if not validate_scenario_file(path):
                all_valid = False

    if not all_valid:
        sys.exit(1)


if __name__ == "__main__":
    main()
