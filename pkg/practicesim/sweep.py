"""
Parameter sweeps: run a scenario over the cartesian product of parameter
values and a range of seeds, and tabulate one summary row per run.

Parameters are addressed by dotted paths into the canonical scenario
document, e.g. ``world.agent_count`` or ``registry.practices.0.preference_weight``
(numeric segments index lists). Every path and every grid point is checked
before the first run starts.
"""

import copy
import csv
import io
import itertools
import json
import logging
from collections.abc import Mapping, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Any

from practicesim.engine import RunHeader, run
from practicesim.metrics import Summary, summarize
from practicesim.practice import IDLE
from practicesim.scenario import Scenario, scenario_document, scenario_from_document

logger = logging.getLogger(__name__)

SWEEP_COLUMNS = (
    "seed",
    "agents",
    "crowdedness",
    "performances",
    "idle",
    "overrides",
    "disturbance_checks",
    "checks_passed",
    "acceptability_rate",
    "final_consensus",
    "time_to_consensus",
)


class ParameterPathError(ValueError):
    """Raised when a sweep parameter path does not exist in the scenario."""


def _lookup(document: Any, path: str) -> tuple[Any, str | int]:
    """The container holding the value at ``path`` and its key."""
    segments = path.split(".")
    node = document
    for depth, segment in enumerate(segments):
        key: str | int = segment
        if isinstance(node, list):
            if not segment.isdigit() or int(segment) >= len(node):
                raise ParameterPathError(f"No such parameter: {path}")
            key = int(segment)
        elif not isinstance(node, dict) or segment not in node:
            raise ParameterPathError(f"No such parameter: {path}")
        if depth == len(segments) - 1:
            return node, key
        node = node[key]
    raise ParameterPathError(f"No such parameter: {path}")


def apply_parameters(document: Mapping[str, Any], values: Mapping[str, Any]) -> dict:
    """A copy of ``document`` with each dotted path set to its value."""
    updated = copy.deepcopy(dict(document))
    for path, value in values.items():
        container, key = _lookup(updated, path)
        container[key] = value
    return updated


def grid_points(param_grid: Mapping[str, Sequence[Any]]) -> list[tuple[Any, ...]]:
    return list(itertools.product(*param_grid.values()))


def prepare_sweep(
    scenario: Scenario, param_grid: Mapping[str, Sequence[Any]]
) -> list[tuple[tuple[Any, ...], Scenario]]:
    """Validate every path and every variant scenario up front."""
    document = scenario_document(scenario)
    for path, values in param_grid.items():
        _lookup(document, path)
        if not values:
            raise ValueError(f"Parameter {path} has no values")
    variants = []
    for point in grid_points(param_grid):
        variant = apply_parameters(document, dict(zip(param_grid, point)))
        variants.append((point, scenario_from_document(variant)))
    return variants


@dataclass(frozen=True)
class SweepRow:
    point: tuple[Any, ...]
    seed: int
    header: RunHeader
    summary: Summary


@dataclass(frozen=True)
class SweepTable:
    parameters: tuple[str, ...]
    rows: tuple[SweepRow, ...]


def _run_one(job: tuple[tuple[Any, ...], int, Scenario, int | None]) -> SweepRow:
    point, seed, scenario, ticks = job
    log = run(scenario, seed, ticks)
    summary = summarize(
        log.records,
        scenario.consensus.threshold,
        scenario.consensus.window,
        practices=sorted(scenario.registry.practice_ids),
    )
    return SweepRow(point, seed, log.header, summary)


def _value_key(value: Any) -> tuple:
    if isinstance(value, bool | int | float):
        return (0, value, "")
    if isinstance(value, str):
        return (1, 0, value)
    return (2, 0, json.dumps(value, sort_keys=True))


def _row_key(row: SweepRow) -> tuple:
    return (tuple(_value_key(v) for v in row.point), row.seed)


def sweep(
    scenario: Scenario,
    param_grid: Mapping[str, Sequence[Any]],
    seeds: Sequence[int],
    ticks: int | None = None,
    jobs: int = 1,
) -> SweepTable:
    """One row per (grid point, seed), sorted by point then seed.

    Results do not depend on ``jobs``: each run seeds itself.
    """
    if not seeds:
        raise ValueError("A sweep needs at least one seed")
    if jobs < 1:
        raise ValueError(f"jobs must be >= 1, got {jobs}")

    variants = prepare_sweep(scenario, param_grid)
    work = [
        (point, seed, variant, ticks) for point, variant in variants for seed in seeds
    ]
    logger.info("Sweeping %d runs with %d job(s)", len(work), jobs)

    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_run_one, work))
    else:
        rows = [_run_one(job) for job in work]
    return SweepTable(tuple(param_grid), tuple(sorted(rows, key=_row_key)))


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, float):
        return repr(value)
    return json.dumps(value, sort_keys=True)


def emit_sweep(table: SweepTable) -> bytes:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow([*table.parameters, *SWEEP_COLUMNS])
    for row in table.rows:
        s = row.summary
        writer.writerow(
            [_cell(v) for v in row.point]
            + [
                _cell(v)
                for v in (
                    row.seed,
                    row.header.agent_count,
                    row.header.crowdedness,
                    s.performed,
                    s.performances.get(IDLE, 0),
                    s.overrides,
                    s.disturbance_checks,
                    s.checks_passed,
                    s.acceptability_rate,
                    s.final_consensus,
                    s.time_to_consensus,
                )
            ]
        )
    return buffer.getvalue().encode()
