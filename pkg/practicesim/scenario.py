"""
Scenario files - parsing, validation and canonical emission.

A scenario is a JSON document describing the practice registry, the world
(topology, agents, generated population), decision parameters, activation
and movement policies, and consensus settings. Unknown fields are rejected
so that a typo never silently changes an experiment.
"""

import hashlib
import json
import math
from collections import Counter
from collections.abc import Mapping
from dataclasses import dataclass, field
from importlib.resources import files
from pathlib import Path
from typing import Any

from jsonschema import Draft202012Validator, validators
from packaging.version import InvalidVersion, Version

from practicesim.context import DEFAULT_THRESHOLD, DEFAULT_WINDOW
from practicesim.decision import ORDERING_POLICIES, DecisionParams
from practicesim.practice import (
    Component,
    ComponentKind,
    ContextDefinition,
    Diagnostic,
    DisturbanceRule,
    Practice,
    Registry,
    sort_diagnostics,
    validate_registry,
)
from practicesim.topology import MOVEMENT_POLICIES, Cell, Grid, Network, Topology

SCHEMA_VERSION = "1.0"
SUPPORTED_MAJOR = 1
ID_PATTERN = r"^[A-Za-z0-9_.-]+$"
ACTIVATION_POLICIES = ("ordered", "random")
BUILTIN_SCENARIOS = ("library", "breakfast", "density")


@dataclass(frozen=True)
class Agent:
    id: str
    endowment: frozenset[str] = frozenset()
    initial_belief: str | None = None
    cell: Cell | None = None
    preferences: dict[str, float] = field(default_factory=dict)


@dataclass(frozen=True)
class PopulationTemplate:
    """Blueprint for generated agents (see ``Scenario.agent_count``)."""

    prefix: str
    endowment: frozenset[str] = frozenset()
    initial_belief: str | None = None
    preferences: dict[str, float] = field(default_factory=dict)


@dataclass(frozen=True)
class ConsensusParams:
    threshold: float = DEFAULT_THRESHOLD
    window: int = DEFAULT_WINDOW


@dataclass(frozen=True)
class Scenario:
    registry: Registry
    topology: Topology
    agents: tuple[Agent, ...] = ()
    population: tuple[PopulationTemplate, ...] = ()
    agent_count: int | None = None
    decision: DecisionParams = field(default_factory=DecisionParams)
    activation: str = "ordered"
    movement: str = "none"
    consensus: ConsensusParams = field(default_factory=ConsensusParams)
    ticks: int = 100
    name: str = ""
    description: str = ""
    schema_version: str = SCHEMA_VERSION


class ScenarioError(ValueError):
    """A scenario failed to parse or validate; carries the diagnostics."""

    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = diagnostics
        lines = "\n".join(f"  {d}" for d in diagnostics)
        super().__init__(f"Invalid scenario:\n{lines}")


# --- schema -----------------------------------------------------------------

_ID = {"type": "string", "pattern": ID_PATTERN}
_IDS = {"type": "array", "items": _ID}
_BELIEF = {"type": ["string", "null"], "pattern": ID_PATTERN}
_WEIGHTS = {
    "type": "object",
    "propertyNames": _ID,
    "additionalProperties": {"type": "number", "minimum": 0},
}


def _strict(properties: dict, required: tuple[str, ...] = ()) -> dict:
    return {
        "type": "object",
        "properties": properties,
        "required": list(required),
        "additionalProperties": False,
    }


_GRID = _strict(
    {
        "kind": {"const": "grid"},
        "width": {"type": "integer", "minimum": 1},
        "height": {"type": "integer", "minimum": 1},
        "radius": {"type": "integer", "minimum": 1},
        "torus": {"type": "boolean"},
    },
    ("kind", "width", "height"),
)

_NETWORK = _strict(
    {
        "kind": {"const": "network"},
        "edges": {
            "type": "array",
            "items": {"type": "array", "items": _ID, "minItems": 2, "maxItems": 2},
        },
        "edge_probability": {"type": ["number", "null"], "minimum": 0, "maximum": 1},
    },
    ("kind",),
)

SCENARIO_SCHEMA: dict[str, Any] = _strict(
    {
        "schema_version": {"type": "string"},
        "name": {"type": "string"},
        "description": {"type": "string"},
        "registry": _strict(
            {
                "components": {
                    "type": "array",
                    "items": _strict(
                        {
                            "id": _ID,
                            "kind": {"enum": [k.value for k in ComponentKind]},
                            "name": {"type": "string"},
                        },
                        ("id", "kind"),
                    ),
                },
                "practices": {
                    "type": "array",
                    "items": _strict(
                        {
                            "id": _ID,
                            "name": {"type": "string"},
                            "requires": _IDS,
                            "emits": _IDS,
                            "preference_weight": {"type": "number", "minimum": 0},
                        },
                        ("id", "requires"),
                    ),
                },
                "contexts": {
                    "type": "array",
                    "items": _strict(
                        {"id": _ID, "appropriate": _IDS}, ("id", "appropriate")
                    ),
                },
                "rules": {
                    "type": "array",
                    "items": _strict(
                        {"emitter": _ID, "disturbed": _ID}, ("emitter", "disturbed")
                    ),
                },
            },
            ("components", "practices", "contexts"),
        ),
        "world": _strict(
            {
                "topology": {
                    "type": "object",
                    "required": ["kind"],
                    "properties": {"kind": {"enum": ["grid", "network"]}},
                    "if": {"properties": {"kind": {"const": "grid"}}},
                    "then": _GRID,
                    "else": _NETWORK,
                },
                "agents": {
                    "type": "array",
                    "items": _strict(
                        {
                            "id": _ID,
                            "endowment": _IDS,
                            "initial_belief": _BELIEF,
                            "cell": {
                                "type": ["array", "null"],
                                "items": {"type": "integer"},
                                "minItems": 2,
                                "maxItems": 2,
                            },
                            "preferences": _WEIGHTS,
                        },
                        ("id", "endowment"),
                    ),
                },
                "population": {
                    "type": "array",
                    "items": _strict(
                        {
                            "prefix": _ID,
                            "endowment": _IDS,
                            "initial_belief": _BELIEF,
                            "preferences": _WEIGHTS,
                        },
                        ("prefix", "endowment"),
                    ),
                },
                "agent_count": {"type": ["integer", "null"], "minimum": 0},
            },
            ("topology",),
        ),
        "decision": _strict(
            {
                "epsilon": {"type": "number", "minimum": 0, "maximum": 1},
                "ordering": {"enum": list(ORDERING_POLICIES)},
            }
        ),
        "activation": {"enum": list(ACTIVATION_POLICIES)},
        "movement": {"enum": list(MOVEMENT_POLICIES)},
        "consensus": _strict(
            {
                "threshold": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                "window": {"type": "integer", "minimum": 1},
            }
        ),
        "ticks": {"type": "integer", "minimum": 0},
    },
    ("schema_version", "registry", "world"),
)


def _is_integer(checker, instance) -> bool:
    # JSON Schema counts 10.0 as an integer; grid sizes and tick counts must not
    return isinstance(instance, int) and not isinstance(instance, bool)


_StrictValidator = validators.extend(
    Draft202012Validator,
    type_checker=Draft202012Validator.TYPE_CHECKER.redefine("integer", _is_integer),
)
_VALIDATOR = _StrictValidator(SCENARIO_SCHEMA)


def _dotted(path) -> str:
    return ".".join(str(p) for p in path)


def _join(prefix: str, name: str) -> str:
    return f"{prefix}.{name}" if prefix else name


def _non_finite(value: Any, path: tuple = ()):
    """Paths of NaN and infinite numbers anywhere in a document."""
    if isinstance(value, float) and not math.isfinite(value):
        yield path
    elif isinstance(value, dict):
        for key, item in value.items():
            yield from _non_finite(item, (*path, key))
    elif isinstance(value, list):
        for i, item in enumerate(value):
            yield from _non_finite(item, (*path, i))


def structural_diagnostics(document: Any) -> list[Diagnostic]:
    """Schema-level problems: E100 unknown field, E101 missing schema_version,
    E103 type/shape errors, E104 unsupported schema version."""
    found: list[Diagnostic] = []
    if not isinstance(document, dict):
        return [Diagnostic("E103", "", "Scenario must be a JSON object")]

    if "schema_version" not in document:
        found.append(Diagnostic("E101", "schema_version", "Missing schema_version"))
    else:
        version = document["schema_version"]
        try:
            if Version(str(version)).major != SUPPORTED_MAJOR:
                found.append(
                    Diagnostic(
                        "E104",
                        "schema_version",
                        f"Unsupported schema version {version} "
                        f"(supported: {SUPPORTED_MAJOR}.x)",
                    )
                )
        except InvalidVersion:
            found.append(
                Diagnostic("E104", "schema_version", f"Invalid version '{version}'")
            )

    for path in _non_finite(document):
        found.append(Diagnostic("E103", _dotted(path), "Number must be finite"))

    for error in _VALIDATOR.iter_errors(document):
        path = _dotted(error.absolute_path)
        if error.validator == "additionalProperties" and error.validator_value is False:
            known = set(error.schema.get("properties", {}))
            for name in sorted(set(error.instance) - known):
                found.append(
                    Diagnostic("E100", _join(path, name), f"Unknown field '{name}'")
                )
        elif error.validator == "required" and "'schema_version'" in error.message:
            continue
        else:
            found.append(Diagnostic("E103", path, error.message))

    return sort_diagnostics(found)


# --- building ---------------------------------------------------------------


def _weights(raw: Mapping[str, Any] | None) -> dict[str, float]:
    return {k: float(v) for k, v in (raw or {}).items()}


def _topology(raw: Mapping[str, Any]) -> Topology:
    if raw["kind"] == "grid":
        return Grid(
            width=raw["width"],
            height=raw["height"],
            radius=raw.get("radius", 1),
            torus=raw.get("torus", False),
        )
    probability = raw.get("edge_probability")
    return Network(
        edges=tuple((a, b) for a, b in raw.get("edges", [])),
        edge_probability=None if probability is None else float(probability),
    )


def build_scenario(document: Mapping[str, Any]) -> Scenario:
    """Turn a structurally valid document into a Scenario (no semantic checks)."""
    reg = document["registry"]
    registry = Registry(
        components=tuple(
            Component(c["id"], ComponentKind(c["kind"]), c.get("name", ""))
            for c in reg["components"]
        ),
        practices=tuple(
            Practice(
                id=p["id"],
                name=p.get("name", ""),
                requires=frozenset(p["requires"]),
                emits=frozenset(p.get("emits", [])),
                preference_weight=float(p.get("preference_weight", 1.0)),
            )
            for p in reg["practices"]
        ),
        contexts=tuple(
            ContextDefinition(c["id"], frozenset(c["appropriate"]))
            for c in reg["contexts"]
        ),
        rules=tuple(
            DisturbanceRule(r["emitter"], r["disturbed"]) for r in reg.get("rules", [])
        ),
    )

    world = document["world"]
    agents = tuple(
        Agent(
            id=a["id"],
            endowment=frozenset(a["endowment"]),
            initial_belief=a.get("initial_belief"),
            cell=None if a.get("cell") is None else tuple(a["cell"]),
            preferences=_weights(a.get("preferences")),
        )
        for a in world.get("agents", [])
    )
    population = tuple(
        PopulationTemplate(
            prefix=t["prefix"],
            endowment=frozenset(t["endowment"]),
            initial_belief=t.get("initial_belief"),
            preferences=_weights(t.get("preferences")),
        )
        for t in world.get("population", [])
    )

    decision = document.get("decision", {})
    consensus = document.get("consensus", {})
    return Scenario(
        registry=registry,
        topology=_topology(world["topology"]),
        agents=agents,
        population=population,
        agent_count=world.get("agent_count"),
        decision=DecisionParams(
            epsilon=float(decision.get("epsilon", 0.0)),
            ordering=decision.get("ordering", "preference"),
        ),
        activation=document.get("activation", "ordered"),
        movement=document.get("movement", "none"),
        consensus=ConsensusParams(
            threshold=float(consensus.get("threshold", DEFAULT_THRESHOLD)),
            window=consensus.get("window", DEFAULT_WINDOW),
        ),
        ticks=document.get("ticks", 100),
        name=document.get("name", ""),
        description=document.get("description", ""),
        schema_version=document["schema_version"],
    )


def generated_agents(scenario: Scenario) -> list[Agent]:
    """Agents produced from the population templates, without cells.

    Agent i uses template ``i mod len(population)`` and is called
    ``<prefix>-<iii>``.
    """
    templates = scenario.population
    if not templates or not scenario.agent_count:
        return []
    agents = []
    for i in range(scenario.agent_count):
        template = templates[i % len(templates)]
        agents.append(
            Agent(
                id=f"{template.prefix}-{i:03d}",
                endowment=template.endowment,
                initial_belief=template.initial_belief,
                preferences=dict(template.preferences),
            )
        )
    return agents


# --- semantic validation ----------------------------------------------------


def _check_agent_refs(
    path: str,
    owner: str,
    endowment: frozenset[str],
    initial_belief: str | None,
    preferences: Mapping[str, float],
    registry: Registry,
) -> list[Diagnostic]:
    found = []
    for ref in sorted(endowment - registry.component_ids):
        found.append(
            Diagnostic(
                "E203", f"{path}.endowment", f"{owner}: unknown component '{ref}'"
            )
        )
    if initial_belief is not None and initial_belief not in registry.context_ids:
        found.append(
            Diagnostic(
                "E202",
                f"{path}.initial_belief",
                f"{owner}: initial belief names unknown context '{initial_belief}'",
            )
        )
    for pid, weight in sorted(preferences.items()):
        if pid not in registry.practice_ids:
            found.append(
                Diagnostic(
                    "E204",
                    f"{path}.preferences",
                    f"{owner}: preference for unknown practice '{pid}'",
                )
            )
        elif weight < 0:
            found.append(
                Diagnostic(
                    "E006",
                    f"{path}.preferences.{pid}",
                    f"{owner}: negative preference weight {weight}",
                )
            )
    return found


def validate_scenario(scenario: Scenario) -> list[Diagnostic]:
    """Registry integrity plus world cross-checks; empty list means valid."""
    registry = scenario.registry
    found = [
        Diagnostic(d.code, f"registry.{d.path}", d.message)
        for d in validate_registry(registry)
    ]

    for i, agent in enumerate(scenario.agents):
        found += _check_agent_refs(
            f"world.agents.{i}",
            f"agent '{agent.id}'",
            agent.endowment,
            agent.initial_belief,
            agent.preferences,
            registry,
        )
    for i, template in enumerate(scenario.population):
        found += _check_agent_refs(
            f"world.population.{i}",
            f"population '{template.prefix}'",
            template.endowment,
            template.initial_belief,
            template.preferences,
            registry,
        )

    generated = generated_agents(scenario)
    all_ids = [a.id for a in scenario.agents] + [a.id for a in generated]
    for dup in sorted(i for i, n in Counter(all_ids).items() if n > 1):
        found.append(Diagnostic("E205", "world.agents", f"Duplicate agent id '{dup}'"))

    if scenario.agent_count and not scenario.population:
        found.append(
            Diagnostic(
                "E208",
                "world.agent_count",
                "agent_count is set but there are no population templates",
            )
        )

    if all_ids and not registry.contexts:
        found.append(
            Diagnostic(
                "E210",
                "registry.contexts",
                "Agents need at least one context to interpret",
            )
        )

    topology = scenario.topology
    if isinstance(topology, Grid):
        found += _check_grid(scenario, topology, len(generated))
    else:
        known = set(all_ids)
        for i, (a, b) in enumerate(topology.edges):
            if a == b:
                found.append(
                    Diagnostic(
                        "E206", f"world.topology.edges.{i}", f"Self-loop on '{a}'"
                    )
                )
            for end in sorted({a, b} - known):
                found.append(
                    Diagnostic(
                        "E206",
                        f"world.topology.edges.{i}",
                        f"Edge references unknown agent '{end}'",
                    )
                )
        if scenario.movement == "random_walk":
            found.append(
                Diagnostic("E207", "movement", "random_walk needs a grid topology")
            )

    found += _check_policies(scenario)
    return sort_diagnostics(found)


def _check_grid(scenario: Scenario, grid: Grid, generated: int) -> list[Diagnostic]:
    found = []
    if grid.width < 1 or grid.height < 1 or grid.radius < 1:
        found.append(
            Diagnostic(
                "E103", "world.topology", "Grid width, height and radius must be >= 1"
            )
        )
        return found

    occupants: dict[Cell, list[str]] = {}
    for i, agent in enumerate(scenario.agents):
        path = f"world.agents.{i}.cell"
        if agent.cell is None:
            found.append(
                Diagnostic("E209", path, f"Agent '{agent.id}' has no cell on the grid")
            )
        elif not grid.contains(agent.cell):
            found.append(
                Diagnostic(
                    "E200",
                    path,
                    f"Agent '{agent.id}' cell {list(agent.cell)} is outside "
                    f"the {grid.width}x{grid.height} grid",
                )
            )
        else:
            occupants.setdefault(agent.cell, []).append(agent.id)

    for cell, ids in sorted(occupants.items()):
        if len(ids) > 1:
            found.append(
                Diagnostic(
                    "E201",
                    "world.agents",
                    f"Agents {', '.join(sorted(ids))} share cell {list(cell)}",
                )
            )

    free = grid.width * grid.height - len(occupants)
    if generated > free:
        found.append(
            Diagnostic(
                "E208",
                "world.agent_count",
                f"{generated} generated agents do not fit in {free} free cells",
            )
        )
    return found


def _check_policies(scenario: Scenario) -> list[Diagnostic]:
    found = []
    if scenario.activation not in ACTIVATION_POLICIES:
        found.append(
            Diagnostic("E103", "activation", f"Unknown policy '{scenario.activation}'")
        )
    if scenario.movement not in MOVEMENT_POLICIES:
        found.append(
            Diagnostic("E103", "movement", f"Unknown policy '{scenario.movement}'")
        )
    if not 0 < scenario.consensus.threshold <= 1:
        found.append(
            Diagnostic("E103", "consensus.threshold", "threshold must be in (0, 1]")
        )
    if scenario.consensus.window < 1:
        found.append(Diagnostic("E103", "consensus.window", "window must be >= 1"))
    if scenario.ticks < 0:
        found.append(Diagnostic("E103", "ticks", "ticks must be >= 0"))
    return found


# --- parsing and emission ---------------------------------------------------


class _NonFiniteNumber(ValueError):
    pass


def _reject_constant(name: str):
    raise _NonFiniteNumber(name)


def decode_document(text: str) -> Any:
    """JSON text to a Python value; syntax errors become E102.

    NaN and Infinity are not JSON, although Python's decoder accepts them.
    """
    try:
        return json.loads(text, parse_constant=_reject_constant)
    except _NonFiniteNumber as e:
        name = str(e)
        error = json.JSONDecodeError(
            f"Non-finite number {name}", text, max(text.find(name), 0)
        )
    except json.JSONDecodeError as e:
        error = e
    raise ScenarioError(
        [Diagnostic("E102", f"line {error.lineno} column {error.colno}", error.msg)]
    ) from None


def scenario_from_document(document: Any) -> Scenario:
    """Structural checks, build, then semantic checks."""
    diagnostics = structural_diagnostics(document)
    if diagnostics:
        raise ScenarioError(diagnostics)
    scenario = build_scenario(document)
    diagnostics = validate_scenario(scenario)
    if diagnostics:
        raise ScenarioError(diagnostics)
    return scenario


def parse_scenario(text: str) -> Scenario:
    """Parse and fully validate a scenario document.

    Raises ScenarioError carrying every diagnostic found at the first failing
    stage (syntax, then structure, then semantics).
    """
    return scenario_from_document(decode_document(text))


def load_scenario(path: Path | str) -> Scenario:
    return parse_scenario(Path(path).read_text(encoding="utf-8"))


def _agent_document(agent: Agent) -> dict[str, Any]:
    return {
        "id": agent.id,
        "endowment": sorted(agent.endowment),
        "initial_belief": agent.initial_belief,
        "cell": None if agent.cell is None else list(agent.cell),
        "preferences": dict(sorted(agent.preferences.items())),
    }


def _topology_document(topology: Topology) -> dict[str, Any]:
    if isinstance(topology, Grid):
        return {
            "kind": "grid",
            "width": topology.width,
            "height": topology.height,
            "radius": topology.radius,
            "torus": topology.torus,
        }
    return {
        "kind": "network",
        "edges": [list(edge) for edge in topology.edges],
        "edge_probability": topology.edge_probability,
    }


def scenario_document(scenario: Scenario) -> dict[str, Any]:
    """The canonical document: every field present, sets sorted."""
    registry = scenario.registry
    return {
        "schema_version": scenario.schema_version,
        "name": scenario.name,
        "description": scenario.description,
        "registry": {
            "components": [
                {"id": c.id, "kind": c.kind.value, "name": c.name}
                for c in registry.components
            ],
            "practices": [
                {
                    "id": p.id,
                    "name": p.name,
                    "requires": sorted(p.requires),
                    "emits": sorted(p.emits),
                    "preference_weight": p.preference_weight,
                }
                for p in registry.practices
            ],
            "contexts": [
                {"id": c.id, "appropriate": sorted(c.appropriate)}
                for c in registry.contexts
            ],
            "rules": [
                {"emitter": r.emitter, "disturbed": r.disturbed} for r in registry.rules
            ],
        },
        "world": {
            "topology": _topology_document(scenario.topology),
            "agents": [_agent_document(a) for a in scenario.agents],
            "population": [
                {
                    "prefix": t.prefix,
                    "endowment": sorted(t.endowment),
                    "initial_belief": t.initial_belief,
                    "preferences": dict(sorted(t.preferences.items())),
                }
                for t in scenario.population
            ],
            "agent_count": scenario.agent_count,
        },
        "decision": {
            "epsilon": scenario.decision.epsilon,
            "ordering": scenario.decision.ordering,
        },
        "activation": scenario.activation,
        "movement": scenario.movement,
        "consensus": {
            "threshold": scenario.consensus.threshold,
            "window": scenario.consensus.window,
        },
        "ticks": scenario.ticks,
    }


def emit_scenario(scenario: Scenario) -> str:
    return json.dumps(scenario_document(scenario), indent=2, ensure_ascii=False) + "\n"


def scenario_hash(scenario: Scenario) -> str:
    return hashlib.sha256(emit_scenario(scenario).encode()).hexdigest()


# --- built-ins --------------------------------------------------------------


def builtin_text(name: str) -> str:
    if name not in BUILTIN_SCENARIOS:
        raise ValueError(
            f"Unknown built-in scenario '{name}' "
            f"(available: {', '.join(BUILTIN_SCENARIOS)})"
        )
    return files("practicesim").joinpath("scenarios", f"{name}.json").read_text()


def load_builtin(name: str) -> Scenario:
    return parse_scenario(builtin_text(name))
