"""
The simulation loop.

Agents are activated one after another within a tick (asynchronous
sequential activation), so an agent sees what earlier agents did this tick
and what later agents did last tick. Per agent: move, observe the
neighbors' current performances, update the context belief, decide.

All randomness of tick ``t`` comes from one PCG32 stream derived from
(seed, run index, t), drawn in a fixed order: the activation shuffle (random
activation only), then per agent one movement draw (random walk with an
empty adjacent cell only) followed by one decision draw.
"""

import logging
from dataclasses import dataclass, replace

from practicesim import __version__
from practicesim.context import Belief, consensus_index, infer_context
from practicesim.decision import DiscardReason, decide
from practicesim.practice import DisturbanceMatrix, compile_disturbance
from practicesim.rng import PCG32, SETUP_TICK
from practicesim.scenario import (
    Agent,
    Scenario,
    ScenarioError,
    generated_agents,
    scenario_hash,
    validate_scenario,
)
from practicesim.topology import (
    Cell,
    Grid,
    Topology,
    crowdedness,
    move_agent,
    neighbors,
    realize_network,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AgentRecord:
    agent_id: str
    practice: str | None
    override: bool
    trace: tuple[tuple[str, DiscardReason], ...]
    belief: Belief

    @property
    def action(self) -> str:
        return "idle" if self.practice is None else "perform"


@dataclass(frozen=True)
class TickRecord:
    """Everything that happened in one tick, entries sorted by agent id.

    ``consensus`` is None for a world without agents.
    """

    tick: int
    entries: tuple[AgentRecord, ...]
    consensus: float | None


@dataclass(frozen=True)
class RunHeader:
    scenario: str
    scenario_hash: str
    seed: int
    run_index: int
    ticks: int
    engine_version: str
    agent_count: int
    crowdedness: float


@dataclass(frozen=True)
class MetricsLog:
    header: RunHeader
    records: tuple[TickRecord, ...]

    @property
    def consensus_series(self) -> list[float | None]:
        return [r.consensus for r in self.records]


@dataclass(frozen=True)
class World:
    """Simulation state between ticks. ``step`` returns a new World."""

    scenario: Scenario
    matrix: DisturbanceMatrix
    topology: Topology
    agents: dict[str, Agent]
    placement: dict[str, Cell]
    performances: dict[str, str | None]
    beliefs: dict[str, Belief]
    seed: int
    run_index: int = 0
    tick: int = 0

    def tick_rng(self) -> PCG32:
        return PCG32.for_tick(self.seed, self.run_index, self.tick)


def init_world(scenario: Scenario, seed: int, run_index: int = 0) -> World:
    """Build the tick-0 world: validate, compile the disturbance relation,
    generate the population and place it using the setup stream.
    """
    diagnostics = validate_scenario(scenario)
    if diagnostics:
        raise ScenarioError(diagnostics)
    matrix = compile_disturbance(scenario.registry)
    rng = PCG32.for_tick(seed, run_index, SETUP_TICK)

    explicit = list(scenario.agents)
    generated = generated_agents(scenario)
    topology = scenario.topology
    placement: dict[str, Cell] = {}

    if isinstance(topology, Grid):
        placement = {a.id: a.cell for a in explicit if a.cell is not None}
        taken = set(placement.values())
        free = [cell for cell in topology.cells() if cell not in taken]
        cells = rng.sample(free, len(generated))
        generated = [replace(a, cell=cell) for a, cell in zip(generated, cells)]
        placement.update((a.id, a.cell) for a in generated)
    else:
        topology = realize_network(
            topology, [a.id for a in explicit + generated], rng
        )

    agents = {a.id: a for a in sorted(explicit + generated, key=lambda a: a.id)}
    logger.debug(
        "World ready: %d agents (%d generated)", len(agents), len(generated)
    )
    return World(
        scenario=scenario,
        matrix=matrix,
        topology=topology,
        agents=agents,
        placement=placement,
        performances=dict.fromkeys(agents),
        beliefs={aid: Belief(a.initial_belief) for aid, a in agents.items()},
        seed=seed,
        run_index=run_index,
    )


def _activation_order(world: World, rng: PCG32) -> list[str]:
    ids = list(world.agents)
    if world.scenario.activation == "random":
        return rng.shuffle(ids)
    return ids


def activation_order(world: World) -> list[str]:
    """The order in which the next ``step`` will activate agents."""
    return _activation_order(world, world.tick_rng())


def step(world: World) -> tuple[World, TickRecord]:
    scenario = world.scenario
    registry = scenario.registry
    rng = world.tick_rng()

    placement = dict(world.placement)
    performances = dict(world.performances)
    beliefs = dict(world.beliefs)
    entries: dict[str, AgentRecord] = {}

    for agent_id in _activation_order(world, rng):
        agent = world.agents[agent_id]
        if scenario.movement != "none":
            placement = move_agent(
                world.topology, placement, agent_id, scenario.movement, rng
            )
        visible = [
            (other, performances[other])
            for other in sorted(neighbors(world.topology, placement, agent_id))
            if performances[other] is not None
        ]
        belief = infer_context(
            [practice for _, practice in visible],
            registry.contexts,
            beliefs[agent_id],
            known=registry.practice_ids,
        )
        decision = decide(
            agent.endowment,
            belief,
            visible,
            registry,
            world.matrix,
            scenario.decision,
            rng,
            weights=agent.preferences,
        )
        performances[agent_id] = decision.practice
        beliefs[agent_id] = belief
        entries[agent_id] = AgentRecord(
            agent_id, decision.practice, decision.override, decision.trace, belief
        )

    consensus = consensus_index(list(beliefs.values())) if beliefs else None
    record = TickRecord(
        tick=world.tick,
        entries=tuple(entries[aid] for aid in sorted(entries)),
        consensus=consensus,
    )
    logger.debug("tick %d consensus=%s", world.tick, consensus)
    advanced = replace(
        world,
        placement=placement,
        performances=performances,
        beliefs=beliefs,
        tick=world.tick + 1,
    )
    return advanced, record


def run(
    scenario: Scenario, seed: int, ticks: int | None = None, run_index: int = 0
) -> MetricsLog:
    """Run a scenario for ``ticks`` ticks (default: the scenario's own)."""
    ticks = scenario.ticks if ticks is None else ticks
    if ticks < 0:
        raise ValueError(f"ticks must be >= 0, got {ticks}")

    world = init_world(scenario, seed, run_index)
    header = RunHeader(
        scenario=scenario.name,
        scenario_hash=scenario_hash(scenario),
        seed=seed,
        run_index=run_index,
        ticks=ticks,
        engine_version=__version__,
        agent_count=len(world.agents),
        crowdedness=crowdedness(world.topology, world.placement),
    )
    logger.info(
        "Running '%s' seed=%d ticks=%d agents=%d",
        scenario.name,
        seed,
        ticks,
        header.agent_count,
    )

    records = []
    for _ in range(ticks):
        world, record = step(world)
        records.append(record)
    return MetricsLog(header, tuple(records))
