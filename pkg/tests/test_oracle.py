"""Seeded audits of the decision rule, whole runs and the no-disturbance guarantee."""

import random

import pytest

from practicesim.context import Belief
from practicesim.decision import DecisionParams, DiscardReason, decide
from practicesim.engine import init_world, run, step
from practicesim.practice import (
    Component,
    ComponentKind,
    ContextDefinition,
    DisturbanceRule,
    Practice,
    Registry,
    compile_disturbance,
)
from practicesim.rng import PCG32, derive_seed
from practicesim.scenario import Agent, Scenario
from practicesim.topology import Grid, neighbors


def random_registry(rng: random.Random, max_practices: int = 5) -> Registry:
    ids = [f"c{i}" for i in range(rng.randint(2, 7))]
    components = tuple(Component(c, rng.choice(list(ComponentKind))) for c in ids)
    practices = tuple(
        Practice(
            f"p{i}",
            requires=frozenset(rng.sample(ids, rng.randint(1, min(3, len(ids))))),
            emits=frozenset(rng.sample(ids, rng.randint(0, 2))),
            preference_weight=rng.choice([0.5, 1.0, 1.0, 2.0]),
        )
        for i in range(rng.randint(1, max_practices))
    )
    practice_ids = [p.id for p in practices]
    contexts = tuple(
        ContextDefinition(
            f"x{i}",
            frozenset(rng.sample(practice_ids, rng.randint(1, len(practice_ids)))),
        )
        for i in range(rng.randint(1, 3))
    )
    pairs = [(a, b) for a in ids for b in ids]
    rules = tuple(
        DisturbanceRule(a, b) for a, b in rng.sample(pairs, rng.randint(0, 4))
    )
    return Registry(components, practices, contexts, rules)


def expected_decision(endowment, belief, neighbor_practices, registry, weights):
    """The decision rule written out directly from its definition."""

    def disturbs(p, q):
        return any(
            r.emitter in registry.practice(p).emits
            and r.disturbed in registry.practice(q).requires
            for r in registry.rules
        )

    def weight(p):
        return weights.get(p.id, p.preference_weight)

    trace = []
    for practice in sorted(registry.practices, key=lambda p: (-weight(p), p.id)):
        if not practice.requires <= endowment:
            continue
        if belief.context is not None:
            if practice.id not in registry.context(belief.context).appropriate:
                trace.append((practice.id, DiscardReason.CONTEXT_INAPPROPRIATE))
                continue
        if any(disturbs(practice.id, q) for q in neighbor_practices):
            trace.append((practice.id, DiscardReason.DISTURBS_OTHER))
        elif any(disturbs(q, practice.id) for q in neighbor_practices):
            trace.append((practice.id, DiscardReason.DISTURBED_BY_OTHER))
        else:
            return practice.id, tuple(trace)
    return None, tuple(trace)


def random_scenario(rng: random.Random) -> Scenario:
    registry = random_registry(rng)
    component_ids = sorted(registry.component_ids)
    context_ids = sorted(registry.context_ids)
    grid = Grid(
        rng.randint(1, 4), rng.randint(1, 4), rng.randint(1, 2), rng.random() < 0.3
    )
    cells = rng.sample(grid.cells(), rng.randint(0, min(10, len(grid.cells()))))
    agents = tuple(
        Agent(
            f"a{i}",
            frozenset(rng.sample(component_ids, rng.randint(0, len(component_ids)))),
            rng.choice([None, *context_ids]),
            cell,
        )
        for i, cell in enumerate(cells)
    )
    return Scenario(
        registry=registry,
        topology=grid,
        agents=agents,
        activation=rng.choice(["ordered", "random"]),
        movement=rng.choice(["none", "random_walk"]),
        ticks=20,
        name="audit",
    )


def tiny_scenario(rng: random.Random) -> Scenario:
    registry = random_registry(rng, max_practices=3)
    component_ids = sorted(registry.component_ids)
    grid = Grid(rng.randint(1, 3), rng.randint(1, 3), 1, rng.random() < 0.5)
    cells = rng.sample(grid.cells(), rng.randint(1, min(3, len(grid.cells()))))
    agents = tuple(
        Agent(
            f"a{i}",
            frozenset(rng.sample(component_ids, rng.randint(0, len(component_ids)))),
            rng.choice([None, *sorted(registry.context_ids)]),
            cell,
            {p: 2.5 for p in sorted(registry.practice_ids) if rng.random() < 0.2},
        )
        for i, cell in enumerate(cells)
    )
    return Scenario(
        registry=registry,
        topology=grid,
        agents=agents,
        decision=DecisionParams(epsilon=rng.choice([0.0, 0.0, 0.3, 1.0])),
        activation=rng.choice(["ordered", "random"]),
        movement=rng.choice(["none", "random_walk"]),
        ticks=rng.randint(1, 2),
        name="tiny",
    )


def replay(scenario: Scenario, seed: int) -> list[list[tuple]]:
    """A straight-line rerun of a grid scenario, one tuple per agent and tick."""
    registry = scenario.registry
    grid = scenario.topology
    epsilon = scenario.decision.epsilon
    agents = {a.id: a for a in scenario.agents}
    ids = sorted(agents)
    cells = {a.id: a.cell for a in scenario.agents}
    doing = dict.fromkeys(ids)
    believe = {a.id: (a.initial_belief, 0.0) for a in scenario.agents}

    def wrap(x, y):
        if grid.torus:
            return x % grid.width, y % grid.height
        return x, y

    def dist(a, b):
        dx, dy = abs(a[0] - b[0]), abs(a[1] - b[1])
        if grid.torus:
            dx, dy = min(dx, grid.width - dx), min(dy, grid.height - dy)
        return max(dx, dy)

    def weight(agent, practice):
        return agent.preferences.get(practice.id, practice.preference_weight)

    ticks = []
    for tick in range(scenario.ticks):
        rng = PCG32(derive_seed(seed, 0, tick), stream=0)
        order = rng.shuffle(ids) if scenario.activation == "random" else ids
        rows = {}
        for aid in order:
            agent = agents[aid]
            if scenario.movement == "random_walk":
                x, y = cells[aid]
                free = sorted(
                    {
                        wrap(x + dx, y + dy)
                        for dx in (-1, 0, 1)
                        for dy in (-1, 0, 1)
                        if 0 <= wrap(x + dx, y + dy)[0] < grid.width
                        and 0 <= wrap(x + dx, y + dy)[1] < grid.height
                    }
                    - set(cells.values())
                )
                if free:
                    cells[aid] = free[rng.bounded(len(free))]
            seen = [
                doing[o]
                for o in ids
                if o != aid
                and doing[o] is not None
                and dist(cells[aid], cells[o]) <= grid.radius
            ]
            context, score = believe[aid]
            if seen:
                hits = {
                    c.id: sum(p in c.appropriate for p in seen)
                    for c in registry.contexts
                }
                best = max(hits.values())
                tied = sorted(c for c, n in hits.items() if n == best)
                context = context if context in tied else tied[0]
                score = best / len(seen)
            believe[aid] = (context, score)

            if rng.uniform() < epsilon:
                ranked = sorted(
                    registry.practices, key=lambda p: (-weight(agent, p), p.id)
                )
                able = [p.id for p in ranked if p.requires <= agent.endowment]
                practice, override, trace = (able[0] if able else None), bool(able), ()
            else:
                practice, trace = expected_decision(
                    agent.endowment,
                    Belief(context),
                    seen,
                    registry,
                    agent.preferences,
                )
                override = False
            doing[aid] = practice
            rows[aid] = (aid, practice, override, trace, context, score)
        ticks.append([rows[aid] for aid in ids])
    return ticks


@pytest.mark.slow
class TestDecisionOracle:
    """Compare decide against the written-out rule."""

    def test_matches_oracle(self):
        """1000 random agents, beliefs and neighborhoods agree with the oracle."""
        rng = random.Random(7)

        for case in range(1000):
            registry = random_registry(rng)
            matrix = compile_disturbance(registry)
            component_ids = sorted(registry.component_ids)
            practice_ids = sorted(registry.practice_ids)
            endowment = frozenset(
                rng.sample(component_ids, rng.randint(0, len(component_ids)))
            )
            belief = Belief(rng.choice([None, *sorted(registry.context_ids)]))
            around = [
                (f"n{i}", rng.choice([None, *practice_ids]))
                for i in range(rng.randint(0, 4))
            ]
            weights = {
                pid: rng.choice([0.5, 3.0])
                for pid in practice_ids
                if rng.random() < 0.3
            }

            decision = decide(
                endowment,
                belief,
                around,
                registry,
                matrix,
                DecisionParams(),
                PCG32(case),
                weights=weights,
            )

            practice, trace = expected_decision(
                endowment,
                belief,
                [p for _, p in around if p is not None],
                registry,
                weights,
            )
            assert (decision.practice, decision.trace) == (practice, trace), case
            assert not decision.override


@pytest.mark.slow
class TestNoDisturbanceAudit:
    """Without overrides no two neighbors ever perform conflicting practices."""

    def test_random_scenarios(self):
        """1000 random scenarios, checked after every tick."""
        rng = random.Random(11)

        for case in range(1000):
            scenario = random_scenario(rng)
            world = init_world(scenario, seed=case)
            for _ in range(scenario.ticks):
                world, record = step(world)
                assert not any(e.override for e in record.entries)
                for agent, practice in world.performances.items():
                    if practice is None:
                        continue
                    for other in neighbors(world.topology, world.placement, agent):
                        theirs = world.performances[other]
                        if theirs is None:
                            continue
                        assert not world.matrix.disturbs(practice, theirs), (
                            case,
                            agent,
                            other,
                        )


@pytest.mark.slow
class TestFullLogOracle:
    """Compare whole runs against a straight-line replay."""

    def test_tiny_scenarios(self):
        """1000 small scenarios and seeds give the replayed log exactly."""
        rng = random.Random(23)

        for case in range(1000):
            scenario = tiny_scenario(rng)
            seed = rng.randint(0, 2**32)

            log = run(scenario, seed)

            actual = [
                [
                    (
                        e.agent_id,
                        e.practice,
                        e.override,
                        e.trace,
                        e.belief.context,
                        e.belief.score,
                    )
                    for e in record.entries
                ]
                for record in log.records
            ]
            assert actual == replay(scenario, seed), case
