"""
Who surrounds whom.

Two kinds of topology: a grid with Chebyshev (Moore) neighborhoods of a
given radius, optionally wrapped into a torus, and an undirected social
network whose links define the neighborhood. Grids hold at most one agent
per cell, which makes crowdedness a plain occupancy ratio.
"""

from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from functools import cached_property

import networkx as nx

from practicesim.rng import PCG32

Cell = tuple[int, int]
Placement = Mapping[str, Cell]

MOVEMENT_POLICIES = ("none", "random_walk")


class UnknownAgentError(LookupError):
    """Raised for a neighborhood query about an agent that is not placed."""


@dataclass(frozen=True)
class Grid:
    width: int
    height: int
    radius: int = 1
    torus: bool = False

    def contains(self, cell: Cell) -> bool:
        x, y = cell
        return 0 <= x < self.width and 0 <= y < self.height

    def cells(self) -> list[Cell]:
        """All cells, row-major."""
        return [(x, y) for y in range(self.height) for x in range(self.width)]

    def distance(self, a: Cell, b: Cell) -> int:
        dx, dy = abs(a[0] - b[0]), abs(a[1] - b[1])
        if self.torus:
            dx = min(dx, self.width - dx)
            dy = min(dy, self.height - dy)
        return max(dx, dy)

    def adjacent(self, cell: Cell) -> list[Cell]:
        """Moore-adjacent cells, wrapped on a torus, in ascending (x, y) order."""
        x, y = cell
        found = set()
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                cx, cy = x + dx, y + dy
                if self.torus:
                    cx, cy = cx % self.width, cy % self.height
                elif not self.contains((cx, cy)):
                    continue
                found.add((cx, cy))
        found.discard(cell)
        return sorted(found)


@dataclass(frozen=True)
class Network:
    """Undirected links between agents; ``nodes`` lists every agent."""

    edges: tuple[tuple[str, str], ...] = ()
    nodes: tuple[str, ...] = ()
    edge_probability: float | None = None

    @cached_property
    def graph(self) -> nx.Graph:
        graph = nx.Graph()
        graph.add_nodes_from(self.nodes)
        graph.add_edges_from(self.edges)
        return graph


Topology = Grid | Network


def neighbors(topology: Topology, placement: Placement, agent: str) -> frozenset[str]:
    """Agents surrounding ``agent``.

    Grid: every other agent within Chebyshev distance ``radius``.
    Network: the agents linked to ``agent``.
    """
    if isinstance(topology, Network):
        if agent not in topology.graph:
            raise UnknownAgentError(f"Agent not in network: {agent}")
        return frozenset(topology.graph.neighbors(agent))

    if agent not in placement:
        raise UnknownAgentError(f"Agent not on grid: {agent}")
    here = placement[agent]
    return frozenset(
        other
        for other, cell in placement.items()
        if other != agent and topology.distance(here, cell) <= topology.radius
    )


def move_agent(
    topology: Topology,
    placement: Placement,
    agent: str,
    policy: str,
    rng: PCG32,
) -> dict[str, Cell]:
    """Apply a movement policy to one agent and return the new placement.

    ``random_walk`` moves to a uniformly drawn empty adjacent cell, using one
    bounded draw; an agent with no empty adjacent cell stays and draws nothing.
    """
    if policy == "none":
        return dict(placement)
    if policy != "random_walk":
        raise ValueError(f"Unknown movement policy: {policy}")
    if not isinstance(topology, Grid):
        raise ValueError("random_walk needs a grid topology")
    if agent not in placement:
        raise UnknownAgentError(f"Agent not on grid: {agent}")

    occupied = set(placement.values())
    free = [c for c in topology.adjacent(placement[agent]) if c not in occupied]
    moved = dict(placement)
    if free:
        moved[agent] = free[rng.bounded(len(free))]
    return moved


def crowdedness(topology: Topology, placement: Placement) -> float:
    """Occupied share of grid cells, or link density of a network."""
    if isinstance(topology, Network):
        return float(nx.density(topology.graph))
    return len(placement) / (topology.width * topology.height)


def realize_network(network: Network, agent_ids: Sequence[str], rng: PCG32) -> Network:
    """Fix the network for a run: every agent becomes a node, and when
    ``edge_probability`` is set a G(n, p) graph over the sorted ids is
    unioned with the explicit edges.
    """
    ids = sorted(agent_ids)
    edges = list(network.edges)
    if network.edge_probability:
        random_graph = nx.gnp_random_graph(
            len(ids), network.edge_probability, seed=rng.next_u32()
        )
        edges += [(ids[u], ids[v]) for u, v in sorted(random_graph.edges())]
    return Network(
        edges=tuple(edges), nodes=tuple(ids), edge_probability=network.edge_probability
    )
