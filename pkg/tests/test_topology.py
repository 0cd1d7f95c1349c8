"""Tests for grids, networks and movement."""

from collections import Counter

import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from practicesim.rng import PCG32
from practicesim.topology import (
    Grid,
    Network,
    UnknownAgentError,
    crowdedness,
    move_agent,
    neighbors,
    realize_network,
)


def full_grid(grid: Grid) -> dict:
    return {f"a{x}_{y}": (x, y) for x, y in grid.cells()}


class TestGridNeighbors:
    """Test Moore neighborhoods on grids."""

    def test_center_of_full_grid(self):
        """The center of a full 5x5 grid has 8 neighbors at radius 1."""
        grid = Grid(5, 5, radius=1)

        assert len(neighbors(grid, full_grid(grid), "a2_2")) == 8

    def test_corner_is_clipped(self):
        """A corner has 3 neighbors without wrapping."""
        grid = Grid(5, 5, radius=1)

        assert neighbors(grid, full_grid(grid), "a0_0") == frozenset(
            {"a1_0", "a0_1", "a1_1"}
        )

    def test_corner_on_torus(self):
        """On a torus every cell has 8 neighbors."""
        grid = Grid(5, 5, radius=1, torus=True)

        found = neighbors(grid, full_grid(grid), "a0_0")

        assert len(found) == 8
        assert "a4_4" in found

    def test_radius_two(self):
        """Radius 2 covers a 5x5 block."""
        grid = Grid(7, 7, radius=2)

        assert len(neighbors(grid, full_grid(grid), "a3_3")) == 24

    def test_small_torus_does_not_double_count(self):
        """Wrapping on a tiny torus never counts a cell twice or includes self."""
        grid = Grid(2, 2, radius=1, torus=True)

        assert neighbors(grid, full_grid(grid), "a0_0") == frozenset(
            {"a1_0", "a0_1", "a1_1"}
        )

    def test_empty_cells_are_not_neighbors(self):
        """Only placed agents count."""
        grid = Grid(5, 5)

        assert neighbors(grid, {"a": (0, 0), "b": (3, 3)}, "a") == frozenset()

    def test_unknown_agent(self):
        """Asking about an unplaced agent is an error."""
        with pytest.raises(UnknownAgentError):
            neighbors(Grid(3, 3), {"a": (0, 0)}, "ghost")

    @given(
        st.integers(1, 6),
        st.integers(1, 6),
        st.integers(1, 3),
        st.booleans(),
    )
    def test_symmetry(self, width, height, radius, torus):
        """b is a's neighbor exactly when a is b's."""
        grid = Grid(width, height, radius, torus)
        placement = full_grid(grid)

        for a in placement:
            for b in neighbors(grid, placement, a):
                assert a in neighbors(grid, placement, b)
                assert a != b


class TestNetworkNeighbors:
    """Test link neighborhoods."""

    def test_links(self):
        """Neighbors are linked agents, in both directions."""
        network = Network(edges=(("a", "b"), ("b", "c")), nodes=("a", "b", "c"))

        assert neighbors(network, {}, "b") == frozenset({"a", "c"})
        assert neighbors(network, {}, "a") == frozenset({"b"})

    def test_isolated_node(self):
        """An agent without links has no neighbors."""
        network = Network(nodes=("a",))

        assert neighbors(network, {}, "a") == frozenset()

    def test_unknown_agent(self):
        """Asking about an agent outside the network is an error."""
        with pytest.raises(UnknownAgentError):
            neighbors(Network(nodes=("a",)), {}, "ghost")

    def test_realize_adds_all_agents(self):
        """Every agent becomes a node even without links."""
        base = Network(edges=(("a", "b"),))

        network = realize_network(base, ["c", "a", "b"], PCG32(1))

        assert network.nodes == ("a", "b", "c")
        assert neighbors(network, {}, "c") == frozenset()

    def test_realize_random_links_are_reproducible(self):
        """The random part of a network depends only on the generator."""
        base = Network(edge_probability=0.5)
        ids = [f"n{i}" for i in range(12)]

        a = realize_network(base, ids, PCG32(3))
        b = realize_network(base, ids, PCG32(3))

        assert a == b
        assert a.edges

    def test_realize_full_probability(self):
        """Probability one links everyone."""
        ids = ["a", "b", "c", "d"]

        network = realize_network(Network(edge_probability=1.0), ids, PCG32(0))

        assert neighbors(network, {}, "a") == frozenset({"b", "c", "d"})


class TestMovement:
    """Test movement policies."""

    def test_none_keeps_placement(self):
        """The none policy leaves everyone where they are."""
        placement = {"a": (1, 1)}

        assert move_agent(Grid(3, 3), placement, "a", "none", PCG32(0)) == placement

    def test_random_walk_moves_to_empty_adjacent_cell(self):
        """A walker steps onto a free neighboring cell."""
        grid = Grid(3, 3)
        placement = {"a": (1, 1), "b": (0, 0)}

        moved = move_agent(grid, placement, "a", "random_walk", PCG32(4))

        assert moved["a"] != (0, 0)
        assert grid.distance(moved["a"], (1, 1)) == 1
        assert placement["a"] == (1, 1)

    def test_boxed_in_agent_stays_without_drawing(self):
        """No free cell means no move and no draw."""
        grid = Grid(2, 1)
        rng, reference = PCG32(8), PCG32(8)

        moved = move_agent(grid, {"a": (0, 0), "b": (1, 0)}, "a", "random_walk", rng)

        assert moved["a"] == (0, 0)
        assert rng.next_u32() == reference.next_u32()

    def test_random_walk_needs_grid(self):
        """Networks have no cells to walk on."""
        with pytest.raises(ValueError):
            move_agent(Network(nodes=("a",)), {}, "a", "random_walk", PCG32(0))

    def test_unknown_policy(self):
        """Unknown policies are rejected."""
        with pytest.raises(ValueError):
            move_agent(Grid(3, 3), {"a": (1, 1)}, "a", "teleport", PCG32(0))

    def test_random_walk_is_uniform(self):
        """Each of the 8 free cells is chosen equally often (chi-square)."""
        grid = Grid(5, 5)
        rng = PCG32(2024)

        counts = Counter(
            move_agent(grid, {"a": (2, 2)}, "a", "random_walk", rng)["a"]
            for _ in range(8000)
        )

        assert len(counts) == 8
        _, p_value = stats.chisquare(list(counts.values()))
        assert p_value > 0.001


class TestCrowdedness:
    """Test occupancy and density."""

    def test_grid_occupancy(self):
        """Ten agents on a 10x10 grid is 10% crowded."""
        placement = {f"a{i}": (i, 0) for i in range(10)}

        assert crowdedness(Grid(10, 10), placement) == pytest.approx(0.1)

    def test_network_density(self):
        """A triangle is fully dense."""
        network = Network(
            edges=(("a", "b"), ("b", "c"), ("a", "c")), nodes=("a", "b", "c")
        )

        assert crowdedness(network, {}) == 1.0
