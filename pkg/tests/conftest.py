"""Pytest configuration and fixtures."""

import copy
import json
from collections.abc import Callable
from pathlib import Path

import pytest
from click.testing import CliRunner

from practicesim.practice import (
    Component,
    ComponentKind,
    ContextDefinition,
    DisturbanceRule,
    Practice,
    Registry,
    compile_disturbance,
)
from practicesim.scenario import load_builtin, parse_scenario

GOLDEN = Path(__file__).parent / "golden"


@pytest.fixture
def cli_runner() -> CliRunner:
    """Create a Click CLI runner."""
    return CliRunner()


@pytest.fixture
def golden() -> Path:
    return GOLDEN


@pytest.fixture
def music_registry() -> Registry:
    """read_book vs play_music, with loud music disturbing concentration."""
    return Registry(
        components=(
            Component("book", ComponentKind.MATERIAL),
            Component("concentration", ComponentKind.COMPETENCE),
            Component("relaxation", ComponentKind.MEANING),
            Component("player", ComponentKind.MATERIAL),
            Component("music-skill", ComponentKind.COMPETENCE),
            Component("entertainment", ComponentKind.MEANING),
            Component("soundwaves", ComponentKind.MATERIAL),
        ),
        practices=(
            Practice("read_book", frozenset({"book", "concentration", "relaxation"})),
            Practice(
                "play_music",
                frozenset({"player", "music-skill", "entertainment"}),
                emits=frozenset({"soundwaves"}),
            ),
        ),
        contexts=(
            ContextDefinition("library", frozenset({"read_book", "play_music"})),
            ContextDefinition("party", frozenset({"play_music"})),
        ),
        rules=(DisturbanceRule("soundwaves", "concentration"),),
    )


@pytest.fixture
def music_matrix(music_registry: Registry):
    return compile_disturbance(music_registry)


@pytest.fixture
def two_agent_document() -> dict:
    """A musician (a0) and a reader (a1) side by side."""
    return json.loads((GOLDEN / "two_agents.json").read_text())


@pytest.fixture
def make_document(two_agent_document: dict) -> Callable[..., dict]:
    """Copy of the two-agent document with top-level keys replaced."""

    def make(**overrides) -> dict:
        document = copy.deepcopy(two_agent_document)
        document.update(overrides)
        return document

    return make


@pytest.fixture
def write_scenario(tmp_path: Path) -> Callable[[dict | str, str], Path]:
    """Write a scenario document (or raw text) to a file in tmp_path."""

    def write(document: dict | str, name: str = "scenario.json") -> Path:
        path = tmp_path / name
        text = document if isinstance(document, str) else json.dumps(document, indent=2)
        path.write_text(text)
        return path

    return write


@pytest.fixture
def two_agent_scenario(two_agent_document: dict):
    return parse_scenario(json.dumps(two_agent_document))


@pytest.fixture
def library():
    return load_builtin("library")


@pytest.fixture
def breakfast():
    return load_builtin("breakfast")


@pytest.fixture
def density():
    return load_builtin("density")
