"""
Practice registry - components, practices, contexts and disturbance rules.

A practice can be performed when all of its required components come
together. Practices emit components (soundwaves, grinder noise) and a
disturbance rule says which emitted component impairs which required one.
"""

from collections import Counter
from collections.abc import Iterable, Set
from dataclasses import dataclass
from enum import StrEnum
from functools import cached_property

import numpy as np

UNKNOWN_CONTEXT = "Unknown"
IDLE = "Idle"


class ComponentKind(StrEnum):
    MATERIAL = "Material"
    COMPETENCE = "Competence"
    MEANING = "Meaning"


@dataclass(frozen=True)
class Component:
    id: str
    kind: ComponentKind
    name: str = ""


@dataclass(frozen=True)
class Practice:
    id: str
    requires: frozenset[str]
    emits: frozenset[str] = frozenset()
    preference_weight: float = 1.0
    name: str = ""


@dataclass(frozen=True)
class DisturbanceRule:
    """An emitted component `emitter` impairs a required component `disturbed`."""

    emitter: str
    disturbed: str


@dataclass(frozen=True)
class ContextDefinition:
    id: str
    appropriate: frozenset[str]


@dataclass(frozen=True)
class Diagnostic:
    """A validation finding with a stable code, e.g. E001."""

    code: str
    path: str
    message: str

    def __str__(self) -> str:
        return f"{self.code} {self.path}: {self.message}"


def sort_diagnostics(diagnostics: Iterable[Diagnostic]) -> list[Diagnostic]:
    return sorted(diagnostics, key=lambda d: (d.code, d.path, d.message))


class RegistryError(ValueError):
    """Raised when an operation needs a valid registry."""

    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = diagnostics
        lines = "\n".join(f"  {d}" for d in diagnostics)
        super().__init__(f"Invalid registry:\n{lines}")


class UnknownPracticeError(ValueError):
    """Raised when a practice id does not resolve in the registry."""


@dataclass(frozen=True)
class Registry:
    components: tuple[Component, ...] = ()
    practices: tuple[Practice, ...] = ()
    contexts: tuple[ContextDefinition, ...] = ()
    rules: tuple[DisturbanceRule, ...] = ()

    @cached_property
    def _practice_index(self) -> dict[str, Practice]:
        return {p.id: p for p in self.practices}

    @cached_property
    def _context_index(self) -> dict[str, ContextDefinition]:
        return {c.id: c for c in self.contexts}

    @cached_property
    def component_ids(self) -> frozenset[str]:
        return frozenset(c.id for c in self.components)

    @cached_property
    def practice_ids(self) -> frozenset[str]:
        return frozenset(self._practice_index)

    @cached_property
    def context_ids(self) -> frozenset[str]:
        return frozenset(self._context_index)

    def practice(self, practice_id: str) -> Practice:
        try:
            return self._practice_index[practice_id]
        except KeyError:
            raise UnknownPracticeError(f"Unknown practice: {practice_id}") from None

    def context(self, context_id: str) -> ContextDefinition:
        try:
            return self._context_index[context_id]
        except KeyError:
            raise ValueError(f"Unknown context: {context_id}") from None


def _duplicates(ids: Iterable[str]) -> list[str]:
    return sorted(i for i, n in Counter(ids).items() if n > 1)


def validate_registry(registry: Registry) -> list[Diagnostic]:
    """Check referential integrity of a registry.

    Returns a sorted list of diagnostics; the registry is valid iff the list
    is empty. Codes:

        E001 unknown component reference
        E002 duplicate id (components, practices, contexts, rules)
        E003 practice with empty requires
        E004 context with empty appropriate set
        E005 context naming an unknown practice
        E006 negative preference weight
        E007 reserved id ("Unknown" context, "Idle" practice)
    """
    found: list[Diagnostic] = []
    components = registry.component_ids
    practices = {p.id for p in registry.practices}

    for kind, ids in (
        ("components", [c.id for c in registry.components]),
        ("practices", [p.id for p in registry.practices]),
        ("contexts", [c.id for c in registry.contexts]),
    ):
        for dup in _duplicates(ids):
            found.append(Diagnostic("E002", f"{kind}.{dup}", f"Duplicate id '{dup}'"))

    for pair in _duplicates(f"{r.emitter}->{r.disturbed}" for r in registry.rules):
        found.append(Diagnostic("E002", f"rules.{pair}", f"Duplicate rule {pair}"))

    for practice in registry.practices:
        path = f"practices.{practice.id}"
        if practice.id == IDLE:
            found.append(Diagnostic("E007", path, f"'{IDLE}' is a reserved id"))
        if not practice.requires:
            found.append(Diagnostic("E003", path, "Practice requires no components"))
        for field_name in ("requires", "emits"):
            for ref in sorted(getattr(practice, field_name) - components):
                found.append(
                    Diagnostic(
                        "E001",
                        f"{path}.{field_name}",
                        f"Unknown component '{ref}'",
                    )
                )
        if practice.preference_weight < 0:
            found.append(
                Diagnostic(
                    "E006",
                    f"{path}.preference_weight",
                    f"Negative preference weight {practice.preference_weight}",
                )
            )

    for rule in registry.rules:
        for field_name in ("emitter", "disturbed"):
            ref = getattr(rule, field_name)
            if ref not in components:
                found.append(
                    Diagnostic(
                        "E001",
                        f"rules.{rule.emitter}->{rule.disturbed}.{field_name}",
                        f"Unknown component '{ref}'",
                    )
                )

    for context in registry.contexts:
        path = f"contexts.{context.id}"
        if context.id == UNKNOWN_CONTEXT:
            found.append(
                Diagnostic("E007", path, f"'{UNKNOWN_CONTEXT}' is a reserved id")
            )
        if not context.appropriate:
            found.append(Diagnostic("E004", path, "Context has no practices"))
        for ref in sorted(context.appropriate - practices):
            found.append(
                Diagnostic("E005", f"{path}.appropriate", f"Unknown practice '{ref}'")
            )

    return sort_diagnostics(found)


def performable(endowment: Set[str], practice: Practice) -> bool:
    """A practice can be performed when all its required components are present."""
    return practice.requires <= endowment


@dataclass(frozen=True, eq=False)
class DisturbanceMatrix:
    """Practice-level disturbance relation.

    ``relation[i, j]`` is true when practice ``practice_ids[i]`` disturbs
    practice ``practice_ids[j]``. Not symmetric; the diagonal may be set.
    """

    practice_ids: tuple[str, ...]
    relation: np.ndarray

    @cached_property
    def _position(self) -> dict[str, int]:
        return {pid: i for i, pid in enumerate(self.practice_ids)}

    def disturbs(self, emitter: str, victim: str) -> bool:
        return bool(self.relation[self._position[emitter], self._position[victim]])

    def row(self, emitter: str) -> frozenset[str]:
        """Practices disturbed by ``emitter``."""
        hits = np.flatnonzero(self.relation[self._position[emitter]])
        return frozenset(self.practice_ids[i] for i in hits)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DisturbanceMatrix):
            return NotImplemented
        return self.practice_ids == other.practice_ids and np.array_equal(
            self.relation, other.relation
        )

    def __hash__(self) -> int:
        return hash((self.practice_ids, self.relation.tobytes()))


def compile_disturbance(registry: Registry) -> DisturbanceMatrix:
    """Compile component-level rules into the practice-level relation.

    p disturbs q iff some rule has its emitter in p.emits and its disturbed
    component in q.requires.
    """
    diagnostics = validate_registry(registry)
    if diagnostics:
        raise RegistryError(diagnostics)

    practice_ids = tuple(sorted(p.id for p in registry.practices))
    component_ids = sorted(registry.component_ids)
    column = {cid: i for i, cid in enumerate(component_ids)}

    n, m = len(practice_ids), len(component_ids)
    emits = np.zeros((n, m), dtype=bool)
    requires = np.zeros((n, m), dtype=bool)
    for i, pid in enumerate(practice_ids):
        practice = registry.practice(pid)
        emits[i, [column[c] for c in practice.emits]] = True
        requires[i, [column[c] for c in practice.requires]] = True

    rules = np.zeros((m, m), dtype=bool)
    for rule in registry.rules:
        rules[column[rule.emitter], column[rule.disturbed]] = True

    # integer products so the boolean "or of ands" cannot overflow
    counts = emits.astype(np.int64) @ rules.astype(np.int64) @ requires.T.astype(
        np.int64
    )
    relation = counts > 0
    relation.flags.writeable = False
    return DisturbanceMatrix(practice_ids, relation)
