"""
The agent decision procedure.

Given its (already updated) context belief, an agent walks its practices in
preference order. A practice it lacks components for is skipped, one the
context deems inappropriate is discarded, and one that would disturb or be
disturbed by a neighbor's current performance is discarded. The first
practice that survives is performed; if none does, the agent stays idle.

With probability epsilon the agent ignores context and disturbance and
performs its first performable practice.
"""

from collections.abc import Mapping, Sequence, Set
from dataclasses import dataclass
from enum import StrEnum

from practicesim.context import Belief
from practicesim.practice import DisturbanceMatrix, Registry, performable
from practicesim.rng import PCG32

ORDERING_POLICIES = ("preference", "id")

NeighborPerformance = tuple[str, str | None]
"""(neighbor agent id, practice id); an idle neighbor has practice None."""


class DiscardReason(StrEnum):
    NOT_PERFORMABLE = "NotPerformable"
    CONTEXT_INAPPROPRIATE = "ContextInappropriate"
    DISTURBS_OTHER = "DisturbsOther"
    DISTURBED_BY_OTHER = "DisturbedByOther"


@dataclass(frozen=True)
class DecisionParams:
    epsilon: float = 0.0
    ordering: str = "preference"

    def __post_init__(self):
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError(f"epsilon must be in [0, 1], got {self.epsilon}")
        if self.ordering not in ORDERING_POLICIES:
            raise ValueError(f"Unknown ordering policy: {self.ordering}")


@dataclass(frozen=True)
class CheckResult:
    disturbs: tuple[NeighborPerformance, ...] = ()
    disturbed_by: tuple[NeighborPerformance, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.disturbs and not self.disturbed_by


@dataclass(frozen=True)
class Decision:
    """Outcome of one agent-tick. ``practice=None`` is Idle."""

    practice: str | None
    override: bool = False
    trace: tuple[tuple[str, DiscardReason], ...] = ()

    @property
    def action(self) -> str:
        return "idle" if self.practice is None else "perform"


def rank_practices(
    registry: Registry,
    ordering: str = "preference",
    weights: Mapping[str, float] | None = None,
) -> list[str]:
    """All practice ids in the order an agent considers them.

    ``preference``: descending weight (agent override, else the practice's
    own weight), ties by ascending id. ``id``: ascending id.
    """
    ids = sorted(p.id for p in registry.practices)
    if ordering == "id":
        return ids
    weights = weights or {}

    def weight(pid: str) -> float:
        return weights.get(pid, registry.practice(pid).preference_weight)

    return sorted(ids, key=lambda pid: (-weight(pid), pid))


def screen(
    endowment: Set[str], belief: Belief, practice_id: str, registry: Registry
) -> DiscardReason | None:
    """Why a practice is not a candidate, or None if it is one."""
    if not performable(endowment, registry.practice(practice_id)):
        return DiscardReason.NOT_PERFORMABLE
    if belief.context is not None:
        if practice_id not in registry.context(belief.context).appropriate:
            return DiscardReason.CONTEXT_INAPPROPRIATE
    return None


def candidate_set(
    endowment: Set[str],
    belief: Belief,
    registry: Registry,
    ordering: str = "preference",
    weights: Mapping[str, float] | None = None,
) -> list[str]:
    """Performable, context-appropriate practices in consideration order.

    An Unknown belief applies no context filter.
    """
    return [
        pid
        for pid in rank_practices(registry, ordering, weights)
        if screen(endowment, belief, pid, registry) is None
    ]


def disturbance_check(
    practice_id: str,
    neighbor_performances: Sequence[NeighborPerformance],
    matrix: DisturbanceMatrix,
) -> CheckResult:
    """Would performing ``practice_id`` disturb, or be disturbed by, a neighbor?"""
    disturbs = tuple(
        (agent, other)
        for agent, other in neighbor_performances
        if other is not None and matrix.disturbs(practice_id, other)
    )
    disturbed_by = tuple(
        (agent, other)
        for agent, other in neighbor_performances
        if other is not None and matrix.disturbs(other, practice_id)
    )
    return CheckResult(disturbs, disturbed_by)


def decide(
    endowment: Set[str],
    belief: Belief,
    neighbor_performances: Sequence[NeighborPerformance],
    registry: Registry,
    matrix: DisturbanceMatrix,
    params: DecisionParams,
    rng: PCG32,
    weights: Mapping[str, float] | None = None,
) -> Decision:
    """Choose this tick's practice; consumes exactly one uniform draw."""
    ranked = rank_practices(registry, params.ordering, weights)

    if rng.uniform() < params.epsilon:
        for pid in ranked:
            if performable(endowment, registry.practice(pid)):
                return Decision(pid, override=True)
        return Decision(None)

    trace: list[tuple[str, DiscardReason]] = []
    for pid in ranked:
        reason = screen(endowment, belief, pid, registry)
        if reason is DiscardReason.NOT_PERFORMABLE:
            continue
        if reason is None:
            check = disturbance_check(pid, neighbor_performances, matrix)
            if check.ok:
                return Decision(pid, trace=tuple(trace))
            # an agent that would both disturb and be disturbed is recorded
            # as the disturber
            if check.disturbs:
                reason = DiscardReason.DISTURBS_OTHER
            else:
                reason = DiscardReason.DISTURBED_BY_OTHER
        trace.append((pid, reason))
    return Decision(None, trace=tuple(trace))
