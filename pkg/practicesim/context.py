"""
Context interpretation - how an agent reads the situation from the practices
it sees around it, and how far a group agrees on that reading.
"""

from collections import Counter
from collections.abc import Collection, Iterable, Sequence
from dataclasses import dataclass

from practicesim.practice import (
    UNKNOWN_CONTEXT,
    ContextDefinition,
    UnknownPracticeError,
)

DEFAULT_THRESHOLD = 0.9
DEFAULT_WINDOW = 10


@dataclass(frozen=True)
class Belief:
    """An agent's context interpretation; ``context=None`` means Unknown.

    ``score`` is the match fraction of the inference that produced the belief
    (0.0 for beliefs that were set rather than inferred).
    """

    context: str | None = None
    score: float = 0.0

    @property
    def label(self) -> str:
        return UNKNOWN_CONTEXT if self.context is None else self.context


UNKNOWN = Belief()


def infer_context(
    observation: Sequence[str],
    contexts: Iterable[ContextDefinition],
    previous: Belief,
    known: Collection[str] | None = None,
) -> Belief:
    """Update a belief from the practices performed in the neighborhood.

    Each context scores the fraction of observed performances it deems
    appropriate. The best-scoring context wins; on a tie the previous context
    is kept if it is among the winners, otherwise the smallest id is taken.
    An empty observation leaves the belief unchanged.

    ``known`` is the set of registered practice ids. Without it, only
    practices some context deems appropriate count as known.
    """
    contexts = list(contexts)
    if not contexts:
        raise ValueError("infer_context needs at least one context")
    if known is None:
        known = set().union(*(c.appropriate for c in contexts))
    for practice_id in observation:
        if practice_id not in known:
            raise UnknownPracticeError(f"Observed unknown practice: {practice_id}")
    if not observation:
        return previous

    seen = Counter(observation)
    matches = {
        c.id: sum(n for pid, n in seen.items() if pid in c.appropriate)
        for c in contexts
    }
    best = max(matches.values())
    winners = sorted(cid for cid, n in matches.items() if n == best)
    chosen = previous.context if previous.context in winners else winners[0]
    return Belief(chosen, best / len(observation))


def consensus_index(beliefs: Sequence[Belief]) -> float:
    """Share of beliefs holding the modal context (Unknown counts as a value)."""
    if not beliefs:
        raise ValueError("consensus_index of an empty group is undefined")
    counts = Counter(b.context for b in beliefs)
    return max(counts.values()) / len(beliefs)


def time_to_consensus(
    series: Sequence[float | None],
    threshold: float = DEFAULT_THRESHOLD,
    window: int = DEFAULT_WINDOW,
) -> int | None:
    """First tick from which consensus stays at or above ``threshold`` for
    ``window`` consecutive ticks, or None if the series never gets there.
    """
    if not 0 < threshold <= 1:
        raise ValueError(f"threshold must be in (0, 1], got {threshold}")
    if window < 1:
        raise ValueError(f"window must be >= 1, got {window}")

    run = 0
    for tick, value in enumerate(series):
        run = run + 1 if value is not None and value >= threshold else 0
        if run == window:
            return tick - window + 1
    return None
