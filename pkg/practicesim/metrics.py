"""
Metrics logs and run summaries.

A log is written either as CSV (one row per agent per tick) or JSON Lines
(one object per tick). Both are plain text with sorted keys and ``\\n`` line
endings, so two runs with the same inputs produce byte-identical files.
"""

import csv
import io
import json
from collections import Counter, defaultdict
from collections.abc import Iterable, Sequence
from dataclasses import asdict, dataclass, field

from practicesim.context import (
    DEFAULT_THRESHOLD,
    DEFAULT_WINDOW,
    Belief,
    consensus_index,
    time_to_consensus,
)
from practicesim.decision import DiscardReason
from practicesim.engine import AgentRecord, RunHeader, TickRecord
from practicesim.practice import IDLE, UNKNOWN_CONTEXT

LOG_FORMATS = ("csv", "jsonl")

CSV_COLUMNS = (
    "tick",
    "agent_id",
    "action",
    "practice_id",
    "override",
    "discard_trace",
    "belief",
    "belief_score",
)


class LogFormatError(ValueError):
    """Raised when a log file cannot be read back."""


def _check_format(format: str) -> None:
    if format not in LOG_FORMATS:
        raise ValueError(f"Unknown log format: {format}")


def _trace_text(trace: Sequence[tuple[str, DiscardReason]]) -> str:
    return ";".join(f"{pid}:{reason}" for pid, reason in trace)


def _parse_trace(text: str) -> tuple[tuple[str, DiscardReason], ...]:
    if not text:
        return ()
    pairs = []
    for item in text.split(";"):
        pid, _, reason = item.rpartition(":")
        pairs.append((pid, DiscardReason(reason)))
    return tuple(pairs)


def _belief_from_label(label: str, score: float) -> Belief:
    return Belief(None if label == UNKNOWN_CONTEXT else label, score)


def _entry_document(entry: AgentRecord) -> dict:
    return {
        "agent_id": entry.agent_id,
        "action": entry.action,
        "practice_id": entry.practice,
        "override": entry.override,
        "discard_trace": [[pid, str(reason)] for pid, reason in entry.trace],
        "belief": entry.belief.label,
        "belief_score": entry.belief.score,
    }


def emit_log(records: Iterable[TickRecord], format: str = "csv") -> bytes:
    _check_format(format)
    records = sorted(records, key=lambda r: r.tick)

    if format == "jsonl":
        lines = [
            json.dumps(
                {
                    "tick": r.tick,
                    "consensus": r.consensus,
                    "agents": [_entry_document(e) for e in r.entries],
                },
                sort_keys=True,
                ensure_ascii=False,
            )
            for r in records
        ]
        return "".join(f"{line}\n" for line in lines).encode()

    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for record in records:
        for entry in sorted(record.entries, key=lambda e: e.agent_id):
            writer.writerow(
                [
                    record.tick,
                    entry.agent_id,
                    entry.action,
                    entry.practice or "",
                    "true" if entry.override else "false",
                    _trace_text(entry.trace),
                    entry.belief.label,
                    repr(entry.belief.score),
                ]
            )
    return buffer.getvalue().encode()


def _read_jsonl(text: str) -> list[TickRecord]:
    records = []
    for number, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            raw = json.loads(line)
            entries = tuple(
                AgentRecord(
                    agent_id=e["agent_id"],
                    practice=e["practice_id"],
                    override=e["override"],
                    trace=tuple(
                        (pid, DiscardReason(reason))
                        for pid, reason in e["discard_trace"]
                    ),
                    belief=_belief_from_label(e["belief"], float(e["belief_score"])),
                )
                for e in raw["agents"]
            )
            records.append(TickRecord(raw["tick"], entries, raw["consensus"]))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
            raise LogFormatError(f"line {number}: {e}") from None
    return records


def _read_csv(text: str, ticks: int | None) -> list[TickRecord]:
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None:
        raise LogFormatError("Empty CSV log (missing header)")
    if tuple(header) != CSV_COLUMNS:
        raise LogFormatError(f"Unexpected CSV header: {','.join(header)}")

    by_tick: dict[int, list[AgentRecord]] = defaultdict(list)
    for number, row in enumerate(reader, 2):
        try:
            tick, agent_id, action, practice, override, trace, label, score = row
            entry = AgentRecord(
                agent_id=agent_id,
                practice=practice or None,
                override=override == "true",
                trace=_parse_trace(trace),
                belief=_belief_from_label(label, float(score)),
            )
            if entry.action != action:
                raise ValueError(f"action '{action}' does not match practice")
            by_tick[int(tick)].append(entry)
        except ValueError as e:
            raise LogFormatError(f"line {number}: {e}") from None

    # ticks without agents leave no rows
    last = max(by_tick, default=-1) + 1
    span = range(max(last, ticks or 0))
    return [
        TickRecord(
            tick,
            tuple(sorted(by_tick.get(tick, []), key=lambda e: e.agent_id)),
            consensus_index([e.belief for e in by_tick[tick]])
            if by_tick.get(tick)
            else None,
        )
        for tick in span
    ]


def read_log(
    data: bytes, format: str = "csv", ticks: int | None = None
) -> list[TickRecord]:
    """Parse a log written by ``emit_log``.

    CSV carries no consensus column: it is recomputed from the beliefs. Pass
    ``ticks`` to restore trailing ticks of an agent-less world.
    """
    _check_format(format)
    text = data.decode()
    if format == "jsonl":
        return _read_jsonl(text)
    return _read_csv(text, ticks)


@dataclass(frozen=True)
class Summary:
    ticks: int
    agents: int
    performances: dict[str, int] = field(default_factory=dict)
    discards: dict[str, dict[str, int]] = field(default_factory=dict)
    overrides: int = 0
    final_beliefs: dict[str, int] = field(default_factory=dict)
    belief_changes: int = 0
    consensus_series: tuple[float | None, ...] = ()
    final_consensus: float | None = None
    time_to_consensus: int | None = None
    disturbance_checks: int = 0
    checks_passed: int = 0
    acceptability_rate: float | None = None
    acceptability_by_context: dict[str, float | None] = field(default_factory=dict)

    @property
    def performed(self) -> int:
        return sum(n for pid, n in self.performances.items() if pid != IDLE)


def _rate(passed: int, checks: int) -> float | None:
    return passed / checks if checks else None


def summarize(
    records: Sequence[TickRecord],
    threshold: float = DEFAULT_THRESHOLD,
    window: int = DEFAULT_WINDOW,
    practices: Iterable[str] = (),
) -> Summary:
    """Aggregate a log.

    Every performance that was not an override passed one disturbance check;
    every disturbance discard in a trace is a failed one. Acceptability is
    the share of checks passed, overall and per believed context.
    ``practices`` lists ids to report even when never performed.
    """
    records = sorted(records, key=lambda r: r.tick)
    performances: Counter[str] = Counter(dict.fromkeys(practices, 0))
    performances[IDLE] += 0
    discards: dict[str, Counter[str]] = defaultdict(Counter)
    overrides = 0
    checks: Counter[str] = Counter()
    passed: Counter[str] = Counter()
    belief_changes = 0
    last_belief: dict[str, str | None] = {}

    for record in records:
        for entry in record.entries:
            performances[entry.practice or IDLE] += 1
            overrides += entry.override
            context = entry.belief.label
            for pid, reason in entry.trace:
                discards[pid][str(reason)] += 1
                if reason in (
                    DiscardReason.DISTURBS_OTHER,
                    DiscardReason.DISTURBED_BY_OTHER,
                ):
                    checks[context] += 1
            if entry.practice is not None and not entry.override:
                checks[context] += 1
                passed[context] += 1
            if (
                entry.agent_id in last_belief
                and last_belief[entry.agent_id] != entry.belief.context
            ):
                belief_changes += 1
            last_belief[entry.agent_id] = entry.belief.context

    series = tuple(r.consensus for r in records)
    final = records[-1] if records else None
    total_checks = sum(checks.values())
    total_passed = sum(passed.values())
    return Summary(
        ticks=len(records),
        agents=len(final.entries) if final else 0,
        performances=dict(sorted(performances.items())),
        discards={pid: dict(sorted(c.items())) for pid, c in sorted(discards.items())},
        overrides=overrides,
        final_beliefs=dict(
            sorted(Counter(e.belief.label for e in final.entries).items())
        )
        if final
        else {},
        belief_changes=belief_changes,
        consensus_series=series,
        final_consensus=series[-1] if series else None,
        time_to_consensus=time_to_consensus(series, threshold, window),
        disturbance_checks=total_checks,
        checks_passed=total_passed,
        acceptability_rate=_rate(total_passed, total_checks),
        acceptability_by_context={
            context: _rate(passed[context], n) for context, n in sorted(checks.items())
        },
    )


def summary_document(header: RunHeader, summary: Summary) -> dict:
    document = asdict(summary)
    document["consensus_series"] = list(summary.consensus_series)
    return {"header": asdict(header), "summary": document}


def emit_summary(header: RunHeader, summary: Summary) -> bytes:
    text = json.dumps(
        summary_document(header, summary), sort_keys=True, indent=2, ensure_ascii=False
    )
    return f"{text}\n".encode()
