"""Joint goal accuracy and retrieval-selection analysis.

A turn is correct iff its predicted entry map equals the gold entry map
exactly (same slots, same normalized values), optionally restricted to one
domain's slots. Turns where both maps are empty count as correct. Matching
is exact string equality after normalization; no fuzzy credit.

Evaluation is a pure fold over aligned (dialogue, turn) records; partial
tallies merge associatively, so parallel evaluation is safe.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .corpus import Dialogue, SlotId
from .errors import AlignmentError
from .generation import PredictedState, RetrievalLogEntry


@dataclass(slots=True)
class EvalReport:
    """JGA over a prediction run, with per-domain breakdown and seed stats."""

    jga: float
    turn_count: int
    per_domain: dict[str, tuple[float, int]] = field(default_factory=dict)
    seed_runs: list[float] = field(default_factory=list)
    mean: float = 0.0
    std: float = 0.0

    def __post_init__(self) -> None:
        if not self.seed_runs:
            self.seed_runs = [self.jga]
        if not self.mean:
            self.mean, self.std = aggregate_values(self.seed_runs)

    def to_dict(self) -> dict:
        return {
            "jga": self.jga,
            "turn_count": self.turn_count,
            "per_domain": {
                domain: {"jga": jga, "turn_count": count}
                for domain, (jga, count) in sorted(self.per_domain.items())
            },
            "seed_runs": self.seed_runs,
            "mean": self.mean,
            "std": self.std,
        }


@dataclass(slots=True)
class SelectionMatrix:
    """Square count matrix of query label (row) vs retrieved label (column)."""

    axis: str  # "domain" | "slot"
    labels: list[str]
    counts: list[list[int]]

    def total(self) -> int:
        return sum(sum(row) for row in self.counts)

    def diagonal(self) -> list[int]:
        return [self.counts[i][i] for i in range(len(self.labels))]

    def to_dict(self) -> dict:
        return {"axis": self.axis, "labels": self.labels, "counts": self.counts}

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["query"] + self.labels)
            for label, row in zip(self.labels, self.counts):
                writer.writerow([label] + row)


@dataclass(frozen=True, slots=True)
class SelectionSummary:
    same_slot_fraction: float
    same_domain_fraction: float
    retrieved_total: int

    def to_dict(self) -> dict:
        return {
            "same_slot_fraction": self.same_slot_fraction,
            "same_domain_fraction": self.same_domain_fraction,
            "retrieved_total": self.retrieved_total,
        }


def _scoped(entries: dict[SlotId, str], scope: Optional[str]) -> dict[SlotId, str]:
    if scope is None:
        return entries
    return {slot: value for slot, value in entries.items() if slot.domain == scope}


def joint_goal_accuracy(
    preds: Sequence[PredictedState],
    golds: Sequence[Dialogue],
    slot_scope: Optional[str] = None,
) -> EvalReport:
    """Fraction of turns whose predicted state equals the gold state.

    `preds` must cover exactly the turns of `golds` (aligned by dialogue id
    and turn index); anything missing or extra raises AlignmentError. The
    per-domain breakdown applies the same all-turn denominator with the
    comparison restricted to each domain's slots.
    """
    by_key = {}
    for pred in preds:
        key = (pred.dialogue_id, pred.turn_index)
        if key in by_key:
            raise AlignmentError(f"duplicate prediction for (dialogue, turn) {key}")
        by_key[key] = pred

    expected = {(d.id, t.index) for d in golds for t in d.turns}
    missing = sorted(expected - set(by_key))
    if missing:
        raise AlignmentError(f"missing prediction for (dialogue, turn) {missing[0]}")
    extra = sorted(set(by_key) - expected)
    if extra:
        raise AlignmentError(f"prediction for unknown (dialogue, turn) {extra[0]}")

    domains = sorted(
        {slot.domain for d in golds for t in d.turns for slot in t.gold_state}
        | {slot.domain for p in preds for slot in p.entries}
    )
    correct = 0
    turn_count = 0
    domain_correct = {domain: 0 for domain in domains}
    for dialogue in golds:
        for turn in dialogue.turns:
            pred = by_key[(dialogue.id, turn.index)]
            turn_count += 1
            if _scoped(pred.entries, slot_scope) == _scoped(turn.gold_state, slot_scope):
                correct += 1
            for domain in domains:
                if _scoped(pred.entries, domain) == _scoped(turn.gold_state, domain):
                    domain_correct[domain] += 1

    if turn_count == 0:
        raise AlignmentError("no turns to evaluate")
    return EvalReport(
        jga=correct / turn_count,
        turn_count=turn_count,
        per_domain={
            domain: (domain_correct[domain] / turn_count, turn_count)
            for domain in domains
        },
    )


def aggregate_values(values: Sequence[float]) -> tuple[float, float]:
    """Arithmetic mean and sample (n-1) standard deviation."""
    if not values:
        raise ValueError("cannot aggregate an empty list of runs")
    mean = sum(values) / len(values)
    if len(values) < 2:
        return mean, 0.0
    variance = sum((v - mean) ** 2 for v in values) / (len(values) - 1)
    return mean, math.sqrt(variance)


def aggregate_runs(reports: Sequence[EvalReport]) -> tuple[float, float]:
    """Mean and sample std of JGA across seeded runs."""
    return aggregate_values([report.jga for report in reports])


def merge_reports(reports: Sequence[EvalReport]) -> EvalReport:
    """Combine seeded runs into one report carrying all runs' JGA values."""
    if not reports:
        raise ValueError("cannot merge an empty list of reports")
    runs = [report.jga for report in reports]
    mean, std = aggregate_values(runs)
    first = reports[0]
    return EvalReport(
        jga=mean,
        turn_count=first.turn_count,
        per_domain=dict(first.per_domain),
        seed_runs=runs,
        mean=mean,
        std=std,
    )


def selection_analysis(
    logs: Sequence[RetrievalLogEntry], axis: str = "domain"
) -> tuple[SelectionMatrix, SelectionSummary]:
    """Tally which example slots/domains the retriever picked per query."""
    if axis not in ("domain", "slot"):
        raise ValueError(f"axis must be 'domain' or 'slot', got {axis!r}")
    if not logs:
        raise ValueError("selection analysis needs at least one logged query")

    def label(slot: SlotId) -> str:
        return slot.domain if axis == "domain" else str(slot)

    labels = sorted(
        {label(entry.query_slot) for entry in logs}
        | {label(slot) for entry in logs for slot in entry.retrieved_slots}
    )
    position = {name: i for i, name in enumerate(labels)}
    counts = [[0] * len(labels) for _ in labels]
    same_slot = 0
    same_domain = 0
    total = 0
    for entry in logs:
        row = position[label(entry.query_slot)]
        for slot in entry.retrieved_slots:
            counts[row][position[label(slot)]] += 1
            total += 1
            if slot == entry.query_slot:
                same_slot += 1
            if slot.domain == entry.query_slot.domain:
                same_domain += 1

    summary = SelectionSummary(
        same_slot_fraction=(same_slot / total) if total else 0.0,
        same_domain_fraction=(same_domain / total) if total else 0.0,
        retrieved_total=total,
    )
    return SelectionMatrix(axis=axis, labels=labels, counts=counts), summary


def save_report(report: EvalReport, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def save_retrieval_log(logs: Iterable[RetrievalLogEntry], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for entry in logs:
            fh.write(
                json.dumps(
                    {
                        "query_slot": str(entry.query_slot),
                        "retrieved_slots": [str(s) for s in entry.retrieved_slots],
                    },
                    sort_keys=True,
                )
            )
            fh.write("\n")


def load_retrieval_log(path) -> list[RetrievalLogEntry]:
    entries = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            entries.append(
                RetrievalLogEntry(
                    query_slot=SlotId.parse(record["query_slot"]),
                    retrieved_slots=tuple(
                        SlotId.parse(s) for s in record["retrieved_slots"]
                    ),
                )
            )
    return entries
