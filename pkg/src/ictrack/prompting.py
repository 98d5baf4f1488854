"""Prompt assembly and training-pair export.

Every model input follows one block grammar, single-space separated::

    ([example] <rendered example>)* [context] <context rendering> [slot] <domain-name>

Examples appear most-relevant first. Targets are the normalized gold value,
or the literal "none" when the slot is absent from the turn's gold state
(every ontology slot is queried at every turn, so absent slots need a
trainable target).

Training pairs persist as JSON lines::

    {"input": str, "target": str,
     "meta": {"dialogue_id": str, "turn_index": int, "slot": str,
              "retrieved_ids": [str, ...]}}

Export is deterministic: queries run in (dialogue id, turn index, slot)
order and any worker-level parallelism must merge back into that order.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional, Sequence

from .bank import (
    CONTEXT_MARK,
    EXAMPLE_MARK,
    SLOT_MARK,
    SingleTurnExample,
    render_context,
)
from .corpus import Dialogue, Ontology, SlotId, enumerate_queries, state_of
from .errors import PromptError
from .retrieve import QueryMode, RetrievalQuery, build_query

ABSENT_TARGET = "none"


@dataclass(frozen=True, slots=True)
class PromptMeta:
    dialogue_id: str
    turn_index: int
    slot: SlotId
    retrieved_ids: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "dialogue_id": self.dialogue_id,
            "turn_index": self.turn_index,
            "slot": str(self.slot),
            "retrieved_ids": list(self.retrieved_ids),
        }


@dataclass(frozen=True, slots=True)
class PromptInstance:
    """One assembled model input and its target value."""

    input_text: str
    target_text: str
    meta: PromptMeta

    def to_dict(self) -> dict:
        return {
            "input": self.input_text,
            "target": self.target_text,
            "meta": self.meta.to_dict(),
        }


def assemble_prompt(
    examples: Sequence[SingleTurnExample],
    dialogue: Dialogue,
    turn_index: int,
    slot: SlotId,
) -> str:
    """Concatenate example blocks (most relevant first), context, and slot."""
    blocks = [f"{EXAMPLE_MARK} {e.rendered_text}" for e in examples]
    blocks.append(f"{CONTEXT_MARK} {render_context(dialogue, turn_index)}")
    blocks.append(f"{SLOT_MARK} {slot}")
    return " ".join(blocks)


def parse_prompt(input_text: str) -> tuple[list[str], str, str]:
    """Split a prompt back into (example texts, context text, slot string).

    Exact inverse of assemble_prompt for components free of bracket tokens.
    """
    example_prefix = f"{EXAMPLE_MARK} "
    context_prefix = f"{CONTEXT_MARK} "
    examples: list[str] = []
    if input_text.startswith(example_prefix):
        head, sep, rest = input_text.partition(f" {CONTEXT_MARK} ")
        if not sep:
            raise PromptError(f"prompt has examples but no {CONTEXT_MARK!r} block")
        examples = head[len(example_prefix) :].split(f" {EXAMPLE_MARK} ")
    elif input_text.startswith(context_prefix):
        rest = input_text[len(context_prefix) :]
    else:
        raise PromptError(
            f"prompt must start with {EXAMPLE_MARK!r} or {CONTEXT_MARK!r}"
        )
    context, sep, slot_text = rest.rpartition(f" {SLOT_MARK} ")
    if not sep:
        raise PromptError(f"prompt is missing the trailing {SLOT_MARK!r} block")
    return examples, context, slot_text


def target_for(dialogue: Dialogue, turn_index: int, slot: SlotId) -> str:
    """Gold value at the turn, or "none" when the slot is absent."""
    return state_of(dialogue, turn_index).get(slot, ABSENT_TARGET)


def export_training_pairs(
    train: Sequence[Dialogue],
    retriever,
    ontology: Ontology,
    k: int,
    query_mode: QueryMode = "whole_context",
    exclude_domains: frozenset[str] = frozenset(),
) -> Iterator[PromptInstance]:
    """Yield one training pair per (dialogue, turn, ontology slot) query.

    The retriever must be fitted on the bank built from this same training
    split (self-retrieval). Examples originating from the query's own
    (dialogue, turn) are excluded so the gold value never leaks into its
    own prompt. Emission order is (dialogue id, turn index, slot).
    """
    if k < 0:
        raise ValueError(f"k must be non-negative, got {k}")
    by_dialogue = {d.id: d for d in train}
    queries = sorted(
        enumerate_queries(train, ontology), key=lambda q: (q[0], q[1], str(q[2]))
    )
    # Bank examples per source turn: the overfetch margin that guarantees k
    # survivors after dropping the query's own turn.
    own_counts: Counter = Counter()
    examples_by_id: dict[str, SingleTurnExample] = {}
    if k > 0:
        for example in retriever.examples_:
            own_counts[(example.dialogue_id, example.turn_index)] += 1
            examples_by_id[example.id] = example

    for dialogue_id, turn_index, slot in queries:
        dialogue = by_dialogue[dialogue_id]
        retrieved_ids: tuple[str, ...] = ()
        examples: list[SingleTurnExample] = []
        if k > 0:
            query = build_query(
                dialogue, turn_index, slot, mode=query_mode,
                exclude_domains=exclude_domains,
            )
            margin = own_counts[(dialogue_id, turn_index)]
            result = retriever.retrieve(query, k=k + margin)
            kept = [
                item_id
                for item_id in result.ids
                if not (
                    examples_by_id[item_id].dialogue_id == dialogue_id
                    and examples_by_id[item_id].turn_index == turn_index
                )
            ][:k]
            retrieved_ids = tuple(kept)
            examples = [examples_by_id[item_id] for item_id in kept]
        yield PromptInstance(
            input_text=assemble_prompt(examples, dialogue, turn_index, slot),
            target_text=target_for(dialogue, turn_index, slot),
            meta=PromptMeta(
                dialogue_id=dialogue_id,
                turn_index=turn_index,
                slot=slot,
                retrieved_ids=retrieved_ids,
            ),
        )


def save_pairs(pairs: Iterable[PromptInstance], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for pair in pairs:
            fh.write(json.dumps(pair.to_dict(), sort_keys=True))
            fh.write("\n")


def load_pairs(path) -> list[PromptInstance]:
    pairs = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_number, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
                meta = record["meta"]
                pairs.append(
                    PromptInstance(
                        input_text=record["input"],
                        target_text=record["target"],
                        meta=PromptMeta(
                            dialogue_id=meta["dialogue_id"],
                            turn_index=int(meta["turn_index"]),
                            slot=SlotId.parse(meta["slot"]),
                            retrieved_ids=tuple(meta["retrieved_ids"]),
                        ),
                    )
                )
            except (KeyError, json.JSONDecodeError) as exc:
                raise PromptError(f"pairs line {line_number}: {exc}") from exc
    return pairs
