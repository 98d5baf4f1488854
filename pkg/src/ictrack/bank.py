"""Single-turn example bank and the textual rendering grammar.

One example is emitted per (turn, slot) whose value is newly introduced or
changed relative to the previous turn's gold state (the state delta). The
rendered form is::

    [system] <system text> [user] <user text> [slot] <domain-name> [value] <value>

with single spaces between tokens. An empty system utterance renders as the
literal token "none" so the format stays parseable.

Banks persist as JSON lines, one example per line. `dialogue_id` and
`turn_index` are stored explicitly (in addition to being embedded in `id`)
so a reloaded bank still supports self-exclusion during training export.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

from .corpus import Dialogue, SlotId
from .errors import SchemaError

SYSTEM_MARK = "[system]"
USER_MARK = "[user]"
SLOT_MARK = "[slot]"
VALUE_MARK = "[value]"
EXAMPLE_MARK = "[example]"
CONTEXT_MARK = "[context]"

EMPTY_SYSTEM_TOKEN = "none"


@dataclass(frozen=True, slots=True)
class SingleTurnExample:
    """One labeled single-turn exchange: (utterance pair, slot, value)."""

    id: str
    dialogue_id: str
    turn_index: int
    domain: str
    system_text: str
    user_text: str
    slot: SlotId
    value: str
    rendered_text: str

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "dialogue_id": self.dialogue_id,
            "turn_index": self.turn_index,
            "domain": self.domain,
            "system_text": self.system_text,
            "user_text": self.user_text,
            "slot": str(self.slot),
            "value": self.value,
            "rendered_text": self.rendered_text,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SingleTurnExample":
        slot = SlotId.parse(d["slot"])
        example = cls(
            id=d["id"],
            dialogue_id=d["dialogue_id"],
            turn_index=int(d["turn_index"]),
            domain=d["domain"],
            system_text=d["system_text"],
            user_text=d["user_text"],
            slot=slot,
            value=d["value"],
            rendered_text=d["rendered_text"],
        )
        expected = render_example(
            example.system_text, example.user_text, slot, example.value
        )
        if example.rendered_text != expected:
            raise SchemaError(
                f"example {example.id!r}: rendered_text does not match its fields"
            )
        return example


def example_id(dialogue_id: str, turn_index: int, slot: SlotId) -> str:
    return f"{dialogue_id}#t{turn_index}#{slot}"


def render_segment(system_text: str, user_text: str) -> str:
    """Render one exchange as `[system] ... [user] ...`."""
    system = system_text.strip() or EMPTY_SYSTEM_TOKEN
    return f"{SYSTEM_MARK} {system} {USER_MARK} {user_text}"


def render_context(dialogue: Dialogue, turn_index: int, whole: bool = True) -> str:
    """Render turns 0..turn_index (or just turn_index) as joined segments."""
    if not 0 <= turn_index < len(dialogue.turns):
        raise ValueError(
            f"turn index {turn_index} out of range for dialogue {dialogue.id!r} "
            f"with {len(dialogue.turns)} turns"
        )
    start = 0 if whole else turn_index
    return " ".join(
        render_segment(turn.system.text, turn.user.text)
        for turn in dialogue.turns[start : turn_index + 1]
    )


def render_example(
    system_text: str, user_text: str, slot: SlotId, value: str
) -> str:
    segment = render_segment(system_text, user_text)
    return f"{segment} {SLOT_MARK} {slot} {VALUE_MARK} {value}"


def parse_rendered_example(text: str) -> tuple[str, str, str, str]:
    """Invert render_example for fields free of bracket tokens.

    Returns (system_text, user_text, slot string, value); the empty-system
    sentinel comes back as the literal "none".
    """
    prefix = f"{SYSTEM_MARK} "
    if not text.startswith(prefix):
        raise SchemaError(f"rendered example must start with {SYSTEM_MARK!r}")
    rest = text[len(prefix) :]
    system_text, sep, rest = rest.partition(f" {USER_MARK} ")
    if not sep:
        raise SchemaError(f"rendered example is missing {USER_MARK!r}")
    user_text, sep, rest = rest.partition(f" {SLOT_MARK} ")
    if not sep:
        raise SchemaError(f"rendered example is missing {SLOT_MARK!r}")
    slot_text, sep, value = rest.partition(f" {VALUE_MARK} ")
    if not sep:
        raise SchemaError(f"rendered example is missing {VALUE_MARK!r}")
    return system_text, user_text, slot_text, value


def build_bank(train: Sequence[Dialogue]) -> list[SingleTurnExample]:
    """Extract one example per state-delta (turn, slot, value) triple.

    A slot contributes at a turn iff it is absent from the previous turn's
    gold state or carries a different value there. Deleted slots contribute
    nothing. Duplicated content across dialogues is kept.
    """
    examples: list[SingleTurnExample] = []
    for dialogue in train:
        previous: dict[SlotId, str] = {}
        for turn in dialogue.turns:
            for slot in sorted(turn.gold_state):
                value = turn.gold_state[slot]
                if previous.get(slot) == value:
                    continue
                examples.append(
                    SingleTurnExample(
                        id=example_id(dialogue.id, turn.index, slot),
                        dialogue_id=dialogue.id,
                        turn_index=turn.index,
                        domain=slot.domain,
                        system_text=turn.system.text,
                        user_text=turn.user.text,
                        slot=slot,
                        value=value,
                        rendered_text=render_example(
                            turn.system.text, turn.user.text, slot, value
                        ),
                    )
                )
            previous = dict(turn.gold_state)
    return examples


def save_bank(examples: Iterable[SingleTurnExample], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for example in examples:
            fh.write(json.dumps(example.to_dict(), sort_keys=True))
            fh.write("\n")


def load_bank(path) -> list[SingleTurnExample]:
    examples = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_number, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                examples.append(SingleTurnExample.from_dict(json.loads(line)))
            except (KeyError, json.JSONDecodeError) as exc:
                raise SchemaError(f"bank line {line_number}: {exc}") from exc
    return examples


def bank_by_id(examples: Iterable[SingleTurnExample]) -> dict[str, SingleTurnExample]:
    return {example.id: example for example in examples}


def iter_state_deltas(dialogue: Dialogue) -> Iterator[tuple[int, SlotId, str]]:
    """Yield (turn index, slot, value) for every newly set or changed slot."""
    previous: dict[SlotId, str] = {}
    for turn in dialogue.turns:
        for slot in sorted(turn.gold_state):
            value = turn.gold_state[slot]
            if previous.get(slot) != value:
                yield turn.index, slot, value
        previous = dict(turn.gold_state)
