"""Dialogue corpora, ontologies, value normalization and experiment splits.

Corpus file schema (UTF-8 JSON, top-level array)::

    [{"id": str,
      "turns": [{"system": str, "user": str,
                 "state": {"<domain>-<slot name>": "<value>", ...}}, ...]},
     ...]

The first turn's "system" may be "" (conversation opener). Ontology schema::

    {"slots": [{"domain": str, "name": str,
                "kind": "categorical" | "span",
                "values": [str, ...]}, ...]}

All parsed types are immutable after construction and safe to share across
threads. Parsing and splitting hold no shared mutable state.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from typing import Iterable, Literal, Mapping, Optional, Sequence

from .errors import (
    CorpusEncodingError,
    CorpusParseError,
    SchemaError,
    SplitError,
)

Speaker = Literal["system", "user"]
SplitMode = Literal[
    "zero_shot", "cross_domain_few_shot", "multi_domain_few_shot", "full_shot"
]

SPLIT_MODES: tuple[str, ...] = (
    "zero_shot",
    "cross_domain_few_shot",
    "multi_domain_few_shot",
    "full_shot",
)

# Raw literals that mean "slot not mentioned"; normalize_value maps them to None.
_ABSENT_LITERALS = frozenset({"none", "not mentioned"})
_DONTCARE_LITERALS = frozenset({"dont care", "do not care", "dontcare"})


def _canon(text: str) -> str:
    """Lowercase, trim, and collapse internal whitespace runs to one space."""
    return " ".join(text.lower().split())


def normalize_value(raw: str) -> Optional[str]:
    """Normalize a slot value for exact-match comparison.

    Returns None (the absent-value sentinel) for "none" / "not mentioned";
    callers drop the entry. "dont care" spellings collapse to "dontcare".
    Idempotent over non-absent values.
    """
    value = _canon(raw)
    if value in _ABSENT_LITERALS:
        return None
    if value in _DONTCARE_LITERALS:
        return "dontcare"
    return value


@dataclass(frozen=True, slots=True, order=True)
class SlotId:
    """A domain-namespaced slot, rendered canonically as "domain-name"."""

    domain: str
    name: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "domain", _canon(self.domain))
        object.__setattr__(self, "name", _canon(self.name))
        if not self.domain or not self.name:
            raise SchemaError(f"slot id needs a domain and a name, got {self!r}")

    def __str__(self) -> str:
        return f"{self.domain}-{self.name}"

    @classmethod
    def parse(cls, text: str) -> "SlotId":
        """Parse "domain-name"; the first hyphen separates domain from name."""
        domain, sep, name = text.partition("-")
        if not sep:
            raise SchemaError(f"slot id {text!r} is missing the domain-name hyphen")
        return cls(domain, name)


# A dialogue state is a map from slot to its normalized value. Absence of a
# key means the slot is untracked; the value "none" never appears.
DialogueState = dict[SlotId, str]


@dataclass(frozen=True, slots=True)
class Utterance:
    speaker: Speaker
    text: str

    def __post_init__(self) -> None:
        if self.speaker not in ("system", "user"):
            raise SchemaError(f"unknown speaker {self.speaker!r}")


@dataclass(frozen=True, slots=True)
class Turn:
    """One system/user exchange with the cumulative gold state after it."""

    index: int
    system: Utterance
    user: Utterance
    gold_state: DialogueState

    def __post_init__(self) -> None:
        if self.index < 0:
            raise SchemaError(f"turn index must be non-negative, got {self.index}")
        if self.system.speaker != "system" or self.user.speaker != "user":
            raise SchemaError("turn utterances carry the wrong speakers")


@dataclass(frozen=True, slots=True)
class Dialogue:
    """A multi-turn conversation; `domains` is derived from the gold states."""

    id: str
    turns: tuple[Turn, ...]
    domains: frozenset[str] = field(init=False)

    def __post_init__(self) -> None:
        touched = frozenset(
            slot.domain for turn in self.turns for slot in turn.gold_state
        )
        object.__setattr__(self, "domains", touched)
        for expected, turn in enumerate(self.turns):
            if turn.index != expected:
                raise SchemaError(
                    f"dialogue {self.id!r}: turn indices must be 0..T-1 without "
                    f"gaps, found {turn.index} at position {expected}"
                )


@dataclass(frozen=True, slots=True)
class SlotDef:
    id: SlotId
    kind: Literal["categorical", "span"]
    candidate_values: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.kind not in ("categorical", "span"):
            raise SchemaError(f"slot {self.id}: unknown kind {self.kind!r}")
        if self.kind == "categorical":
            if not self.candidate_values:
                raise SchemaError(f"categorical slot {self.id} has no values")
            deduped = tuple(dict.fromkeys(self.candidate_values))
            object.__setattr__(self, "candidate_values", deduped)
        elif self.candidate_values:
            raise SchemaError(f"span slot {self.id} must not list candidate values")


class Ontology:
    """The slot schema: an ordered collection of unique SlotDefs."""

    def __init__(self, slots: Sequence[SlotDef]):
        if not slots:
            raise SchemaError("an ontology needs at least one slot")
        self.slots: tuple[SlotDef, ...] = tuple(slots)
        self._by_id: dict[SlotId, SlotDef] = {}
        for slot_def in self.slots:
            if slot_def.id in self._by_id:
                raise SchemaError(f"duplicate slot id {slot_def.id}")
            self._by_id[slot_def.id] = slot_def
        self.domains: frozenset[str] = frozenset(s.id.domain for s in self.slots)

    def __len__(self) -> int:
        return len(self.slots)

    def __contains__(self, slot_id: SlotId) -> bool:
        return slot_id in self._by_id

    def __getitem__(self, slot_id: SlotId) -> SlotDef:
        return self._by_id[slot_id]

    def slot_ids(self, domain: Optional[str] = None) -> list[SlotId]:
        """Slot ids in schema order, optionally restricted to one domain."""
        return [s.id for s in self.slots if domain is None or s.id.domain == domain]


@dataclass(frozen=True, slots=True)
class SplitSpec:
    """How to carve a training split out of a corpus."""

    mode: SplitMode
    target_domain: Optional[str] = None
    fraction: float = 1.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.mode not in SPLIT_MODES:
            raise SplitError(f"unknown split mode {self.mode!r}")
        needs_target = self.mode in ("zero_shot", "cross_domain_few_shot")
        if needs_target and not self.target_domain:
            raise SplitError(f"{self.mode} requires a target_domain")
        if not needs_target and self.target_domain:
            raise SplitError(f"{self.mode} does not take a target_domain")
        if not 0.0 < self.fraction <= 1.0:
            raise SplitError(f"fraction must be in (0, 1], got {self.fraction}")
        few_shot = self.mode in ("cross_domain_few_shot", "multi_domain_few_shot")
        if few_shot and self.fraction >= 1.0:
            raise SplitError(f"{self.mode} requires fraction < 1")
        if self.seed < 0:
            raise SplitError(f"seed must be non-negative, got {self.seed}")


@dataclass(frozen=True, slots=True)
class SplitInfo:
    """What a split did: counts, sampled ids, and the held-out pool."""

    mode: str
    target_domain: Optional[str]
    fraction: float
    seed: int
    total_count: int
    train_count: int
    train_ids: tuple[str, ...]
    sampled_ids: tuple[str, ...]
    heldout_ids: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "target_domain": self.target_domain,
            "fraction": self.fraction,
            "seed": self.seed,
            "total_count": self.total_count,
            "train_count": self.train_count,
            "train_ids": list(self.train_ids),
            "sampled_ids": list(self.sampled_ids),
            "heldout_ids": list(self.heldout_ids),
        }


def parse_ontology(data: bytes) -> Ontology:
    """Parse ontology JSON bytes into an Ontology."""
    payload = _load_json(data, what="ontology")
    if not isinstance(payload, dict) or not isinstance(payload.get("slots"), list):
        raise SchemaError('ontology JSON must be {"slots": [...]}')
    slots = []
    for entry in payload["slots"]:
        if not isinstance(entry, dict):
            raise SchemaError("each ontology slot must be an object")
        try:
            domain = entry["domain"]
            name = entry["name"]
            kind = entry["kind"]
        except KeyError as exc:
            raise SchemaError(f"ontology slot missing key {exc}") from exc
        values = entry.get("values", [])
        if not isinstance(values, list) or not all(isinstance(v, str) for v in values):
            raise SchemaError(f"slot {domain}-{name}: values must be a string list")
        slots.append(
            SlotDef(id=SlotId(domain, name), kind=kind, candidate_values=tuple(values))
        )
    return Ontology(slots)


def parse_corpus(data: bytes, ontology: Ontology) -> list[Dialogue]:
    """Parse corpus JSON bytes, validating every state key against `ontology`.

    Values are normalized; entries normalizing to the absent sentinel are
    dropped. Raises CorpusEncodingError / CorpusParseError / SchemaError.
    """
    payload = _load_json(data, what="corpus")
    if not isinstance(payload, list):
        raise SchemaError("corpus JSON must be a top-level array of dialogues")
    dialogues: list[Dialogue] = []
    seen_ids: set[str] = set()
    for raw_dialogue in payload:
        dialogue = _parse_dialogue(raw_dialogue, ontology)
        if dialogue.id in seen_ids:
            raise SchemaError(f"duplicate dialogue id {dialogue.id!r}")
        seen_ids.add(dialogue.id)
        dialogues.append(dialogue)
    return dialogues


def _load_json(data: bytes, what: str):
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise CorpusEncodingError(f"{what} is not valid UTF-8: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        byte_offset = len(text[: exc.pos].encode("utf-8"))
        raise CorpusParseError(
            f"{what} is not valid JSON at byte {byte_offset}: {exc.msg}",
            byte_offset=byte_offset,
        ) from exc


def _parse_dialogue(raw: object, ontology: Ontology) -> Dialogue:
    if not isinstance(raw, dict):
        raise SchemaError("each dialogue must be an object")
    dialogue_id = raw.get("id")
    if not isinstance(dialogue_id, str) or not dialogue_id:
        raise SchemaError("dialogue is missing a non-empty string 'id'")
    raw_turns = raw.get("turns")
    if not isinstance(raw_turns, list):
        raise SchemaError(f"dialogue {dialogue_id!r}: 'turns' must be a list")

    turns: list[Turn] = []
    for index, raw_turn in enumerate(raw_turns):
        if not isinstance(raw_turn, dict):
            raise SchemaError(f"dialogue {dialogue_id!r}: turn {index} not an object")
        system_text = raw_turn.get("system")
        user_text = raw_turn.get("user")
        if not isinstance(system_text, str) or not isinstance(user_text, str):
            raise SchemaError(
                f"dialogue {dialogue_id!r}: turn {index} needs string "
                "'system' and 'user' fields"
            )
        if not user_text.strip():
            raise SchemaError(
                f"dialogue {dialogue_id!r}: turn {index} has an empty user utterance"
            )
        if not system_text.strip() and index > 0:
            raise SchemaError(
                f"dialogue {dialogue_id!r}: turn {index} has an empty system "
                "utterance (only the opening turn may)"
            )
        state = _parse_state(raw_turn.get("state"), ontology, dialogue_id, index)
        turns.append(
            Turn(
                index=index,
                system=Utterance("system", system_text),
                user=Utterance("user", user_text),
                gold_state=state,
            )
        )
    return Dialogue(id=dialogue_id, turns=tuple(turns))


def _parse_state(
    raw: object, ontology: Ontology, dialogue_id: str, index: int
) -> DialogueState:
    if raw is None:
        return {}
    if not isinstance(raw, dict):
        raise SchemaError(f"dialogue {dialogue_id!r}: turn {index} state not a map")
    state: DialogueState = {}
    for key, value in raw.items():
        slot_id = SlotId.parse(key)
        if slot_id not in ontology:
            raise SchemaError(
                f"dialogue {dialogue_id!r}: slot {slot_id} is not in the ontology"
            )
        if not isinstance(value, str):
            raise SchemaError(
                f"dialogue {dialogue_id!r}: slot {slot_id} has a non-string value"
            )
        normalized = normalize_value(value)
        if normalized is None:
            continue
        state[slot_id] = normalized
    return state


def make_split(
    dialogues: Sequence[Dialogue], spec: SplitSpec
) -> tuple[list[Dialogue], SplitInfo]:
    """Carve a training split per `spec`; deterministic given the seed.

    Sampling is a seeded shuffle followed by a prefix take, so for one seed
    the selected sets nest as the fraction grows. The returned train list
    keeps the corpus order. Raises SplitError when the result would be empty.
    """
    pool = list(dialogues)
    touches_target = (
        [d for d in pool if spec.target_domain in d.domains]
        if spec.target_domain
        else []
    )
    if spec.target_domain and not touches_target:
        raise SplitError(
            f"target domain {spec.target_domain!r} does not occur in the corpus"
        )

    sampled_ids: tuple[str, ...] = ()
    if spec.mode == "zero_shot":
        train = [d for d in pool if spec.target_domain not in d.domains]
    elif spec.mode == "cross_domain_few_shot":
        base = [d for d in pool if spec.target_domain not in d.domains]
        sampled = _prefix_sample(touches_target, spec.fraction, spec.seed)
        sampled_ids = tuple(d.id for d in sampled)
        chosen = {d.id for d in base} | set(sampled_ids)
        train = [d for d in pool if d.id in chosen]
    elif spec.mode == "multi_domain_few_shot":
        sampled = _prefix_sample(pool, spec.fraction, spec.seed)
        sampled_ids = tuple(d.id for d in sampled)
        chosen = set(sampled_ids)
        train = [d for d in pool if d.id in chosen]
    else:  # full_shot
        train = pool

    if not train:
        raise SplitError(f"split {spec.mode} produced an empty training set")

    train_id_set = {d.id for d in train}
    heldout = tuple(d.id for d in pool if d.id not in train_id_set)
    info = SplitInfo(
        mode=spec.mode,
        target_domain=spec.target_domain,
        fraction=spec.fraction,
        seed=spec.seed,
        total_count=len(pool),
        train_count=len(train),
        train_ids=tuple(d.id for d in train),
        sampled_ids=sampled_ids,
        heldout_ids=heldout,
    )
    return train, info


def _prefix_sample(
    pool: Sequence[Dialogue], fraction: float, seed: int
) -> list[Dialogue]:
    """Take the first max(1, floor(fraction * |pool|)) of a seeded shuffle."""
    take = max(1, int(fraction * len(pool)))
    order = sorted(pool, key=lambda d: d.id)
    random.Random(seed).shuffle(order)
    return order[:take]


def enumerate_queries(
    dialogues: Iterable[Dialogue],
    ontology: Ontology,
    domain_filter: Optional[str] = None,
) -> list[tuple[str, int, SlotId]]:
    """One (dialogue id, turn index, slot) query per turn and ontology slot."""
    slot_ids = ontology.slot_ids(domain_filter)
    return [
        (dialogue.id, turn.index, slot_id)
        for dialogue in dialogues
        for turn in dialogue.turns
        for slot_id in slot_ids
    ]


def dialogue_to_dict(dialogue: Dialogue) -> dict:
    """Serialize back into the corpus file schema."""
    return {
        "id": dialogue.id,
        "turns": [
            {
                "system": turn.system.text,
                "user": turn.user.text,
                "state": {str(s): v for s, v in sorted(turn.gold_state.items())},
            }
            for turn in dialogue.turns
        ],
    }


def dialogues_to_json(dialogues: Iterable[Dialogue]) -> bytes:
    payload = [dialogue_to_dict(d) for d in dialogues]
    return (json.dumps(payload, indent=2, sort_keys=True) + "\n").encode("utf-8")


def state_of(dialogue: Dialogue, turn_index: int) -> Mapping[SlotId, str]:
    """Gold state at a turn; raises on an out-of-range index."""
    if not 0 <= turn_index < len(dialogue.turns):
        raise ValueError(
            f"turn index {turn_index} out of range for dialogue {dialogue.id!r} "
            f"with {len(dialogue.turns)} turns"
        )
    return dialogue.turns[turn_index].gold_state
