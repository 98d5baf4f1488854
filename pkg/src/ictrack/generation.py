"""Slot-value generation: a deterministic mock oracle, an HTTP client for a
served seq2seq model, and the per-slot prediction pipeline.

Generators satisfy one contract: `name` plus an order-preserving
`generate(inputs) -> outputs` of equal length. Prediction is per-slot
independent (one generator input per ontology slot per turn); an output of
"none" means the slot is absent and is dropped from the predicted state.

Wire formats (UTF-8 JSON over HTTP POST)::

    POST /generate  {"inputs": [str, ...]}   ->  {"outputs": [str, ...]}
    POST /finetune  {"pairs_path_or_inline": ..., "epochs": int, "seed": int}
                                              ->  {"final_loss": float}
"""

from __future__ import annotations

import hashlib
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Protocol, Sequence

import requests
from sklearn.base import BaseEstimator

from .bank import build_bank, render_context
from .corpus import Dialogue, Ontology, SlotId, enumerate_queries, normalize_value
from .errors import ProtocolError, PromptError, ToolkitError, TransportError
from .prompting import ABSENT_TARGET, assemble_prompt, parse_prompt
from .retrieve import QueryMode, build_query

WRONG_VALUE = "__wrong__"
DEFAULT_BATCH_SIZE = 32


class Generator(Protocol):
    name: str

    def generate(self, inputs: Sequence[str]) -> list[str]: ...


@dataclass(frozen=True, slots=True)
class PredictedState:
    """Predicted slot values for one turn; never stores "none"."""

    dialogue_id: str
    turn_index: int
    entries: dict[SlotId, str]

    def to_dict(self) -> dict:
        return {
            "dialogue_id": self.dialogue_id,
            "turn_index": self.turn_index,
            "state": {str(s): v for s, v in sorted(self.entries.items())},
        }


@dataclass(frozen=True, slots=True)
class RetrievalLogEntry:
    """Which example slots were picked for one query (for selection analysis)."""

    query_slot: SlotId
    retrieved_slots: tuple[SlotId, ...]


@dataclass(slots=True)
class PredictionResult:
    states: list[PredictedState]
    retrieval_log: list[RetrievalLogEntry] = field(default_factory=list)


class MockOracle:
    """Gold-value generator with a tunable per-slot accuracy.

    Parses the [context]/[slot] blocks of each prompt, looks up the gold
    value for that turn (or "none" when absent), and answers correctly with
    probability `accuracy`, otherwise with a fixed wrong value. Randomness
    is keyed by (seed, context, slot), so results do not depend on call
    order or batching, and concurrent use is safe.
    """

    def __init__(self, corpus: Sequence[Dialogue], accuracy: float = 1.0, seed: int = 0):
        if not 0.0 <= accuracy <= 1.0:
            raise ValueError(f"accuracy must be in [0, 1], got {accuracy}")
        self.accuracy = accuracy
        self.seed = seed
        self.name = f"mock-oracle-{accuracy}"
        self._states: dict[str, dict[str, str]] = {}
        for dialogue in corpus:
            for turn in dialogue.turns:
                context = render_context(dialogue, turn.index)
                state = {str(slot): value for slot, value in turn.gold_state.items()}
                known = self._states.get(context)
                if known is not None and known != state:
                    raise ValueError(
                        "two turns render to the same context text with different"
                        f" gold states: {context!r}"
                    )
                self._states[context] = state

    def generate(self, inputs: Sequence[str]) -> list[str]:
        outputs = []
        for text in inputs:
            _, context, slot_text = parse_prompt(text)
            state = self._states.get(context)
            if state is None:
                raise PromptError(
                    f"prompt context not found in the oracle corpus: {context!r}"
                )
            gold = state.get(slot_text, ABSENT_TARGET)
            outputs.append(gold if self._correct(context, slot_text) else WRONG_VALUE)
        return outputs

    def _correct(self, context: str, slot_text: str) -> bool:
        key = f"{self.seed}|{context}|{slot_text}"
        digest = hashlib.blake2b(key.encode("utf-8"), digest_size=8).digest()
        u = int.from_bytes(digest, "little") / 2.0**64
        return u < self.accuracy


def mock_oracle(
    corpus: Sequence[Dialogue], accuracy: float = 1.0, seed: int = 0
) -> MockOracle:
    return MockOracle(corpus, accuracy=accuracy, seed=seed)


class RemoteGenerator:
    """Client for a served /generate endpoint."""

    def __init__(
        self,
        endpoint: str,
        timeout: float = 300.0,
        retries: int = 3,
        backoff: float = 0.5,
    ):
        self.endpoint = endpoint
        self.timeout = timeout
        self.retries = retries
        self.backoff = backoff
        self.name = f"remote:{endpoint}"

    def generate(self, inputs: Sequence[str]) -> list[str]:
        if not inputs:
            raise ValueError("batch of inputs must be non-empty")
        payload = self._post({"inputs": list(inputs)})
        outputs = payload.get("outputs")
        if not isinstance(outputs, list) or len(outputs) != len(inputs):
            got = len(outputs) if isinstance(outputs, list) else "no"
            raise ProtocolError(
                f"/generate returned {got} outputs for {len(inputs)} inputs"
            )
        cleaned = []
        for item in outputs:
            if not isinstance(item, str):
                raise ProtocolError("/generate returned a non-string output")
            normalized = normalize_value(item)
            cleaned.append(ABSENT_TARGET if normalized is None else normalized)
        return cleaned

    def _post(self, payload: dict) -> dict:
        url = self.endpoint.rstrip("/") + "/generate"
        last_error: Exception | None = None
        for attempt in range(self.retries):
            try:
                response = requests.post(url, json=payload, timeout=self.timeout)
                if response.status_code >= 500:
                    last_error = TransportError(
                        f"/generate returned {response.status_code}"
                    )
                elif response.status_code != 200:
                    raise ProtocolError(
                        f"/generate returned status {response.status_code}"
                    )
                else:
                    return response.json()
            except (requests.RequestException, ValueError) as exc:
                last_error = exc
            if attempt + 1 < self.retries:
                time.sleep(self.backoff * (2**attempt))
        raise TransportError(
            f"/generate failed after {self.retries} attempts: {last_error}"
        ) from last_error


def remote_generate(endpoint: str, inputs: Sequence[str], **kwargs) -> list[str]:
    """One-shot batch generation through a RemoteGenerator."""
    return RemoteGenerator(endpoint, **kwargs).generate(inputs)


def predict_states(
    dialogues: Sequence[Dialogue],
    ontology: Ontology,
    retriever,
    generator: Generator,
    k: int = 3,
    query_mode: QueryMode = "whole_context",
    domain_filter: Optional[str] = None,
    exclude_domains: frozenset[str] = frozenset(),
    batch_size: int = DEFAULT_BATCH_SIZE,
    workers: int = 1,
) -> PredictionResult:
    """Run retrieve -> prompt -> generate for every (turn, slot) query.

    The set of queries depends only on (dialogues, ontology, domain_filter);
    the retriever strategy changes prompts, never the queries. Generator
    calls are batched up to `batch_size`; with workers > 1 batches run
    concurrently and are merged back in query order.
    """
    if k < 0:
        raise ValueError(f"k must be non-negative, got {k}")
    by_dialogue = {d.id: d for d in dialogues}
    queries = enumerate_queries(dialogues, ontology, domain_filter)
    examples_by_id = (
        {e.id: e for e in retriever.examples_} if k > 0 and retriever is not None else {}
    )

    prompts: list[str] = []
    log: list[RetrievalLogEntry] = []
    for dialogue_id, turn_index, slot in queries:
        dialogue = by_dialogue[dialogue_id]
        examples = []
        if k > 0:
            query = build_query(
                dialogue, turn_index, slot, mode=query_mode,
                exclude_domains=exclude_domains,
            )
            try:
                result = retriever.retrieve(query, k=k)
            except ToolkitError as exc:
                raise type(exc)(
                    f"{exc} (dialogue={dialogue_id!r}, turn={turn_index}, slot={slot})"
                ) from exc
            examples = [examples_by_id[item_id] for item_id in result.ids]
        log.append(
            RetrievalLogEntry(
                query_slot=slot,
                retrieved_slots=tuple(e.slot for e in examples),
            )
        )
        prompts.append(assemble_prompt(examples, dialogue, turn_index, slot))

    outputs = _generate_batched(generator, prompts, batch_size, workers)

    by_turn: dict[tuple[str, int], dict[SlotId, str]] = {
        (d.id, turn.index): {} for d in dialogues for turn in d.turns
    }
    for (dialogue_id, turn_index, slot), raw in zip(queries, outputs):
        value = normalize_value(raw)
        if value is None:
            continue
        by_turn[(dialogue_id, turn_index)][slot] = value

    states = [
        PredictedState(dialogue_id=d.id, turn_index=turn.index,
                       entries=by_turn[(d.id, turn.index)])
        for d in dialogues
        for turn in d.turns
    ]
    return PredictionResult(states=states, retrieval_log=log)


def _generate_batched(
    generator: Generator, prompts: list[str], batch_size: int, workers: int
) -> list[str]:
    if batch_size < 1:
        raise ValueError(f"batch_size must be positive, got {batch_size}")
    batches = [prompts[i : i + batch_size] for i in range(0, len(prompts), batch_size)]
    if not batches:
        return []

    def run(batch: list[str]) -> list[str]:
        outputs = generator.generate(batch)
        if len(outputs) != len(batch):
            raise ProtocolError(
                f"generator {generator.name} returned {len(outputs)} outputs"
                f" for {len(batch)} inputs"
            )
        return outputs

    if workers <= 1 or len(batches) == 1:
        collected = [run(batch) for batch in batches]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            collected = list(pool.map(run, batches))
    return [output for chunk in collected for output in chunk]


class StateTracker(BaseEstimator):
    """End-to-end tracker: fit builds the bank and index, predict emits states.

    Parameters mirror the pipeline knobs: retriever (unfitted strategy
    object), generator, ontology, number of in-context examples `k`, query
    mode, optional domain filter for per-domain evaluation, and domains to
    exclude from retrieval (zero-shot purity).
    """

    def __init__(
        self,
        retriever=None,
        generator=None,
        ontology: Optional[Ontology] = None,
        k: int = 3,
        query_mode: QueryMode = "whole_context",
        domain_filter: Optional[str] = None,
        exclude_domains: tuple[str, ...] = (),
        batch_size: int = DEFAULT_BATCH_SIZE,
        workers: int = 1,
    ):
        self.retriever = retriever
        self.generator = generator
        self.ontology = ontology
        self.k = k
        self.query_mode = query_mode
        self.domain_filter = domain_filter
        self.exclude_domains = exclude_domains
        self.batch_size = batch_size
        self.workers = workers

    def fit(self, dialogues: Sequence[Dialogue], y=None) -> "StateTracker":
        if self.ontology is None:
            raise ValueError("StateTracker needs an ontology")
        self.bank_ = build_bank(dialogues)
        if self.k > 0:
            if self.retriever is None:
                raise ValueError("StateTracker with k > 0 needs a retriever")
            self.retriever.fit(self.bank_)
        return self

    def predict(self, dialogues: Sequence[Dialogue]) -> list[PredictedState]:
        if not hasattr(self, "bank_"):
            raise RuntimeError("StateTracker is not fitted yet; call fit() first")
        result = predict_states(
            dialogues,
            self.ontology,
            self.retriever,
            self.generator,
            k=self.k,
            query_mode=self.query_mode,
            domain_filter=self.domain_filter,
            exclude_domains=frozenset(self.exclude_domains),
            batch_size=self.batch_size,
            workers=self.workers,
        )
        self.retrieval_log_ = result.retrieval_log
        return result.states
