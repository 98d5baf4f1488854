"""Retrieval-augmented in-context tuning toolkit for dialogue state tracking.

The pipeline: parse a dialogue corpus, carve an experiment split, extract a
bank of labeled single-turn examples, retrieve the most relevant examples
for each (context, slot) query, assemble template-free prompts, generate
per-slot values (mock oracle or a served seq2seq model), and score with
joint goal accuracy.
"""

from __future__ import annotations

__version__ = "0.1.0"

from .bank import SingleTurnExample, build_bank, render_example
from .corpus import (
    Dialogue,
    DialogueState,
    Ontology,
    SlotDef,
    SlotId,
    SplitSpec,
    Turn,
    Utterance,
    enumerate_queries,
    make_split,
    normalize_value,
    parse_corpus,
    parse_ontology,
)
from .embedding import LexicalEmbedder, RemoteEmbedder, cosine
from .evaluation import (
    EvalReport,
    SelectionMatrix,
    aggregate_runs,
    joint_goal_accuracy,
    selection_analysis,
)
from .generation import (
    MockOracle,
    PredictedState,
    RemoteGenerator,
    StateTracker,
    mock_oracle,
    predict_states,
)
from .prompting import (
    PromptInstance,
    assemble_prompt,
    export_training_pairs,
    parse_prompt,
    target_for,
)
from .retrieve import (
    Bm25Retriever,
    DenseRetriever,
    RandomRetriever,
    RetrievalQuery,
    RetrievedSet,
    build_query,
    load_index,
    make_retriever,
    save_index,
)

__all__ = [
    "__version__",
    "Bm25Retriever",
    "Dialogue",
    "DialogueState",
    "DenseRetriever",
    "EvalReport",
    "LexicalEmbedder",
    "MockOracle",
    "Ontology",
    "PredictedState",
    "PromptInstance",
    "RandomRetriever",
    "RemoteEmbedder",
    "RemoteGenerator",
    "RetrievalQuery",
    "RetrievedSet",
    "SelectionMatrix",
    "SingleTurnExample",
    "SlotDef",
    "SlotId",
    "SplitSpec",
    "StateTracker",
    "Turn",
    "Utterance",
    "aggregate_runs",
    "assemble_prompt",
    "build_bank",
    "build_query",
    "cosine",
    "enumerate_queries",
    "export_training_pairs",
    "joint_goal_accuracy",
    "load_index",
    "make_retriever",
    "make_split",
    "mock_oracle",
    "normalize_value",
    "parse_corpus",
    "parse_ontology",
    "parse_prompt",
    "predict_states",
    "render_example",
    "save_index",
    "selection_analysis",
    "target_for",
]
