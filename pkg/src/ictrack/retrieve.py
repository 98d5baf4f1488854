"""Top-k example retrieval: dense cosine, Okapi BM25, and random baselines.

All strategies share the same eligibility filter (domains in
`exclude_domains` never surface) and the same deterministic tie rule
(descending score, then ascending example id). Dense search is an exact
scan: scores are computed against every eligible example and the top k are
taken with a partial selection, so results match a brute-force oracle.

Index file layout (documented so independent tools can read it):

    line 1     UTF-8 JSON header {"count": int, "dim": int, "provider_name": str}
    then       count * dim little-endian float32 values, row-major
    then       count JSON-encoded example ids, one per line

Indexes are immutable once built; concurrent queries are safe.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from sklearn.base import BaseEstimator

from .bank import SingleTurnExample, render_context
from .corpus import Dialogue, SlotId
from .errors import RetrievalError, SchemaError
from .validation import check_fitted, check_unit_rows

QueryMode = str  # "whole_context" | "single_turn"
QUERY_MODES: tuple[str, ...] = ("whole_context", "single_turn")

DEFAULT_K = 3  # in-context examples per prompt unless overridden


@dataclass(frozen=True, slots=True)
class RetrievalQuery:
    """A rendered dialogue context plus the slot being asked about."""

    context_text: str
    slot: SlotId
    mode: QueryMode = "whole_context"
    exclude_domains: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        if self.mode not in QUERY_MODES:
            raise ValueError(f"unknown query mode {self.mode!r}")

    @property
    def query_text(self) -> str:
        """The full retrieval string: context plus ` [slot] domain-name`."""
        return f"{self.context_text} [slot] {self.slot}"


@dataclass(frozen=True, slots=True)
class RetrievedSet:
    """Ordered (example id, score) pairs; scores are non-increasing."""

    items: tuple[tuple[str, float], ...]
    k: int

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(item_id for item_id, _ in self.items)


@dataclass(frozen=True)
class DenseIndex:
    """Unit-norm example vectors with their ids and provenance."""

    vectors: np.ndarray  # float32, shape (count, dim)
    ids: tuple[str, ...]
    provider_name: str

    @property
    def dim(self) -> int:
        return int(self.vectors.shape[1])

    def __post_init__(self) -> None:
        if len(self.ids) != self.vectors.shape[0]:
            raise SchemaError(
                f"index has {self.vectors.shape[0]} rows but {len(self.ids)} ids"
            )
        check_unit_rows(self.vectors, tol=1e-6)


def build_query(
    dialogue: Dialogue,
    turn_index: int,
    slot: SlotId,
    mode: QueryMode = "whole_context",
    exclude_domains: frozenset[str] = frozenset(),
) -> RetrievalQuery:
    """Render the context for `mode` and attach the query slot."""
    context = render_context(dialogue, turn_index, whole=(mode == "whole_context"))
    return RetrievalQuery(
        context_text=context, slot=slot, mode=mode, exclude_domains=exclude_domains
    )


def save_index(index: DenseIndex, path) -> None:
    header = {
        "count": int(index.vectors.shape[0]),
        "dim": index.dim,
        "provider_name": index.provider_name,
    }
    with open(path, "wb") as fh:
        fh.write((json.dumps(header, sort_keys=True) + "\n").encode("utf-8"))
        fh.write(np.ascontiguousarray(index.vectors, dtype="<f4").tobytes())
        for item_id in index.ids:
            fh.write((json.dumps(item_id) + "\n").encode("utf-8"))


def load_index(path) -> DenseIndex:
    with open(path, "rb") as fh:
        header_line = fh.readline()
        try:
            header = json.loads(header_line.decode("utf-8"))
            count, dim = int(header["count"]), int(header["dim"])
            provider_name = str(header["provider_name"])
        except (ValueError, KeyError, UnicodeDecodeError) as exc:
            raise SchemaError(f"bad index header: {exc}") from exc
        matrix_bytes = fh.read(count * dim * 4)
        if len(matrix_bytes) != count * dim * 4:
            raise SchemaError("index file truncated inside the vector matrix")
        vectors = np.frombuffer(matrix_bytes, dtype="<f4").reshape(count, dim)
        ids = []
        for line in fh.read().decode("utf-8").splitlines():
            if line:
                ids.append(json.loads(line))
        if len(ids) != count:
            raise SchemaError(f"index lists {len(ids)} ids, expected {count}")
    return DenseIndex(vectors=vectors.copy(), ids=tuple(ids), provider_name=provider_name)


class _BankRetrieverMixin:
    """Shared storage and filtering for retrievers fitted on an example bank."""

    def _store_bank(self, examples: Sequence[SingleTurnExample]) -> None:
        self.examples_: tuple[SingleTurnExample, ...] = tuple(examples)
        self.ids_: tuple[str, ...] = tuple(e.id for e in self.examples_)
        if len(set(self.ids_)) != len(self.ids_):
            raise SchemaError("example bank contains duplicate ids")
        self._domains = np.array([e.domain for e in self.examples_], dtype=object)

    def _eligible(self, query: RetrievalQuery) -> np.ndarray:
        if not self.ids_:
            raise RetrievalError("the fitted example bank is empty")
        if not query.exclude_domains:
            return np.arange(len(self.ids_))
        mask = ~np.isin(self._domains, list(query.exclude_domains))
        idx = np.flatnonzero(mask)
        if idx.size == 0:
            raise RetrievalError(
                "no eligible examples after excluding domains "
                f"{sorted(query.exclude_domains)}"
            )
        return idx

    def _take_top(
        self, idx: np.ndarray, scores: np.ndarray, k: int
    ) -> RetrievedSet:
        """Top k of (idx, scores) under the (-score, id) order."""
        if idx.size > k:
            # Partial selection: find the kth largest score, keep everything
            # at or above it, then break ties exactly.
            kth = np.partition(scores, idx.size - k)[idx.size - k]
            keep = np.flatnonzero(scores >= kth)
        else:
            keep = np.arange(idx.size)
        ranked = sorted(keep, key=lambda j: (-scores[j], self.ids_[idx[j]]))[:k]
        items = tuple((self.ids_[idx[j]], float(scores[j])) for j in ranked)
        return RetrievedSet(items=items, k=k)

    def _resolve_k(self, k: Optional[int]) -> int:
        chosen = self.k if k is None else k
        if chosen < 1:
            raise ValueError(f"k must be at least 1, got {chosen}")
        return chosen


class DenseRetriever(BaseEstimator, _BankRetrieverMixin):
    """Exact cosine top-k over embedded rendered examples.

    Parameters
    ----------
    provider : embedding provider with `name`, `dim`, and `embed_batch`.
    k : int, default 3
        Number of examples returned unless overridden per call.
    batch_size : int, default 256
        Embedding batch size while fitting.
    """

    def __init__(self, provider=None, k: int = DEFAULT_K, batch_size: int = 256):
        self.provider = provider
        self.k = k
        self.batch_size = batch_size

    def fit(self, examples: Sequence[SingleTurnExample], y=None) -> "DenseRetriever":
        if self.provider is None:
            raise ValueError("DenseRetriever needs an embedding provider")
        self._store_bank(examples)
        rows = []
        texts = [e.rendered_text for e in self.examples_]
        for start in range(0, len(texts), self.batch_size):
            rows.append(self.provider.embed_batch(texts[start : start + self.batch_size]))
        matrix = (
            np.vstack(rows).astype(np.float32)
            if rows
            else np.zeros((0, self.provider.dim), dtype=np.float32)
        )
        self.index_ = DenseIndex(
            vectors=matrix, ids=self.ids_, provider_name=self.provider.name
        )
        self._matrix64 = matrix.astype(np.float64)
        return self

    @classmethod
    def from_index(
        cls,
        index: DenseIndex,
        examples: Sequence[SingleTurnExample],
        provider,
        k: int = DEFAULT_K,
    ) -> "DenseRetriever":
        """Attach a persisted index to its bank and provider."""
        retriever = cls(provider=provider, k=k)
        retriever._store_bank(examples)
        if retriever.ids_ != index.ids:
            raise SchemaError("index ids do not match the supplied bank")
        retriever.index_ = index
        retriever._matrix64 = index.vectors.astype(np.float64)
        return retriever

    def retrieve(self, query: RetrievalQuery, k: Optional[int] = None) -> RetrievedSet:
        check_fitted(self, "index_")
        chosen_k = self._resolve_k(k)
        if self.provider.dim != self.index_.dim:
            raise ValueError(
                f"provider dim {self.provider.dim} != index dim {self.index_.dim}"
            )
        idx = self._eligible(query)
        query_vec = np.asarray(self.provider.embed(query.query_text), dtype=np.float64)
        scores = self._matrix64[idx] @ query_vec
        return self._take_top(idx, scores, chosen_k)


class Bm25Retriever(BaseEstimator, _BankRetrieverMixin):
    """Okapi BM25 over whitespace-lowercased tokens of rendered examples.

    IDF uses the +1-smoothed form ln((N - n_t + 0.5) / (n_t + 0.5) + 1),
    which is never negative. Corpus statistics (N, document frequencies,
    average length) come from the full fitted bank; domain filters apply to
    candidates at query time.
    """

    def __init__(self, k: int = DEFAULT_K, k1: float = 1.5, b: float = 0.75):
        self.k = k
        self.k1 = k1
        self.b = b

    def fit(self, examples: Sequence[SingleTurnExample], y=None) -> "Bm25Retriever":
        self._store_bank(examples)
        docs = [e.rendered_text.lower().split() for e in self.examples_]
        lengths = np.array([len(d) for d in docs], dtype=np.float64)
        avgdl = float(lengths.mean()) if len(docs) else 0.0
        n_docs = len(docs)

        postings: dict[str, dict[int, int]] = {}
        for doc_idx, tokens in enumerate(docs):
            for token in tokens:
                postings.setdefault(token, {})
                postings[token][doc_idx] = postings[token].get(doc_idx, 0) + 1

        self._postings = {
            term: (
                np.fromiter(freqs.keys(), dtype=np.int64),
                np.fromiter(freqs.values(), dtype=np.float64),
            )
            for term, freqs in postings.items()
        }
        self._idf = {
            term: float(np.log((n_docs - len(freqs) + 0.5) / (len(freqs) + 0.5) + 1.0))
            for term, freqs in postings.items()
        }
        # Per-document length normalizer k1 * (1 - b + b * dl / avgdl).
        self._norm = (
            self.k1 * (1.0 - self.b + self.b * lengths / avgdl)
            if avgdl > 0
            else np.zeros(0)
        )
        self.fitted_ = True
        return self

    def retrieve(self, query: RetrievalQuery, k: Optional[int] = None) -> RetrievedSet:
        check_fitted(self, "fitted_")
        chosen_k = self._resolve_k(k)
        idx = self._eligible(query)
        scores_all = np.zeros(len(self.ids_), dtype=np.float64)
        for token in query.query_text.lower().split():
            entry = self._postings.get(token)
            if entry is None:
                continue
            doc_idx, tf = entry
            scores_all[doc_idx] += (
                self._idf[token]
                * tf
                * (self.k1 + 1.0)
                / (tf + self._norm[doc_idx])
            )
        return self._take_top(idx, scores_all[idx], chosen_k)


class RandomRetriever(BaseEstimator, _BankRetrieverMixin):
    """Uniform sample without replacement; a pure function of (query, seed)."""

    def __init__(self, k: int = DEFAULT_K, seed: int = 0):
        self.k = k
        self.seed = seed

    def fit(self, examples: Sequence[SingleTurnExample], y=None) -> "RandomRetriever":
        self._store_bank(examples)
        self.fitted_ = True
        return self

    def retrieve(
        self,
        query: RetrievalQuery,
        k: Optional[int] = None,
        seed: Optional[int] = None,
    ) -> RetrievedSet:
        check_fitted(self, "fitted_")
        chosen_k = self._resolve_k(k)
        idx = self._eligible(query)
        rng = random.Random(self._derive_seed(query, seed))
        take = min(chosen_k, idx.size)
        picked = rng.sample(list(idx), take)
        items = tuple((self.ids_[j], 0.0) for j in picked)
        return RetrievedSet(items=items, k=chosen_k)

    def _derive_seed(self, query: RetrievalQuery, seed: Optional[int]) -> int:
        # Counter-free per-query randomness: the draw depends only on
        # (seed, query), so call order and concurrency cannot reorder it.
        base = self.seed if seed is None else seed
        key = f"{base}|{query.query_text}|{','.join(sorted(query.exclude_domains))}"
        digest = hashlib.blake2b(key.encode("utf-8"), digest_size=8).digest()
        return int.from_bytes(digest, "little")


RETRIEVER_STRATEGIES: tuple[str, ...] = ("dense", "bm25", "random")


def make_retriever(
    strategy: str,
    provider=None,
    k: int = DEFAULT_K,
    seed: int = 0,
):
    """Instantiate a retriever by strategy name (unfitted)."""
    if strategy == "dense":
        return DenseRetriever(provider=provider, k=k)
    if strategy == "bm25":
        return Bm25Retriever(k=k)
    if strategy == "random":
        return RandomRetriever(k=k, seed=seed)
    raise ValueError(f"unknown retriever strategy {strategy!r}")
