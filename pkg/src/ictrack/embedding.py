"""Text embedding providers and cosine similarity.

Two providers share one contract (a `name`, a fixed `dim`, and order
preserving `embed_batch`): a deterministic built-in lexical embedder for
offline and test use, and an HTTP client for a served neural encoder.

The lexical embedder is a signed feature-hashing bag of features: word
unigrams, word bigrams, and character trigrams of the whitespace-normalized
lowercased text. Each feature is hashed with BLAKE2b (64-bit digest, fixed
salt b"lexfh"), the low bits pick a bucket in [0, dim) and the top bit picks
the sign. The accumulated vector is L2-normalized. The hash is fixed so
vectors are reproducible across processes and platforms.

Wire format of the embedding service (UTF-8 JSON over HTTP POST)::

    POST /embed   {"texts": [str, ...]}
    response      {"vectors": [[float, ...], ...], "dim": int}
"""

from __future__ import annotations

import hashlib
import time
from typing import Protocol, Sequence

import numpy as np
import requests
from sklearn.base import BaseEstimator

from .errors import ProtocolError, TransportError
from .validation import check_texts, check_vector

_HASH_SALT = b"lexfh"
DEFAULT_DIM = 384
MIN_DIM = 64


class EmbeddingProvider(Protocol):
    """Deterministic string-to-vector encoder with a constant dimension."""

    name: str
    dim: int

    def embed_batch(self, texts: Sequence[str]) -> np.ndarray: ...


def _feature_hash(feature: str) -> int:
    digest = hashlib.blake2b(
        feature.encode("utf-8"), digest_size=8, salt=_HASH_SALT
    ).digest()
    return int.from_bytes(digest, "little")


def _features(text: str) -> list[str]:
    tokens = text.lower().split()
    feats = [f"u:{t}" for t in tokens]
    feats += [f"b:{a} {b}" for a, b in zip(tokens, tokens[1:])]
    joined = " ".join(tokens)
    feats += [f"c:{joined[i:i + 3]}" for i in range(len(joined) - 2)]
    return feats


class LexicalEmbedder(BaseEstimator):
    """Feature-hashed lexical sentence embedder (stateless, fit is a no-op).

    Parameters
    ----------
    dim : int, default 384
        Output dimension, at least 64.
    """

    def __init__(self, dim: int = DEFAULT_DIM):
        self.dim = dim

    @property
    def name(self) -> str:
        return f"lexical-blake2b-{self.dim}"

    def fit(self, X=None, y=None) -> "LexicalEmbedder":
        self._check_dim()
        return self

    def embed(self, text: str) -> np.ndarray:
        self._check_dim()
        buckets = self._bucket_cache()
        vec = np.zeros(self.dim, dtype=np.float64)
        for feature in _features(text):
            cached = buckets.get(feature)
            if cached is None:
                h = _feature_hash(feature)
                cached = (h % self.dim, 1.0 if h >> 63 else -1.0)
                buckets[feature] = cached
            vec[cached[0]] += cached[1]
        norm = np.linalg.norm(vec)
        if norm == 0.0:
            vec[0] = 1.0
            return vec
        return vec / norm

    def embed_batch(self, texts: Sequence[str]) -> np.ndarray:
        items = check_texts(texts, allow_empty_batch=True)
        out = np.empty((len(items), self.dim), dtype=np.float64)
        for i, text in enumerate(items):
            out[i] = self.embed(text)
        return out

    def transform(self, X: Sequence[str]) -> np.ndarray:
        return self.embed_batch(X)

    def _check_dim(self) -> None:
        if self.dim < MIN_DIM:
            raise ValueError(f"dim must be at least {MIN_DIM}, got {self.dim}")

    def _bucket_cache(self) -> dict[str, tuple[int, float]]:
        # Memoizes feature -> (bucket, sign); values depend only on the fixed
        # hash, so the cache never changes results.
        cache = getattr(self, "_buckets", None)
        if cache is None:
            cache = {}
            self._buckets = cache
        return cache


class RemoteEmbedder(BaseEstimator):
    """Client for a served /embed endpoint; normalizes vectors client-side."""

    def __init__(
        self,
        endpoint: str,
        timeout: float = 30.0,
        retries: int = 3,
        backoff: float = 0.5,
    ):
        self.endpoint = endpoint
        self.timeout = timeout
        self.retries = retries
        self.backoff = backoff
        self._dim: int | None = None

    @property
    def name(self) -> str:
        return f"remote:{self.endpoint}"

    @property
    def dim(self) -> int:
        if self._dim is None:
            self._dim = int(self._post({"texts": ["probe"]})["dim"])
        return self._dim

    def fit(self, X=None, y=None) -> "RemoteEmbedder":
        return self

    def embed(self, text: str) -> np.ndarray:
        return self.embed_batch([text])[0]

    def embed_batch(self, texts: Sequence[str]) -> np.ndarray:
        items = check_texts(texts)
        payload = self._post({"texts": items})
        vectors = payload.get("vectors")
        if not isinstance(vectors, list) or len(vectors) != len(items):
            got = len(vectors) if isinstance(vectors, list) else "no"
            raise ProtocolError(
                f"/embed returned {got} vectors for {len(items)} texts"
            )
        dims = {len(v) for v in vectors}
        if len(dims) != 1:
            raise ProtocolError(f"/embed returned mixed dimensions {sorted(dims)}")
        dim = dims.pop()
        reported = payload.get("dim")
        if reported is not None and int(reported) != dim:
            raise ProtocolError(
                f"/embed reported dim {reported} but vectors have dim {dim}"
            )
        if self._dim is None:
            self._dim = dim
        elif self._dim != dim:
            raise ProtocolError(
                f"/embed dimension changed from {self._dim} to {dim}"
            )
        out = np.asarray(vectors, dtype=np.float64)
        norms = np.linalg.norm(out, axis=1, keepdims=True)
        if np.any(norms == 0.0):
            raise ProtocolError("/embed returned a zero vector")
        return out / norms

    def transform(self, X: Sequence[str]) -> np.ndarray:
        return self.embed_batch(X)

    def _post(self, payload: dict) -> dict:
        url = self.endpoint.rstrip("/") + "/embed"
        last_error: Exception | None = None
        for attempt in range(self.retries):
            try:
                response = requests.post(url, json=payload, timeout=self.timeout)
                if response.status_code >= 500:
                    last_error = TransportError(
                        f"/embed returned {response.status_code}"
                    )
                elif response.status_code != 200:
                    raise ProtocolError(
                        f"/embed returned status {response.status_code}"
                    )
                else:
                    return response.json()
            except (requests.RequestException, ValueError) as exc:
                last_error = exc
            if attempt + 1 < self.retries:
                time.sleep(self.backoff * (2**attempt))
        raise TransportError(
            f"/embed failed after {self.retries} attempts: {last_error}"
        ) from last_error


def remote_embed(texts: Sequence[str], endpoint: str, **kwargs) -> np.ndarray:
    """One-shot batch embedding through a RemoteEmbedder."""
    return RemoteEmbedder(endpoint, **kwargs).embed_batch(texts)


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine similarity of two nonzero vectors of equal dimension."""
    va = check_vector(a)
    vb = check_vector(b, dim=va.shape[0])
    norm_a = np.linalg.norm(va)
    norm_b = np.linalg.norm(vb)
    if norm_a == 0.0 or norm_b == 0.0:
        raise ValueError("cosine is undefined for a zero vector")
    return float(np.dot(va, vb) / (norm_a * norm_b))
