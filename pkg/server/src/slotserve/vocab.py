"""Tokenization: a stateless hashed source vocabulary and a growable
target vocabulary.

Source words map into a fixed number of hash buckets (BLAKE2b, fixed salt),
so any input text tokenizes without a fitted vocabulary and embeddings stay
deterministic across processes. Target words must be generated verbatim, so
the decoder keeps an explicit vocabulary that grows as fine-tuning data
introduces new words.
"""

from __future__ import annotations

import hashlib

PAD_ID = 0
BOS_ID = 1
EOS_ID = 2
UNK_ID = 3
SPECIALS = ["<pad>", "<bos>", "<eos>", "<unk>"]

_SALT = b"srvtok"


def words_of(text: str) -> list[str]:
    return text.lower().split()


class HashedSourceVocab:
    """Maps words onto 1..n_buckets (0 is padding)."""

    def __init__(self, n_buckets: int):
        self.n_buckets = n_buckets
        self._cache: dict[str, int] = {}

    @property
    def size(self) -> int:
        return self.n_buckets + 1

    def encode(self, text: str, max_len: int) -> tuple[list[int], bool]:
        """Token ids plus a flag marking truncation to max_len."""
        words = words_of(text)
        truncated = len(words) > max_len
        ids = [self._bucket(w) for w in words[:max_len]]
        return ids, truncated

    def _bucket(self, word: str) -> int:
        cached = self._cache.get(word)
        if cached is None:
            digest = hashlib.blake2b(
                word.encode("utf-8"), digest_size=8, salt=_SALT
            ).digest()
            cached = 1 + int.from_bytes(digest, "little") % self.n_buckets
            self._cache[word] = cached
        return cached


class TargetVocab:
    """Explicit word vocabulary for the decoder; extendable, never shrinks."""

    def __init__(self):
        self.tokens: list[str] = list(SPECIALS)
        self._ids: dict[str, int] = {t: i for i, t in enumerate(self.tokens)}

    @property
    def size(self) -> int:
        return len(self.tokens)

    def extend(self, texts: list[str]) -> int:
        """Add unseen target words; returns how many were added."""
        added = 0
        for text in texts:
            for word in words_of(text):
                if word not in self._ids:
                    self._ids[word] = len(self.tokens)
                    self.tokens.append(word)
                    added += 1
        return added

    def encode(self, text: str, max_len: int) -> list[int]:
        """BOS-free target ids ending in EOS (teacher forcing adds BOS)."""
        ids = [self._ids.get(w, UNK_ID) for w in words_of(text)[:max_len]]
        return ids + [EOS_ID]

    def decode(self, ids: list[int]) -> str:
        words = []
        for token_id in ids:
            if token_id == EOS_ID:
                break
            if token_id in (PAD_ID, BOS_ID, UNK_ID):
                continue
            if 0 <= token_id < len(self.tokens):
                words.append(self.tokens[token_id])
        return " ".join(words)
