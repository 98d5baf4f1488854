"""Model engine: embedding, greedy generation, and seeded fine-tuning.

One model instance lives behind an exclusive training lock: fine-tuning
rejects concurrent requests instead of queueing them, and /generate or
/embed calls issued mid-training are refused (the HTTP layer turns that
into a 409). Model state persists across calls for the life of the process.
"""

from __future__ import annotations

import random
import threading
from dataclasses import dataclass

import torch
from torch import nn

from .config import ServerConfig
from .model import Seq2SeqModel
from .vocab import BOS_ID, EOS_ID, PAD_ID, HashedSourceVocab, TargetVocab


@dataclass
class Pair:
    input_text: str
    target_text: str


class TrainingBusy(RuntimeError):
    """Raised when a request arrives while fine-tuning holds the lock."""


def _pad_batch(rows: list[list[int]], device) -> torch.Tensor:
    width = max(1, max((len(r) for r in rows), default=1))
    out = torch.full((len(rows), width), PAD_ID, dtype=torch.long, device=device)
    for i, row in enumerate(rows):
        if row:
            out[i, : len(row)] = torch.tensor(row, dtype=torch.long, device=device)
    return out


class Engine:
    def __init__(self, config: ServerConfig):
        self.config = config
        self.device = torch.device(config.device)
        self.src_vocab = HashedSourceVocab(config.preset.hash_vocab)
        self.tgt_vocab = TargetVocab()
        torch.manual_seed(config.init_seed)
        self.model = Seq2SeqModel(
            config.preset, self.src_vocab.size, self.tgt_vocab.size
        ).to(self.device)
        self.model.eval()
        self._train_lock = threading.Lock()
        self.training_active = False
        self.finetune_count = 0

    # -- embedding ----------------------------------------------------------

    def embed(self, texts: list[str]) -> tuple[list[list[float]], int, list[bool]]:
        """Mean-pooled encoder states, L2-normalized; deterministic in eval."""
        self._reject_if_training()
        encoded = [self.src_vocab.encode(t, self.config.max_input_len) for t in texts]
        truncated = [flag for _, flag in encoded]
        src = _pad_batch([ids for ids, _ in encoded], self.device)
        self.model.eval()
        with torch.no_grad():
            memory, pad_mask = self.model.encode(src)
            keep = (~pad_mask).unsqueeze(-1).float()
            summed = (memory * keep).sum(dim=1)
            counts = keep.sum(dim=1).clamp(min=1.0)
            pooled = summed / counts
            empty = keep.sum(dim=(1, 2)).eq(0)
            if bool(empty.any()):
                # a text with no tokens gets a fixed basis direction
                pooled[empty] = 0.0
                pooled[empty, 0] = 1.0
            vectors = torch.nn.functional.normalize(pooled, dim=1)
        return vectors.cpu().tolist(), self.model.d_model, truncated

    # -- generation ---------------------------------------------------------

    def generate(self, inputs: list[str]) -> tuple[list[str], list[bool]]:
        """Greedy decode, order-preserving."""
        self._reject_if_training()
        encoded = [self.src_vocab.encode(t, self.config.max_input_len)
                   for t in inputs]
        truncated = [flag for _, flag in encoded]
        src = _pad_batch([ids for ids, _ in encoded], self.device)
        self.model.eval()
        with torch.no_grad():
            memory, memory_mask = self.model.encode(src)
            batch = src.shape[0]
            generated = torch.full((batch, 1), BOS_ID, dtype=torch.long,
                                   device=self.device)
            finished = torch.zeros(batch, dtype=torch.bool, device=self.device)
            for _ in range(self.config.max_target_len):
                logits = self.model.decode_step(generated, memory, memory_mask)
                next_ids = logits[:, -1].argmax(dim=-1)
                next_ids = torch.where(
                    finished, torch.full_like(next_ids, PAD_ID), next_ids
                )
                generated = torch.cat([generated, next_ids.unsqueeze(1)], dim=1)
                finished |= next_ids.eq(EOS_ID)
                if bool(finished.all()):
                    break
        outputs = [
            self.tgt_vocab.decode(row[1:].cpu().tolist()) for row in generated
        ]
        return outputs, truncated

    # -- fine-tuning ---------------------------------------------------------

    def finetune(
        self,
        pairs: list[Pair],
        epochs: int,
        seed: int,
        validation: list[Pair] | None = None,
    ) -> dict:
        """Seeded NLL fine-tuning; returns initial and final mean loss.

        With a validation set, training stops early once validation loss
        stops improving (patience 1). Model state persists afterwards.
        """
        if epochs < 0:
            raise ValueError(f"epochs must be non-negative, got {epochs}")
        if not pairs:
            raise ValueError("fine-tuning needs at least one pair")
        if not self._train_lock.acquire(blocking=False):
            raise TrainingBusy("a fine-tuning run is already in progress")
        try:
            self.training_active = True
            return self._finetune_locked(pairs, epochs, seed, validation)
        finally:
            self.training_active = False
            self._train_lock.release()

    def _finetune_locked(self, pairs, epochs, seed, validation) -> dict:
        self.tgt_vocab.extend([p.target_text for p in pairs])
        self.model.grow_target_vocab(self.tgt_vocab.size, seed=seed)
        self.model.to(self.device)

        encoded, truncated_count = self._encode_pairs(pairs)
        val_encoded = self._encode_pairs(validation)[0] if validation else None

        torch.manual_seed(seed)
        initial_loss = self._evaluate(encoded)

        optimizer = torch.optim.AdamW(self.model.parameters(), lr=self.config.lr)
        loss_fn = nn.CrossEntropyLoss(ignore_index=PAD_ID)
        rng = random.Random(seed)
        batch_size = 16
        best_val = float("inf")
        epochs_run = 0

        for _ in range(epochs):
            self.model.train()
            order = list(range(len(encoded)))
            rng.shuffle(order)
            for start in range(0, len(order), batch_size):
                chunk = [encoded[i] for i in order[start : start + batch_size]]
                src = _pad_batch([c[0] for c in chunk], self.device)
                tgt = _pad_batch([c[1] for c in chunk], self.device)
                tgt_in = torch.cat(
                    [torch.full((tgt.shape[0], 1), BOS_ID, dtype=torch.long,
                                device=self.device), tgt[:, :-1]],
                    dim=1,
                )
                logits = self.model(src, tgt_in)
                loss = loss_fn(logits.reshape(-1, logits.shape[-1]), tgt.reshape(-1))
                optimizer.zero_grad()
                loss.backward()
                optimizer.step()
            epochs_run += 1
            if val_encoded is not None:
                val_loss = self._evaluate(val_encoded)
                if val_loss > best_val:
                    break
                best_val = val_loss

        final_loss = self._evaluate(encoded)
        self.model.eval()
        self.finetune_count += 1
        return {
            "initial_loss": initial_loss,
            "final_loss": final_loss,
            "epochs_run": epochs_run,
            "pairs_count": len(pairs),
            "truncated_count": truncated_count,
            "target_vocab_size": self.tgt_vocab.size,
        }

    def _encode_pairs(self, pairs) -> tuple[list[tuple[list[int], list[int]]], int]:
        if not pairs:
            return [], 0
        encoded = []
        truncated_count = 0
        for pair in pairs:
            src_ids, was_truncated = self.src_vocab.encode(
                pair.input_text, self.config.max_input_len
            )
            truncated_count += int(was_truncated)
            tgt_ids = self.tgt_vocab.encode(
                pair.target_text, self.config.max_target_len
            )
            encoded.append((src_ids, tgt_ids))
        return encoded, truncated_count

    def _evaluate(self, encoded, batch_size: int = 64) -> float:
        """Mean NLL per non-pad target token, in eval mode."""
        self.model.eval()
        loss_fn = nn.CrossEntropyLoss(ignore_index=PAD_ID, reduction="sum")
        total_loss = 0.0
        total_tokens = 0
        with torch.no_grad():
            for start in range(0, len(encoded), batch_size):
                chunk = encoded[start : start + batch_size]
                src = _pad_batch([c[0] for c in chunk], self.device)
                tgt = _pad_batch([c[1] for c in chunk], self.device)
                tgt_in = torch.cat(
                    [torch.full((tgt.shape[0], 1), BOS_ID, dtype=torch.long,
                                device=self.device), tgt[:, :-1]],
                    dim=1,
                )
                logits = self.model(src, tgt_in)
                total_loss += float(
                    loss_fn(logits.reshape(-1, logits.shape[-1]), tgt.reshape(-1))
                )
                total_tokens += int(tgt.ne(PAD_ID).sum())
        return total_loss / max(1, total_tokens)

    def _reject_if_training(self) -> None:
        if self.training_active:
            raise TrainingBusy("model is fine-tuning; retry later")
