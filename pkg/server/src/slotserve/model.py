"""A compact transformer encoder-decoder with a growable output head."""

from __future__ import annotations

import math

import torch
from torch import nn

from .config import ModelPreset
from .vocab import PAD_ID


def sinusoidal_positions(length: int, dim: int, device) -> torch.Tensor:
    position = torch.arange(length, device=device, dtype=torch.float32).unsqueeze(1)
    div = torch.exp(
        torch.arange(0, dim, 2, device=device, dtype=torch.float32)
        * (-math.log(10000.0) / dim)
    )
    table = torch.zeros(length, dim, device=device)
    table[:, 0::2] = torch.sin(position * div)
    table[:, 1::2] = torch.cos(position * div)
    return table


class Seq2SeqModel(nn.Module):
    """Encoder over hashed source tokens, decoder over an explicit vocabulary."""

    def __init__(self, preset: ModelPreset, src_vocab_size: int,
                 tgt_vocab_size: int):
        super().__init__()
        self.d_model = preset.d_model
        self.src_embed = nn.Embedding(src_vocab_size, preset.d_model,
                                      padding_idx=PAD_ID)
        self.tgt_embed = nn.Embedding(tgt_vocab_size, preset.d_model,
                                      padding_idx=PAD_ID)
        self.encoder = nn.TransformerEncoder(
            nn.TransformerEncoderLayer(
                d_model=preset.d_model, nhead=preset.n_heads,
                dim_feedforward=preset.ff_dim, batch_first=True,
                dropout=preset.dropout, norm_first=True,
            ),
            num_layers=preset.enc_layers,
            enable_nested_tensor=False,
        )
        self.decoder = nn.TransformerDecoder(
            nn.TransformerDecoderLayer(
                d_model=preset.d_model, nhead=preset.n_heads,
                dim_feedforward=preset.ff_dim, batch_first=True,
                dropout=preset.dropout, norm_first=True,
            ),
            num_layers=preset.dec_layers,
        )
        self.out_proj = nn.Linear(preset.d_model, tgt_vocab_size)

    def encode(self, src: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        """Returns (memory, src_key_padding_mask)."""
        mask = src.eq(PAD_ID)
        scale = math.sqrt(self.d_model)
        x = self.src_embed(src) * scale
        x = x + sinusoidal_positions(src.shape[1], self.d_model, src.device)
        memory = self.encoder(x, src_key_padding_mask=mask)
        return memory, mask

    def decode_step(self, tgt_in: torch.Tensor, memory: torch.Tensor,
                    memory_mask: torch.Tensor) -> torch.Tensor:
        """Logits over the target vocabulary for each position of tgt_in."""
        scale = math.sqrt(self.d_model)
        y = self.tgt_embed(tgt_in) * scale
        y = y + sinusoidal_positions(tgt_in.shape[1], self.d_model, tgt_in.device)
        causal = torch.triu(
            torch.ones(tgt_in.shape[1], tgt_in.shape[1], dtype=torch.bool,
                       device=tgt_in.device),
            diagonal=1,
        )
        hidden = self.decoder(
            y, memory,
            tgt_mask=causal,
            tgt_key_padding_mask=tgt_in.eq(PAD_ID),
            memory_key_padding_mask=memory_mask,
        )
        return self.out_proj(hidden)

    def forward(self, src: torch.Tensor, tgt_in: torch.Tensor) -> torch.Tensor:
        memory, memory_mask = self.encode(src)
        return self.decode_step(tgt_in, memory, memory_mask)

    def grow_target_vocab(self, new_size: int, seed: int) -> None:
        """Extend the decoder embedding and output head, keeping learned rows."""
        old_size = self.tgt_embed.num_embeddings
        if new_size <= old_size:
            return
        generator = torch.Generator(device="cpu").manual_seed(seed)

        new_embed = nn.Embedding(new_size, self.d_model, padding_idx=PAD_ID)
        with torch.no_grad():
            nn.init.normal_(new_embed.weight, generator=generator)
            new_embed.weight[:old_size] = self.tgt_embed.weight
            new_embed.weight[PAD_ID].zero_()
        self.tgt_embed = new_embed

        new_proj = nn.Linear(self.d_model, new_size)
        with torch.no_grad():
            nn.init.normal_(new_proj.weight, std=0.02, generator=generator)
            new_proj.bias.zero_()
            new_proj.weight[:old_size] = self.out_proj.weight
            new_proj.bias[:old_size] = self.out_proj.bias
        self.out_proj = new_proj
