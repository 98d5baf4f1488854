"""Server configuration and model size presets."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class ModelPreset:
    d_model: int
    n_heads: int
    ff_dim: int
    enc_layers: int
    dec_layers: int
    hash_vocab: int
    dropout: float


PRESETS: dict[str, ModelPreset] = {
    # desk-scale preset: no dropout, tuned for fast memorization
    "tiny": ModelPreset(d_model=128, n_heads=4, ff_dim=256,
                        enc_layers=2, dec_layers=2, hash_vocab=4096,
                        dropout=0.0),
    "small": ModelPreset(d_model=256, n_heads=4, ff_dim=512,
                         enc_layers=3, dec_layers=3, hash_vocab=8192,
                         dropout=0.1),
}


@dataclass
class ServerConfig:
    """Runtime knobs: which preset to serve, on what device, at which port."""

    model: str = "tiny"
    device: str = "cpu"
    max_input_len: int = 256
    decode: str = "greedy"
    port: int = 8900
    lr: float = 1e-4
    default_epochs: int = 3
    init_seed: int = 0
    max_target_len: int = 10

    def __post_init__(self) -> None:
        if self.model not in PRESETS:
            raise ValueError(f"unknown model preset {self.model!r}; "
                             f"known: {sorted(PRESETS)}")
        if self.max_input_len < 128:
            raise ValueError(
                f"max_input_len must be at least 128, got {self.max_input_len}"
            )
        if self.decode != "greedy":
            raise ValueError("only greedy decoding is supported")

    @property
    def preset(self) -> ModelPreset:
        return PRESETS[self.model]
