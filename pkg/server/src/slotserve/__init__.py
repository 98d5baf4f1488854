"""Reference model server: embeddings, greedy generation, and fine-tuning
over a small self-contained transformer seq2seq model."""

from __future__ import annotations

__version__ = "0.1.0"

from .app import create_app
from .config import ServerConfig
from .engine import Engine

__all__ = ["Engine", "ServerConfig", "create_app", "__version__"]
