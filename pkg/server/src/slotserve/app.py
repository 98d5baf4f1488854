"""HTTP surface: /embed, /generate, /finetune, /healthz.

Wire formats (UTF-8 JSON):

    POST /embed     {"texts": [str, ...]}
                    -> {"vectors": [[float, ...], ...], "dim": int,
                        "truncated": [bool, ...]}
    POST /generate  {"inputs": [str, ...]}
                    -> {"outputs": [str, ...], "truncated": [bool, ...],
                        "decode": "greedy"}
    POST /finetune  {"pairs_path_or_inline": str | [{"input","target"}, ...],
                     "epochs": int, "seed": int,
                     "validation_path_or_inline": optional}
                    -> {"final_loss": float, "initial_loss": float, ...}

Fine-tuning holds an exclusive lock; /generate and /embed return 409 while
it runs, as does a second concurrent /finetune.
"""

from __future__ import annotations

import json
from typing import Union

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from .config import ServerConfig
from .engine import Engine, Pair, TrainingBusy


class EmbedRequest(BaseModel):
    texts: list[str]


class GenerateRequest(BaseModel):
    inputs: list[str]


class FinetuneRequest(BaseModel):
    pairs_path_or_inline: Union[str, list[dict]]
    epochs: int | None = None
    seed: int = 0
    validation_path_or_inline: Union[str, list[dict], None] = Field(default=None)


def _load_pairs(source: Union[str, list[dict]], what: str) -> list[Pair]:
    if isinstance(source, str):
        records = []
        try:
            with open(source, "r", encoding="utf-8") as fh:
                for line_number, line in enumerate(fh, start=1):
                    line = line.strip()
                    if not line:
                        continue
                    try:
                        records.append(json.loads(line))
                    except json.JSONDecodeError as exc:
                        raise HTTPException(
                            status_code=400,
                            detail=f"{what} line {line_number}: invalid JSON ({exc.msg})",
                        ) from exc
        except OSError as exc:
            raise HTTPException(
                status_code=400, detail=f"cannot read {what} file: {exc}"
            ) from exc
    else:
        records = source
    pairs = []
    for position, record in enumerate(records, start=1):
        if not isinstance(record, dict) or "input" not in record or "target" not in record:
            raise HTTPException(
                status_code=400,
                detail=f"{what} line {position}: each pair needs 'input' and 'target'",
            )
        pairs.append(Pair(input_text=str(record["input"]),
                          target_text=str(record["target"])))
    if not pairs:
        raise HTTPException(status_code=400, detail=f"{what} contains no pairs")
    return pairs


def create_app(config: ServerConfig | None = None) -> FastAPI:
    config = config or ServerConfig()
    engine = Engine(config)
    app = FastAPI(title="slotserve", version="0.1.0")
    app.state.engine = engine
    app.state.config = config

    @app.get("/healthz")
    def healthz():
        return {
            "status": "ok",
            "model": config.model,
            "decode": config.decode,
            "max_input_len": config.max_input_len,
            "training_active": engine.training_active,
            "finetune_count": engine.finetune_count,
        }

    @app.post("/embed")
    def embed(request: EmbedRequest):
        if not request.texts:
            raise HTTPException(status_code=400, detail="texts must be non-empty")
        try:
            vectors, dim, truncated = engine.embed(request.texts)
        except TrainingBusy as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from exc
        return {"vectors": vectors, "dim": dim, "truncated": truncated}

    @app.post("/generate")
    def generate(request: GenerateRequest):
        if not request.inputs:
            raise HTTPException(status_code=400, detail="inputs must be non-empty")
        try:
            outputs, truncated = engine.generate(request.inputs)
        except TrainingBusy as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from exc
        return {"outputs": outputs, "truncated": truncated, "decode": config.decode}

    @app.post("/finetune")
    def finetune(request: FinetuneRequest):
        pairs = _load_pairs(request.pairs_path_or_inline, "pairs")
        validation = None
        if request.validation_path_or_inline is not None:
            validation = _load_pairs(request.validation_path_or_inline, "validation")
        epochs = config.default_epochs if request.epochs is None else request.epochs
        if epochs < 0:
            raise HTTPException(status_code=400, detail="epochs must be >= 0")
        try:
            stats = engine.finetune(
                pairs, epochs=epochs, seed=request.seed, validation=validation
            )
        except TrainingBusy as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from exc
        return stats

    return app
