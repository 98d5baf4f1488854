"""Command-line front door for the tracking pipeline.

Stages: ingest -> split -> bank -> index -> export-train -> predict ->
eval -> analyze, plus `run` which executes the whole pipeline once per seed
and writes a manifest with content hashes of every input and artifact.
Every stage reads its predecessors' artifacts from disk, so any artifact
can be regenerated without rerunning earlier stages.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 remote error.

Config files are `key = value` lines (same keys as the flags, hyphens or
underscores); `#` starts a comment. Flags win over config values.
"""

from __future__ import annotations

import functools
import hashlib
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import click

from . import __version__
from .bank import build_bank, load_bank, save_bank
from .corpus import (
    Dialogue,
    Ontology,
    SplitSpec,
    dialogues_to_json,
    make_split,
    parse_corpus,
    parse_ontology,
)
from .embedding import DEFAULT_DIM, LexicalEmbedder, RemoteEmbedder
from .errors import ConfigError, DataError, RemoteError, ToolkitError
from .evaluation import (
    EvalReport,
    joint_goal_accuracy,
    load_retrieval_log,
    merge_reports,
    save_report,
    save_retrieval_log,
    selection_analysis,
)
from .generation import (
    MockOracle,
    PredictedState,
    RemoteGenerator,
    predict_states,
)
from .prompting import export_training_pairs, save_pairs
from .retrieve import (
    DEFAULT_K,
    DenseRetriever,
    load_index,
    make_retriever,
    save_index,
)
from .corpus import SlotId

_QUERY_MODE = {"whole": "whole_context", "single": "single_turn"}


@dataclass
class RunConfig:
    """Everything one experiment run needs; mirrors the CLI flags."""

    corpus: str = ""
    ontology: str = ""
    mode: str = "full_shot"
    target_domain: Optional[str] = None
    fraction: float = 1.0
    retriever: str = "dense"
    query_mode: str = "whole"
    k: int = DEFAULT_K
    embedder: str = "lexical"
    dim: int = DEFAULT_DIM
    endpoint: Optional[str] = None
    generator: str = "mock"
    accuracy: float = 1.0
    seeds: tuple[int, ...] = (0,)
    out: str = "runs/out"
    eval_corpus: Optional[str] = None
    domain_filter: Optional[str] = None
    batch_size: int = 32
    workers: int = 1

    def to_dict(self) -> dict:
        return {
            "corpus": self.corpus,
            "ontology": self.ontology,
            "mode": self.mode,
            "target_domain": self.target_domain,
            "fraction": self.fraction,
            "retriever": self.retriever,
            "query_mode": self.query_mode,
            "k": self.k,
            "embedder": self.embedder,
            "dim": self.dim,
            "endpoint": self.endpoint,
            "generator": self.generator,
            "accuracy": self.accuracy,
            "seeds": list(self.seeds),
            "out": self.out,
            "eval_corpus": self.eval_corpus,
            "domain_filter": self.domain_filter,
            "batch_size": self.batch_size,
            "workers": self.workers,
        }


_CONFIG_TYPES = {
    "fraction": float,
    "accuracy": float,
    "k": int,
    "dim": int,
    "batch_size": int,
    "workers": int,
}


def load_config_file(path: str) -> dict:
    """Parse the `key = value` config format into override kwargs."""
    values: dict = {}
    for line_number, raw in enumerate(Path(path).read_text("utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"{path}:{line_number}: expected `key = value`")
        key = key.strip().replace("-", "_")
        value = value.strip()
        if key == "seeds":
            values[key] = tuple(int(v) for v in value.split())
        elif key in _CONFIG_TYPES:
            values[key] = _CONFIG_TYPES[key](value)
        elif key in RunConfig.__dataclass_fields__:
            values[key] = value
        else:
            raise ConfigError(f"{path}:{line_number}: unknown config key {key!r}")
    return values


def _sha256_file(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _read(path: str) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc


def _load_corpus(corpus_path: str, ontology_path: str) -> tuple[list[Dialogue], Ontology]:
    ontology = parse_ontology(_read(ontology_path))
    dialogues = parse_corpus(_read(corpus_path), ontology)
    return dialogues, ontology


def _make_provider(embedder: str, dim: int, endpoint: Optional[str]):
    if embedder == "lexical":
        return LexicalEmbedder(dim=dim)
    if embedder == "remote":
        if not endpoint:
            raise ConfigError("embedder 'remote' needs --endpoint")
        return RemoteEmbedder(endpoint)
    raise ConfigError(f"unknown embedder {embedder!r}")


def _make_generator(config: RunConfig, oracle_corpus: Sequence[Dialogue]):
    if config.generator == "mock":
        return MockOracle(oracle_corpus, accuracy=config.accuracy, seed=config.seeds[0])
    if config.generator == "remote":
        if not config.endpoint:
            raise ConfigError("generator 'remote' needs --endpoint")
        return RemoteGenerator(config.endpoint)
    raise ConfigError(f"unknown generator {config.generator!r}")


class _stage:
    """Prefix toolkit errors raised inside a pipeline stage with its name."""

    def __init__(self, name: str):
        self.name = name

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc is not None and isinstance(exc, ToolkitError):
            exc.args = (f"stage {self.name}: {exc}",)
        return False


def _exit_codes(command):
    """Map toolkit errors onto documented exit codes."""

    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except ConfigError as exc:
            click.echo(f"config error: {exc}", err=True)
            sys.exit(2)
        except DataError as exc:
            click.echo(f"data error: {exc}", err=True)
            sys.exit(3)
        except RemoteError as exc:
            click.echo(f"remote error: {exc}", err=True)
            sys.exit(4)
        except ToolkitError as exc:  # catch-all for future subclasses
            click.echo(f"error: {exc}", err=True)
            sys.exit(3)

    return wrapper


@click.group()
@click.version_option(__version__)
def main() -> None:
    """Retrieval-augmented in-context tuning for dialogue state tracking."""


@main.command()
@click.option("--corpus", required=True, help="Corpus JSON path.")
@click.option("--ontology", "ontology_path", required=True, help="Ontology JSON path.")
@click.option("--out", required=True, help="Output directory.")
@_exit_codes
def ingest(corpus: str, ontology_path: str, out: str) -> None:
    """Validate and normalize a corpus; write the normalized copy."""
    dialogues, ontology = _load_corpus(corpus, ontology_path)
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "corpus.json").write_bytes(dialogues_to_json(dialogues))
    click.echo(
        f"ingested {len(dialogues)} dialogues, "
        f"{sum(len(d.turns) for d in dialogues)} turns, "
        f"{len(ontology)} slots, domains: {', '.join(sorted(ontology.domains))}"
    )


@main.command()
@click.option("--corpus", required=True)
@click.option("--ontology", "ontology_path", required=True)
@click.option("--mode", type=click.Choice(["zero_shot", "cross_domain_few_shot",
                                           "multi_domain_few_shot", "full_shot"]),
              required=True)
@click.option("--target-domain", default=None)
@click.option("--fraction", type=float, default=1.0, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", required=True)
@_exit_codes
def split(corpus: str, ontology_path: str, mode: str, target_domain: Optional[str],
          fraction: float, seed: int, out: str) -> None:
    """Carve a training split and write train.json plus split.json."""
    dialogues, _ = _load_corpus(corpus, ontology_path)
    spec = SplitSpec(mode=mode, target_domain=target_domain, fraction=fraction,
                     seed=seed)
    train, info = make_split(dialogues, spec)
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "train.json").write_bytes(dialogues_to_json(train))
    (out_dir / "split.json").write_text(
        json.dumps(info.to_dict(), indent=2, sort_keys=True) + "\n", "utf-8"
    )
    click.echo(f"split {mode}: {info.train_count}/{info.total_count} dialogues in train")


@main.command()
@click.option("--train", "train_path", required=True, help="Training corpus JSON.")
@click.option("--ontology", "ontology_path", required=True)
@click.option("--out", required=True, help="Bank JSONL path.")
@_exit_codes
def bank(train_path: str, ontology_path: str, out: str) -> None:
    """Extract the single-turn example bank from a training split."""
    train, _ = _load_corpus(train_path, ontology_path)
    examples = build_bank(train)
    Path(out).parent.mkdir(parents=True, exist_ok=True)
    save_bank(examples, out)
    click.echo(f"bank: {len(examples)} examples from {len(train)} dialogues")


@main.command()
@click.option("--bank", "bank_path", required=True, help="Bank JSONL path.")
@click.option("--embedder", type=click.Choice(["lexical", "remote"]),
              default="lexical", show_default=True)
@click.option("--dim", type=int, default=DEFAULT_DIM, show_default=True)
@click.option("--endpoint", default=None)
@click.option("--out", required=True, help="Index file path.")
@_exit_codes
def index(bank_path: str, embedder: str, dim: int, endpoint: Optional[str],
          out: str) -> None:
    """Embed a bank and write the dense index."""
    examples = load_bank(bank_path)
    provider = _make_provider(embedder, dim, endpoint)
    retriever = DenseRetriever(provider=provider).fit(examples)
    Path(out).parent.mkdir(parents=True, exist_ok=True)
    save_index(retriever.index_, out)
    click.echo(f"index: {len(examples)} vectors of dim {retriever.index_.dim}")


@main.command("export-train")
@click.option("--train", "train_path", required=True)
@click.option("--ontology", "ontology_path", required=True)
@click.option("--bank", "bank_path", required=True)
@click.option("--index", "index_path", default=None,
              help="Reuse a saved dense index instead of re-embedding.")
@click.option("--retriever", "strategy", type=click.Choice(["dense", "bm25", "random"]),
              default="dense", show_default=True)
@click.option("--query-mode", type=click.Choice(["whole", "single"]),
              default="whole", show_default=True)
@click.option("--k", type=int, default=DEFAULT_K, show_default=True)
@click.option("--embedder", type=click.Choice(["lexical", "remote"]),
              default="lexical", show_default=True)
@click.option("--dim", type=int, default=DEFAULT_DIM, show_default=True)
@click.option("--endpoint", default=None)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--exclude-domain", "exclude", multiple=True)
@click.option("--out", required=True, help="Pairs JSONL path.")
@_exit_codes
def export_train(train_path: str, ontology_path: str, bank_path: str,
                 index_path: Optional[str], strategy: str, query_mode: str, k: int,
                 embedder: str, dim: int, endpoint: Optional[str], seed: int,
                 exclude: tuple[str, ...], out: str) -> None:
    """Export (input, target) fine-tuning pairs for the training split."""
    train, ontology = _load_corpus(train_path, ontology_path)
    examples = load_bank(bank_path)
    retriever = _fitted_retriever(strategy, examples, embedder, dim, endpoint, seed,
                                  index_path)
    pairs = export_training_pairs(
        train, retriever, ontology, k,
        query_mode=_QUERY_MODE[query_mode],
        exclude_domains=frozenset(exclude),
    )
    Path(out).parent.mkdir(parents=True, exist_ok=True)
    save_pairs(pairs, out)
    count = sum(1 for _ in open(out, "r", encoding="utf-8"))
    click.echo(f"export-train: {count} pairs -> {out}")


def _fitted_retriever(strategy: str, examples, embedder: str, dim: int,
                      endpoint: Optional[str], seed: int,
                      index_path: Optional[str] = None):
    if strategy == "dense":
        provider = _make_provider(embedder, dim, endpoint)
        if index_path:
            return DenseRetriever.from_index(load_index(index_path), examples, provider)
        return DenseRetriever(provider=provider).fit(examples)
    return make_retriever(strategy, seed=seed).fit(examples)


@main.command()
@click.option("--corpus", required=True, help="Evaluation corpus JSON.")
@click.option("--ontology", "ontology_path", required=True)
@click.option("--bank", "bank_path", required=True)
@click.option("--index", "index_path", default=None)
@click.option("--retriever", "strategy", type=click.Choice(["dense", "bm25", "random"]),
              default="dense", show_default=True)
@click.option("--query-mode", type=click.Choice(["whole", "single"]),
              default="whole", show_default=True)
@click.option("--k", type=int, default=DEFAULT_K, show_default=True)
@click.option("--embedder", type=click.Choice(["lexical", "remote"]),
              default="lexical", show_default=True)
@click.option("--dim", type=int, default=DEFAULT_DIM, show_default=True)
@click.option("--endpoint", default=None)
@click.option("--generator", type=click.Choice(["mock", "remote"]),
              default="mock", show_default=True)
@click.option("--accuracy", type=float, default=1.0, show_default=True,
              help="Mock oracle per-slot accuracy.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--domain-filter", default=None)
@click.option("--exclude-domain", "exclude", multiple=True)
@click.option("--batch-size", type=int, default=32, show_default=True)
@click.option("--workers", type=int, default=1, show_default=True)
@click.option("--out", required=True, help="Output directory.")
@_exit_codes
def predict(corpus: str, ontology_path: str, bank_path: str, index_path: Optional[str],
            strategy: str, query_mode: str, k: int, embedder: str, dim: int,
            endpoint: Optional[str], generator: str, accuracy: float, seed: int,
            domain_filter: Optional[str], exclude: tuple[str, ...], batch_size: int,
            workers: int, out: str) -> None:
    """Predict dialogue states for a corpus and log retrieval selections."""
    dialogues, ontology = _load_corpus(corpus, ontology_path)
    examples = load_bank(bank_path)
    retriever = (
        _fitted_retriever(strategy, examples, embedder, dim, endpoint, seed, index_path)
        if k > 0
        else None
    )
    config = RunConfig(generator=generator, accuracy=accuracy, seeds=(seed,),
                       endpoint=endpoint)
    gen = _make_generator(config, dialogues)
    result = predict_states(
        dialogues, ontology, retriever, gen,
        k=k, query_mode=_QUERY_MODE[query_mode], domain_filter=domain_filter,
        exclude_domains=frozenset(exclude), batch_size=batch_size, workers=workers,
    )
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    _save_predictions(result.states, out_dir / "predictions.json")
    save_retrieval_log(result.retrieval_log, out_dir / "retrieval_log.jsonl")
    click.echo(f"predict: {len(result.states)} turns -> {out_dir / 'predictions.json'}")


def _save_predictions(states: Sequence[PredictedState], path: Path) -> None:
    payload = [state.to_dict() for state in states]
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", "utf-8")


def _load_predictions(path: str) -> list[PredictedState]:
    payload = json.loads(Path(path).read_text("utf-8"))
    return [
        PredictedState(
            dialogue_id=record["dialogue_id"],
            turn_index=int(record["turn_index"]),
            entries={SlotId.parse(k): v for k, v in record["state"].items()},
        )
        for record in payload
    ]


@main.command("eval")
@click.option("--predictions", required=True, help="predictions.json path.")
@click.option("--corpus", required=True, help="Gold corpus JSON.")
@click.option("--ontology", "ontology_path", required=True)
@click.option("--domain-filter", default=None,
              help="Restrict the compared slot set to one domain.")
@click.option("--out", default=None, help="Report JSON path (default: stdout only).")
@_exit_codes
def eval_command(predictions: str, corpus: str, ontology_path: str,
                 domain_filter: Optional[str], out: Optional[str]) -> None:
    """Score predictions against gold states (joint goal accuracy)."""
    dialogues, _ = _load_corpus(corpus, ontology_path)
    preds = _load_predictions(predictions)
    report = joint_goal_accuracy(preds, dialogues, slot_scope=domain_filter)
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        save_report(report, out)
    click.echo(f"jga: {report.jga:.4f} over {report.turn_count} turns")


@main.command()
@click.option("--log", "log_path", required=True, help="retrieval_log.jsonl path.")
@click.option("--axis", type=click.Choice(["domain", "slot"]), default="domain",
              show_default=True)
@click.option("--out", required=True, help="Output path prefix (.json/.csv added).")
@_exit_codes
def analyze(log_path: str, axis: str, out: str) -> None:
    """Tally retrieved example domains/slots into a selection matrix."""
    logs = load_retrieval_log(log_path)
    if not logs:
        raise DataError(f"retrieval log {log_path} is empty")
    matrix, summary = selection_analysis(logs, axis=axis)
    Path(out).parent.mkdir(parents=True, exist_ok=True)
    Path(f"{out}.json").write_text(
        json.dumps({"matrix": matrix.to_dict(), "summary": summary.to_dict()},
                   indent=2, sort_keys=True) + "\n",
        "utf-8",
    )
    matrix.to_csv(f"{out}.csv")
    click.echo(
        f"analyze[{axis}]: {summary.retrieved_total} retrievals, "
        f"same-slot {summary.same_slot_fraction:.3f}, "
        f"same-domain {summary.same_domain_fraction:.3f}"
    )


@main.command()
@click.option("--config", "config_path", default=None, help="Config file path.")
@click.option("--corpus", default=None)
@click.option("--ontology", "ontology_path", default=None)
@click.option("--mode", type=click.Choice(["zero_shot", "cross_domain_few_shot",
                                           "multi_domain_few_shot", "full_shot"]),
              default=None)
@click.option("--target-domain", default=None)
@click.option("--fraction", type=float, default=None)
@click.option("--retriever", "strategy", type=click.Choice(["dense", "bm25", "random"]),
              default=None)
@click.option("--query-mode", type=click.Choice(["whole", "single"]), default=None)
@click.option("--k", type=int, default=None)
@click.option("--embedder", type=click.Choice(["lexical", "remote"]), default=None)
@click.option("--dim", type=int, default=None)
@click.option("--endpoint", default=None)
@click.option("--generator", type=click.Choice(["mock", "remote"]), default=None)
@click.option("--accuracy", type=float, default=None)
@click.option("--seed", "seeds", type=int, multiple=True)
@click.option("--out", default=None)
@click.option("--eval-corpus", default=None)
@click.option("--domain-filter", default=None)
@click.option("--batch-size", type=int, default=None)
@click.option("--workers", type=int, default=None)
@_exit_codes
def run(config_path: Optional[str], **flags) -> None:
    """Run the full pipeline once per seed and write a manifest."""
    values: dict = {}
    if config_path:
        values.update(load_config_file(config_path))
    renames = {"ontology_path": "ontology", "strategy": "retriever"}
    for key, value in flags.items():
        key = renames.get(key, key)
        if value is None or (key == "seeds" and not value):
            continue
        values[key] = value
    try:
        config = RunConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    if not config.corpus or not config.ontology:
        raise ConfigError("run needs --corpus and --ontology (flag or config file)")
    report = run_experiment(config)
    click.echo(
        f"run: jga mean {report.mean:.4f} std {report.std:.4f} "
        f"over seeds {list(config.seeds)}"
    )


def run_experiment(config: RunConfig) -> EvalReport:
    """Execute split -> bank -> index -> export -> predict -> eval -> analyze
    for every seed, writing artifacts and a manifest under `config.out`."""
    if not config.seeds:
        raise ConfigError("run needs at least one seed")
    out_dir = Path(config.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    with _stage("ingest"):
        dialogues, ontology = _load_corpus(config.corpus, config.ontology)
        eval_pool: Optional[list[Dialogue]] = None
        if config.eval_corpus:
            eval_pool, _ = _load_corpus(config.eval_corpus, config.ontology)

    domain_filter = config.domain_filter
    if domain_filter is None and config.mode in ("zero_shot", "cross_domain_few_shot"):
        domain_filter = config.target_domain

    reports: list[EvalReport] = []
    artifact_hashes: dict[str, str] = {}
    for seed in config.seeds:
        seed_dir = out_dir / f"seed_{seed}"
        seed_dir.mkdir(parents=True, exist_ok=True)
        report = _run_single_seed(
            config, dialogues, ontology, eval_pool, domain_filter, seed, seed_dir
        )
        reports.append(report)
        for artifact in sorted(seed_dir.iterdir()):
            artifact_hashes[f"seed_{seed}/{artifact.name}"] = _sha256_file(artifact)

    combined = merge_reports(reports)
    save_report(combined, out_dir / "report.json")
    artifact_hashes["report.json"] = _sha256_file(out_dir / "report.json")
    manifest = {
        "tool_version": __version__,
        "config": config.to_dict(),
        "inputs": {
            "corpus_sha256": _sha256_file(config.corpus),
            "ontology_sha256": _sha256_file(config.ontology),
            **(
                {"eval_corpus_sha256": _sha256_file(config.eval_corpus)}
                if config.eval_corpus
                else {}
            ),
        },
        "artifacts": artifact_hashes,
    }
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", "utf-8"
    )
    return combined


def _run_single_seed(
    config: RunConfig,
    dialogues: list[Dialogue],
    ontology: Ontology,
    eval_pool: Optional[list[Dialogue]],
    domain_filter: Optional[str],
    seed: int,
    seed_dir: Path,
) -> EvalReport:
    with _stage("split"):
        spec = SplitSpec(
            mode=config.mode,
            target_domain=config.target_domain,
            fraction=config.fraction,
            seed=seed,
        )
        train, info = make_split(dialogues, spec)
    (seed_dir / "split.json").write_text(
        json.dumps(info.to_dict(), indent=2, sort_keys=True) + "\n", "utf-8"
    )
    (seed_dir / "train.json").write_bytes(dialogues_to_json(train))

    with _stage("bank"):
        examples = build_bank(train)
        save_bank(examples, seed_dir / "bank.jsonl")

    exclude = (
        frozenset({config.target_domain})
        if config.mode == "zero_shot" and config.target_domain
        else frozenset()
    )
    retriever = None
    if config.k > 0:
        with _stage("index"):
            retriever = _fitted_retriever(
                config.retriever, examples, config.embedder, config.dim,
                config.endpoint, seed,
            )
            if isinstance(retriever, DenseRetriever):
                save_index(retriever.index_, seed_dir / "index.bin")

    with _stage("export-train"):
        pairs = export_training_pairs(
            train, retriever, ontology, config.k,
            query_mode=_QUERY_MODE[config.query_mode],
            exclude_domains=exclude,
        )
        save_pairs(pairs, seed_dir / "pairs.jsonl")

    if eval_pool is not None:
        eval_dialogues = eval_pool
    else:
        eval_dialogues = _default_eval_pool(config, dialogues, info)

    with _stage("predict"):
        gen_config = RunConfig(
            generator=config.generator, accuracy=config.accuracy,
            seeds=(seed,), endpoint=config.endpoint,
        )
        generator = _make_generator(gen_config, eval_dialogues)
        result = predict_states(
            eval_dialogues, ontology, retriever, generator,
            k=config.k, query_mode=_QUERY_MODE[config.query_mode],
            domain_filter=domain_filter, exclude_domains=exclude,
            batch_size=config.batch_size, workers=config.workers,
        )
        _save_predictions(result.states, seed_dir / "predictions.json")
        save_retrieval_log(result.retrieval_log, seed_dir / "retrieval_log.jsonl")

    with _stage("eval"):
        report = joint_goal_accuracy(result.states, eval_dialogues,
                                     slot_scope=domain_filter)
        save_report(report, seed_dir / "report.json")

    if result.retrieval_log and any(e.retrieved_slots for e in result.retrieval_log):
        with _stage("analyze"):
            _write_selection_artifacts(result.retrieval_log, seed_dir)
    return report


def _write_selection_artifacts(retrieval_log, seed_dir: Path) -> None:
    for axis in ("domain", "slot"):
        matrix, summary = selection_analysis(retrieval_log, axis=axis)
        (seed_dir / f"selection_{axis}.json").write_text(
            json.dumps({"matrix": matrix.to_dict(),
                        "summary": summary.to_dict()},
                       indent=2, sort_keys=True) + "\n",
            "utf-8",
        )
        matrix.to_csv(seed_dir / f"selection_{axis}.csv")


def _default_eval_pool(
    config: RunConfig, dialogues: list[Dialogue], info
) -> list[Dialogue]:
    """Held-out dialogues when the split leaves any, otherwise the corpus."""
    heldout = set(info.heldout_ids)
    if config.mode in ("zero_shot", "cross_domain_few_shot"):
        pool = [
            d for d in dialogues
            if config.target_domain in d.domains and d.id in heldout
        ]
        if not pool:
            pool = [d for d in dialogues if config.target_domain in d.domains]
        return pool
    pool = [d for d in dialogues if d.id in heldout]
    return pool if pool else list(dialogues)


if __name__ == "__main__":
    main()
