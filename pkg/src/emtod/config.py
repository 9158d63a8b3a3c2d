"""Run configuration: one JSON document covering every stage, strictly validated."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

from .contextualizer import EncoderConfig
from .corpus.generator import CorpusConfig
from .model import ModelConfig
from .scopeit import ScopeItConfig
from .errors import ConfigError
from .trainer import TrainConfig


@dataclass
class PathsConfig:
    data_dir: str = "data"
    scopeit_checkpoint: str = "scopeit.ckpt"
    checkpoint: str = "emtod.ckpt"
    out_dir: str = "out"

    def validate(self) -> None:
        for f in dataclasses.fields(self):
            if not getattr(self, f.name):
                raise ConfigError(f"paths.{f.name} must be a non-empty path")


# One line per field; shown by every subcommand's --help for the sections it reads.
FIELD_HELP: dict[str, dict[str, str]] = {
    "corpus": {
        "n_dialogues": "number of synthetic dialogues generated",
        "mean_user_utterances_per_dialogue": "mean user turns per dialogue",
        "ambiguity_rate": "fraction of user turns whose intent depends on the prior agent question",
        "distractor_rate": "fraction of user sentences unrelated to the assistant",
        "multi_intent_rate": "target fraction of user turns carrying two intents",
        "final_agent_rate": "probability that a dialogue ends with an agent turn",
        "augmentation": "slot axes varied by augmentation",
        "seed": "corpus generation seed",
        "split": "train/val/test fractions",
    },
    "scopeit": {
        "d_e": "ScopeIt word embedding size",
        "d_h": "ScopeIt word-level GRU size per direction",
        "d_c": "ScopeIt sentence-level GRU size per direction",
        "max_sentence_len": "tokens kept per sentence",
        "lr": "ScopeIt Adam learning rate",
        "batch_size": "emails per ScopeIt batch",
        "max_epochs": "ScopeIt epoch limit",
        "patience": "ScopeIt epochs without validation F1 gain before stopping",
        "seed": "ScopeIt initialization and shuffle seed",
        "tau": "relevance threshold used when ScopeIt is evaluated",
    },
    "train": {
        "lr": "Adam learning rate",
        "batch_size": "prediction points per batch",
        "max_epochs": "epoch limit",
        "patience": "epochs without validation micro-F1 gain before stopping",
        "seed": "initialization and shuffle seed",
        "freeze": "parameter namespace prefixes excluded from updates",
    },
    "model": {
        "aggregator": "concat, attention or cross_attention",
        "context_mode": "dual, turn_only or dialog_only",
        "swap_directions": "exchange the two attention directions",
        "user_summary": "replace user turns by their ScopeIt-kept sentences",
        "agent_summary": "summarize, truncate or none",
        "tau": "ScopeIt keep threshold",
        "trunc_len": "tokens kept when agent_summary is truncate",
        "dialog": "dialogue encoder (fields below)",
        "turn": "turn encoder (fields below)",
    },
    "encoder": {
        "vocab_size": "set from the vocabulary; any value here is overwritten",
        "d_e": "token embedding size",
        "d_k": "encoder output size (must match across encoders in dual mode)",
        "depth": "transformer blocks",
        "heads": "attention heads",
        "d_ff": "feed-forward hidden size",
        "max_len": "maximum serialized tokens",
        "n_segments": "turn-recency buckets",
        "architecture": "self-attention or recurrent",
    },
    "paths": {
        "data_dir": "directory holding train/val/test JSONL and vocab.txt",
        "scopeit_checkpoint": "ScopeIt checkpoint file",
        "checkpoint": "intent model checkpoint file",
        "out_dir": "directory for logs and reports",
    },
}


def describe_sections(sections: tuple[str, ...]) -> str:
    defaults = RunConfig().to_dict()
    lines = ["config fields read (JSON sections; flags override the file):"]
    for sec in sections:
        lines.append(f"  [{sec}]")
        if sec == "encoder":
            values = defaults["model"]["dialog"]
            label = "model.dialog / model.turn"
            lines[-1] = f"  [{label}]"
        else:
            values = defaults[sec]
        for name, text in FIELD_HELP[sec].items():
            shown = "" if isinstance(values.get(name), dict) else f" (default {json.dumps(values.get(name))})"
            lines.append(f"    {name}: {text}{shown}")
    return "\n".join(lines)


def _strict(cls, data: dict, where: str, nested: dict | None = None):
    if not isinstance(data, dict):
        raise ConfigError(f"{where} must be a JSON object")
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(unknown)}")
    kwargs = dict(data)
    for key, builder in (nested or {}).items():
        if key in kwargs:
            kwargs[key] = builder(kwargs[key], f"{where}.{key}")
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def _encoder(data, where):
    return _strict(EncoderConfig, data, where)


def model_config_from_dict(data: dict, where: str = "model") -> ModelConfig:
    return _strict(ModelConfig, data, where, {"dialog": _encoder, "turn": _encoder})


def train_config_from_dict(data: dict, where: str = "train") -> TrainConfig:
    data = dict(data)
    if "freeze" in data:
        data["freeze"] = tuple(data["freeze"])
    return _strict(TrainConfig, data, where, {"model": model_config_from_dict})


@dataclass
class RunConfig:
    corpus: CorpusConfig = field(default_factory=CorpusConfig)
    scopeit: ScopeItConfig = field(default_factory=ScopeItConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    paths: PathsConfig = field(default_factory=PathsConfig)

    @property
    def model(self) -> ModelConfig:
        return self.train.model

    def validate(self) -> None:
        checks = [("corpus", self.corpus.validate), ("train", self.train.validate), ("paths", self.paths.validate)]
        for where, fn in checks:
            try:
                fn()
            except ConfigError:
                raise
            except ValueError as exc:
                raise ConfigError(f"{where}: {exc}") from exc
        for name in ("d_e", "d_h", "d_c", "max_sentence_len", "batch_size"):
            if getattr(self.scopeit, name) <= 0:
                raise ConfigError(f"scopeit.{name} must be positive")
        for name in ("max_epochs", "patience"):
            if getattr(self.scopeit, name) < 0:
                raise ConfigError(f"scopeit.{name} must be non-negative")
        if not 0.0 <= self.scopeit.tau <= 1.0:
            raise ConfigError("scopeit.tau must be in [0, 1]")

    def to_dict(self) -> dict:
        train = self.train.to_dict()
        model = train.pop("model")
        return {
            "corpus": self.corpus.to_dict(),
            "scopeit": dataclasses.asdict(self.scopeit),
            "train": train,
            "model": model,
            "paths": dataclasses.asdict(self.paths),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        if not isinstance(data, dict):
            raise ConfigError("config root must be a JSON object")
        sections = {"corpus", "scopeit", "train", "model", "paths"}
        unknown = sorted(set(data) - sections)
        if unknown:
            raise ConfigError(f"unknown top-level key(s): {', '.join(unknown)}")
        corpus = _strict(CorpusConfig, data.get("corpus", {}), "corpus")
        scopeit = _strict(ScopeItConfig, data.get("scopeit", {}), "scopeit")
        train = train_config_from_dict(data.get("train", {}))
        if "model" in data:
            train.model = model_config_from_dict(data["model"])
        paths = _strict(PathsConfig, data.get("paths", {}), "paths")
        return cls(corpus=corpus, scopeit=scopeit, train=train, paths=paths)

    @classmethod
    def load(cls, path: str | Path) -> "RunConfig":
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from exc
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
        return cls.from_dict(data)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)
