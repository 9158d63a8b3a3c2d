"""Evaluation harness: metrics, ablation grids over seeds, and latency."""

from __future__ import annotations

import copy
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus.types import Dialogue, Turn
from .corpus.vocab import Vocab
from .metrics import (
    ACCURACY_DEFINITION,
    COLUMN_LABELS,
    TABLE_COLUMNS,
    MetricsReport,
    compute_metrics,
    format_table,
)
from .model import Example, ModelConfig
from .scopeit import NAMESPACE as SCOPEIT_NS
from .scopeit import ScopeIt
from .trainer import IntentModel, TrainConfig, evaluate_examples, train_examples

__all__ = [
    "ACCURACY_DEFINITION",
    "COLUMN_LABELS",
    "TABLE_COLUMNS",
    "MetricsReport",
    "compute_metrics",
    "format_table",
    "AblationCell",
    "AblationResult",
    "GridRow",
    "LatencyEntry",
    "LatencyReport",
    "benchmark_latency",
    "grid_from_json",
    "grid_to_json",
    "latency_sample",
    "run_ablation",
    "ladder_grid",
]

METRIC_KEYS = TABLE_COLUMNS + ("micro_recall", "macro_recall")


@dataclass
class GridRow:
    name: str
    config: TrainConfig


def _with_model(base: TrainConfig, **model_overrides) -> TrainConfig:
    cfg = copy.deepcopy(base)
    for k, v in model_overrides.items():
        setattr(cfg.model, k, v)
    return cfg


def ladder_grid(base: TrainConfig | None = None) -> list[GridRow]:
    """The ablation ladder: encoders, then user and agent summaries, then aggregators."""
    base = base or TrainConfig()
    rows = [
        ("turn", dict(context_mode="turn_only", user_summary=False, agent_summary="none")),
        ("turn+scopeit", dict(context_mode="turn_only", user_summary=True, agent_summary="none")),
        ("dialog", dict(context_mode="dialog_only", user_summary=False, agent_summary="none")),
        ("dialog+scopeit", dict(context_mode="dialog_only", user_summary=True, agent_summary="none")),
        ("dialog+scopeit+trunc", dict(context_mode="dialog_only", user_summary=True, agent_summary="truncate")),
        ("dialog+scopeit+summar", dict(context_mode="dialog_only", user_summary=True, agent_summary="summarize")),
    ]
    for agg in ("concat", "attention", "cross_attention"):
        rows.append((f"dual+{agg}", dict(context_mode="dual", aggregator=agg, user_summary=True,
                                         agent_summary="summarize")))
    return [GridRow(name, _with_model(base, **kw)) for name, kw in rows]


def grid_to_json(grid: list[GridRow]) -> str:
    return json.dumps({"rows": [{"name": r.name, "config": r.config.to_dict()} for r in grid]}, indent=2)


def grid_from_json(text: str, base: TrainConfig | None = None) -> list[GridRow]:
    """Rows are ``{"name", "config"}`` (full train config) or ``{"name", "model"}`` (model overrides)."""
    from .config import train_config_from_dict

    doc = json.loads(text)
    rows = doc["rows"] if isinstance(doc, dict) else doc
    if not rows:
        raise ValueError("ablation grid has no rows")
    base = base or TrainConfig()
    out = []
    for i, row in enumerate(rows):
        if "name" not in row:
            raise ValueError(f"grid row {i} has no name")
        if "config" in row:
            cfg = train_config_from_dict(row["config"])
        else:
            cfg = _with_model(base)
            cfg.model = ModelConfig.from_dict({**base.model.to_dict(), **row.get("model", {})})
        cfg.validate()
        out.append(GridRow(row["name"], cfg))
    return out


# ---------------------------------------------------------------------------
# ablation
# ---------------------------------------------------------------------------


@dataclass
class AblationCell:
    name: str
    seeds: list[int]
    reports: list[MetricsReport]
    ambiguous: list[MetricsReport | None]
    mean: dict = field(default_factory=dict)
    mean_ambiguous: dict | None = None

    def to_dict(self) -> dict:
        return {"name": self.name, "seeds": self.seeds, "mean": self.mean, "mean_ambiguous": self.mean_ambiguous,
                "per_seed": [r.to_dict() for r in self.reports],
                "per_seed_ambiguous": [r.to_dict() if r else None for r in self.ambiguous]}


@dataclass
class AblationResult:
    cells: list[AblationCell]

    def cell(self, name: str) -> AblationCell:
        for c in self.cells:
            if c.name == name:
                return c
        raise KeyError(name)

    def table(self) -> str:
        return format_table([(c.name, c.mean) for c in self.cells])

    def to_json(self) -> str:
        return json.dumps({"accuracy_definition": ACCURACY_DEFINITION, "columns": list(TABLE_COLUMNS),
                           "cells": [c.to_dict() for c in self.cells]}, indent=2, sort_keys=True)


def mean_metrics(reports: list[MetricsReport]) -> dict:
    return {k: float(np.mean([getattr(r, k) for r in reports])) for k in METRIC_KEYS}


def _feature_key(cfg: ModelConfig) -> tuple:
    return (cfg.user_summary, cfg.agent_summary, cfg.tau, cfg.trunc_len, cfg.dialog.max_len, cfg.turn.max_len)


class ExampleCache:
    """Featurized splits keyed by the settings that change featurization."""

    def __init__(self, vocab: Vocab, scopeit: ScopeIt | None, train, val, test):
        self.vocab = vocab
        self.scopeit = scopeit
        self.splits = {"train": train, "val": val, "test": test}
        self._cache: dict[tuple, dict[str, list[Example]]] = {}

    def get(self, model: IntentModel) -> dict[str, list[Example]]:
        key = _feature_key(model.config)
        if key not in self._cache:
            self._cache[key] = {name: model.featurizer.examples(d) if d else [] for name, d in self.splits.items()}
        return self._cache[key]


def run_ablation(grid: list[GridRow], train: list[Dialogue], val: list[Dialogue], test: list[Dialogue],
                 vocab: Vocab, scopeit: ScopeIt | None, seeds=(1, 2, 3), log_fn=None) -> AblationResult:
    """Train and test every row once per seed; cells hold the per-seed mean."""
    if not grid:
        raise ValueError("ablation grid is empty")
    cache = ExampleCache(vocab, scopeit, train, val, test)
    cells = []
    for row in grid:
        if row.config.model.user_summary and scopeit is None:
            raise ValueError(f"row {row.name!r} needs a ScopeIt model")
        reports, amb = [], []
        for seed in seeds:
            cfg = copy.deepcopy(row.config)
            cfg.seed = int(seed)
            model = IntentModel(vocab, cfg.model, scopeit, seed=cfg.seed)
            ex = cache.get(model)
            train_examples(ex["train"], ex["val"], model, cfg)
            ev = evaluate_examples(model, ex["test"])
            reports.append(ev["overall"])
            amb.append(ev["ambiguous"])
            if log_fn:
                log_fn({"row": row.name, "seed": int(seed), "micro_f1": ev["overall"].micro_f1})
        cell = AblationCell(row.name, [int(s) for s in seeds], reports, amb, mean_metrics(reports))
        if all(a is not None for a in amb):
            cell.mean_ambiguous = mean_metrics(amb)
        cells.append(cell)
    return AblationResult(cells)


# ---------------------------------------------------------------------------
# latency
# ---------------------------------------------------------------------------


@dataclass
class LatencyEntry:
    name: str
    runs: list[float]
    params: dict[str, int]

    @property
    def mean(self) -> float:
        return float(sum(self.runs) / len(self.runs))

    def to_dict(self) -> dict:
        return {"name": self.name, "mean_seconds": self.mean, "runs_seconds": self.runs, "params": self.params}


@dataclass
class LatencyReport:
    entries: list[LatencyEntry]
    batch_size: int = 1

    def entry(self, name: str) -> LatencyEntry:
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)

    def to_json(self) -> str:
        return json.dumps({"batch_size": self.batch_size, "entries": [e.to_dict() for e in self.entries]}, indent=2)

    def table(self) -> str:
        width = max(len("config"), *(len(e.name) for e in self.entries))
        lines = [f"{'config'.ljust(width)}  {'mean ms':>9}  {'params':>9}"]
        for e in self.entries:
            lines.append(f"{e.name.ljust(width)}  {e.mean * 1e3:9.3f}  {e.params['total']:9d}")
        return "\n".join(lines)


def component_params(model: IntentModel) -> dict[str, int]:
    """Parameter counts per component; ``total`` is their sum."""
    store = model.store
    counts = {
        "dialog_encoder": store.num_params("dialog"),
        "turn_encoder": store.num_params("turn"),
        "aggregator": 0,  # parameter-free attention
        "head": store.num_params("head"),
        "scopeit": model.scopeit.store.num_params(SCOPEIT_NS) if model.scopeit else 0,
    }
    counts["total"] = sum(counts.values())
    return counts


def latency_sample(dialogues: list[Dialogue]) -> list[Turn]:
    """The longest user-final prefix in ``dialogues`` (first wins ties)."""
    best = max(dialogues, key=lambda d: sum(len(t.text) for t in d.prefix(d.user_turn_indices()[-1])))
    return best.prefix(best.user_turn_indices()[-1])


def benchmark_latency(models: list[tuple[str, IntentModel]], prefix: list[Turn], warmup: int = 2,
                      runs: int = 10) -> LatencyReport:
    """Wall-clock of tokenization, summarization and a batch-1 forward pass."""
    entries = []
    for name, model in models:
        for _ in range(warmup):
            model.predict(prefix)
        times = []
        for _ in range(runs):
            t0 = time.perf_counter()
            model.predict(prefix)
            times.append(time.perf_counter() - t0)
        entries.append(LatencyEntry(name, times, component_params(model)))
    return LatencyReport(entries)


def write_json(text: str, path: str | Path) -> None:
    Path(path).write_text(text + "\n", encoding="utf-8")
