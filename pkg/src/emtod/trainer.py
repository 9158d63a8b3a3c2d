"""End-to-end training, checkpointing and inference for the intent model."""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .agent import ActionTable
from .aggregator import IntentPrediction, decide
from .corpus.types import Dialogue, Turn, USER
from .corpus.vocab import Vocab
from .errors import ConfigError
from .metrics import MetricsReport, compute_metrics
from .schema import N_INTENTS
from .model import EMToDModel, Example, Featurizer, ModelConfig
from .nn import (
    Checkpoint,
    CheckpointVersionError,
    OptimizerState,
    adam_step,
    config_digest,
    load_checkpoint,
    save_checkpoint,
    sigmoid,
    sigmoid_bce,
)
from .nn.core import in_namespace
from .scopeit import NAMESPACE as SCOPEIT_NS
from .scopeit import ScopeIt, ScopeItConfig

log = logging.getLogger(__name__)

# Batches are formed inside windows of this many batches sorted by length,
# which keeps padding low while the window and batch order stay shuffled.
BUCKET_WINDOW = 50
EVAL_BATCH = 64


@dataclass
class TrainConfig:
    lr: float = 1e-3
    batch_size: int = 32
    max_epochs: int = 30
    patience: int = 3
    seed: int = 0
    freeze: tuple[str, ...] = ()
    model: ModelConfig = field(default_factory=ModelConfig)

    def validate(self) -> None:
        if not self.lr > 0:
            raise ValueError("lr must be positive")
        if self.batch_size < 1:
            raise ValueError("batch_size must be positive")
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be positive")
        if self.patience < 0:
            raise ValueError("patience must be non-negative")
        self.model.validate()

    def to_dict(self) -> dict:
        d = asdict(self)
        d["freeze"] = list(self.freeze)
        d["model"] = self.model.to_dict()
        return d


def check_freeze(freeze, names: list[str]) -> None:
    for prefix in freeze:
        if not any(in_namespace(n, prefix) for n in names):
            namespaces = sorted({n.split(".", 1)[0] for n in names})
            raise ConfigError(f"freeze prefix {prefix!r} matches no parameters; namespaces are {namespaces}")


def length_batches(lengths: list[int], batch_size: int, rng: np.random.Generator) -> list[np.ndarray]:
    order = rng.permutation(len(lengths))
    batches = []
    window = batch_size * BUCKET_WINDOW
    for start in range(0, len(order), window):
        chunk = order[start : start + window]
        chunk = chunk[np.argsort([lengths[i] for i in chunk], kind="stable")]
        batches.extend(chunk[i : i + batch_size] for i in range(0, len(chunk), batch_size))
    return [batches[i] for i in rng.permutation(len(batches))]


def _example_length(e: Example) -> int:
    return len(e.dialog_ids) + len(e.turn_ids)


# ---------------------------------------------------------------------------
# trained bundle: model + featurizer + optional summarizer
# ---------------------------------------------------------------------------


class IntentModel:
    """A model together with everything needed to featurize raw dialogues."""

    def __init__(self, vocab: Vocab, config: ModelConfig, scopeit: ScopeIt | None = None,
                 table: ActionTable | None = None, dtype=np.float32, seed: int = 0):
        self.vocab = vocab
        self.config = config
        self.scopeit = scopeit if config.user_summary else None
        self.net = EMToDModel(len(vocab), config, dtype=dtype, seed=seed)
        self.featurizer = Featurizer(vocab, config, self.scopeit, table)

    @property
    def store(self):
        return self.net.store

    def digest_config(self) -> dict:
        return {
            "model": self.config.to_dict(),
            "vocab_size": len(self.vocab),
            "scopeit": self.scopeit.model_config() if self.scopeit else None,
        }

    def probabilities(self, examples: list[Example], batch_size: int = EVAL_BATCH) -> np.ndarray:
        out = np.zeros((len(examples), N_INTENTS), dtype=np.float64)
        order = np.argsort([_example_length(e) for e in examples], kind="stable")
        for start in range(0, len(order), batch_size):
            idx = order[start : start + batch_size]
            batch = self.featurizer.batch([examples[i] for i in idx], self.store.dtype)
            logits, _ = self.net.forward(batch)
            out[idx] = sigmoid(logits)
        return out

    def evaluate(self, examples: list[Example]) -> dict:
        return evaluate_examples(self, examples)

    def predict(self, prefix: list[Turn]) -> IntentPrediction:
        if not prefix or prefix[-1].role != USER:
            raise ValueError("dialogue prefix must end with a user turn")
        ex = self.featurizer.example(self.featurizer.context(prefix))
        p = self.probabilities([ex])[0]
        return IntentPrediction(probabilities=p, predicted=decide(p))

    # -- persistence ---------------------------------------------------------

    def checkpoint(self, extra_metadata: dict | None = None) -> Checkpoint:
        params = {n: self.store[n] for n in self.store.names()}
        meta = {"model_config": self.config.to_dict(), "vocab": self.vocab.tokens,
                "action_table": json.loads(self.featurizer.table.to_json())}
        if self.scopeit is not None:
            params.update({n: self.scopeit.store[n] for n in self.scopeit.store.names()})
            meta["scopeit_config"] = asdict(self.scopeit.config)
        meta.update(extra_metadata or {})
        params = {n: v.astype(np.float32) for n, v in params.items()}
        return Checkpoint(params=params, config_digest=config_digest(self.digest_config()), metadata=meta)

    def save(self, path: str | Path, extra_metadata: dict | None = None) -> None:
        save_checkpoint(path, self.checkpoint(extra_metadata))

    @classmethod
    def from_checkpoint(cls, ckpt: Checkpoint, dtype=np.float32) -> "IntentModel":
        meta = ckpt.metadata
        vocab = Vocab(meta["vocab"])
        config = ModelConfig.from_dict(meta["model_config"])
        scopeit = None
        if "scopeit_config" in meta:
            scopeit = ScopeIt(vocab, ScopeItConfig(**meta["scopeit_config"]), dtype=dtype)
            Checkpoint({n: v for n, v in ckpt.params.items() if in_namespace(n, SCOPEIT_NS)},
                       ckpt.config_digest).apply_to(scopeit.store)
        table = ActionTable.from_json(json.dumps(meta["action_table"])) if "action_table" in meta else None
        model = cls(vocab, config, scopeit, table, dtype=dtype)
        if config_digest(model.digest_config()) != ckpt.config_digest:
            raise CheckpointVersionError("checkpoint config digest does not match the configuration it carries")
        Checkpoint({n: v for n, v in ckpt.params.items() if not in_namespace(n, SCOPEIT_NS)},
                   ckpt.config_digest).apply_to(model.store)
        return model

    @classmethod
    def load(cls, path: str | Path, dtype=np.float32) -> "IntentModel":
        return cls.from_checkpoint(load_checkpoint(path), dtype=dtype)


def evaluate_examples(model: IntentModel, examples: list[Example]) -> dict:
    """Metrics overall and on the ambiguous-turn subset."""
    if not examples:
        raise ValueError("no examples to evaluate")
    probs = model.probabilities(examples)
    pred = decide(probs)
    gold = np.array([e.labels for e in examples])
    amb = np.array([e.ambiguous for e in examples])
    overall = compute_metrics(pred, gold)
    out = {"overall": overall, "n_ambiguous": int(amb.sum())}
    out["ambiguous"] = compute_metrics(pred[amb], gold[amb]) if amb.any() else None
    return out


def summary_row(report: MetricsReport) -> dict:
    return {k: getattr(report, k) for k in ("micro_f1", "macro_f1", "micro_precision", "macro_precision", "accuracy")}


# ---------------------------------------------------------------------------
# training
# ---------------------------------------------------------------------------


@dataclass
class TrainResult:
    model: IntentModel
    history: list[dict]
    best_epoch: int

    def checkpoint(self) -> Checkpoint:
        return self.model.checkpoint({"best_epoch": self.best_epoch})


def train_examples(train: list[Example], val: list[Example], model: IntentModel, config: TrainConfig,
                   log_fn=None) -> TrainResult:
    """Train ``model`` in place on pre-featurized examples."""
    config.validate()
    if not train:
        raise ValueError("training corpus has no prediction points")
    check_freeze(config.freeze, model.store.names())
    store = model.store
    state = OptimizerState(lr=config.lr)
    rng = np.random.default_rng([config.seed, 29])
    lengths = [_example_length(e) for e in train]
    history: list[dict] = []
    best_f1, best_epoch, best = -1.0, 0, store.snapshot()
    stale = 0
    for epoch in range(1, config.max_epochs + 1):
        total, count = 0.0, 0
        for idx in length_batches(lengths, config.batch_size, rng):
            batch = model.featurizer.batch([train[i] for i in idx], store.dtype)
            logits, cache = model.net.forward(batch)
            loss, _, dlogits = sigmoid_bce(logits, batch.labels)
            model.net.backward(dlogits, cache)
            adam_step(store, state, config.freeze)
            total += loss * len(idx)
            count += len(idx)
        row = {"epoch": epoch, "train_loss": total / count}
        if val:
            ev = evaluate_examples(model, val)
            row["val"] = summary_row(ev["overall"])
            if ev["ambiguous"] is not None:
                row["val_ambiguous"] = summary_row(ev["ambiguous"])
            monitored = ev["overall"].micro_f1
        else:
            monitored = -row["train_loss"]
        history.append(row)
        if log_fn:
            log_fn(row)
        log.info("epoch %d loss %.4f monitored %.4f", epoch, row["train_loss"], monitored)
        if monitored > best_f1:
            best_f1, best_epoch, best = monitored, epoch, store.snapshot()
            stale = 0
        else:
            stale += 1
        if stale >= config.patience:
            break
    for name, value in best.items():
        store.set(name, value)
    return TrainResult(model=model, history=history, best_epoch=best_epoch)


def train(train_dialogues: list[Dialogue], val_dialogues: list[Dialogue], vocab: Vocab, config: TrainConfig,
          scopeit: ScopeIt | None = None, log_fn=None, dtype=np.float32) -> TrainResult:
    config.validate()
    if not train_dialogues:
        raise ValueError("training corpus is empty")
    model = IntentModel(vocab, config.model, scopeit, dtype=dtype, seed=config.seed)
    check_freeze(config.freeze, model.store.names())
    train_ex = model.featurizer.examples(train_dialogues)
    val_ex = model.featurizer.examples(val_dialogues) if val_dialogues else []
    return train_examples(train_ex, val_ex, model, config, log_fn)


def write_log(history: list[dict], path: str | Path) -> None:
    Path(path).write_text("".join(json.dumps(r, sort_keys=True) + "\n" for r in history), encoding="utf-8")


def predict(checkpoint: Checkpoint | IntentModel | str | Path, prefix: list[Turn]) -> IntentPrediction:
    if isinstance(checkpoint, IntentModel):
        model = checkpoint
    elif isinstance(checkpoint, Checkpoint):
        model = IntentModel.from_checkpoint(checkpoint)
    else:
        model = IntentModel.load(checkpoint)
    return model.predict(prefix)
