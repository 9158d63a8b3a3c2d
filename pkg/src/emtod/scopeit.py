"""Extractive relevance model for user emails.

Words are embedded and run through forward and reverse GRUs inside each
sentence; the sentence vector is ``[h_fwd at last word; h_bwd at first word]``.
A bidirectional GRU across the sentence vectors of one email contextualizes
them, a linear projection maps each to a logit, and a sigmoid gives the
probability that the sentence is about the assistant's task.
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .corpus.types import Dialogue, Sentence, Turn
from .corpus.vocab import Vocab, tokenize
from .nn import (
    BiGRU,
    Checkpoint,
    Embedding,
    Linear,
    OptimizerState,
    ParamStore,
    adam_step,
    config_digest,
    load_checkpoint,
    save_checkpoint,
    sigmoid,
    sigmoid_bce,
)

log = logging.getLogger(__name__)

NAMESPACE = "scopeit"
DEFAULT_TAU = 0.5


@dataclass
class ScopeItConfig:
    d_e: int = 64
    d_h: int = 32
    d_c: int = 32
    max_sentence_len: int = 48
    lr: float = 2e-3
    batch_size: int = 32
    max_epochs: int = 8
    patience: int = 2
    seed: int = 0
    tau: float = DEFAULT_TAU

    def model_dict(self, vocab_size: int) -> dict:
        return {"kind": "scopeit", "vocab_size": vocab_size, "d_e": self.d_e, "d_h": self.d_h,
                "d_c": self.d_c, "max_sentence_len": self.max_sentence_len}


@dataclass
class SentenceEncoding:
    word_embeddings: np.ndarray  # [l, d_e]
    h_f: np.ndarray  # [l, d_h]
    h_b: np.ndarray  # [l, d_h]
    sentence_vector: np.ndarray  # [2 d_h]


@dataclass
class RelevanceScores:
    contextual: np.ndarray  # [m, 2 d_c]
    probabilities: np.ndarray  # [m]
    tau: float = DEFAULT_TAU


def filter_by_threshold(sentences: list, probabilities, tau: float = DEFAULT_TAU) -> list:
    """Keep sentences with ``p >= tau`` in order; never return an empty list.

    When nothing clears the threshold the single most probable sentence is
    kept (first one on ties).
    """
    probabilities = np.asarray(probabilities)
    if len(sentences) != len(probabilities):
        raise ValueError(f"{len(sentences)} sentences but {len(probabilities)} scores")
    if not sentences:
        raise ValueError("cannot filter an empty sentence list")
    kept = [s for s, p in zip(sentences, probabilities) if p >= tau]
    if not kept:
        kept = [sentences[int(np.argmax(probabilities))]]
    return kept


class ScopeIt:
    def __init__(self, vocab: Vocab, config: ScopeItConfig | None = None, store: ParamStore | None = None,
                 dtype=np.float32):
        self.vocab = vocab
        self.config = config or ScopeItConfig()
        c = self.config
        self.store = store if store is not None else ParamStore(dtype=dtype, seed=c.seed)
        ns = NAMESPACE
        self.embed = Embedding(self.store, f"{ns}.embed", len(vocab), c.d_e)
        self.word = BiGRU(self.store, f"{ns}.word", c.d_e, c.d_h)
        self.sent = BiGRU(self.store, f"{ns}.sent", 2 * c.d_h, c.d_c)
        self.proj = Linear(self.store, f"{ns}.proj", 2 * c.d_c, 1)

    @property
    def tau(self) -> float:
        return self.config.tau

    def model_config(self) -> dict:
        return self.config.model_dict(len(self.vocab))

    # -- tokenization --------------------------------------------------------

    def sentence_ids(self, text: str) -> list[int]:
        ids = self.vocab.encode(tokenize(text))[: self.config.max_sentence_len]
        return ids or [self.vocab.unk_id]

    def _pad_sentences(self, sentences: list[list[int]]) -> tuple[np.ndarray, np.ndarray]:
        L = max(len(s) for s in sentences)
        ids = np.full((len(sentences), L), self.vocab.pad_id, dtype=np.int64)
        mask = np.zeros((len(sentences), L), dtype=self.store.dtype)
        for i, s in enumerate(sentences):
            ids[i, : len(s)] = s
            mask[i, : len(s)] = 1.0
        return ids, mask

    # -- single-instance operations -----------------------------------------

    def encode_sentence(self, tokens: list[str] | str) -> SentenceEncoding:
        if isinstance(tokens, str):
            tokens = tokenize(tokens)
        if not tokens:
            raise ValueError("cannot encode an empty sentence")
        ids = np.array([self.vocab.encode(tokens)], dtype=np.int64)
        emb, _ = self.embed.forward(ids)
        hf, _ = self.word.fwd.forward(emb)
        hb, _ = self.word.bwd.forward(emb)
        vec = np.concatenate([hf[0, -1], hb[0, 0]])
        return SentenceEncoding(emb[0], hf[0], hb[0], vec)

    def score_relevance(self, sentence_vectors: np.ndarray) -> RelevanceScores:
        x = np.asarray(sentence_vectors, dtype=self.store.dtype)[None]
        f, _ = self.sent.forward(x)
        logits, _ = self.proj.forward(f)
        return RelevanceScores(f[0], sigmoid(logits[0, :, 0]), self.tau)

    # -- batched path --------------------------------------------------------

    def forward(self, emails: list[list[list[int]]]):
        """Logits ``[E, M]`` for a batch of emails given as sentence id lists."""
        flat = [s for email in emails for s in email]
        ids, wmask = self._pad_sentences(flat)
        emb, c_emb = self.embed.forward(ids)
        hf, c_f = self.word.fwd.forward(emb, wmask)
        hb, c_b = self.word.bwd.forward(emb, wmask)
        vecs = np.concatenate([hf[:, -1], hb[:, 0]], axis=1)

        E = len(emails)
        M = max(len(e) for e in emails)
        grouped = np.zeros((E, M, vecs.shape[1]), dtype=vecs.dtype)
        smask = np.zeros((E, M), dtype=vecs.dtype)
        slots = []
        k = 0
        for i, email in enumerate(emails):
            for j in range(len(email)):
                slots.append((i, j))
                grouped[i, j] = vecs[k]
                smask[i, j] = 1.0
                k += 1
        rows = np.array([s[0] for s in slots])
        cols = np.array([s[1] for s in slots])
        f, c_s = self.sent.forward(grouped, smask)
        logits, c_p = self.proj.forward(f)
        cache = (c_emb, c_f, c_b, hf.shape, c_s, c_p, rows, cols, grouped.shape)
        return logits[..., 0], smask, cache

    def backward(self, dlogits: np.ndarray, cache) -> None:
        c_emb, c_f, c_b, hshape, c_s, c_p, rows, cols, gshape = cache
        df = self.proj.backward(dlogits[..., None], c_p)
        dgrouped = self.sent.backward(df, c_s)
        dvecs = dgrouped[rows, cols]
        H = self.config.d_h
        dhf = np.zeros(hshape, dtype=dvecs.dtype)
        dhb = np.zeros(hshape, dtype=dvecs.dtype)
        dhf[:, -1] = dvecs[:, :H]
        dhb[:, 0] = dvecs[:, H:]
        demb = self.word.fwd.backward(dhf, c_f) + self.word.bwd.backward(dhb, c_b)
        self.embed.backward(demb, c_emb)

    def probabilities(self, emails: list[list[list[int]]], batch_size: int = 64) -> list[np.ndarray]:
        out = []
        for start in range(0, len(emails), batch_size):
            chunk = emails[start : start + batch_size]
            logits, _, _ = self.forward(chunk)
            p = sigmoid(logits)
            out.extend(p[i, : len(e)] for i, e in enumerate(chunk))
        return out

    # -- summarization -------------------------------------------------------

    def email_ids(self, turn: Turn) -> list[list[int]]:
        return [self.sentence_ids(s.text) for s in turn.sentences]

    def summarize(self, turn: Turn, tau: float | None = None) -> list[Sentence]:
        return self.summarize_many([turn], tau)[0]

    def summarize_many(self, turns: list[Turn], tau: float | None = None) -> list[list[Sentence]]:
        tau = self.tau if tau is None else tau
        probs = self.probabilities([self.email_ids(t) for t in turns])
        return [filter_by_threshold(t.sentences, p, tau) for t, p in zip(turns, probs)]

    # -- persistence ---------------------------------------------------------

    def checkpoint(self) -> Checkpoint:
        meta = {"scopeit_config": asdict(self.config), "vocab": self.vocab.tokens}
        return Checkpoint.from_store(self.store, self.model_config(), meta)

    def save(self, path: str | Path) -> None:
        save_checkpoint(path, self.checkpoint())

    @classmethod
    def from_checkpoint(cls, ckpt: Checkpoint, dtype=np.float32) -> "ScopeIt":
        vocab = Vocab(ckpt.metadata["vocab"])
        config = ScopeItConfig(**ckpt.metadata["scopeit_config"])
        model = cls(vocab, config, dtype=dtype)
        if config_digest(model.model_config()) != ckpt.config_digest:
            from .nn import CheckpointVersionError

            raise CheckpointVersionError("ScopeIt checkpoint config digest does not match its metadata")
        scoped = Checkpoint({n: v for n, v in ckpt.params.items() if n.startswith(NAMESPACE + ".")},
                            ckpt.config_digest)
        scoped.apply_to(model.store)
        return model

    @classmethod
    def load(cls, path: str | Path, dtype=np.float32) -> "ScopeIt":
        return cls.from_checkpoint(load_checkpoint(path), dtype=dtype)


# ---------------------------------------------------------------------------
# training
# ---------------------------------------------------------------------------


def _user_turns(dialogues: list[Dialogue]) -> list[Turn]:
    return [t for d in dialogues for t in d.turns if t.is_user]


def sentence_f1(pred: list[np.ndarray], gold: list[np.ndarray]) -> float:
    p = np.concatenate(pred).astype(bool)
    g = np.concatenate(gold).astype(bool)
    tp = float(np.sum(p & g))
    fp = float(np.sum(p & ~g))
    fn = float(np.sum(~p & g))
    return 0.0 if tp == 0 else 2 * tp / (2 * tp + fp + fn)


def evaluate_scopeit(model: ScopeIt, dialogues: list[Dialogue], tau: float | None = None) -> dict:
    tau = model.tau if tau is None else tau
    turns = _user_turns(dialogues)
    probs = model.probabilities([model.email_ids(t) for t in turns])
    gold = [np.array([s.relevant for s in t.sentences]) for t in turns]
    pred = [p >= tau for p in probs]
    kept = [np.zeros(len(t.sentences), dtype=bool) for t in turns]
    for k, t, p in zip(kept, turns, probs):
        ids = {id(s) for s in filter_by_threshold(t.sentences, p, tau)}
        k[:] = [id(s) in ids for s in t.sentences]
    g = np.concatenate(gold)
    kk = np.concatenate(kept)
    n_distract = int(np.sum(~g))
    removed = float(np.sum(~g & ~kk)) / n_distract if n_distract else 1.0
    return {"sentence_f1": sentence_f1(pred, gold), "distractor_removal": removed,
            "n_sentences": int(g.size), "n_distractors": n_distract}


def train_scopeit(train: list[Dialogue], val: list[Dialogue], vocab: Vocab,
                  config: ScopeItConfig | None = None, log_fn=None) -> tuple[ScopeIt, list[dict]]:
    """Per-sentence BCE on gold relevance; early stopping on validation F1.

    Returns the best-validation model and the per-epoch log.
    """
    config = config or ScopeItConfig()
    turns = _user_turns(train)
    if not turns:
        raise ValueError("training corpus has no user turns")
    model = ScopeIt(vocab, config)
    emails = [model.email_ids(t) for t in turns]
    labels = [np.array([float(s.relevant) for s in t.sentences], dtype=model.store.dtype) for t in turns]
    state = OptimizerState(lr=config.lr)
    rng = np.random.default_rng([config.seed, 17])
    history: list[dict] = []
    best = (-1.0, model.store.snapshot())
    stale = 0
    for epoch in range(1, config.max_epochs + 1):
        order = rng.permutation(len(emails))
        total, count = 0.0, 0
        for start in range(0, len(order), config.batch_size):
            idx = order[start : start + config.batch_size]
            batch = [emails[i] for i in idx]
            logits, smask, cache = model.forward(batch)
            y = np.zeros_like(logits)
            for r, i in enumerate(idx):
                y[r, : len(labels[i])] = labels[i]
            real = smask > 0
            loss, _, dreal = sigmoid_bce(logits[real], y[real])
            dlogits = np.zeros_like(logits)
            dlogits[real] = dreal
            model.backward(dlogits, cache)
            adam_step(model.store, state)
            total += loss * int(real.sum())
            count += int(real.sum())
        metrics = evaluate_scopeit(model, val) if val else {"sentence_f1": 0.0}
        row = {"epoch": epoch, "train_loss": total / max(count, 1), **metrics}
        history.append(row)
        if log_fn:
            log_fn(row)
        log.info("scopeit epoch %d loss %.4f val F1 %.4f", epoch, row["train_loss"], metrics["sentence_f1"])
        if metrics["sentence_f1"] > best[0]:
            best = (metrics["sentence_f1"], model.store.snapshot())
            stale = 0
        else:
            stale += 1
        if stale >= config.patience:
            break
    for name, value in best[1].items():
        model.store.set(name, value)
    return model, history


def write_history(history: list[dict], path: str | Path) -> None:
    Path(path).write_text("".join(json.dumps(r, sort_keys=True) + "\n" for r in history), encoding="utf-8")
