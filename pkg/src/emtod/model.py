"""The end-to-end intent model and turning dialogues into its inputs."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .agent import DEFAULT_TRUNC_LEN, ActionTable, default_action_table, summarize_agent_turn, truncate_agent_turn
from .aggregator import STRATEGIES, ClassifierHead, attention_backward, attention_forward, fused_dim
from .contextualizer import (
    Contextualizer,
    EncodedBatch,
    EncoderConfig,
    SummarizedContext,
    build_context,
    pad_batch,
    serialize_context,
    serialize_turn,
)
from .corpus.types import USER, Dialogue, Turn
from .corpus.vocab import Vocab
from .nn import ParamStore
from .schema import N_INTENTS

CONTEXT_MODES = ("dual", "turn_only", "dialog_only")
AGENT_MODES = ("summarize", "truncate", "none")


@dataclass
class ModelConfig:
    aggregator: str = "cross_attention"
    context_mode: str = "dual"
    swap_directions: bool = False
    user_summary: bool = True
    agent_summary: str = "summarize"
    tau: float = 0.5
    trunc_len: int = DEFAULT_TRUNC_LEN
    dialog: EncoderConfig = field(default_factory=lambda: EncoderConfig(max_len=256))
    turn: EncoderConfig = field(default_factory=lambda: EncoderConfig(max_len=128))

    def validate(self, require_vocab: bool = False) -> None:
        if self.aggregator not in STRATEGIES:
            raise ValueError(f"aggregator must be one of {STRATEGIES}, got {self.aggregator!r}")
        if self.context_mode not in CONTEXT_MODES:
            raise ValueError(f"context_mode must be one of {CONTEXT_MODES}, got {self.context_mode!r}")
        if self.agent_summary not in AGENT_MODES:
            raise ValueError(f"agent_summary must be one of {AGENT_MODES}, got {self.agent_summary!r}")
        if not 0.0 <= self.tau <= 1.0:
            raise ValueError("tau must be in [0, 1]")
        if self.trunc_len < 1:
            raise ValueError("trunc_len must be at least 1")
        if self.uses_dialog:
            self.dialog.validate(require_vocab)
        if self.uses_turn:
            self.turn.validate(require_vocab)
        if self.context_mode == "dual" and self.dialog.d_k != self.turn.d_k:
            raise ValueError(f"dialog.d_k ({self.dialog.d_k}) must equal turn.d_k ({self.turn.d_k})")

    @property
    def uses_dialog(self) -> bool:
        return self.context_mode in ("dual", "dialog_only")

    @property
    def uses_turn(self) -> bool:
        return self.context_mode in ("dual", "turn_only")

    @property
    def d_k(self) -> int:
        return self.dialog.d_k if self.uses_dialog else self.turn.d_k

    def to_dict(self) -> dict:
        return {
            "aggregator": self.aggregator,
            "context_mode": self.context_mode,
            "swap_directions": self.swap_directions,
            "user_summary": self.user_summary,
            "agent_summary": self.agent_summary,
            "tau": self.tau,
            "trunc_len": self.trunc_len,
            "dialog": self.dialog.to_dict(),
            "turn": self.turn.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        d = dict(d)
        dialog = EncoderConfig(**d.pop("dialog", {}))
        turn = EncoderConfig(**d.pop("turn", {}))
        return cls(dialog=dialog, turn=turn, **d)


@dataclass
class FeatureBatch:
    dialog: EncodedBatch | None
    turn: EncodedBatch | None
    labels: np.ndarray | None = None


class EMToDModel:
    def __init__(self, vocab_size: int, config: ModelConfig, store: ParamStore | None = None,
                 dtype=np.float32, seed: int = 0):
        config.dialog.vocab_size = vocab_size
        config.turn.vocab_size = vocab_size
        config.validate(require_vocab=True)
        self.config = config
        self.store = store if store is not None else ParamStore(dtype=dtype, seed=seed)
        self.ctx = Contextualizer(
            vocab=None,
            store=self.store,
            dialog_cfg=config.dialog if config.uses_dialog else None,
            turn_cfg=config.turn if config.uses_turn else None,
        )
        self.head = ClassifierHead(self.store, fused_dim(config.aggregator, config.d_k, config.context_mode))

    @property
    def dialog(self):
        return self.ctx.dialog

    @property
    def turn(self):
        return self.ctx.turn

    def forward(self, batch: FeatureBatch):
        cfg = self.config
        D = T = cD = cT = None
        if cfg.uses_dialog:
            D, cD = self.dialog.forward(batch.dialog)
        if cfg.uses_turn:
            T, cT = self.turn.forward(batch.turn)
        att = []
        if cfg.context_mode == "turn_only":
            fused = T[:, 0]
        elif cfg.context_mode == "dialog_only":
            fused = D[:, 0]
        elif cfg.aggregator == "concat":
            fused = np.concatenate([D[:, 0], T[:, 0]], axis=1)
        else:
            # (query source, key/value source) per attention direction
            dirs = [("turn", "dialog"), ("dialog", "turn")]
            if cfg.swap_directions:
                dirs.reverse()
            if cfg.aggregator == "attention":
                dirs = dirs[:1]
            enc = {"dialog": (D, batch.dialog), "turn": (T, batch.turn)}
            outs = []
            for q_src, kv_src in dirs:
                kv, kb = enc[kv_src]
                y, c = attention_forward(enc[q_src][0][:, 0], kv, kb.mask)
                outs.append(y)
                att.append((q_src, kv_src, c))
            fused = np.concatenate(outs, axis=1)
        logits, cH = self.head.forward(fused)
        return logits, (D, T, cD, cT, att, cH)

    def backward(self, dlogits: np.ndarray, cache) -> None:
        cfg = self.config
        D, T, cD, cT, att, cH = cache
        dfused = self.head.backward(dlogits, cH)
        dD = np.zeros_like(D) if D is not None else None
        dT = np.zeros_like(T) if T is not None else None
        if cfg.context_mode == "turn_only":
            dT[:, 0] += dfused
        elif cfg.context_mode == "dialog_only":
            dD[:, 0] += dfused
        elif cfg.aggregator == "concat":
            k = D.shape[2]
            dD[:, 0] += dfused[:, :k]
            dT[:, 0] += dfused[:, k:]
        else:
            grads = {"dialog": dD, "turn": dT}
            k = cfg.d_k
            for i, (q_src, kv_src, c) in enumerate(att):
                dq, dkv = attention_backward(dfused[:, i * k : (i + 1) * k], c)
                grads[q_src][:, 0] += dq
                grads[kv_src] += dkv
        if dD is not None:
            self.dialog.backward(dD, cD)
        if dT is not None:
            self.turn.backward(dT, cT)

    def num_params(self) -> dict[str, int]:
        counts = {ns: self.store.num_params(ns) for ns in self.store.namespaces()}
        counts["total"] = self.store.num_params()
        return counts


# ---------------------------------------------------------------------------
# featurization
# ---------------------------------------------------------------------------


@dataclass
class Example:
    dialog_id: str
    turn_index: int
    dialog_ids: list[int]
    dialog_segments: list[int]
    turn_ids: list[int]
    labels: list[int]
    ambiguous: bool


class Featurizer:
    """Summarizes turns and serializes every user-turn prediction point."""

    def __init__(self, vocab: Vocab, config: ModelConfig, scopeit=None, table: ActionTable | None = None):
        if config.user_summary and scopeit is None:
            raise ValueError("user summarization is enabled but no ScopeIt model was given")
        self.vocab = vocab
        self.config = config
        self.scopeit = scopeit if config.user_summary else None
        self.table = table or default_action_table()

    def agent_summary(self, text: str) -> str:
        mode = self.config.agent_summary
        if mode == "summarize":
            return summarize_agent_turn(text, self.table)
        if mode == "truncate":
            return truncate_agent_turn(text, self.config.trunc_len)
        return text

    def user_summaries(self, turns: list[Turn]) -> list[str]:
        if self.scopeit is None:
            return [t.text for t in turns]
        kept = self.scopeit.summarize_many(turns, self.config.tau)
        return [" ".join(s.text for s in k) for k in kept]

    def turn_summaries(self, dialogues: list[Dialogue]) -> list[list[str]]:
        users = [t for d in dialogues for t in d.turns if t.role == USER]
        user_text = iter(self.user_summaries(users))
        out = []
        for d in dialogues:
            out.append([next(user_text) if t.role == USER else self.agent_summary(t.text) for t in d.turns])
        return out

    def context(self, prefix: list[Turn], summaries: list[str] | None = None) -> SummarizedContext:
        if summaries is None:
            return build_context(
                prefix,
                summarize_user=lambda t: self.user_summaries([t])[0],
                summarize_agent=self.agent_summary,
            )
        history = [(t.role, s) for t, s in zip(prefix, summaries)]
        return SummarizedContext(history=history, last_user_turn=history[-1][1])

    def example(self, ctx: SummarizedContext, labels=None, *, dialog_id: str = "", turn_index: int = 0,
                ambiguous: bool = False) -> Example:
        cfg = self.config
        d_tokens, d_segs = serialize_context(ctx, cfg.dialog.max_len)
        t_tokens = serialize_turn(ctx.last_user_turn, cfg.turn.max_len)
        return Example(
            dialog_id=dialog_id,
            turn_index=turn_index,
            dialog_ids=self.vocab.encode(d_tokens),
            dialog_segments=d_segs,
            turn_ids=self.vocab.encode(t_tokens),
            labels=list(labels) if labels is not None else [0] * N_INTENTS,
            ambiguous=ambiguous,
        )

    def examples(self, dialogues: list[Dialogue]) -> list[Example]:
        out = []
        for d, summaries in zip(dialogues, self.turn_summaries(dialogues)):
            for i, turn in enumerate(d.turns):
                if turn.role != USER:
                    continue
                ctx = self.context(d.turns[: i + 1], summaries[: i + 1])
                out.append(self.example(ctx, turn.gold_intents, dialog_id=d.id, turn_index=i,
                                        ambiguous=turn.ambiguous))
        return out

    def batch(self, examples: list[Example], dtype=np.float32) -> FeatureBatch:
        pad = self.vocab.pad_id
        dialog = turn = None
        if self.config.uses_dialog:
            dialog = pad_batch([e.dialog_ids for e in examples], [e.dialog_segments for e in examples], pad, dtype)
        if self.config.uses_turn:
            turn = pad_batch([e.turn_ids for e in examples], None, pad, dtype)
        labels = np.array([e.labels for e in examples], dtype=dtype)
        return FeatureBatch(dialog=dialog, turn=turn, labels=labels)
