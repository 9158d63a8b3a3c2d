"""Fusion of the dialogue and turn embeddings, and the intent head.

Single-head scaled dot-product attention with no projections: one CLS
vector is the query and the other encoder's token rows serve as both keys
and values.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .contextualizer import EmbeddingPair
from .nn import DimensionError, Linear, ParamStore, sigmoid, softmax, softmax_backward
from .nn.core import MASK_FILL
from .schema import INTENTS, N_INTENTS

STRATEGIES = ("concat", "attention", "cross_attention")
HEAD_NS = "head"
DECISION_THRESHOLD = 0.5


@dataclass
class FusionOutput:
    fused: np.ndarray
    y1: np.ndarray | None = None
    y2: np.ndarray | None = None


@dataclass
class IntentPrediction:
    probabilities: np.ndarray  # [13]
    predicted: np.ndarray  # [13] 0/1

    @property
    def intents(self) -> list[str]:
        return [INTENTS[i] for i in np.flatnonzero(self.predicted)]

    def to_dict(self) -> dict:
        return {
            "probabilities": {name: float(p) for name, p in zip(INTENTS, self.probabilities)},
            "predicted_intents": self.intents,
        }


# ---------------------------------------------------------------------------
# batched attention with backward
# ---------------------------------------------------------------------------


def attention_forward(q: np.ndarray, kv: np.ndarray, mask: np.ndarray | None = None):
    """``softmax(q kv^T / sqrt(d)) kv`` for a batch: q [B, d], kv [B, n, d]."""
    if q.ndim != 2 or kv.ndim != 3 or q.shape[0] != kv.shape[0] or q.shape[1] != kv.shape[2]:
        raise DimensionError(f"attention: query {q.shape} incompatible with keys/values {kv.shape}")
    if kv.shape[1] < 1:
        raise DimensionError("attention: need at least one key/value row")
    scale = 1.0 / float(np.sqrt(q.shape[1]))
    scores = np.einsum("bd,bnd->bn", q, kv) * scale
    if mask is not None:
        scores = scores + ((1.0 - mask) * MASK_FILL).astype(scores.dtype)
    w = softmax(scores, axis=-1)
    out = np.einsum("bn,bnd->bd", w, kv)
    return out, (q, kv, w, scale)


def attention_backward(dout: np.ndarray, cache) -> tuple[np.ndarray, np.ndarray]:
    q, kv, w, scale = cache
    dw = np.einsum("bd,bnd->bn", dout, kv)
    ds = softmax_backward(dw, w) * scale
    dq = np.einsum("bn,bnd->bd", ds, kv)
    dkv = w[:, :, None] * dout[:, None, :] + ds[:, :, None] * q[:, None, :]
    return dq, dkv


def attention_weights(q: np.ndarray, kv: np.ndarray) -> np.ndarray:
    """Weights of a single query over ``kv`` rows: q [d], kv [n, d]."""
    _, (_, _, w, _) = attention_forward(np.asarray(q)[None], np.asarray(kv)[None])
    return w[0]


# ---------------------------------------------------------------------------
# single-instance fusion operations
# ---------------------------------------------------------------------------


def _check_pairs(dialog: EmbeddingPair, turn: EmbeddingPair) -> None:
    if dialog.cls.shape != turn.cls.shape:
        raise DimensionError(f"d_k mismatch: dialog {dialog.cls.shape} vs turn {turn.cls.shape}")


def fuse_concat(dialog: EmbeddingPair, turn: EmbeddingPair) -> FusionOutput:
    _check_pairs(dialog, turn)
    return FusionOutput(fused=np.concatenate([dialog.cls, turn.cls]))


def fuse_attention(query_cls: np.ndarray, kv_tokens: np.ndarray) -> np.ndarray:
    out, _ = attention_forward(np.asarray(query_cls)[None], np.asarray(kv_tokens)[None])
    return out[0]


def fuse_cross_attention(dialog: EmbeddingPair, turn: EmbeddingPair, swap: bool = False) -> FusionOutput:
    """``y1``: last-turn CLS over dialogue tokens; ``y2``: dialogue CLS over turn tokens.

    ``swap=True`` exchanges the two directions.
    """
    _check_pairs(dialog, turn)
    y1 = fuse_attention(turn.cls, dialog.tokens)
    y2 = fuse_attention(dialog.cls, turn.tokens)
    if swap:
        y1, y2 = y2, y1
    return FusionOutput(fused=np.concatenate([y1, y2]), y1=y1, y2=y2)


# ---------------------------------------------------------------------------
# head
# ---------------------------------------------------------------------------


def fused_dim(strategy: str, d_k: int, context_mode: str = "dual") -> int:
    if context_mode != "dual":
        return d_k
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown aggregator {strategy!r}; expected one of {STRATEGIES}")
    return d_k if strategy == "attention" else 2 * d_k


class ClassifierHead:
    def __init__(self, store: ParamStore, d_in: int, n_out: int = N_INTENTS, ns: str = HEAD_NS):
        self.linear = Linear(store, ns, d_in, n_out)
        self.d_in = d_in

    def forward(self, fused: np.ndarray):
        return self.linear.forward(fused)

    def backward(self, dlogits: np.ndarray, cache) -> np.ndarray:
        return self.linear.backward(dlogits, cache)


def decide(probabilities: np.ndarray) -> np.ndarray:
    # Strict inequality: an untrained (all 0.5) head predicts nothing.
    return (np.asarray(probabilities) > DECISION_THRESHOLD).astype(np.int64)


def predict_intents(fused: FusionOutput | np.ndarray, head: ClassifierHead) -> IntentPrediction:
    vec = fused.fused if isinstance(fused, FusionOutput) else np.asarray(fused)
    if vec.shape[-1] != head.d_in:
        raise DimensionError(f"head expects fused dimension {head.d_in}, got {vec.shape[-1]}")
    logits, _ = head.forward(vec[None])
    p = sigmoid(logits[0])
    return IntentPrediction(probabilities=p, predicted=decide(p))
