"""Summarized dialogue context, its serialization, and the two encoders."""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import asdict, dataclass, field

import numpy as np

from .corpus.types import AGENT, USER, Turn
from .corpus.vocab import CLS, PAD, SYS, USR, Vocab, tokenize
from .nn import BiGRU, DimensionError, Embedding, LayerNorm, Linear, ParamStore, TransformerBlock

ROLE_MARKER = {USER: USR, AGENT: SYS}
DIALOG_NS = "dialog"
TURN_NS = "turn"


@dataclass
class SummarizedContext:
    history: list[tuple[str, str]]
    last_user_turn: str

    def __post_init__(self):
        if not self.history:
            raise ValueError("context history is empty")
        if self.history[-1][0] != USER:
            raise ValueError("context history must end with a user entry")
        if self.history[-1][1] != self.last_user_turn:
            raise ValueError("last_user_turn must equal the final history entry")
        for (a, _), (b, _) in zip(self.history, self.history[1:]):
            if a == b:
                raise ValueError("history roles must alternate")


def build_context(
    prefix: list[Turn],
    summarize_user: Callable[[Turn], str] | None = None,
    summarize_agent: Callable[[str], str] | None = None,
) -> SummarizedContext:
    """Replace each user turn by its kept sentences and each agent turn by its summary.

    ``None`` for either summarizer keeps that role's raw text.
    """
    if not prefix:
        raise ValueError("dialogue prefix is empty")
    if prefix[-1].role != USER:
        raise ValueError("dialogue prefix must end with a user turn")
    history = []
    for turn in prefix:
        if turn.role == USER:
            text = summarize_user(turn) if summarize_user else turn.text
        else:
            text = summarize_agent(turn.text) if summarize_agent else turn.text
        history.append((turn.role, text))
    return SummarizedContext(history=history, last_user_turn=history[-1][1])


def serialize_context(ctx: SummarizedContext, max_len: int = 256) -> tuple[list[str], list[int]]:
    """``[CLS]`` then ``marker tokens...`` per entry, front-truncated.

    Returns the token strings and a parallel list of turn-recency indices
    (0 for the final user turn, 1 for the entry before it, ...; 0 for
    ``[CLS]``). Oldest tokens are dropped first; if the final user turn alone
    does not fit, its tail is cut instead.
    """
    if max_len < 3:
        raise ValueError("max_len must leave room for [CLS], a marker and one token")
    pieces = []
    n = len(ctx.history)
    for k, (role, text) in enumerate(ctx.history):
        recency = n - 1 - k
        toks = [ROLE_MARKER[role]] + tokenize(text)
        pieces.append((toks, recency))
    last_toks, _ = pieces[-1]
    budget = max_len - 1
    if len(last_toks) >= budget:
        body = last_toks[:budget]
        return [CLS] + body, [0] * (len(body) + 1)
    tokens: list[str] = []
    segs: list[int] = []
    for toks, rec in pieces:
        tokens.extend(toks)
        segs.extend([rec] * len(toks))
    tokens, segs = tokens[-budget:], segs[-budget:]
    return [CLS] + tokens, [0] + segs


def serialize_turn(text: str, max_len: int = 128) -> list[str]:
    return ([CLS] + tokenize(text))[:max_len]


# ---------------------------------------------------------------------------
# encoders
# ---------------------------------------------------------------------------


@dataclass
class EncoderConfig:
    vocab_size: int = 0
    d_e: int = 64
    d_k: int = 64
    depth: int = 2
    heads: int = 4
    d_ff: int = 128
    max_len: int = 256
    n_segments: int = 16
    architecture: str = "self-attention"

    def validate(self, require_vocab: bool = True) -> None:
        """``require_vocab=False`` accepts an unset (0) vocabulary size."""
        if self.vocab_size < 0 or (require_vocab and self.vocab_size == 0):
            raise ValueError("encoder vocab_size must be positive")
        for name in ("d_e", "d_k", "depth", "heads", "d_ff", "max_len", "n_segments"):
            if getattr(self, name) <= 0:
                raise ValueError(f"encoder {name} must be positive")
        if self.architecture not in ("self-attention", "recurrent"):
            raise ValueError(f"unknown encoder architecture {self.architecture!r}")
        if self.architecture == "self-attention" and self.d_k % self.heads:
            raise ValueError(f"d_k={self.d_k} is not divisible by heads={self.heads}")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class EmbeddingPair:
    cls: np.ndarray  # [d_k]
    tokens: np.ndarray  # [seq_len, d_k]

    def __post_init__(self):
        if self.tokens.ndim != 2 or self.tokens.shape[0] < 1:
            raise DimensionError("token matrix must be [seq_len >= 1, d_k]")
        if self.cls.shape != self.tokens.shape[1:]:
            raise DimensionError("cls and token rows must share d_k")


@dataclass
class EncodedBatch:
    ids: np.ndarray  # [B, T] int
    segments: np.ndarray  # [B, T] int
    mask: np.ndarray  # [B, T] float, 1 for real tokens


def pad_batch(seqs: list[list[int]], segs: list[list[int]] | None, pad_id: int, dtype=np.float32) -> EncodedBatch:
    if not seqs or any(len(s) == 0 for s in seqs):
        raise ValueError("cannot encode an empty token sequence")
    T = max(len(s) for s in seqs)
    ids = np.full((len(seqs), T), pad_id, dtype=np.int64)
    seg = np.zeros((len(seqs), T), dtype=np.int64)
    mask = np.zeros((len(seqs), T), dtype=dtype)
    for i, s in enumerate(seqs):
        ids[i, : len(s)] = s
        mask[i, : len(s)] = 1.0
        if segs is not None:
            seg[i, : len(s)] = segs[i]
    return EncodedBatch(ids, seg, mask)


class TransformerEncoder:
    def __init__(self, store: ParamStore, ns: str, cfg: EncoderConfig):
        cfg.validate()
        self.cfg = cfg
        self.ns = ns
        self.tok = Embedding(store, f"{ns}.tok_embed", cfg.vocab_size, cfg.d_e)
        self.pos = Embedding(store, f"{ns}.pos_embed", cfg.max_len, cfg.d_e)
        self.seg = Embedding(store, f"{ns}.seg_embed", cfg.n_segments, cfg.d_e)
        self.proj = Linear(store, f"{ns}.in_proj", cfg.d_e, cfg.d_k) if cfg.d_e != cfg.d_k else None
        self.blocks = [TransformerBlock(store, f"{ns}.block{i}", cfg.d_k, cfg.heads, cfg.d_ff) for i in range(cfg.depth)]
        self.ln = LayerNorm(store, f"{ns}.ln_out", cfg.d_k)

    def forward(self, batch: EncodedBatch):
        B, T = batch.ids.shape
        if T > self.cfg.max_len:
            raise DimensionError(f"{self.ns}: sequence length {T} exceeds max_len {self.cfg.max_len}")
        x, c_tok = self.tok.forward(batch.ids)
        p, c_pos = self.pos.forward(np.broadcast_to(np.arange(T), (B, T)))
        s, c_seg = self.seg.forward(np.minimum(batch.segments, self.cfg.n_segments - 1))
        x = x + p + s
        c_proj = None
        if self.proj is not None:
            x, c_proj = self.proj.forward(x)
        caches = []
        for blk in self.blocks:
            x, c = blk.forward(x, batch.mask)
            caches.append(c)
        x, c_ln = self.ln.forward(x)
        return x, (c_tok, c_pos, c_seg, c_proj, caches, c_ln)

    def backward(self, dout: np.ndarray, cache) -> None:
        c_tok, c_pos, c_seg, c_proj, caches, c_ln = cache
        dx = self.ln.backward(dout, c_ln)
        for blk, c in zip(reversed(self.blocks), reversed(caches)):
            dx = blk.backward(dx, c)
        if self.proj is not None:
            dx = self.proj.backward(dx, c_proj)
        self.tok.backward(dx, c_tok)
        self.pos.backward(dx, c_pos)
        self.seg.backward(dx, c_seg)


class RecurrentEncoder:
    """Bidirectional GRU over tokens, projected to ``d_k``; lighter option."""

    def __init__(self, store: ParamStore, ns: str, cfg: EncoderConfig):
        cfg.validate()
        self.cfg = cfg
        self.ns = ns
        self.tok = Embedding(store, f"{ns}.tok_embed", cfg.vocab_size, cfg.d_e)
        self.seg = Embedding(store, f"{ns}.seg_embed", cfg.n_segments, cfg.d_e)
        self.rnn = BiGRU(store, f"{ns}.rnn", cfg.d_e, cfg.d_k)
        self.out = Linear(store, f"{ns}.out_proj", 2 * cfg.d_k, cfg.d_k)

    def forward(self, batch: EncodedBatch):
        if batch.ids.shape[1] > self.cfg.max_len:
            raise DimensionError(f"{self.ns}: sequence length exceeds max_len {self.cfg.max_len}")
        x, c_tok = self.tok.forward(batch.ids)
        s, c_seg = self.seg.forward(np.minimum(batch.segments, self.cfg.n_segments - 1))
        h, c_rnn = self.rnn.forward(x + s, batch.mask)
        y, c_out = self.out.forward(h)
        return y, (c_tok, c_seg, c_rnn, c_out)

    def backward(self, dout: np.ndarray, cache) -> None:
        c_tok, c_seg, c_rnn, c_out = cache
        dx = self.rnn.backward(self.out.backward(dout, c_out), c_rnn)
        self.tok.backward(dx, c_tok)
        self.seg.backward(dx, c_seg)


def make_encoder(store: ParamStore, ns: str, cfg: EncoderConfig):
    if cfg.architecture == "recurrent":
        return RecurrentEncoder(store, ns, cfg)
    return TransformerEncoder(store, ns, cfg)


@dataclass
class Contextualizer:
    """Both encoders plus the vocabulary used to feed them."""

    vocab: Vocab
    store: ParamStore
    dialog_cfg: EncoderConfig | None
    turn_cfg: EncoderConfig | None
    dialog: object = field(init=False, default=None)
    turn: object = field(init=False, default=None)

    def __post_init__(self):
        if self.dialog_cfg and self.turn_cfg and self.dialog_cfg.d_k != self.turn_cfg.d_k:
            raise DimensionError(
                f"dialog d_k={self.dialog_cfg.d_k} and turn d_k={self.turn_cfg.d_k} must match"
            )
        if self.dialog_cfg:
            self.dialog = make_encoder(self.store, DIALOG_NS, self.dialog_cfg)
        if self.turn_cfg:
            self.turn = make_encoder(self.store, TURN_NS, self.turn_cfg)

    def _encode(self, encoder, tokens: list[str], segments: list[int] | None) -> EmbeddingPair:
        if encoder is None:
            raise ValueError("encoder not configured")
        if not tokens:
            raise ValueError("cannot encode an empty token sequence")
        batch = pad_batch([self.vocab.encode(tokens)], [segments] if segments else None,
                          self.vocab.index[PAD], self.store.dtype)
        out, _ = encoder.forward(batch)
        return EmbeddingPair(cls=out[0, 0].copy(), tokens=out[0])

    def encode_dialogue(self, tokens: list[str], segments: list[int] | None = None) -> EmbeddingPair:
        return self._encode(self.dialog, tokens, segments)

    def encode_turn(self, tokens: list[str]) -> EmbeddingPair:
        return self._encode(self.turn, tokens, None)
