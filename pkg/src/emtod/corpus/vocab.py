"""Tokenizer and vocabulary."""

from __future__ import annotations

import re
from collections import Counter
from collections.abc import Iterable
from pathlib import Path

PAD, UNK, CLS, SEP, USR, SYS = "[PAD]", "[UNK]", "[CLS]", "[SEP]", "[USR]", "[SYS]"
SPECIALS = (PAD, UNK, CLS, SEP, USR, SYS)

_TOKEN_RE = re.compile(r"[a-z0-9_]+|[^\sa-z0-9_]")


def tokenize(text: str) -> list[str]:
    """Lowercased word tokens; each punctuation mark is its own token."""
    return _TOKEN_RE.findall(text.lower())


class Vocab:
    def __init__(self, tokens: Iterable[str]):
        self.tokens = list(tokens)
        self.index = {t: i for i, t in enumerate(self.tokens)}
        if len(self.index) != len(self.tokens):
            raise ValueError("vocabulary contains duplicate tokens")
        missing = [s for s in SPECIALS if s not in self.index]
        if missing:
            raise ValueError(f"vocabulary lacks special tokens {missing}")
        self.pad_id = self.index[PAD]
        self.unk_id = self.index[UNK]

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self.index

    def __eq__(self, other) -> bool:
        return isinstance(other, Vocab) and self.tokens == other.tokens

    def id(self, token: str) -> int:
        return self.index.get(token, self.unk_id)

    def encode(self, tokens: Iterable[str]) -> list[int]:
        return [self.index.get(t, self.unk_id) for t in tokens]

    def decode(self, ids: Iterable[int]) -> list[str]:
        return [self.tokens[i] for i in ids]

    def to_text(self) -> str:
        return "".join(t + "\n" for t in self.tokens)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_text(), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "Vocab":
        return cls(Path(path).read_text(encoding="utf-8").splitlines())


def build_vocab(texts: Iterable[str], min_freq: int = 1, extra_tokens: Iterable[str] = ()) -> Vocab:
    """Specials, then ``extra_tokens``, then corpus tokens by (-count, token).

    ``texts`` must come from the training split only.
    """
    counts: Counter[str] = Counter()
    n_texts = 0
    for text in texts:
        n_texts += 1
        counts.update(tokenize(text))
    if n_texts == 0 or not counts:
        raise ValueError("cannot build a vocabulary from an empty corpus")
    reserved = list(SPECIALS)
    for tok in extra_tokens:
        if tok not in reserved:
            reserved.append(tok)
    taken = set(reserved)
    words = sorted((t for t, c in counts.items() if c >= min_freq and t not in taken), key=lambda t: (-counts[t], t))
    return Vocab(reserved + words)


def corpus_texts(dialogues) -> Iterable[str]:
    for d in dialogues:
        for turn in d.turns:
            for s in turn.sentences:
                yield s.text
