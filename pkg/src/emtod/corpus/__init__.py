"""Synthetic scheduling-assistant email corpus."""

from .generator import CorpusConfig, generate_corpus, generate_dialogue, generate_dialogues, split_dialogues
from .types import AGENT, USER, CorpusError, Dialogue, Sentence, Turn, dump, load, serialize, validate
from .vocab import SPECIALS, Vocab, build_vocab, corpus_texts, tokenize

__all__ = [
    "AGENT",
    "CorpusConfig",
    "CorpusError",
    "Dialogue",
    "SPECIALS",
    "Sentence",
    "Turn",
    "USER",
    "Vocab",
    "build_vocab",
    "corpus_texts",
    "dump",
    "generate_corpus",
    "generate_dialogue",
    "generate_dialogues",
    "load",
    "serialize",
    "split_dialogues",
    "tokenize",
    "validate",
]
