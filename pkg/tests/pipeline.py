"""Tiny float64 pipelines shared by the gradient tests."""

import json

import numpy as np

from emtod.contextualizer import EncoderConfig
from emtod.corpus.types import Sentence, Turn
from emtod.corpus.vocab import build_vocab
from emtod.model import EMToDModel, Featurizer, ModelConfig
from emtod.nn import grad_check, sigmoid_bce
from emtod.schema import ACTIONS

TEXTS = ["Sherlock, what time works?", "Tuesday at noon with Dana.", "Please also book a room."]


def tiny_config(d: int = 8, architecture: str = "self-attention", **model_kw) -> ModelConfig:
    def enc(max_len):
        return EncoderConfig(d_e=d, d_k=d, depth=1, heads=2, d_ff=d, max_len=max_len, n_segments=4,
                             architecture=architecture)

    kw = dict(user_summary=False, agent_summary="summarize", dialog=enc(24), turn=enc(12))
    kw.update(model_kw)
    return ModelConfig(**kw)


def tiny_problem(config: ModelConfig, seed: int = 0):
    """Model plus a loss closure over a two-example batch of different lengths."""
    vocab = build_vocab(TEXTS, extra_tokens=ACTIONS)
    net = EMToDModel(len(vocab), config, dtype=np.float64, seed=seed)
    feat = Featurizer(vocab, config)
    agent = Turn("agent", "a", [Sentence(TEXTS[0], True)], gold_action="ask_time")
    user = Turn("user", "u", [Sentence(TEXTS[1], True), Sentence(TEXTS[2], True)])
    short = Turn("user", "u", [Sentence(TEXTS[2], True)])
    labels = np.zeros((2, 13))
    labels[0, [0, 4]] = 1
    labels[1, 2] = 1
    examples = [feat.example(feat.context([agent, user]), labels[0]), feat.example(feat.context([short]), labels[1])]
    batch = feat.batch(examples, np.float64)

    def loss_fn():
        logits, cache = net.forward(batch)
        loss, _, dlogits = sigmoid_bce(logits, batch.labels)
        net.backward(dlogits, cache)
        return loss

    return net, loss_fn


def pipeline_grad_error(config: ModelConfig, seed: int = 0) -> float:
    net, loss_fn = tiny_problem(config, seed)
    return grad_check(loss_fn, net.store)


def small_config(**model_kw) -> ModelConfig:
    """Compact encoders that train in seconds on a few hundred dialogues."""

    def enc(max_len):
        return EncoderConfig(d_e=16, d_k=16, depth=1, heads=2, d_ff=32, max_len=max_len, n_segments=8)

    kw = dict(dialog=enc(128), turn=enc(64))
    kw.update(model_kw)
    return ModelConfig(**kw)


def small_run_config(root) -> dict:
    """A run configuration that takes each CLI stage through in seconds."""
    enc = dict(d_e=16, d_k=16, depth=1, heads=2, d_ff=32, n_segments=8)
    return {
        "corpus": {"n_dialogues": 60, "seed": 3},
        "scopeit": {"d_e": 8, "d_h": 4, "d_c": 4, "max_epochs": 1, "patience": 1, "seed": 1},
        "train": {"max_epochs": 1, "patience": 1, "seed": 2},
        "model": {"dialog": dict(enc, max_len=128), "turn": dict(enc, max_len=64)},
        "paths": {"data_dir": str(root / "data"), "out_dir": str(root / "out")},
    }


def run_cli_pipeline(root, main) -> dict[str, bytes]:
    """gen-corpus, train-scopeit, train, evaluate; returns every output file's bytes."""
    root.mkdir(parents=True, exist_ok=True)
    cfg = root / "run.json"
    cfg.write_text(json.dumps(small_run_config(root)))
    for cmd in ("gen-corpus", "train-scopeit", "train", "evaluate"):
        assert main([cmd, "--config", str(cfg)]) == 0, cmd
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}
