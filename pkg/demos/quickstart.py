"""Small end-to-end run: corpus, summarizer, intent model, one prediction.

Runs in well under a minute on one CPU core.
"""

from emtod.contextualizer import EncoderConfig
from emtod.corpus.generator import CorpusConfig, generate_corpus
from emtod.corpus.vocab import build_vocab, corpus_texts
from emtod.model import ModelConfig
from emtod.schema import ACTIONS
from emtod.scopeit import ScopeItConfig, evaluate_scopeit, train_scopeit
from emtod.trainer import TrainConfig, evaluate_examples, train

splits = generate_corpus(CorpusConfig(n_dialogues=2000, seed=0))
vocab = build_vocab(corpus_texts(splits["train"]), extra_tokens=ACTIONS)
print({k: len(v) for k, v in splits.items()}, "dialogues;", len(vocab), "tokens")

scopeit, _ = train_scopeit(splits["train"], splits["val"], vocab, ScopeItConfig(d_e=32, d_h=16, d_c=16, max_epochs=3))
print("summarizer on val:", evaluate_scopeit(scopeit, splits["val"]))

enc = lambda n: EncoderConfig(d_e=32, d_k=32, depth=1, heads=2, d_ff=64, max_len=n)
cfg = TrainConfig(max_epochs=6, patience=2, model=ModelConfig(dialog=enc(128), turn=enc(64)))
result = train(splits["train"], splits["val"], vocab, cfg, scopeit,
               log_fn=lambda r: print(f"epoch {r['epoch']}: loss {r['train_loss']:.4f}, val micro-F1 {r['val']['micro_f1']:.4f}"))

model = result.model
ev = evaluate_examples(model, model.featurizer.examples(splits["test"]))
print(f"test micro-F1 {ev['overall'].micro_f1:.4f}; ambiguous turns {ev['ambiguous'].micro_f1:.4f} (n={ev['n_ambiguous']})")

dialogue = next(d for d in splits["test"] if any(t.ambiguous for t in d.turns))
i = next(i for i, t in enumerate(dialogue.turns) if t.ambiguous)
for turn in dialogue.turns[: i + 1]:
    print(f"  {turn.role}: {turn.text}")
print("predicted:", model.predict(dialogue.prefix(i)).intents)
