"""Why context matters: the same short reply means different things.

Trains the full model and a turn-only baseline on the same corpus, then
compares them on ambiguous replies whose intent is set by the agent's
preceding question.
"""

from emtod.contextualizer import EncoderConfig
from emtod.corpus.generator import CorpusConfig, generate_corpus
from emtod.corpus.vocab import build_vocab, corpus_texts
from emtod.model import ModelConfig
from emtod.schema import ACTIONS
from emtod.scopeit import ScopeItConfig, train_scopeit
from emtod.trainer import TrainConfig, evaluate_examples, train

splits = generate_corpus(CorpusConfig(n_dialogues=1500, seed=4))
vocab = build_vocab(corpus_texts(splits["train"]), extra_tokens=ACTIONS)
scopeit, _ = train_scopeit(splits["train"], splits["val"], vocab, ScopeItConfig(d_e=32, d_h=16, d_c=16, max_epochs=2))

enc = lambda n: EncoderConfig(d_e=32, d_k=32, depth=1, heads=2, d_ff=64, max_len=n)
for mode in ("dual", "turn_only"):
    cfg = TrainConfig(max_epochs=3, patience=1, model=ModelConfig(context_mode=mode, dialog=enc(128), turn=enc(64)))
    model = train(splits["train"], splits["val"], vocab, cfg, scopeit).model
    ev = evaluate_examples(model, model.featurizer.examples(splits["test"]))
    print(f"{mode:9s} overall micro-F1 {ev['overall'].micro_f1:.4f}, ambiguous {ev['ambiguous'].micro_f1:.4f}")
