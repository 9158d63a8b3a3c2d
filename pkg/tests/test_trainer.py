import numpy as np
import pytest

from emtod.errors import ConfigError
from emtod.nn import CheckpointError, CheckpointVersionError, load_checkpoint, save_checkpoint
from emtod.nn.checkpoint import Checkpoint
from emtod.trainer import IntentModel, TrainConfig, length_batches, predict, train
from pipeline import small_config


@pytest.fixture(scope="module")
def trained(small_corpus, small_vocab, small_scopeit):
    cfg = TrainConfig(max_epochs=3, patience=3, seed=5, model=small_config())
    return train(small_corpus["train"][:120], small_corpus["val"][:40], small_vocab, cfg, small_scopeit)


def test_patience_zero_runs_one_epoch(small_corpus, small_vocab):
    cfg = TrainConfig(max_epochs=5, patience=0, model=small_config(user_summary=False))
    result = train(small_corpus["train"][:20], small_corpus["val"][:10], small_vocab, cfg)
    assert len(result.history) == 1 and result.best_epoch == 1


def test_freeze_all_but_head(small_corpus, small_vocab):
    cfg = TrainConfig(max_epochs=2, patience=2, freeze=("dialog", "turn"), model=small_config(user_summary=False))
    init = IntentModel(small_vocab, cfg.model, seed=cfg.seed).store.snapshot()
    result = train(small_corpus["train"][:20], [], small_vocab, cfg)
    store = result.model.store
    for name in store.names():
        if name.startswith("head."):
            assert not np.array_equal(store[name], init[name]), name
        else:
            assert np.array_equal(store[name], init[name]), name


def test_unknown_freeze_prefix_rejected(small_corpus, small_vocab):
    cfg = TrainConfig(freeze=("decoder",), model=small_config(user_summary=False))
    with pytest.raises(ConfigError, match="decoder"):
        train(small_corpus["train"][:5], [], small_vocab, cfg)


def test_empty_corpus_rejected(small_vocab):
    with pytest.raises(ValueError):
        train([], [], small_vocab, TrainConfig(model=small_config(user_summary=False)))


def test_overfits_tiny_corpus(small_corpus, small_vocab):
    data = small_corpus["train"][:50]
    # Memorization needs more optimizer steps than 50 dialogues give at the defaults.
    cfg = TrainConfig(max_epochs=20, patience=20, batch_size=8, lr=3e-3, seed=0,
                      model=small_config(user_summary=False))
    result = train(data, [], small_vocab, cfg)
    losses = [r["train_loss"] for r in result.history]
    assert losses[0] > losses[1] > losses[2]
    ex = result.model.featurizer.examples(data)
    assert result.model.evaluate(ex)["overall"].micro_f1 >= 0.95


def test_best_checkpoint_contract(trained, small_corpus):
    history = trained.history
    best = max(r["val"]["micro_f1"] for r in history)
    assert history[trained.best_epoch - 1]["val"]["micro_f1"] == best
    ex = trained.model.featurizer.examples(small_corpus["val"][:40])
    assert trained.model.evaluate(ex)["overall"].micro_f1 == pytest.approx(best, abs=1e-12)


def test_predict_deterministic_and_round_trip(trained, small_corpus, tmp_path):
    d = small_corpus["test"][0]
    prefix = d.prefix(d.user_turn_indices()[-1])
    a = predict(trained.model, prefix)
    b = predict(trained.model, prefix)
    np.testing.assert_array_equal(a.probabilities, b.probabilities)
    path = tmp_path / "m.ckpt"
    save_checkpoint(path, trained.checkpoint())
    back = IntentModel.load(path)
    np.testing.assert_array_equal(predict(back, prefix).probabilities, a.probabilities)
    np.testing.assert_array_equal(predict(path, prefix).probabilities, a.probabilities)
    single = predict(back, d.prefix(d.user_turn_indices()[0]))
    assert single.probabilities.shape == (13,)
    with pytest.raises(ValueError):
        back.predict(d.prefix(d.user_turn_indices()[0] + 1))


def test_checkpoint_refusals(trained, tmp_path):
    ckpt = trained.checkpoint()
    bad = Checkpoint(ckpt.params, "0" * 64, ckpt.metadata)
    with pytest.raises(CheckpointVersionError):
        IntentModel.from_checkpoint(bad)
    path = tmp_path / "t.ckpt"
    path.write_bytes(ckpt.to_bytes()[:-10])
    with pytest.raises(CheckpointError):
        IntentModel.load(path)


def test_scopeit_travels_inside_checkpoint(trained):
    back = IntentModel.from_checkpoint(Checkpoint.from_bytes(trained.checkpoint().to_bytes()))
    assert back.scopeit is not None
    for name in trained.model.scopeit.store.names():
        np.testing.assert_array_equal(back.scopeit.store[name], trained.model.scopeit.store[name])


def test_identical_runs_identical_checkpoints(small_corpus, small_vocab):
    cfg = TrainConfig(max_epochs=2, patience=2, seed=3, model=small_config(user_summary=False))
    a = train(small_corpus["train"][:30], small_corpus["val"][:10], small_vocab, cfg)
    b = train(small_corpus["train"][:30], small_corpus["val"][:10], small_vocab, cfg)
    assert a.checkpoint().to_bytes() == b.checkpoint().to_bytes()
    assert a.history == b.history


def test_length_batches_cover_every_index(rng):
    lengths = list(rng.integers(1, 50, size=1000))
    batches = length_batches(lengths, 32, np.random.default_rng(0))
    flat = np.concatenate(batches)
    assert sorted(flat.tolist()) == list(range(1000))
    assert all(1 <= len(b) <= 32 for b in batches)
