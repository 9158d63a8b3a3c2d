import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from emtod.corpus.generator import CorpusConfig, generate_corpus
from emtod.corpus.vocab import build_vocab, corpus_texts
from emtod.schema import ACTIONS
from emtod.scopeit import ScopeItConfig, train_scopeit

settings.register_profile("emtod", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("emtod")


@pytest.fixture(scope="session")
def small_corpus():
    """A few hundred dialogues: enough to train quickly, big enough to be varied."""
    return generate_corpus(CorpusConfig(n_dialogues=300, seed=7))


@pytest.fixture(scope="session")
def small_vocab(small_corpus):
    return build_vocab(corpus_texts(small_corpus["train"]), extra_tokens=ACTIONS)


@pytest.fixture(scope="session")
def small_scopeit(small_corpus, small_vocab):
    cfg = ScopeItConfig(d_e=16, d_h=8, d_c=8, max_epochs=3, patience=1, seed=3)
    model, _ = train_scopeit(small_corpus["train"], small_corpus["val"], small_vocab, cfg)
    return model


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    from acceptance_report import LINES

    if LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(LINES):
            terminalreporter.write_line(LINES[n])
