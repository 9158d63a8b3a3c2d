import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from emtod.agent import summarize_agent_turn
from emtod.contextualizer import (
    Contextualizer,
    EncoderConfig,
    SummarizedContext,
    build_context,
    serialize_context,
    serialize_turn,
)
from emtod.corpus.types import Sentence, Turn
from emtod.corpus.vocab import build_vocab
from emtod.nn import DimensionError, ParamStore
from emtod.schema import ACTIONS


def _user(*texts, relevant=None):
    relevant = relevant or [True] * len(texts)
    return Turn("user", "u", [Sentence(t, r) for t, r in zip(texts, relevant)])


def _agent(text):
    return Turn("agent", "a", [Sentence(text, True)])


def _keep_relevant(turn):
    return " ".join(s.text for s in turn.sentences if s.relevant)


def test_build_context_single_turn():
    ctx = build_context([_user("Book Monday.")], _keep_relevant, summarize_agent_turn)
    assert ctx.history == [("user", "Book Monday.")]
    assert ctx.last_user_turn == "Book Monday."


def test_build_context_three_turns_tags_agent():
    prefix = [_user("Set up a call.", "The kids are loud.", relevant=[True, False]),
              _agent("Which day works for you?"), _user("Friday is fine.")]
    ctx = build_context(prefix, _keep_relevant, summarize_agent_turn)
    assert [r for r, _ in ctx.history] == ["user", "agent", "user"]
    assert ctx.history[0][1] == "Set up a call."
    assert ctx.history[1][1] in ACTIONS
    full = _user("Book it.", "Then send the notes.")
    assert build_context([full], _keep_relevant).last_user_turn == full.text


def test_build_context_errors():
    with pytest.raises(ValueError):
        build_context([])
    with pytest.raises(ValueError):
        build_context([_user("hi"), _agent("ok")])
    with pytest.raises(ValueError):
        SummarizedContext([("user", "a"), ("user", "b")], "b")


def test_serialize_examples():
    assert serialize_context(SummarizedContext([("user", "hi")], "hi")) == (["[CLS]", "[USR]", "hi"], [0, 0, 0])
    ctx = SummarizedContext([("user", "a"), ("agent", "ask_day"), ("user", "b")], "b")
    tokens, segs = serialize_context(ctx)
    assert tokens == ["[CLS]", "[USR]", "a", "[SYS]", "ask_day", "[USR]", "b"]
    assert segs == [0, 2, 2, 1, 1, 0, 0]


def test_serialize_front_truncation():
    ctx = SummarizedContext([("user", "one two three four"), ("agent", "ask_day"), ("user", "last bit")], "last bit")
    tokens, segs = serialize_context(ctx, max_len=5)
    assert tokens == ["[CLS]", "ask_day", "[USR]", "last", "bit"]
    assert len(segs) == 5
    long = SummarizedContext([("user", "x y z w v u")], "x y z w v u")
    assert serialize_context(long, max_len=5)[0] == ["[CLS]", "[USR]", "x", "y", "z"]
    assert serialize_turn("a b c d", max_len=3) == ["[CLS]", "a", "b"]


texts = st.lists(st.sampled_from(["a", "b c", "ask_day", "d e f"]), min_size=1, max_size=5)


def _alternating(entries):
    n = len(entries)
    roles = ["user" if (n - 1 - k) % 2 == 0 else "agent" for k in range(n)]
    return SummarizedContext(list(zip(roles, entries)), entries[-1])


@given(texts, texts)
def test_serialize_is_injective(a, b):
    ca, cb = _alternating(a), _alternating(b)
    if ca.history != cb.history:
        assert serialize_context(ca) != serialize_context(cb)


def test_serialize_role_change_changes_tokens():
    a = SummarizedContext([("user", "x"), ("agent", "y"), ("user", "z")], "z")
    b = SummarizedContext([("agent", "x"), ("user", "y"), ("agent", "w"), ("user", "z")], "z")
    assert serialize_context(a)[0] != serialize_context(b)[0]


@pytest.fixture
def ctxr():
    vocab = build_vocab(["please book monday", "call dana"], extra_tokens=ACTIONS)
    enc = dict(vocab_size=len(vocab), d_e=8, d_k=8, depth=1, heads=2, d_ff=16, max_len=32, n_segments=4)
    store = ParamStore(dtype=np.float64, seed=3)
    return Contextualizer(vocab, store, EncoderConfig(**enc), EncoderConfig(**enc))


def test_encode_shapes_and_pooling(ctxr):
    tokens, segs = serialize_context(SummarizedContext([("user", "please book monday")], "please book monday"))
    pair = ctxr.encode_dialogue(tokens, segs)
    assert pair.tokens.shape == (len(tokens), 8)
    np.testing.assert_array_equal(pair.cls, pair.tokens[0])
    assert np.all(np.isfinite(pair.tokens))
    one = ctxr.encode_turn(["[CLS]"])
    assert one.tokens.shape == (1, 8)
    with pytest.raises(ValueError):
        ctxr.encode_turn([])


def test_encoders_have_distinct_parameters(ctxr):
    toks = serialize_turn("please book monday")
    assert not np.allclose(ctxr.encode_dialogue(toks).cls, ctxr.encode_turn(toks).cls)
    names = ctxr.store.names()
    assert any(n.startswith("dialog.") for n in names) and any(n.startswith("turn.") for n in names)


def test_d_k_mismatch_rejected():
    store = ParamStore(dtype=np.float64)
    with pytest.raises(DimensionError):
        Contextualizer(None, store, EncoderConfig(vocab_size=10, d_k=8, heads=2), EncoderConfig(vocab_size=10, d_k=4, heads=2))


def test_recurrent_encoder_and_length_limit(ctxr):
    vocab = ctxr.vocab
    cfg = EncoderConfig(vocab_size=len(vocab), d_e=6, d_k=4, max_len=8, architecture="recurrent")
    rec = Contextualizer(vocab, ParamStore(dtype=np.float64, seed=1), cfg, None)
    pair = rec.encode_dialogue(serialize_turn("please book monday call dana"))
    assert pair.tokens.shape == (6, 4) and np.all(np.isfinite(pair.tokens))
    with pytest.raises(DimensionError):
        rec.encode_dialogue(["book"] * 9)
    with pytest.raises(ValueError):
        rec.encode_turn(["book"])


def test_corpus_inputs_finite(small_corpus, small_vocab):
    enc = dict(vocab_size=len(small_vocab), d_e=8, d_k=8, depth=1, heads=2, d_ff=16, max_len=256, n_segments=16)
    c = Contextualizer(small_vocab, ParamStore(seed=0), EncoderConfig(**enc), EncoderConfig(**enc))
    for d in small_corpus["val"][:10]:
        last = d.user_turn_indices()[-1]
        ctx = build_context(d.prefix(last), None, summarize_agent_turn)
        pair = c.encode_dialogue(*serialize_context(ctx))
        assert np.all(np.isfinite(pair.tokens))
