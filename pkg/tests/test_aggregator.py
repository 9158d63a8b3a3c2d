import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from emtod.aggregator import (
    ClassifierHead,
    attention_weights,
    decide,
    fuse_attention,
    fuse_concat,
    fuse_cross_attention,
    fused_dim,
    predict_intents,
)
from emtod.contextualizer import EmbeddingPair
from emtod.nn import DimensionError, ParamStore


def _pair(tokens):
    tokens = np.asarray(tokens, dtype=np.float64)
    return EmbeddingPair(cls=tokens[0].copy(), tokens=tokens)


def _oracle_attend(q, rows):
    """Straight-line scaled dot-product attention with python floats."""
    d = len(q)
    scores = [sum(a * b for a, b in zip(q, r)) / math.sqrt(d) for r in rows]
    top = max(scores)
    e = [math.exp(s - top) for s in scores]
    w = [x / sum(e) for x in e]
    return w, [sum(w[i] * rows[i][j] for i in range(len(rows))) for j in range(d)]


def test_concat_examples():
    a = EmbeddingPair(np.array([1.0, 2.0]), np.array([[1.0, 2.0]]))
    b = EmbeddingPair(np.array([3.0, 4.0]), np.array([[3.0, 4.0]]))
    np.testing.assert_array_equal(fuse_concat(a, b).fused, [1, 2, 3, 4])
    np.testing.assert_array_equal(fuse_concat(b, a).fused, [3, 4, 1, 2])
    z = EmbeddingPair(np.zeros(2), np.zeros((1, 2)))
    np.testing.assert_array_equal(fuse_concat(z, z).fused, np.zeros(4))
    with pytest.raises(DimensionError):
        fuse_concat(a, EmbeddingPair(np.zeros(3), np.zeros((1, 3))))


def test_attention_examples():
    # softmax([1/sqrt(2), 0]) evaluated by hand
    w = attention_weights([1.0, 0.0], [[1.0, 0.0], [0.0, 1.0]])
    np.testing.assert_allclose(w, [0.6697615493, 0.3302384507], atol=1e-9)
    np.testing.assert_allclose(fuse_attention(np.array([1.0, 0.0]), np.eye(2)), [0.6697615493, 0.3302384507], atol=1e-9)
    np.testing.assert_allclose(w, [0.66984, 0.33016], atol=1e-4)
    row = np.array([[0.3, -2.0, 5.0]])
    np.testing.assert_array_equal(fuse_attention(np.array([9.0, 1.0, -4.0]), row), row[0])
    same = np.tile([1.5, -0.5], (4, 1))
    np.testing.assert_allclose(fuse_attention(np.array([2.0, 7.0]), same), [1.5, -0.5], atol=1e-12)
    with pytest.raises(DimensionError):
        fuse_attention(np.zeros(3), np.zeros((2, 2)))
    with pytest.raises(DimensionError):
        fuse_attention(np.zeros(2), np.zeros((0, 2)))


def test_cross_attention_against_oracle(rng):
    d_tok = rng.normal(size=(5, 3))
    t_tok = rng.normal(size=(2, 3))
    dialog, turn = _pair(d_tok), _pair(t_tok)
    out = fuse_cross_attention(dialog, turn)
    _, y1 = _oracle_attend(list(t_tok[0]), d_tok.tolist())
    _, y2 = _oracle_attend(list(d_tok[0]), t_tok.tolist())
    np.testing.assert_allclose(out.y1, y1, atol=1e-12)
    np.testing.assert_allclose(out.y2, y2, atol=1e-12)
    np.testing.assert_array_equal(out.fused, np.concatenate([out.y1, out.y2]))
    np.testing.assert_array_equal(out.y1, fuse_attention(turn.cls, dialog.tokens))
    swapped = fuse_cross_attention(dialog, turn, swap=True)
    np.testing.assert_array_equal(swapped.fused, np.concatenate([out.y2, out.y1]))


def test_cross_attention_degenerate_cases(rng):
    a = _pair(rng.normal(size=(1, 4)))
    b = _pair(rng.normal(size=(1, 4)))
    out = fuse_cross_attention(a, b)
    np.testing.assert_array_equal(out.fused, np.concatenate([a.tokens[0], b.tokens[0]]))
    p = _pair(rng.normal(size=(3, 4)))
    same = fuse_cross_attention(p, p)
    np.testing.assert_array_equal(same.y1, same.y2)


finite = st.floats(-5, 5, allow_nan=False)


@given(arrays(np.float64, (4,), elements=finite), arrays(np.float64, (6, 4), elements=finite))
def test_attention_output_in_convex_hull(q, rows):
    out = fuse_attention(q, rows)
    assert np.all(out >= rows.min(axis=0) - 1e-6) and np.all(out <= rows.max(axis=0) + 1e-6)


@given(arrays(np.float64, (3,), elements=finite), arrays(np.float64, (5, 3), elements=finite), finite)
def test_attention_weights_shift_invariant(q, rows, c):
    # Adding c*q/|q|^2*sqrt(d) to every row shifts all scores by the same constant.
    if np.dot(q, q) < 1e-3:
        return
    shift = c * q / np.dot(q, q) * math.sqrt(3)
    np.testing.assert_allclose(attention_weights(q, rows + shift), attention_weights(q, rows), atol=1e-9)


def test_query_scaling_sharpens_monotonically(rng):
    q = rng.normal(size=4)
    rows = rng.normal(size=(6, 4))
    top = int(np.argmax(rows @ q))
    w = [attention_weights(c * q, rows)[top] for c in (0.1, 0.5, 1, 2, 5, 20)]
    assert all(b >= a for a, b in zip(w, w[1:]))


def test_head_examples():
    store = ParamStore(dtype=np.float64)
    head = ClassifierHead(store, 4)
    store.set("head.weight", np.zeros((4, 13)))
    store.set("head.bias", np.zeros(13))
    pred = predict_intents(np.ones(4), head)
    np.testing.assert_array_equal(pred.probabilities, 0.5)
    assert pred.intents == []
    bias = np.zeros(13)
    bias[5] = 10.0
    store.set("head.bias", bias)
    assert np.flatnonzero(predict_intents(np.ones(4), head).predicted).tolist() == [5]
    with pytest.raises(DimensionError):
        predict_intents(np.ones(3), head)


def test_head_matches_hand_sigmoid():
    store = ParamStore(dtype=np.float64)
    head = ClassifierHead(store, 2, n_out=2)
    store.set("head.weight", np.array([[0.5, 2.0], [-1.0, 0.25]]))
    store.set("head.bias", np.array([0.1, -0.3]))
    logits, _ = head.forward(np.array([[0.4, -0.8]]))
    p = 1.0 / (1.0 + np.exp(-logits[0]))
    np.testing.assert_allclose(p, [0.7502601056, 0.5744425168], atol=1e-6)


def test_decide_is_strict_and_dims():
    np.testing.assert_array_equal(decide([0.5, 0.5000001, 0.2]), [0, 1, 0])
    assert fused_dim("attention", 8) == 8
    assert fused_dim("concat", 8) == fused_dim("cross_attention", 8) == 16
    assert fused_dim("cross_attention", 8, "turn_only") == 8
