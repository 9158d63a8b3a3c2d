import math

import numpy as np
import pytest

from emtod.nn import (
    GRU,
    BiGRU,
    DeterminismError,
    DimensionError,
    Embedding,
    FeedForward,
    LayerNorm,
    Linear,
    MultiHeadSelfAttention,
    ParamStore,
    TransformerBlock,
    grad_check,
    gru_step,
)

TOL = 1e-4


def projected_loss(forward, backward, rng, shape_hint=None):
    """Loss = sum(out * R) for a fixed random R, so every output entry matters."""
    box = {}

    def loss_fn():
        out, cache = forward()
        if "R" not in box:
            box["R"] = rng.normal(size=out.shape)
        backward(box["R"], cache)
        return float(np.sum(out * box["R"]))

    return loss_fn


def test_grad_check_square():
    store = ParamStore(np.float64)
    store.add("w", np.array(3.0))

    def loss_fn():
        w = store["w"]
        store.accumulate("w", 2 * w)
        return float(w * w)

    assert grad_check(loss_fn, store) < 1e-9


def test_grad_check_skips_excluded():
    store = ParamStore(np.float64)
    store.add("a.w", np.array([1.0, 2.0]))
    store.add("b.w", np.array([1.0]))

    def loss_fn():
        store.accumulate("a.w", 2 * store["a.w"])  # b.w gradient deliberately wrong
        return float(np.sum(store["a.w"] ** 2) + 5 * store["b.w"][0])

    worst, details = grad_check(loss_fn, store, exclude=("b",), return_details=True)
    assert worst < 1e-9
    assert "b.w" not in details


def test_grad_check_detects_nondeterminism():
    store = ParamStore(np.float64)
    store.add("w", np.array(1.0))
    calls = iter(range(100))

    def loss_fn():
        return float(next(calls))

    with pytest.raises(DeterminismError):
        grad_check(loss_fn, store)


def test_grad_check_needs_float64():
    with pytest.raises(TypeError):
        grad_check(lambda: 0.0, ParamStore(np.float32))


def _mask(rng, B, T):
    lengths = rng.integers(1, T + 1, size=B)
    lengths[0] = T
    return (np.arange(T)[None, :] < lengths[:, None]).astype(np.float64)


def test_linear_and_layernorm_grad(rng):
    store = ParamStore(np.float64, seed=1)
    lin = Linear(store, "lin", 4, 3)
    ln = LayerNorm(store, "ln", 3)
    store.set("ln.gain", rng.normal(size=3))
    x = rng.normal(size=(2, 5, 4))

    def fwd():
        h, c1 = lin.forward(x)
        y, c2 = ln.forward(h)
        return y, (c1, c2)

    def bwd(d, cache):
        c1, c2 = cache
        lin.backward(ln.backward(d, c2), c1)

    assert grad_check(projected_loss(fwd, bwd, rng), store) <= TOL


def test_layer_input_gradients(rng):
    """dx from backward matches finite differences, for every layer type."""
    store = ParamStore(np.float64, seed=2)
    layers = {
        "linear": Linear(store, "lin", 4, 4),
        "layernorm": LayerNorm(store, "ln", 4),
        "ffn": FeedForward(store, "ffn", 4, 6),
        "gru": GRU(store, "gru", 4, 4),
        "bigru": BiGRU(store, "bigru", 4, 2),
    }
    x = rng.normal(size=(2, 3, 4))
    mask = np.array([[1, 1, 1], [1, 1, 0]], dtype=np.float64)
    for name, layer in layers.items():
        args = (mask,) if name in ("gru", "bigru") else ()
        out, cache = layer.forward(x, *args)
        R = rng.normal(size=out.shape)
        dx = layer.backward(R, cache)
        store.zero_grad()
        num = np.zeros_like(x)
        for idx in np.ndindex(x.shape):
            xp = x.copy()
            xp[idx] += 1e-6
            xm = x.copy()
            xm[idx] -= 1e-6
            num[idx] = (np.sum(layer.forward(xp, *args)[0] * R) - np.sum(layer.forward(xm, *args)[0] * R)) / 2e-6
        np.testing.assert_allclose(dx, num, rtol=1e-5, atol=1e-7, err_msg=name)


def test_embedding_grad_and_accumulation(rng):
    store = ParamStore(np.float64, seed=3)
    emb = Embedding(store, "emb", 6, 3)
    ids = np.array([[0, 2, 2, 5], [1, 2, 0, 0]])
    assert grad_check(projected_loss(lambda: emb.forward(ids), emb.backward, rng), store) <= TOL
    # segment-sum backward agrees with np.add.at
    dout = rng.normal(size=(2, 4, 3))
    store.zero_grad()
    emb.backward(dout, ids)
    ref = np.zeros((6, 3))
    np.add.at(ref, ids.reshape(-1), dout.reshape(-1, 3))
    np.testing.assert_allclose(store.grads["emb.weight"], ref, atol=1e-12)
    with pytest.raises(DimensionError):
        emb.forward(np.array([[6]]))


def test_gru_grad_with_padding(rng):
    for reverse in (False, True):
        store = ParamStore(np.float64, seed=4)
        gru = GRU(store, "g", 3, 4, reverse=reverse)
        x = rng.normal(size=(3, 5, 3))
        mask = _mask(rng, 3, 5)
        loss = projected_loss(lambda: gru.forward(x, mask), gru.backward, rng)
        assert grad_check(loss, store) <= TOL


def test_bigru_grad(rng):
    store = ParamStore(np.float64, seed=5)
    rnn = BiGRU(store, "rnn", 3, 2)
    x = rng.normal(size=(2, 4, 3))
    mask = _mask(rng, 2, 4)
    assert grad_check(projected_loss(lambda: rnn.forward(x, mask), rnn.backward, rng), store) <= TOL


def test_attention_and_block_grad(rng):
    store = ParamStore(np.float64, seed=6)
    blk = TransformerBlock(store, "blk", 4, 2, 6)
    x = rng.normal(size=(2, 5, 4))
    mask = _mask(rng, 2, 5)
    assert grad_check(projected_loss(lambda: blk.forward(x, mask), blk.backward, rng), store) <= TOL


def test_attention_ignores_padded_keys(rng):
    store = ParamStore(np.float64, seed=7)
    att = MultiHeadSelfAttention(store, "att", 4, 2)
    x = rng.normal(size=(1, 4, 4))
    mask = np.array([[1.0, 1.0, 0.0, 0.0]])
    y, _ = att.forward(x, mask)
    x2 = x.copy()
    x2[0, 2:] = rng.normal(size=(2, 4)) * 100
    y2, _ = att.forward(x2, mask)
    np.testing.assert_allclose(y[0, :2], y2[0, :2], atol=1e-12)
    with pytest.raises(DimensionError):
        MultiHeadSelfAttention(ParamStore(), "bad", 5, 2)


# ---------------------------------------------------------------------------
# gru_step
# ---------------------------------------------------------------------------


def _zero_store(d_in, d_h):
    store = ParamStore(np.float64)
    GRU(store, "g", d_in, d_h)
    for n in store.names():
        store.set(n, np.zeros_like(store[n]))
    return store


def test_gru_step_zero_fixed_point():
    store = _zero_store(3, 2)
    np.testing.assert_array_equal(gru_step(np.ones(3), np.zeros(2), store, "g"), np.zeros(2))


def _oracle_step(x, h, wx, uzr, un, b):
    d_h = len(h)
    sig = lambda v: 1.0 / (1.0 + math.exp(-v))  # noqa: E731
    z = [sig(sum(x[i] * wx[i][j] for i in range(len(x))) + sum(h[i] * uzr[i][j] for i in range(d_h)) + b[j])
         for j in range(d_h)]
    r = [sig(sum(x[i] * wx[i][d_h + j] for i in range(len(x))) + sum(h[i] * uzr[i][d_h + j] for i in range(d_h))
             + b[d_h + j]) for j in range(d_h)]
    n = [math.tanh(sum(x[i] * wx[i][2 * d_h + j] for i in range(len(x)))
                   + sum(r[i] * h[i] * un[i][j] for i in range(d_h)) + b[2 * d_h + j]) for j in range(d_h)]
    return [(1 - z[j]) * n[j] + z[j] * h[j] for j in range(d_h)]


def test_gru_step_matches_straight_line_oracle(rng):
    store = ParamStore(np.float64, seed=8)
    GRU(store, "g", 3, 2)
    x = rng.normal(size=3)
    h = rng.uniform(-0.9, 0.9, size=2)
    got = gru_step(x, h, store, "g")
    ref = _oracle_step(x.tolist(), h.tolist(), store["g.w_x"].tolist(), store["g.u_zr"].tolist(),
                       store["g.u_n"].tolist(), store["g.bias"].tolist())
    np.testing.assert_allclose(got, ref, atol=1e-12)
    np.testing.assert_array_equal(got, gru_step(x, h, store, "g"))
    assert np.all(np.abs(got) < 1)


def test_gru_sequence_equals_repeated_steps(rng):
    store = ParamStore(np.float64, seed=9)
    gru = GRU(store, "g", 3, 4)
    x = rng.normal(size=(1, 4, 3))
    out, _ = gru.forward(x)
    h = np.zeros(4)
    for t in range(4):
        h = gru_step(x[0, t], h, store, "g")
        np.testing.assert_allclose(out[0, t], h, atol=1e-12)
    with pytest.raises(DimensionError):
        gru_step(np.zeros(2), np.zeros(4), store, "g")


def test_gru_padding_matches_unpadded(rng):
    store = ParamStore(np.float64, seed=10)
    rnn = BiGRU(store, "r", 3, 2)
    x = rng.normal(size=(1, 3, 3))
    padded = np.concatenate([x, rng.normal(size=(1, 2, 3))], axis=1)
    mask = np.array([[1, 1, 1, 0, 0]], dtype=np.float64)
    a, _ = rnn.forward(x)
    b, _ = rnn.forward(padded, mask)
    np.testing.assert_allclose(b[:, :3], a, atol=1e-12)
