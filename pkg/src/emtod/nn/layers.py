"""Layers with hand-written forward and backward passes."""

from __future__ import annotations

import numpy as np

from .core import (
    MASK_FILL,
    DimensionError,
    ParamStore,
    check_last_dim,
    gelu,
    gelu_backward,
    sigmoid,
    softmax,
    softmax_backward,
    tanh_backward,
)


class Linear:
    """``y = x @ W + b`` over the trailing axis of ``x``."""

    def __init__(self, store: ParamStore, name: str, d_in: int, d_out: int, bias: bool = True):
        self.store = store
        self.name = name
        self.d_in = d_in
        self.d_out = d_out
        self.w = f"{name}.weight"
        self.b = f"{name}.bias" if bias else None
        store.uniform(self.w, (d_in, d_out), fan_in=d_in)
        if bias:
            store.uniform(self.b, (d_out,), fan_in=d_in)

    def forward(self, x: np.ndarray):
        check_last_dim(x, self.d_in, self.name)
        y = x @ self.store[self.w]
        if self.b is not None:
            y = y + self.store[self.b]
        return y, x

    def backward(self, dout: np.ndarray, cache) -> np.ndarray:
        x = cache
        x2 = x.reshape(-1, self.d_in)
        d2 = dout.reshape(-1, self.d_out)
        self.store.accumulate(self.w, x2.T @ d2)
        if self.b is not None:
            self.store.accumulate(self.b, d2.sum(axis=0))
        return dout @ self.store[self.w].T


def linear(x: np.ndarray, store: ParamStore, name: str) -> np.ndarray:
    """Functional form of :class:`Linear` for parameters already registered."""
    w = store[f"{name}.weight"]
    if x.shape[-1] != w.shape[0]:
        raise DimensionError(f"{name}: expected trailing dimension {w.shape[0]}, got input shape {x.shape}")
    y = x @ w
    if f"{name}.bias" in store:
        y = y + store[f"{name}.bias"]
    return y


class Embedding:
    def __init__(self, store: ParamStore, name: str, n: int, d: int):
        self.store = store
        self.name = name
        self.w = f"{name}.weight"
        self.n = n
        store.uniform(self.w, (n, d), fan_in=d)

    def forward(self, ids: np.ndarray):
        if ids.size and (ids.min() < 0 or ids.max() >= self.n):
            raise DimensionError(f"{self.name}: index out of range [0, {self.n})")
        return self.store[self.w][ids], ids

    def backward(self, dout: np.ndarray, cache) -> None:
        ids = cache
        g = self.store.grads[self.w]
        flat = ids.reshape(-1)
        if flat.size == 0:
            return
        # Sorted segment sums: much faster than np.add.at and order-stable.
        order = np.argsort(flat, kind="stable")
        sorted_ids = flat[order]
        starts = np.flatnonzero(np.r_[True, sorted_ids[1:] != sorted_ids[:-1]])
        g[sorted_ids[starts]] += np.add.reduceat(dout.reshape(-1, g.shape[1])[order], starts, axis=0)


class LayerNorm:
    def __init__(self, store: ParamStore, name: str, d: int, eps: float = 1e-5):
        self.store = store
        self.name = name
        self.d = d
        self.eps = eps
        self.g = f"{name}.gain"
        self.b = f"{name}.bias"
        store.ones(self.g, (d,))
        store.zeros(self.b, (d,))

    def forward(self, x: np.ndarray):
        check_last_dim(x, self.d, self.name)
        mu = x.mean(axis=-1, keepdims=True)
        xc = x - mu
        inv = 1.0 / np.sqrt((xc * xc).mean(axis=-1, keepdims=True) + self.eps)
        xhat = xc * inv
        return xhat * self.store[self.g] + self.store[self.b], (xhat, inv)

    def backward(self, dout: np.ndarray, cache) -> np.ndarray:
        xhat, inv = cache
        d2 = dout.reshape(-1, self.d)
        self.store.accumulate(self.g, (d2 * xhat.reshape(-1, self.d)).sum(axis=0))
        self.store.accumulate(self.b, d2.sum(axis=0))
        dxhat = dout * self.store[self.g]
        return inv * (
            dxhat
            - dxhat.mean(axis=-1, keepdims=True)
            - xhat * (dxhat * xhat).mean(axis=-1, keepdims=True)
        )


# ---------------------------------------------------------------------------
# gated recurrent unit
# ---------------------------------------------------------------------------


def _register_gru(store: ParamStore, name: str, d_in: int, d_h: int) -> None:
    store.uniform(f"{name}.w_x", (d_in, 3 * d_h), fan_in=d_h)
    store.uniform(f"{name}.u_zr", (d_h, 2 * d_h), fan_in=d_h)
    store.uniform(f"{name}.u_n", (d_h, d_h), fan_in=d_h)
    store.uniform(f"{name}.bias", (3 * d_h,), fan_in=d_h)


def gru_step(x_t: np.ndarray, h_prev: np.ndarray, store: ParamStore, name: str) -> np.ndarray:
    """One recurrent update.

    z = sigmoid(x Wz + h Uz + bz), r = sigmoid(x Wr + h Ur + br),
    n = tanh(x Wn + (r * h) Un + bn), h' = (1 - z) * n + z * h.
    Works on a single vector or a batch of rows.
    """
    w_x = store[f"{name}.w_x"]
    d_h = w_x.shape[1] // 3
    if x_t.shape[-1] != w_x.shape[0] or h_prev.shape[-1] != d_h:
        raise DimensionError(
            f"{name}: expected x[..., {w_x.shape[0]}] and h[..., {d_h}], "
            f"got {x_t.shape} and {h_prev.shape}"
        )
    xw = x_t @ w_x + store[f"{name}.bias"]
    zr = sigmoid(xw[..., : 2 * d_h] + h_prev @ store[f"{name}.u_zr"])
    z, r = zr[..., :d_h], zr[..., d_h:]
    n = np.tanh(xw[..., 2 * d_h :] + (r * h_prev) @ store[f"{name}.u_n"])
    return (1.0 - z) * n + z * h_prev


class GRU:
    """Unidirectional GRU over a padded batch ``[B, T, d_in]``.

    Positions where ``mask`` is 0 carry the previous state through unchanged,
    so with right padding the forward pass ends on the last real token at
    index ``T - 1`` and the reverse pass starts fresh at the last real token.
    """

    def __init__(self, store: ParamStore, name: str, d_in: int, d_h: int, reverse: bool = False):
        self.store = store
        self.name = name
        self.d_in = d_in
        self.d_h = d_h
        self.reverse = reverse
        _register_gru(store, name, d_in, d_h)

    def forward(self, x: np.ndarray, mask: np.ndarray | None = None):
        check_last_dim(x, self.d_in, self.name)
        B, T, _ = x.shape
        H = self.d_h
        s = self.store
        if mask is None:
            mask = np.ones((B, T), dtype=x.dtype)
        mask = mask.astype(x.dtype)
        xw = x @ s[f"{self.name}.w_x"] + s[f"{self.name}.bias"]
        u_zr = s[f"{self.name}.u_zr"]
        u_n = s[f"{self.name}.u_n"]
        h = np.zeros((B, H), dtype=x.dtype)
        out = np.empty((B, T, H), dtype=x.dtype)
        steps = []
        order = range(T - 1, -1, -1) if self.reverse else range(T)
        for t in order:
            zr = sigmoid(xw[:, t, : 2 * H] + h @ u_zr)
            z, r = zr[:, :H], zr[:, H:]
            rh = r * h
            n = np.tanh(xw[:, t, 2 * H :] + rh @ u_n)
            m = mask[:, t, None]
            h_new = (1.0 - z) * n + z * h
            steps.append((h, z, r, rh, n, m))
            h = m * h_new + (1.0 - m) * h
            out[:, t] = h
        return out, (x, steps)

    def backward(self, dout: np.ndarray, cache) -> np.ndarray:
        x, steps = cache
        B, T, _ = x.shape
        H = self.d_h
        s = self.store
        u_zr = s[f"{self.name}.u_zr"]
        u_n = s[f"{self.name}.u_n"]
        dxw = np.zeros((B, T, 3 * H), dtype=x.dtype)
        du_zr = np.zeros_like(u_zr)
        du_n = np.zeros_like(u_n)
        dh = np.zeros((B, H), dtype=x.dtype)
        order = range(T) if self.reverse else range(T - 1, -1, -1)
        for t, (h_prev, z, r, rh, n, m) in zip(order, reversed(steps)):
            dh_t = dh + dout[:, t]
            dh_new = m * dh_t
            dh_prev = (1.0 - m) * dh_t + dh_new * z
            dn_pre = tanh_backward(dh_new * (1.0 - z), n)
            dz_pre = dh_new * (h_prev - n) * z * (1.0 - z)
            drh = dn_pre @ u_n.T
            du_n += rh.T @ dn_pre
            dr_pre = drh * h_prev * r * (1.0 - r)
            dh_prev += drh * r
            dzr = np.concatenate([dz_pre, dr_pre], axis=1)
            du_zr += h_prev.T @ dzr
            dh_prev += dzr @ u_zr.T
            dxw[:, t, : 2 * H] = dzr
            dxw[:, t, 2 * H :] = dn_pre
            dh = dh_prev
        s.accumulate(f"{self.name}.u_zr", du_zr)
        s.accumulate(f"{self.name}.u_n", du_n)
        d2 = dxw.reshape(-1, 3 * H)
        s.accumulate(f"{self.name}.w_x", x.reshape(-1, self.d_in).T @ d2)
        s.accumulate(f"{self.name}.bias", d2.sum(axis=0))
        return dxw @ s[f"{self.name}.w_x"].T


class BiGRU:
    """Forward and reverse GRUs over the same input; outputs are concatenated."""

    def __init__(self, store: ParamStore, name: str, d_in: int, d_h: int):
        self.fwd = GRU(store, f"{name}.fwd", d_in, d_h)
        self.bwd = GRU(store, f"{name}.bwd", d_in, d_h, reverse=True)
        self.d_h = d_h

    def forward(self, x: np.ndarray, mask: np.ndarray | None = None):
        hf, cf = self.fwd.forward(x, mask)
        hb, cb = self.bwd.forward(x, mask)
        return np.concatenate([hf, hb], axis=-1), (cf, cb)

    def backward(self, dout: np.ndarray, cache) -> np.ndarray:
        cf, cb = cache
        H = self.d_h
        return self.fwd.backward(dout[..., :H], cf) + self.bwd.backward(dout[..., H:], cb)


# ---------------------------------------------------------------------------
# self-attention encoder block
# ---------------------------------------------------------------------------


class MultiHeadSelfAttention:
    # The key projection has no bias: a key bias adds the same constant to
    # every score of a query row and therefore never changes the softmax.

    def __init__(self, store: ParamStore, name: str, d: int, heads: int):
        if d % heads:
            raise DimensionError(f"{name}: model dim {d} not divisible by {heads} heads")
        self.d = d
        self.heads = heads
        self.q = Linear(store, f"{name}.q", d, d)
        self.k = Linear(store, f"{name}.k", d, d, bias=False)
        self.v = Linear(store, f"{name}.v", d, d)
        self.o = Linear(store, f"{name}.o", d, d)

    def _split(self, x: np.ndarray) -> np.ndarray:
        B, T, _ = x.shape
        return x.reshape(B, T, self.heads, self.d // self.heads).transpose(0, 2, 1, 3)

    def _merge(self, x: np.ndarray) -> np.ndarray:
        B, _, T, _ = x.shape
        return x.transpose(0, 2, 1, 3).reshape(B, T, self.d)

    def forward(self, x: np.ndarray, mask: np.ndarray):
        q, cq = self.q.forward(x)
        k, ck = self.k.forward(x)
        v, cv = self.v.forward(x)
        qh, kh, vh = self._split(q), self._split(k), self._split(v)
        scale = 1.0 / float(np.sqrt(self.d // self.heads))
        scores = (qh @ kh.transpose(0, 1, 3, 2)) * scale
        scores = scores + ((1.0 - mask) * MASK_FILL).astype(x.dtype)[:, None, None, :]
        w = softmax(scores)
        ctx = self._merge(w @ vh)
        out, co = self.o.forward(ctx)
        return out, (cq, ck, cv, co, qh, kh, vh, w, scale)

    def backward(self, dout: np.ndarray, cache) -> np.ndarray:
        cq, ck, cv, co, qh, kh, vh, w, scale = cache
        dctx = self._split(self.o.backward(dout, co))
        dw = dctx @ vh.transpose(0, 1, 3, 2)
        dvh = w.transpose(0, 1, 3, 2) @ dctx
        ds = softmax_backward(dw, w) * scale
        dqh = ds @ kh
        dkh = ds.transpose(0, 1, 3, 2) @ qh
        dx = self.q.backward(self._merge(dqh), cq)
        dx += self.k.backward(self._merge(dkh), ck)
        dx += self.v.backward(self._merge(dvh), cv)
        return dx


class FeedForward:
    def __init__(self, store: ParamStore, name: str, d: int, d_ff: int):
        self.up = Linear(store, f"{name}.up", d, d_ff)
        self.down = Linear(store, f"{name}.down", d_ff, d)

    def forward(self, x: np.ndarray):
        h, c1 = self.up.forward(x)
        a, cg = gelu(h)
        y, c2 = self.down.forward(a)
        return y, (c1, cg, c2)

    def backward(self, dout: np.ndarray, cache) -> np.ndarray:
        c1, cg, c2 = cache
        return self.up.backward(gelu_backward(self.down.backward(dout, c2), cg), c1)


class TransformerBlock:
    """Pre-norm block: ``x + attn(ln(x))`` then ``x + ffn(ln(x))``."""

    def __init__(self, store: ParamStore, name: str, d: int, heads: int, d_ff: int):
        self.ln1 = LayerNorm(store, f"{name}.ln1", d)
        self.attn = MultiHeadSelfAttention(store, f"{name}.attn", d, heads)
        self.ln2 = LayerNorm(store, f"{name}.ln2", d)
        self.ffn = FeedForward(store, f"{name}.ffn", d, d_ff)

    def forward(self, x: np.ndarray, mask: np.ndarray):
        a, c1 = self.ln1.forward(x)
        a, c2 = self.attn.forward(a, mask)
        x = x + a
        f, c3 = self.ln2.forward(x)
        f, c4 = self.ffn.forward(f)
        return x + f, (c1, c2, c3, c4)

    def backward(self, dout: np.ndarray, cache) -> np.ndarray:
        c1, c2, c3, c4 = cache
        dx = dout + self.ln2.backward(self.ffn.backward(dout, c4), c3)
        return dx + self.ln1.backward(self.attn.backward(dx, c2), c1)
