"""Parameter storage and the elementwise functions shared by every layer.

Tensors are plain ``numpy.ndarray`` objects. Every layer in this package
follows the same convention: ``forward`` returns ``(out, cache)`` and
``backward(dout, cache)`` returns the input gradient while accumulating
parameter gradients into the owning :class:`ParamStore`.
"""

from __future__ import annotations

import zlib
from collections.abc import Iterable, Iterator

import numpy as np

MASK_FILL = -1e9
PROB_EPS = 1e-7


class DimensionError(ValueError):
    """Raised when an input does not match a registered parameter shape."""


class ParamStore:
    """Named parameters plus gradient accumulators of identical shape.

    Names are dotted paths such as ``"turn.block0.attn.q.weight"``. Iteration
    is always in sorted-name order so optimizers and checkpoints are
    deterministic regardless of construction order.
    """

    def __init__(self, dtype=np.float32, seed: int = 0):
        self.dtype = np.dtype(dtype)
        self.seed = int(seed)
        self.params: dict[str, np.ndarray] = {}
        self.grads: dict[str, np.ndarray] = {}

    def __contains__(self, name: str) -> bool:
        return name in self.params

    def __getitem__(self, name: str) -> np.ndarray:
        return self.params[name]

    def __len__(self) -> int:
        return len(self.params)

    def __iter__(self) -> Iterator[str]:
        return iter(self.names())

    def names(self, prefix: str | None = None) -> list[str]:
        names = sorted(self.params)
        if prefix is None:
            return names
        return [n for n in names if in_namespace(n, prefix)]

    def add(self, name: str, value: np.ndarray) -> np.ndarray:
        if name in self.params:
            raise KeyError(f"parameter {name!r} already registered")
        value = np.array(value, dtype=self.dtype)
        self.params[name] = value
        self.grads[name] = np.zeros_like(value)
        return value

    def rng_for(self, name: str) -> np.random.Generator:
        # Per-name streams keep initialization independent of registration order.
        return np.random.default_rng([self.seed, zlib.crc32(name.encode("utf-8"))])

    def uniform(self, name: str, shape: tuple[int, ...], fan_in: int) -> np.ndarray:
        bound = 1.0 / np.sqrt(max(fan_in, 1))
        return self.add(name, self.rng_for(name).uniform(-bound, bound, size=shape))

    def zeros(self, name: str, shape: tuple[int, ...]) -> np.ndarray:
        return self.add(name, np.zeros(shape))

    def ones(self, name: str, shape: tuple[int, ...]) -> np.ndarray:
        return self.add(name, np.ones(shape))

    def set(self, name: str, value: np.ndarray) -> None:
        """Overwrite a parameter in place, keeping its shape."""
        arr = self.params[name]
        value = np.asarray(value, dtype=self.dtype)
        if value.shape != arr.shape:
            raise DimensionError(f"{name}: expected shape {arr.shape}, got {value.shape}")
        arr[...] = value

    def accumulate(self, name: str, grad: np.ndarray) -> None:
        self.grads[name] += grad

    def zero_grad(self) -> None:
        for g in self.grads.values():
            g.fill(0.0)

    def astype(self, dtype) -> None:
        self.dtype = np.dtype(dtype)
        for name in self.params:
            self.params[name] = self.params[name].astype(self.dtype)
            self.grads[name] = np.zeros_like(self.params[name])

    def num_params(self, prefix: str | None = None) -> int:
        return int(sum(self.params[n].size for n in self.names(prefix)))

    def namespaces(self) -> list[str]:
        return sorted({n.split(".", 1)[0] for n in self.params})

    def snapshot(self) -> dict[str, np.ndarray]:
        return {n: self.params[n].copy() for n in self.names()}


def in_namespace(name: str, prefix: str) -> bool:
    prefix = prefix.rstrip(".")
    return name == prefix or name.startswith(prefix + ".")


def in_any_namespace(name: str, prefixes: Iterable[str]) -> bool:
    return any(in_namespace(name, p) for p in prefixes)


def check_last_dim(x: np.ndarray, expected: int, name: str) -> None:
    if x.ndim == 0 or x.shape[-1] != expected:
        raise DimensionError(
            f"{name}: expected trailing dimension {expected}, got input shape {x.shape}"
        )


# ---------------------------------------------------------------------------
# elementwise functions
# ---------------------------------------------------------------------------


def sigmoid(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x)
    out = np.empty_like(x, dtype=np.result_type(x, np.float32))
    pos = x >= 0
    # Split by sign so exp never overflows.
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def sigmoid_backward(dout: np.ndarray, out: np.ndarray) -> np.ndarray:
    return dout * out * (1.0 - out)


def softmax(scores: np.ndarray, axis: int = -1) -> np.ndarray:
    shifted = scores - np.max(scores, axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / np.sum(e, axis=axis, keepdims=True)


def softmax_backward(dout: np.ndarray, w: np.ndarray, axis: int = -1) -> np.ndarray:
    return w * (dout - np.sum(dout * w, axis=axis, keepdims=True))


def tanh_backward(dout: np.ndarray, out: np.ndarray) -> np.ndarray:
    return dout * (1.0 - out * out)


_GELU_C = float(np.sqrt(2.0 / np.pi))


def gelu(x: np.ndarray) -> tuple[np.ndarray, tuple]:
    """Tanh-approximated GELU; smooth, so finite differences stay clean."""
    inner = _GELU_C * (x + 0.044715 * (x * x * x))
    t = np.tanh(inner)
    return 0.5 * x * (1.0 + t), (x, t)


def gelu_backward(dout: np.ndarray, cache: tuple) -> np.ndarray:
    x, t = cache
    dinner = _GELU_C * (1.0 + 3 * 0.044715 * x * x)
    return dout * (0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * dinner)


# ---------------------------------------------------------------------------
# losses
# ---------------------------------------------------------------------------


def bce_loss(p: np.ndarray, y: np.ndarray, eps: float = PROB_EPS) -> tuple[float, np.ndarray]:
    """Mean binary cross entropy over every entry; returns (loss, dL/dp).

    Probabilities are clamped to ``[eps, 1 - eps]``; clamped entries get a
    zero gradient, which is the exact derivative of the clamp.
    """
    p = np.asarray(p)
    y = np.asarray(y, dtype=p.dtype)
    if p.shape != y.shape:
        raise DimensionError(f"bce_loss: prediction shape {p.shape} != target shape {y.shape}")
    n = max(p.size, 1)
    pc = np.clip(p, eps, 1.0 - eps)
    loss = -np.sum(y * np.log(pc) + (1.0 - y) * np.log(1.0 - pc)) / n
    dp = (-y / pc + (1.0 - y) / (1.0 - pc)) / n
    dp = np.where((p > eps) & (p < 1.0 - eps), dp, 0.0).astype(p.dtype)
    return float(loss), dp


def sigmoid_bce(logits: np.ndarray, y: np.ndarray, eps: float = PROB_EPS) -> tuple[float, np.ndarray, np.ndarray]:
    """Sigmoid followed by :func:`bce_loss`, with the fused logit gradient.

    Returns ``(loss, probabilities, dL/dlogits)``. The loss value is exactly
    that of ``bce_loss(sigmoid(logits), y)``; the gradient uses the fused
    form ``(p - y) / n``, which agrees with the composed path wherever the
    clamp is inactive and stays finite in 32-bit training.
    """
    if logits.shape != np.shape(y):
        raise DimensionError(f"sigmoid_bce: logits shape {logits.shape} != target shape {np.shape(y)}")
    p = sigmoid(logits)
    y = np.asarray(y, dtype=p.dtype)
    n = max(p.size, 1)
    pc = np.clip(p, eps, 1.0 - eps)
    loss = -np.sum(y * np.log(pc) + (1.0 - y) * np.log(1.0 - pc)) / n
    return float(loss), p, ((p - y) / n).astype(p.dtype)
