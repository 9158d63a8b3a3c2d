"""Scaled dot-product fusion on two-dimensional toy embeddings.

Prints the attention weights of a query over two token rows, then shows how
cross-attention stacks both directions and how the concat baseline differs.
"""

import numpy as np

from emtod.aggregator import attention_weights, fuse_attention, fuse_concat, fuse_cross_attention
from emtod.contextualizer import EmbeddingPair

q = np.array([1.0, 0.0])
tokens = np.eye(2)
print("weights of q over the rows:", attention_weights(q, tokens))
print("output:", fuse_attention(q, tokens))

# Doubling the query sharpens the distribution toward the best-matching row.
for c in (0.5, 1, 2, 8):
    print(f"scale {c}: top weight {attention_weights(c * q, tokens)[0]:.4f}")

rng = np.random.default_rng(0)
dialog = rng.normal(size=(5, 2))
turn = rng.normal(size=(3, 2))
d_pair = EmbeddingPair(cls=dialog[0], tokens=dialog)
t_pair = EmbeddingPair(cls=turn[0], tokens=turn)
cross = fuse_cross_attention(d_pair, t_pair)
print("turn CLS over dialogue tokens:", cross.y1)
print("dialogue CLS over turn tokens:", cross.y2)
print("cross-attention fused:", cross.fused)
print("concat fused:", fuse_concat(d_pair, t_pair).fused)
