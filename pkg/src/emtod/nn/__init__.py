"""Minimal numpy network substrate with analytic backward passes."""

from .checkpoint import (
    Checkpoint,
    CheckpointError,
    CheckpointVersionError,
    config_digest,
    load_checkpoint,
    save_checkpoint,
)
from .core import (
    DimensionError,
    ParamStore,
    bce_loss,
    sigmoid,
    sigmoid_bce,
    softmax,
    softmax_backward,
)
from .gradcheck import DeterminismError, grad_check
from .layers import GRU, BiGRU, Embedding, FeedForward, LayerNorm, Linear, MultiHeadSelfAttention, TransformerBlock, gru_step, linear
from .optim import OptimizerState, adam_step

__all__ = [
    "BiGRU",
    "Checkpoint",
    "CheckpointError",
    "CheckpointVersionError",
    "DeterminismError",
    "DimensionError",
    "Embedding",
    "FeedForward",
    "GRU",
    "LayerNorm",
    "Linear",
    "MultiHeadSelfAttention",
    "OptimizerState",
    "ParamStore",
    "TransformerBlock",
    "adam_step",
    "bce_loss",
    "config_digest",
    "grad_check",
    "gru_step",
    "linear",
    "load_checkpoint",
    "save_checkpoint",
    "sigmoid",
    "sigmoid_bce",
    "softmax",
    "softmax_backward",
]
