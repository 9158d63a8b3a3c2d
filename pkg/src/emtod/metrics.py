"""Multi-label intent metrics.

Micro scores pool TP/FP/FN over every (example, intent) pair. Macro scores
average per-intent values over the full label set, so an intent with no
support and no predictions contributes 0. Any 0/0 ratio is 0. Accuracy is
exact match: the predicted set must equal the gold set.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .schema import INTENTS

ACCURACY_DEFINITION = "exact-match (predicted intent set equals gold set)"
TABLE_COLUMNS = ("micro_f1", "macro_f1", "micro_precision", "macro_precision", "accuracy")
COLUMN_LABELS = ("micro-F1", "macro-F1", "micro-P", "macro-P", "acc.")


def _ratio(num: np.ndarray | float, den: np.ndarray | float):
    num = np.asarray(num, dtype=np.float64)
    den = np.asarray(den, dtype=np.float64)
    return np.divide(num, den, out=np.zeros_like(num), where=den > 0)


def _f1(p, r):
    return _ratio(2 * p * r, p + r)


def _mean(values: np.ndarray) -> float:
    # Correctly rounded sum, so the result does not depend on summation order.
    return math.fsum(values.tolist()) / len(values) if len(values) else 0.0


@dataclass
class MetricsReport:
    micro_f1: float
    macro_f1: float
    micro_precision: float
    macro_precision: float
    micro_recall: float
    macro_recall: float
    accuracy: float
    n_examples: int
    per_intent: dict[str, dict] = field(default_factory=dict)
    accuracy_definition: str = ACCURACY_DEFINITION

    def row(self) -> list[float]:
        return [getattr(self, c) for c in TABLE_COLUMNS]

    def to_dict(self) -> dict:
        return asdict(self)


def confusion_counts(pred: np.ndarray, gold: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-label TP, FP, FN vectors."""
    p = pred.astype(bool)
    g = gold.astype(bool)
    return (p & g).sum(0), (p & ~g).sum(0), (~p & g).sum(0)


def compute_metrics(predictions, gold, labels: tuple[str, ...] | None = None) -> MetricsReport:
    pred = np.asarray(predictions)
    gold = np.asarray(gold)
    if pred.shape[0] != gold.shape[0]:
        raise ValueError(f"length mismatch: {pred.shape[0]} predictions vs {gold.shape[0]} gold labels")
    if pred.ndim != 2 or pred.shape != gold.shape:
        raise ValueError(f"predictions {pred.shape} and gold {gold.shape} must be matching 2-D multi-hot arrays")
    n_labels = pred.shape[1]
    if labels is None:
        labels = INTENTS if n_labels == len(INTENTS) else tuple(str(i) for i in range(n_labels))
    if len(labels) != n_labels:
        raise ValueError(f"expected {len(labels)} labels per example, got {n_labels}")
    tp, fp, fn = confusion_counts(pred, gold)
    micro_p = float(_ratio(tp.sum(), tp.sum() + fp.sum()))
    micro_r = float(_ratio(tp.sum(), tp.sum() + fn.sum()))
    p = _ratio(tp, tp + fp)
    r = _ratio(tp, tp + fn)
    f = _f1(p, r)
    exact = np.all(pred.astype(bool) == gold.astype(bool), axis=1)
    per_intent = {
        name: {"precision": float(p[i]), "recall": float(r[i]), "f1": float(f[i]),
               "support": int(tp[i] + fn[i]), "tp": int(tp[i]), "fp": int(fp[i]), "fn": int(fn[i])}
        for i, name in enumerate(labels)
    }
    n = pred.shape[0]
    return MetricsReport(
        micro_f1=float(_f1(micro_p, micro_r)),
        macro_f1=_mean(f),
        micro_precision=micro_p,
        macro_precision=_mean(p),
        micro_recall=micro_r,
        macro_recall=_mean(r),
        accuracy=float(exact.mean()) if n else 0.0,
        n_examples=int(n),
        per_intent=per_intent,
    )


def format_table(rows: list[tuple[str, MetricsReport | dict]]) -> str:
    """Aligned plain-text table: one row per configuration, fixed column order."""
    width = max([len("config")] + [len(name) for name, _ in rows])
    head = "config".ljust(width) + "".join(f"  {c:>9}" for c in COLUMN_LABELS)
    lines = [head, "-" * len(head)]
    for name, rep in rows:
        vals = rep.row() if isinstance(rep, MetricsReport) else [rep[c] for c in TABLE_COLUMNS]
        lines.append(name.ljust(width) + "".join(f"  {v:9.4f}" for v in vals))
    lines.append(f"acc. = {ACCURACY_DEFINITION}")
    return "\n".join(lines)
