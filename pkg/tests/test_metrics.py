import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from emtod.metrics import ACCURACY_DEFINITION, TABLE_COLUMNS, compute_metrics, format_table
from oracles import ORACLE_KEYS, brute_force_metrics


def test_perfect_predictions():
    gold = np.array([[1, 0, 1], [0, 1, 0]])
    r = compute_metrics(gold, gold)
    assert r.row() == [1.0] * 5


def test_two_by_two_case():
    r = compute_metrics([[1, 0], [1, 0]], [[1, 0], [0, 1]])
    assert r.micro_precision == 0.5 and r.micro_recall == 0.5 and r.micro_f1 == 0.5
    assert r.accuracy == 0.5
    assert r.per_intent["0"] == {"precision": 0.5, "recall": 1.0, "f1": 2 / 3, "support": 1, "tp": 1, "fp": 1, "fn": 0}


def test_empty_predictions():
    r = compute_metrics(np.zeros((3, 13), int), np.eye(13, dtype=int)[:3])
    assert r.micro_precision == 0.0 and r.micro_f1 == 0.0 and r.accuracy == 0.0
    assert r.macro_f1 == 0.0


def test_zero_support_intents_count_in_macro():
    gold = np.zeros((2, 13), int)
    gold[:, 0] = 1
    r = compute_metrics(gold, gold)
    assert r.micro_f1 == 1.0
    assert r.macro_f1 == pytest.approx(1 / 13)


def test_length_mismatch():
    with pytest.raises(ValueError, match="length mismatch"):
        compute_metrics(np.zeros((2, 13)), np.zeros((3, 13)))


def test_brute_force_oracle_exact(rng):
    for _ in range(200):
        n = int(rng.integers(1, 21))
        density = rng.uniform(0.05, 0.5)
        gold = (rng.uniform(size=(n, 13)) < density).astype(int)
        flip = rng.uniform(size=(n, 13)) < rng.uniform(0, 0.4)
        pred = np.where(flip, 1 - gold, gold)
        r = compute_metrics(pred, gold)
        want = brute_force_metrics(pred.tolist(), gold.tolist())
        for k in ORACLE_KEYS:
            assert getattr(r, k) == pytest.approx(want[k], abs=1e-12), k


multi_hot = st.integers(1, 12).flatmap(lambda n: st.tuples(
    arrays(np.int64, (n, 13), elements=st.integers(0, 1)), arrays(np.int64, (n, 13), elements=st.integers(0, 1))))


@given(multi_hot, st.randoms(use_true_random=False))
def test_permutation_invariances(pg, rnd):
    pred, gold = pg
    base = compute_metrics(pred, gold)
    rows = list(range(len(pred)))
    rnd.shuffle(rows)
    assert compute_metrics(pred[rows], gold[rows]).row() == pytest.approx(base.row(), abs=1e-12)
    cols = list(range(13))
    rnd.shuffle(cols)
    cp = compute_metrics(pred[:, cols], gold[:, cols])
    assert cp.micro_f1 == pytest.approx(base.micro_f1, abs=1e-12)
    assert cp.macro_f1 == pytest.approx(base.macro_f1, abs=1e-12)


def test_table_layout():
    r = compute_metrics([[1, 0], [1, 0]], [[1, 0], [0, 1]])
    text = format_table([("cross", r), ("mean", {c: 0.25 for c in TABLE_COLUMNS})])
    lines = text.splitlines()
    assert lines[0].split() == ["config", "micro-F1", "macro-F1", "micro-P", "macro-P", "acc."]
    assert lines[2].split()[0] == "cross" and lines[3].split()[1] == "0.2500"
    assert lines[-1] == f"acc. = {ACCURACY_DEFINITION}"
    assert r.to_dict()["accuracy_definition"] == ACCURACY_DEFINITION
