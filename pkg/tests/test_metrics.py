from __future__ import annotations

import numpy as np
import pytest

from contextstream.metrics import block_hamming_accuracy, evaluate, per_node_accuracy


def test_identical_predictions_score_one():
    y = np.array([[1, 1, 0], [0, 1, 1], [1, 1, 1]], dtype=np.uint8)
    m = evaluate(y, y, node_ids=["a", "b", "root"])
    assert m["hierarchical_precision"] == 1.0
    assert m["hierarchical_recall"] == 1.0
    assert m["hierarchical_f1"] == 1.0
    assert m["exact_match"] == 1.0
    assert m["hamming_accuracy"] == 1.0


def test_all_zero_predictions_have_zero_recall():
    truth = np.array([[1, 1, 1], [0, 1, 1]], dtype=np.uint8)
    preds = np.zeros_like(truth)
    m = evaluate(preds, truth)
    assert m["hierarchical_recall"] == 0.0
    assert m["hierarchical_f1"] == 0.0


# hand computation for a three-example chain a -> b -> root:
#   (pred, truth) pairs: ([1,1,1],[1,1,1]), ([0,1,1],[1,1,1]), ([0,0,0],[0,1,1])
#   intersections 3+2+0=5, predicted 3+2+0=5, true 3+3+2=8
#   hP = 1.0, hR = 5/8 = 0.625, hF1 = 10/13, exact = 1/3, hamming = 6/9
HAND_PREDS = np.array([[1, 1, 1], [0, 1, 1], [0, 0, 0]], dtype=np.uint8)
HAND_TRUTH = np.array([[1, 1, 1], [1, 1, 1], [0, 1, 1]], dtype=np.uint8)


def test_hand_computed_three_example_fixture():
    m = evaluate(HAND_PREDS, HAND_TRUTH, node_ids=["a", "b", "root"])
    assert m["hierarchical_precision"] == pytest.approx(1.0)
    assert m["hierarchical_recall"] == pytest.approx(0.625)
    assert m["hierarchical_f1"] == pytest.approx(10 / 13)
    assert m["exact_match"] == pytest.approx(1 / 3)
    assert m["hamming_accuracy"] == pytest.approx(6 / 9)
    assert m["per_node"]["a"] == {"tp": 1, "fp": 0, "fn": 1, "tn": 1}
    assert m["per_node"]["b"] == {"tp": 2, "fp": 0, "fn": 1, "tn": 0}
    assert m["per_node"]["root"] == {"tp": 2, "fp": 0, "fn": 1, "tn": 0}
    assert m["n_examples"] == 3


def test_length_mismatch_rejected():
    with pytest.raises(ValueError):
        evaluate(HAND_PREDS, HAND_TRUTH[:2])
    with pytest.raises(ValueError):
        evaluate(np.zeros(3), np.zeros(3))  # not matrices


def test_empty_against_empty_is_vacuously_perfect():
    empty = np.zeros((2, 3), dtype=np.uint8)
    m = evaluate(empty, empty)
    assert m["hierarchical_precision"] == 1.0
    assert m["hierarchical_recall"] == 1.0
    assert m["hamming_accuracy"] == 1.0


def test_per_node_accuracy_window():
    acc = per_node_accuracy(HAND_PREDS, HAND_TRUTH)
    assert acc.tolist() == pytest.approx([2 / 3, 2 / 3, 2 / 3])
    acc_last = per_node_accuracy(HAND_PREDS, HAND_TRUTH, last=1)
    assert acc_last.tolist() == pytest.approx([1.0, 0.0, 0.0])


def test_block_hamming_accuracy():
    preds = np.concatenate([np.zeros((4, 2)), np.ones((4, 2))]).astype(np.uint8)
    truth = np.ones((8, 2), dtype=np.uint8)
    assert block_hamming_accuracy(preds, truth, block=4) == [0.0, 1.0]
