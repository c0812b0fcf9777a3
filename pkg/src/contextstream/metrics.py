"""Evaluation of hierarchy-consistent multi-label predictions.

Hierarchical precision/recall are micro-averaged over the ancestor-closed bit
sets; 0/0 ratios are defined as 1.0 (an empty prediction against an empty
truth asserts nothing wrong).
"""

from __future__ import annotations

from typing import Sequence

import numpy as np


def _ratio(num: float, den: float) -> float:
    if den == 0:
        return 1.0
    return num / den


def evaluate(
    predictions: np.ndarray,
    ground_truth: np.ndarray,
    node_ids: Sequence[str] | None = None,
) -> dict:
    """Metrics over aligned prediction/truth matrices of shape (T, n)."""
    preds = np.asarray(predictions, dtype=bool)
    truths = np.asarray(ground_truth, dtype=bool)
    if preds.shape != truths.shape:
        raise ValueError(f"shape mismatch: predictions {preds.shape} vs truth {truths.shape}")
    if preds.ndim != 2:
        raise ValueError("expected matrices of shape (n_examples, n_nodes)")
    inter = int((preds & truths).sum())
    hp = _ratio(inter, int(preds.sum()))
    hr = _ratio(inter, int(truths.sum()))
    hf1 = _ratio(2 * hp * hr, hp + hr) if (hp + hr) > 0 else 0.0
    exact = float((preds == truths).all(axis=1).mean()) if len(preds) else 1.0
    hamming = float((preds == truths).mean()) if preds.size else 1.0
    tp = (preds & truths).sum(axis=0)
    fp = (preds & ~truths).sum(axis=0)
    fn = (~preds & truths).sum(axis=0)
    tn = (~preds & ~truths).sum(axis=0)
    per_node: dict[str, dict[str, int]] = {}
    names = list(node_ids) if node_ids is not None else [str(i) for i in range(preds.shape[1])]
    for i, name in enumerate(names):
        per_node[name] = {
            "tp": int(tp[i]),
            "fp": int(fp[i]),
            "fn": int(fn[i]),
            "tn": int(tn[i]),
        }
    return {
        "hierarchical_precision": hp,
        "hierarchical_recall": hr,
        "hierarchical_f1": hf1,
        "exact_match": exact,
        "hamming_accuracy": hamming,
        "n_examples": int(preds.shape[0]),
        "per_node": per_node,
    }


def per_node_accuracy(
    predictions: np.ndarray, ground_truth: np.ndarray, last: int | None = None
) -> np.ndarray:
    """Fraction of examples each node was predicted correctly on, optionally
    restricted to the trailing `last` examples."""
    preds = np.asarray(predictions, dtype=bool)
    truths = np.asarray(ground_truth, dtype=bool)
    if last is not None:
        preds = preds[-last:]
        truths = truths[-last:]
    if len(preds) == 0:
        return np.ones(preds.shape[1])
    return (preds == truths).mean(axis=0)


def block_hamming_accuracy(
    predictions: np.ndarray, ground_truth: np.ndarray, block: int = 50
) -> list[float]:
    """Hamming accuracy over consecutive non-overlapping blocks of examples;
    used to watch training progress along a stream."""
    preds = np.asarray(predictions, dtype=bool)
    truths = np.asarray(ground_truth, dtype=bool)
    out: list[float] = []
    for start in range(0, len(preds) - block + 1, block):
        p = preds[start : start + block]
        t = truths[start : start + block]
        out.append(float((p == t).mean()))
    return out
