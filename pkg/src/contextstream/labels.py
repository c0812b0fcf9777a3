"""Indicator-vector labels over the concept DAG and the child-implies-parent
consistency constraint: construction from snapshots, checking, and repair.

Vectors are uint8 numpy arrays indexed by the hierarchy's node order. A
vector is consistent when every set bit's parents are set too; upward repair
adds the missing ancestors, downward repair drops unsupported bits.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _kernels
from .hierarchy import Hierarchy, entity_node_id, pinst_node_id
from .kg import EG, ETG

log = logging.getLogger(__name__)

LabelVector = np.ndarray


@dataclass(frozen=True)
class ConsistencyViolation:
    """A hierarchy edge whose child bit is set while the parent bit is not."""

    child: str
    parent: str


def zeros(h: Hierarchy) -> LabelVector:
    return np.zeros(len(h), dtype=np.uint8)


def _as_vector(h: Hierarchy, y: Sequence[int] | np.ndarray) -> np.ndarray:
    arr = np.asarray(y, dtype=np.uint8)
    if arr.shape != (len(h),):
        raise ValueError(f"label vector has shape {arr.shape}, hierarchy has {len(h)} nodes")
    return arr


def check_consistency(h: Hierarchy, y: Sequence[int] | np.ndarray) -> list[ConsistencyViolation]:
    """Every edge with child bit 1 and parent bit 0; empty means consistent."""
    arr = _as_vector(h, y)
    pairs = h.edge_index_pairs
    if len(pairs) == 0:
        return []
    bad = (arr[pairs[:, 0]] == 1) & (arr[pairs[:, 1]] == 0)
    order = h.node_order
    return [
        ConsistencyViolation(order[int(c)], order[int(p)])
        for c, p in pairs[bad]
    ]


def repair_upward(h: Hierarchy, y: Sequence[int] | np.ndarray) -> LabelVector:
    """Minimal consistent superset: set bits plus all their ancestors."""
    arr = _as_vector(h, y)
    return np.asarray(_kernels.repair_up(arr, h.ancestor_matrix), dtype=np.uint8)


def repair_downward(h: Hierarchy, y: Sequence[int] | np.ndarray) -> LabelVector:
    """Maximal consistent subset: keep a bit only when all its ancestors are
    set in the input."""
    arr = _as_vector(h, y)
    return np.asarray(_kernels.repair_down(arr, h.ancestor_matrix), dtype=np.uint8)


def repair_upward_batch(h: Hierarchy, ys: np.ndarray) -> np.ndarray:
    return np.asarray(_kernels.repair_up_batch(np.asarray(ys, dtype=np.uint8), h.ancestor_matrix))


def repair_downward_batch(h: Hierarchy, ys: np.ndarray) -> np.ndarray:
    return np.asarray(_kernels.repair_down_batch(np.asarray(ys, dtype=np.uint8), h.ancestor_matrix))


def labels_from_eg(h: Hierarchy, snapshot: EG, etg: ETG) -> LabelVector:
    """Ground-truth bits for a snapshot: property-instance nodes whose triple
    holds, entity nodes incident to any context-dependent triple, then upward
    closure. References without a node (the observer, properties in Q,
    structural triples) are expected and skipped; anything else is logged."""
    seeds = zeros(h)
    index = {nid: i for i, nid in enumerate(h.node_order)}
    me = snapshot.me_entity(etg)
    me_id = me.id if me is not None else None

    def seed_entity(entity_id: str) -> None:
        if entity_id == me_id:
            return
        nid = entity_node_id(entity_id)
        i = index.get(nid)
        if i is None:
            log.warning("snapshot entity %r has no node in the hierarchy", entity_id)
            return
        seeds[i] = 1

    for t in snapshot.triples:
        prop = etg.properties.get(t.property)
        if prop is None or not prop.context_dependent:
            continue
        seed_entity(t.subject)
        seed_entity(t.object)
        inst = index.get(pinst_node_id(t.property, t.subject, t.object))
        if inst is not None:
            seeds[inst] = 1
    return repair_upward(h, seeds)


def active_nodes(h: Hierarchy, ys: np.ndarray) -> np.ndarray:
    """Boolean mask of nodes whose bit is ever set across a label matrix."""
    return np.asarray(ys, dtype=bool).any(axis=0)
