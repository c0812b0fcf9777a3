"""Compile an ETG + EG pair into the rooted concept DAG used for labeling.

Nodes stand for entity types, entities, reified object properties and their
instances; edges run child -> parent and mean is-a. The observer's etype and
entity never appear. Structural properties (isA/partOf/has by default)
collapse to direct edges, context-dependent properties (Q) are excluded
entirely, everything else is reified. The result is transitively reduced.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Iterable, Optional, Sequence

import numpy as np

from . import _kernels
from .errors import CycleError, UnknownIdError
from .kg import COLLAPSE_PROPERTIES, EG, ETG, PropertyValue
from .report import ValidationReport

ROOT_ID = "root"
ROOT_DISPLAY_NAME = "context"


class NodeKind(str, Enum):
    ROOT = "root"
    ETYPE = "etype"
    ENTITY = "entity"
    PROPERTY = "property"
    PROPERTY_INSTANCE = "property_instance"


SourceRef = Optional[str | tuple[str, str, str]]


@dataclass(frozen=True)
class ConceptNode:
    id: str
    kind: NodeKind
    display_name: str
    source_ref: SourceRef


def etype_node_id(etype_id: str) -> str:
    return f"etype:{etype_id}"


def entity_node_id(entity_id: str) -> str:
    return f"entity:{entity_id}"


def property_node_id(prop_id: str) -> str:
    return f"prop:{prop_id}"


def pinst_node_id(prop_id: str, subject_id: str, object_id: str) -> str:
    return f"pinst:{prop_id}/{subject_id}/{object_id}"


class Hierarchy:
    """A rooted DAG of concept nodes with child->parent edges.

    The node order (topological with lexicographic tie-break, children before
    parents) indexes label vectors; it is a pure function of the graph and is
    recomputed rather than stored.
    """

    def __init__(self, nodes: Iterable[ConceptNode], edges: Iterable[tuple[str, str]], root: str):
        self.nodes: dict[str, ConceptNode] = {}
        for node in nodes:
            if node.id in self.nodes:
                raise ValueError(f"duplicate node id {node.id!r}")
            self.nodes[node.id] = node
        self.edges: tuple[tuple[str, str], ...] = tuple(sorted(set(edges)))
        for child, parent in self.edges:
            for end in (child, parent):
                if end not in self.nodes:
                    raise ValueError(f"edge endpoint {end!r} is not a node")
            if child == parent:
                raise CycleError([child, parent])
        if root not in self.nodes:
            raise ValueError(f"root {root!r} is not a node")
        self.root = root

    def __eq__(self, other) -> bool:
        if not isinstance(other, Hierarchy):
            return NotImplemented
        return (
            self.nodes == other.nodes
            and set(self.edges) == set(other.edges)
            and self.root == other.root
        )

    def __len__(self) -> int:
        return len(self.nodes)

    @cached_property
    def _parents(self) -> dict[str, tuple[str, ...]]:
        out: dict[str, list[str]] = {nid: [] for nid in self.nodes}
        for child, parent in self.edges:
            out[child].append(parent)
        return {nid: tuple(sorted(ps)) for nid, ps in out.items()}

    @cached_property
    def _children(self) -> dict[str, tuple[str, ...]]:
        out: dict[str, list[str]] = {nid: [] for nid in self.nodes}
        for child, parent in self.edges:
            out[parent].append(child)
        return {nid: tuple(sorted(cs)) for nid, cs in out.items()}

    def parents_of(self, node_id: str) -> tuple[str, ...]:
        return self._parents[node_id]

    def children_of(self, node_id: str) -> tuple[str, ...]:
        return self._children[node_id]

    @cached_property
    def node_order(self) -> tuple[str, ...]:
        """Topological order (every node before its parents), lexicographic
        tie-break. Raises CycleError when the edge set is cyclic."""
        incoming = {nid: len(self._children[nid]) for nid in self.nodes}
        ready = [nid for nid, deg in incoming.items() if deg == 0]
        heapq.heapify(ready)
        order: list[str] = []
        while ready:
            nid = heapq.heappop(ready)
            order.append(nid)
            for parent in self._parents[nid]:
                incoming[parent] -= 1
                if incoming[parent] == 0:
                    heapq.heappush(ready, parent)
        if len(order) != len(self.nodes):
            raise CycleError(find_cycle(self.edges) or ["<unknown>"])
        return tuple(order)

    @cached_property
    def _index(self) -> dict[str, int]:
        return {nid: i for i, nid in enumerate(self.node_order)}

    def index_of(self, node_id: str) -> int:
        try:
            return self._index[node_id]
        except KeyError:
            raise UnknownIdError(f"unknown node {node_id!r}") from None

    @cached_property
    def adjacency(self) -> np.ndarray:
        """adj[i, j] True when node j is a direct parent of node i."""
        n = len(self.nodes)
        adj = np.zeros((n, n), dtype=bool)
        idx = self._index
        for child, parent in self.edges:
            adj[idx[child], idx[parent]] = True
        return adj

    @cached_property
    def ancestor_matrix(self) -> np.ndarray:
        """anc[i, j] True when node j is a strict ancestor of node i."""
        return np.asarray(_kernels.closure(self.adjacency))

    @cached_property
    def edge_index_pairs(self) -> np.ndarray:
        """Edges as an (m, 2) int array of (child, parent) order indexes."""
        idx = self._index
        if not self.edges:
            return np.empty((0, 2), dtype=np.int64)
        return np.array([(idx[c], idx[p]) for c, p in self.edges], dtype=np.int64)


def find_cycle(edges: Iterable[tuple[str, str]]) -> list[str] | None:
    """A witness cycle in a child->parent edge set, or None."""
    adjacency: dict[str, list[str]] = {}
    for child, parent in edges:
        adjacency.setdefault(child, []).append(parent)
        adjacency.setdefault(parent, [])
    WHITE, GRAY, BLACK = 0, 1, 2
    color = {nid: WHITE for nid in adjacency}
    trail: list[str] = []

    def visit(start: str) -> list[str] | None:
        stack: list[tuple[str, int]] = [(start, 0)]
        color[start] = GRAY
        trail.append(start)
        while stack:
            node, i = stack[-1]
            if i < len(adjacency[node]):
                stack[-1] = (node, i + 1)
                nxt = adjacency[node][i]
                if color[nxt] == GRAY:
                    return trail[trail.index(nxt):] + [nxt]
                if color[nxt] == WHITE:
                    color[nxt] = GRAY
                    trail.append(nxt)
                    stack.append((nxt, 0))
            else:
                stack.pop()
                trail.pop()
                color[node] = BLACK
        return None

    for nid in sorted(adjacency):
        if color[nid] == WHITE:
            cycle = visit(nid)
            if cycle is not None:
                return cycle
    return None


def node_display_name(node: ConceptNode, etg: ETG, eg: EG) -> str:
    """Human-readable name resolved through the node's back-reference."""
    if node.kind is NodeKind.ROOT:
        return ROOT_DISPLAY_NAME
    if node.kind is NodeKind.ETYPE:
        return etg.etype(str(node.source_ref)).name
    if node.kind is NodeKind.ENTITY:
        return eg.entity(str(node.source_ref)).name
    if node.kind is NodeKind.PROPERTY:
        return etg.property(str(node.source_ref)).name
    if node.kind is NodeKind.PROPERTY_INSTANCE:
        prop_id, subject_id, object_id = node.source_ref  # type: ignore[misc]
        return (
            f"{etg.property(prop_id).name}"
            f"({eg.entity(subject_id).name}, {eg.entity(object_id).name})"
        )
    raise ValueError(f"unknown node kind {node.kind!r}")


def compile_hierarchy(
    etg: ETG,
    eg: EG,
    q: Iterable[str] | None = None,
    collapse: Sequence[str] = COLLAPSE_PROPERTIES,
) -> Hierarchy:
    """Convert the schema and instance graphs into the concept DAG.

    `q` defaults to the ETG's declared context-dependent set; `collapse`
    names the structural properties turned into direct edges. Cycles surface
    as CycleError with a witness path before reduction.
    """
    q_set = frozenset(q) if q is not None else etg.q
    collapse_set = frozenset(collapse)

    nodes: dict[str, ConceptNode] = {}
    edges: set[tuple[str, str]] = set()

    def add_node(node: ConceptNode) -> None:
        nodes.setdefault(node.id, node)

    me_entities = {
        e.id for e in eg.entities if e.etype in etg.etypes and etg.is_subtype(e.etype, etg.me_etype)
    }

    for et_id in sorted(etg.etypes):
        if et_id == etg.me_etype:
            continue
        et = etg.etypes[et_id]
        add_node(ConceptNode(etype_node_id(et_id), NodeKind.ETYPE, et.name, et_id))

    entity_nodes: dict[str, str] = {}
    for entity in sorted(eg.entities, key=lambda e: e.id):
        if entity.id in me_entities or entity.id in entity_nodes:
            continue
        nid = entity_node_id(entity.id)
        entity_nodes[entity.id] = nid
        add_node(ConceptNode(nid, NodeKind.ENTITY, entity.name, entity.id))
        if entity.etype in etg.etypes and entity.etype != etg.me_etype:
            edges.add((nid, etype_node_id(entity.etype)))

    # inheritance links are etype-level isA assertions
    for et_id in sorted(etg.etypes):
        et = etg.etypes[et_id]
        if et.parent is None:
            continue
        if et_id == etg.me_etype or et.parent == etg.me_etype:
            continue
        edges.add((etype_node_id(et_id), etype_node_id(et.parent)))

    triples_by_property: dict[str, list[PropertyValue]] = {}
    for t in eg.triples:
        triples_by_property.setdefault(t.property, []).append(t)

    for prop_id in sorted(etg.properties):
        if prop_id in q_set:
            continue
        prop = etg.properties[prop_id]
        prop_nid = property_node_id(prop_id)
        if prop_id in collapse_set or prop.name in collapse_set:
            # schema assertion p(A, B) becomes a direct edge; self-loops and
            # Me endpoints are skipped so no dangling or cyclic edge appears
            if (
                prop.domain != prop.codomain
                and prop.domain != etg.me_etype
                and prop.codomain != etg.me_etype
            ):
                edges.add((etype_node_id(prop.domain), etype_node_id(prop.codomain)))
            for t in sorted(
                triples_by_property.get(prop_id, ()), key=lambda t: (t.subject, t.object)
            ):
                if t.subject in me_entities or t.object in me_entities:
                    continue
                if t.subject == t.object:
                    continue
                if t.subject in entity_nodes and t.object in entity_nodes:
                    edges.add((entity_nodes[t.subject], entity_nodes[t.object]))
            continue
        add_node(ConceptNode(prop_nid, NodeKind.PROPERTY, prop.name, prop_id))
        if prop.codomain != etg.me_etype:
            edges.add((prop_nid, etype_node_id(prop.codomain)))
        for t in sorted(
            triples_by_property.get(prop_id, ()), key=lambda t: (t.subject, t.object)
        ):
            inst_nid = pinst_node_id(prop_id, t.subject, t.object)
            add_node(
                ConceptNode(
                    inst_nid,
                    NodeKind.PROPERTY_INSTANCE,
                    _pinst_display(etg, eg, t),
                    (prop_id, t.subject, t.object),
                )
            )
            edges.add((inst_nid, prop_nid))
            if t.object not in me_entities and t.object in entity_nodes:
                edges.add((entity_nodes[t.object], inst_nid))

    add_node(ConceptNode(ROOT_ID, NodeKind.ROOT, ROOT_DISPLAY_NAME, None))
    with_parent = {child for child, _ in edges}
    for nid in sorted(nodes):
        if nid != ROOT_ID and nid not in with_parent:
            edges.add((nid, ROOT_ID))

    h = Hierarchy(nodes.values(), edges, ROOT_ID)
    h.node_order  # noqa: B018 - forces cycle detection before reduction
    return transitive_reduction(h)


def _pinst_display(etg: ETG, eg: EG, t: PropertyValue) -> str:
    prop_name = etg.properties[t.property].name if t.property in etg.properties else t.property

    def name_of(entity_id: str) -> str:
        return eg.entity(entity_id).name if eg.has_entity(entity_id) else entity_id

    return f"{prop_name}({name_of(t.subject)}, {name_of(t.object)})"


def transitive_reduction(h: Hierarchy) -> Hierarchy:
    """The unique minimal edge set with the same reachability; nodes and root
    are unchanged. Cyclic input raises CycleError with a witness."""
    h.node_order  # raises on cycles
    adj = h.adjacency
    reach = np.asarray(_kernels.closure(adj))
    reduced = np.asarray(_kernels.prune_redundant(adj, reach))
    order = h.node_order
    kept = [
        (order[i], order[j]) for i, j in np.argwhere(reduced)
    ]
    return Hierarchy(h.nodes.values(), kept, h.root)


def validate_hierarchy(
    h: Hierarchy, etg: ETG | None = None, eg: EG | None = None
) -> ValidationReport:
    """Acyclicity, rootedness, reducedness, and back-reference checks; deep
    source resolution only when the source graphs are supplied."""
    report = ValidationReport()
    try:
        h.node_order
    except CycleError as exc:
        report.add("cycle", str(exc))
        return report
    if h.nodes[h.root].kind is not NodeKind.ROOT:
        report.add("root-kind", f"root node has kind {h.nodes[h.root].kind.value}", h.root)
    anc = h.ancestor_matrix
    root_idx = h.index_of(h.root)
    for nid in h.node_order:
        if nid == h.root:
            continue
        if not h.parents_of(nid):
            report.add("orphan", "non-root node has no parent", nid)
        elif not anc[h.index_of(nid), root_idx]:
            report.add("unrooted", "root not reachable", nid)
    reduced = np.asarray(_kernels.prune_redundant(h.adjacency, anc))
    extra = np.argwhere(h.adjacency & ~reduced)
    for i, j in extra:
        report.add(
            "redundant-edge",
            f"edge implied by a longer path: {h.node_order[i]} -> {h.node_order[j]}",
        )
    for node in h.nodes.values():
        if node.kind is NodeKind.ROOT:
            continue
        if node.source_ref is None:
            report.add("missing-source-ref", "non-root node lacks a back-reference", node.id)
            continue
        if node.kind is NodeKind.PROPERTY_INSTANCE and (
            not isinstance(node.source_ref, tuple) or len(node.source_ref) != 3
        ):
            report.add("bad-source-ref", "property instance needs a 3-part ref", node.id)
            continue
        if etg is not None and eg is not None:
            try:
                node_display_name(node, etg, eg)
            except UnknownIdError as exc:
                report.add("dangling-source-ref", str(exc), node.id)
    return report
