#!/usr/bin/env python3

"""
Bags of paths over a spanning tree and their reduction hierarchies.

A hierarchy is (h, k(h), ..., k^D(h)) where every step applies the cheapest
of two reductions on a private copy of the tree: removing an interior
junction together with its off-path branches, or contracting a path edge.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

from shape_ingest import SpanningTree
from utils import chord_angle

logger = logging.getLogger(__name__)

OP_REMOVE = 'remove'
OP_CONTRACT = 'contract'
FLAG_EMPTY_TREE = 'EmptyTree'
FLAG_MASS_DROPPED = 'MassDropped'


class PathError(Exception):
    """Base class for path and reduction failures."""


class NotInterior(PathError):
    pass


class DegreeTwoInTree(PathError):
    pass


class Irreducible(PathError):
    pass


class InvalidPath(PathError):
    pass


@dataclass(frozen=True)
class Path:
    """Attribute snapshot of a simple path in a tree.

    Edge i joins node i and node i + 1; edge_attrs holds (weight, angle).
    """

    node_ids: Tuple[int, ...]
    node_attrs: Tuple[float, ...]
    edge_attrs: Tuple[Tuple[float, float], ...]
    positions: Tuple[Tuple[float, float], ...]
    axis_angle: float = 0.0

    @property
    def length(self) -> int:
        return len(self.node_ids) - 1

    def reverse(self) -> 'Path':
        return Path(
            node_ids=self.node_ids[::-1],
            node_attrs=self.node_attrs[::-1],
            edge_attrs=self.edge_attrs[::-1],
            positions=self.positions[::-1],
            axis_angle=self.axis_angle,
        )

    def to_payload(self) -> dict:
        return {
            'node_ids': list(self.node_ids),
            'node_attrs': list(self.node_attrs),
            'edge_attrs': [list(pair) for pair in self.edge_attrs],
        }


@dataclass(frozen=True)
class OpRecord:
    kind: str
    index: int
    cost: float
    flags: Tuple[str, ...] = ()

    def to_payload(self) -> dict:
        payload = {'kind': self.kind, 'index': self.index, 'cost': self.cost}
        if self.flags:
            payload['flags'] = list(self.flags)
        return payload


@dataclass(frozen=True)
class PathHierarchy:
    levels: Tuple[Path, ...]
    op_log: Tuple[OpRecord, ...]
    D: int

    @property
    def base(self) -> Path:
        return self.levels[0]

    @property
    def length(self) -> int:
        return self.levels[0].length

    def level(self, k) -> Optional[Path]:
        """k-th reduction, or None when the path was exhausted before k reductions."""
        return self.levels[k] if 0 <= k < len(self.levels) else None

    def to_payload(self) -> dict:
        return {
            'levels': [level.to_payload() for level in self.levels],
            'op_log': [record.to_payload() for record in self.op_log],
        }


@dataclass(frozen=True)
class BagOfPaths:
    shape_id: str
    hierarchies: Tuple[PathHierarchy, ...]
    s: int
    D: int
    class_label: Optional[str] = None
    flags: Tuple[str, ...] = ()

    def __len__(self) -> int:
        return len(self.hierarchies)

    @property
    def is_empty(self) -> bool:
        return not self.hierarchies


# ----------------------------------------------------------------------------
# Path construction
# ----------------------------------------------------------------------------

def path_from_nodes(tree: SpanningTree, node_ids: Sequence[int]) -> Path:
    """Snapshot the attributes of a node sequence that forms a simple path in tree."""
    node_ids = tuple(int(n) for n in node_ids)
    if not node_ids:
        raise InvalidPath("A path needs at least one node")
    if len(set(node_ids)) != len(node_ids):
        raise InvalidPath(f"Path {node_ids} repeats a node")
    for node in node_ids:
        if node not in tree.graph:
            raise InvalidPath(f"Node {node} is not in the tree")
    for u, v in zip(node_ids, node_ids[1:]):
        if not tree.graph.has_edge(u, v):
            raise InvalidPath(f"Nodes {u} and {v} are not adjacent")

    return Path(
        node_ids=node_ids,
        node_attrs=tuple(tree.attr(n) for n in node_ids),
        edge_attrs=tuple((tree.weight(u, v), tree.angle(u, v)) for u, v in zip(node_ids, node_ids[1:])),
        positions=tuple(tree.position(n) for n in node_ids),
        axis_angle=tree.axis_angle,
    )


def _check_interior(path: Path, i: int) -> None:
    if not 1 <= i <= len(path.node_ids) - 2:
        raise NotInterior(f"Index {i} is not an interior node of a path with {len(path.node_ids)} nodes")


# ----------------------------------------------------------------------------
# Node removal
# ----------------------------------------------------------------------------

def node_removal_cost(tree: SpanningTree, path: Path, i: int) -> float:
    """Total weight of the branches hanging off interior node i, away from the path."""
    _check_interior(path, i)
    node = path.node_ids[i]
    if tree.degree(node) == 2:
        raise DegreeTwoInTree(f"Node {node} has degree 2 in the tree and is not a junction")
    on_path = {path.node_ids[i - 1], path.node_ids[i + 1]}
    return sum(tree.branch_weight(node, nbr) for nbr in tree.neighbors(node) if nbr not in on_path)


def remove_node(path: Path, i: int, cost: float) -> Path:
    """Drop interior node i; its two path edges merge and absorb the removed branches."""
    _check_interior(path, i)
    merged_weight = path.edge_attrs[i - 1][0] + path.edge_attrs[i][0] + cost
    merged_angle = chord_angle(path.positions[i - 1], path.positions[i + 1], path.axis_angle)
    return Path(
        node_ids=path.node_ids[:i] + path.node_ids[i + 1:],
        node_attrs=path.node_attrs[:i] + path.node_attrs[i + 1:],
        edge_attrs=path.edge_attrs[:i - 1] + ((merged_weight, merged_angle),) + path.edge_attrs[i + 1:],
        positions=path.positions[:i] + path.positions[i + 1:],
        axis_angle=path.axis_angle,
    )


def _collect_branch(tree: SpanningTree, anchor, start) -> List[int]:
    nodes = [start]
    visited = {anchor, start}
    stack = [start]
    while stack:
        current = stack.pop()
        for nbr in tree.graph.neighbors(current):
            if nbr not in visited:
                visited.add(nbr)
                nodes.append(nbr)
                stack.append(nbr)
    return nodes


def _remove_node_in_tree(tree: SpanningTree, path: Path, i: int, merged: Path) -> SpanningTree:
    """Replace node i and its off-path branches by one edge carrying the merged weight."""
    graph = tree.graph.copy()
    node = path.node_ids[i]
    prev_node, next_node = path.node_ids[i - 1], path.node_ids[i + 1]
    doomed = [node]
    for nbr in tree.neighbors(node):
        if nbr not in (prev_node, next_node):
            doomed.extend(_collect_branch(tree, node, nbr))
    graph.remove_nodes_from(doomed)
    weight, angle = merged.edge_attrs[i - 1]
    graph.add_edge(prev_node, next_node, weight=weight, angle=angle)
    return tree.with_graph(graph)


# ----------------------------------------------------------------------------
# Edge contraction
# ----------------------------------------------------------------------------

def contract_edge(tree: SpanningTree, path: Path, i: int) -> Tuple[Path, SpanningTree, Tuple[str, ...]]:
    """Merge the endpoints of path edge i and spread its weight over the surviving incident edges.

    Returns the reduced path, the updated tree copy and any flags raised.
    """
    if not 0 <= i <= path.length - 1:
        raise InvalidPath(f"Edge index {i} outside path of length {path.length}")

    a, b = path.node_ids[i], path.node_ids[i + 1]
    weight = tree.weight(a, b)
    survivors = [(a, x) for x in tree.neighbors(a) if x != b] + [(b, x) for x in tree.neighbors(b) if x != a]
    increment = weight / len(survivors) if survivors else 0.0
    flags: Tuple[str, ...] = () if survivors else (FLAG_MASS_DROPPED,)

    ax, ay = tree.position(a)
    bx, by = tree.position(b)
    merged_pos = ((ax + bx) / 2.0, (ay + by) / 2.0)
    merged_id = max(tree.graph.nodes) + 1

    graph = tree.graph.copy()
    graph.add_node(merged_id, pos=merged_pos, attr=(tree.attr(a) + tree.attr(b)) / 2.0)
    for end, other in survivors:
        graph.add_edge(
            merged_id, other,
            weight=tree.weight(end, other) + increment,
            angle=chord_angle(merged_pos, tree.position(other), tree.axis_angle),
        )
    graph.remove_nodes_from([a, b])
    new_tree = tree.with_graph(graph)

    if flags:
        logger.debug("Contraction of (%s, %s) dropped weight %.6f: no surviving incident edge", a, b, weight)

    node_ids = path.node_ids[:i] + (merged_id,) + path.node_ids[i + 2:]
    return path_from_nodes(new_tree, node_ids), new_tree, flags


# ----------------------------------------------------------------------------
# Reduction
# ----------------------------------------------------------------------------

def admissible_operations(tree: SpanningTree, path: Path) -> List[Tuple[float, int, int, str]]:
    """Every admissible (cost, kind rank, index, kind); node removals rank before contractions."""
    candidates = []
    for i in range(1, len(path.node_ids) - 1):
        if tree.degree(path.node_ids[i]) == 2:
            continue
        candidates.append((node_removal_cost(tree, path, i), 0, i, OP_REMOVE))
    for i in range(path.length):
        candidates.append((tree.weight(path.node_ids[i], path.node_ids[i + 1]), 1, i, OP_CONTRACT))
    return candidates


def reduce(tree: SpanningTree, path: Path) -> Tuple[Path, SpanningTree, OpRecord]:
    """Apply the cheapest admissible operation to path."""
    if path.length < 1:
        raise Irreducible(f"Path {path.node_ids} has no edge left to reduce")

    cost, _, index, kind = min(admissible_operations(tree, path), key=lambda op: op[:3])
    if kind == OP_REMOVE:
        reduced = remove_node(path, index, cost)
        new_tree = _remove_node_in_tree(tree, path, index, reduced)
        return reduced, new_tree, OpRecord(kind, index, cost)

    reduced, new_tree, flags = contract_edge(tree, path, index)
    return reduced, new_tree, OpRecord(kind, index, cost, flags)


def build_hierarchy(tree: SpanningTree, path: Path, D: int) -> PathHierarchy:
    if D < 0:
        raise ValueError(f"D must be >= 0, got {D}")
    levels = [path]
    records = []
    current_tree = tree
    for _ in range(D):
        if levels[-1].length == 0:
            break
        reduced, current_tree, record = reduce(current_tree, levels[-1])
        levels.append(reduced)
        records.append(record)
    return PathHierarchy(levels=tuple(levels), op_log=tuple(records), D=D)


# ----------------------------------------------------------------------------
# Bag enumeration
# ----------------------------------------------------------------------------

def enumerate_node_sequences(tree: SpanningTree, s: int) -> List[Tuple[int, ...]]:
    """All simple paths with 1..s edges, both orientations, in DFS order from sorted start nodes."""
    sequences = []
    for start in tree.node_ids:
        stack = [(start,)]
        while stack:
            current = stack.pop()
            if len(current) > 1:
                sequences.append(current)
            if len(current) - 1 >= s:
                continue
            # Reversed push keeps ascending neighbour order on pop
            for nbr in reversed(tree.neighbors(current[-1])):
                if nbr not in current:
                    stack.append(current + (nbr,))
    return sequences


def enumerate_bag(tree: SpanningTree, s: int, D: int) -> BagOfPaths:
    if s < 1:
        raise ValueError(f"s must be >= 1, got {s}")
    if D < 0:
        raise ValueError(f"D must be >= 0, got {D}")

    if tree.graph.number_of_edges() == 0:
        logger.warning("Spanning tree of %s has no edge; bag is empty", tree.shape_id)
        return BagOfPaths(tree.shape_id, (), s, D, tree.class_label, flags=(FLAG_EMPTY_TREE,))

    hierarchies = tuple(
        build_hierarchy(tree, path_from_nodes(tree, nodes), D)
        for nodes in enumerate_node_sequences(tree, s)
    )
    logger.debug("Bag of %s: %d paths (s=%d, D=%d)", tree.shape_id, len(hierarchies), s, D)
    return BagOfPaths(tree.shape_id, hierarchies, s, D, tree.class_label)


def bag_to_payload(bag: BagOfPaths) -> dict:
    return {
        'shape_id': bag.shape_id,
        's': bag.s,
        'D': bag.D,
        'flags': list(bag.flags),
        'hierarchies': [h.to_payload() for h in bag.hierarchies],
    }
