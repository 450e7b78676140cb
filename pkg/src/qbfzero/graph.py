"""Typed multigraph encoding of a (residual) QBF."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from .qbf import Qbf, Quantifier


class NodeKind(enum.IntEnum):
    EXIST_LIT = 0
    UNIV_LIT = 1
    CLAUSE = 2


class EdgeType(enum.IntEnum):
    E2A = 0
    A2E = 1
    L2C = 2
    COMPLEMENT = 3


@dataclass(frozen=True)
class Node:
    kind: NodeKind
    tag: str  # "+3" / "-3" for literals of x3, "c0" for the first clause


@dataclass(frozen=True)
class QbfGraph:
    nodes: tuple[Node, ...]
    edges: tuple[tuple[int, int, EdgeType], ...]

    @property
    def num_nodes(self) -> int:
        return len(self.nodes)

    @cached_property
    def adjacency(self) -> np.ndarray:
        """Per-type symmetric adjacency counts, shape (4, N, N)."""
        adj = np.zeros((len(EdgeType), self.num_nodes, self.num_nodes))
        for u, v, t in self.edges:
            adj[t, u, v] += 1.0
            adj[t, v, u] += 1.0
        return adj

    def edge_counts(self) -> dict[EdgeType, int]:
        counts = {t: 0 for t in EdgeType}
        for _, _, t in self.edges:
            counts[t] += 1
        return counts

    def permute(self, order: Sequence[int]) -> "QbfGraph":
        """Relabel so that new node i is old node ``order[i]``."""
        inverse = {old: new for new, old in enumerate(order)}
        nodes = tuple(self.nodes[old] for old in order)
        edges = tuple((inverse[u], inverse[v], t) for u, v, t in self.edges)
        return QbfGraph(nodes, edges)

    def to_json(self) -> str:
        return json.dumps(
            {
                "nodes": [
                    {"id": i, "kind": n.kind.name, "tag": n.tag} for i, n in enumerate(self.nodes)
                ],
                "edges": [{"u": u, "v": v, "type": t.name} for u, v, t in self.edges],
            }
        )


def encode(q: Qbf) -> QbfGraph:
    """Literal pair per quantified variable, one node per clause, four edge types.

    Node order: positive literals in prefix order, negative literals in prefix
    order, clauses in matrix order. Prefix-chain edges join the positive
    literal nodes of consecutive variables whose quantifiers differ.
    """
    if not q.prefix or q.is_decided():
        raise ValueError("cannot encode a decided formula")
    n = q.num_quantified
    index = {v: i for i, (_, v) in enumerate(q.prefix)}
    nodes = []
    for sign in ("+", "-"):
        for quant, v in q.prefix:
            kind = NodeKind.EXIST_LIT if quant is Quantifier.EXISTS else NodeKind.UNIV_LIT
            nodes.append(Node(kind, f"{sign}{v}"))
    nodes.extend(Node(NodeKind.CLAUSE, f"c{j}") for j in range(q.clause_count))

    edges = []
    for i in range(n - 1):
        a, b = q.prefix[i][0], q.prefix[i + 1][0]
        if a is Quantifier.EXISTS and b is Quantifier.FORALL:
            edges.append((i, i + 1, EdgeType.E2A))
        elif a is Quantifier.FORALL and b is Quantifier.EXISTS:
            edges.append((i, i + 1, EdgeType.A2E))
    for j, clause in enumerate(q.matrix):
        for lit in clause:
            lit_node = index[abs(lit)] + (0 if lit > 0 else n)
            edges.append((lit_node, 2 * n + j, EdgeType.L2C))
    edges.extend((i, n + i, EdgeType.COMPLEMENT) for i in range(n))
    return QbfGraph(tuple(nodes), tuple(edges))


def init_features(g: QbfGraph, hidden_size: int) -> np.ndarray:
    """One-hot node-kind rows, zero padded to ``hidden_size`` columns."""
    if hidden_size < 3:
        raise ValueError("hidden_size must be at least 3")
    h = np.zeros((g.num_nodes, hidden_size))
    h[np.arange(g.num_nodes), [int(n.kind) for n in g.nodes]] = 1.0
    return h
