import json

import numpy as np
import pytest

from conftest import small_instances
from qbfzero.game import apply_action, initial_state
from qbfzero.graph import EdgeType, NodeKind, encode, init_features
from qbfzero.qbf import random_qbf, simplify


def test_fig1_encoding(fig1):
    g = encode(fig1)
    assert g.num_nodes == 2 * 3 + 3
    assert [n.tag for n in g.nodes] == ["+1", "+2", "+3", "-1", "-2", "-3", "c0", "c1", "c2"]
    assert [n.kind for n in g.nodes[:6]] == [NodeKind.EXIST_LIT, NodeKind.UNIV_LIT, NodeKind.EXIST_LIT] * 2
    counts = g.edge_counts()
    assert counts == {EdgeType.L2C: 7, EdgeType.COMPLEMENT: 3, EdgeType.E2A: 1, EdgeType.A2E: 1}
    assert (0, 1, EdgeType.E2A) in g.edges and (1, 2, EdgeType.A2E) in g.edges
    # (x1 ∨ x2 ∨ ¬x3) is clause node 6
    assert {(u, v) for u, v, t in g.edges if t is EdgeType.L2C and v == 6} == {(0, 6), (1, 6), (5, 6)}


def test_closed_form_counts():
    for i in range(500):
        q = random_qbf(1 + i % 9, 1 + i % 7, seed=i, min_width=1)
        g = encode(q)
        n = q.num_quantified
        counts = g.edge_counts()
        assert g.num_nodes == 2 * n + q.clause_count
        assert counts[EdgeType.COMPLEMENT] == n
        assert counts[EdgeType.L2C] == sum(len(c) for c in q.matrix)
        quants = [a for a, _ in q.prefix]
        switches = sum(a is not b for a, b in zip(quants, quants[1:]))
        assert counts[EdgeType.E2A] + counts[EdgeType.A2E] == switches


def test_same_quantifier_gets_no_chain_edge():
    q = random_qbf(5, 2, seed=0, alternation=0.0)
    counts = encode(q).edge_counts()
    assert counts[EdgeType.E2A] == counts[EdgeType.A2E] == 0


def test_adjacency_symmetric(fig1):
    adj = encode(fig1).adjacency
    assert adj.shape == (4, 9, 9)
    assert np.array_equal(adj, adj.transpose(0, 2, 1))
    assert adj[EdgeType.L2C].sum() == 2 * 7


def test_residual_encoding_has_no_stale_nodes(fig1):
    s = apply_action(initial_state(fig1), 1)
    assert encode(s.residual) == encode(simplify(fig1, 1, 1))
    assert encode(s.residual).num_nodes == 2 * 2 + 1


def test_encode_rejects_decided(unit1):
    with pytest.raises(ValueError):
        encode(simplify(unit1, 1, 1))


def test_init_features(fig1):
    g = encode(fig1)
    h = init_features(g, 128)
    assert h.shape == (9, 128)
    assert np.array_equal(h[0], np.eye(128)[0])  # existential literal
    assert np.array_equal(h[1], np.eye(128)[1])  # universal literal
    assert np.array_equal(h[6], np.eye(128)[2])  # clause
    with pytest.raises(ValueError):
        init_features(g, 2)


def _canonical(g):
    """Sorted multiset of (kind, kind, type) edge signatures plus node kind counts."""
    sig = sorted(tuple(sorted((int(g.nodes[u].kind), int(g.nodes[v].kind)))) + (int(t),)
                 for u, v, t in g.edges)
    return sorted(int(n.kind) for n in g.nodes), sig


def test_renaming_gives_isomorphic_graph():
    rng = np.random.default_rng(0)
    for q in small_instances(50, seed=6):
        ids = [v for _, v in q.prefix]
        perm = dict(zip(ids, (int(x) + 1 for x in rng.permutation(len(ids)))))
        r = q.rename(perm)
        g, h = encode(q), encode(r)
        # node i of g corresponds to node i of h since encoding follows prefix order
        assert [n.kind for n in g.nodes] == [n.kind for n in h.nodes]
        assert g.edges == h.edges


def test_permute_round_trip(fig1):
    g = encode(fig1)
    order = list(np.random.default_rng(1).permutation(g.num_nodes))
    p = g.permute(order)
    assert _canonical(p) == _canonical(g)
    assert np.allclose(p.adjacency, g.adjacency[:, order][:, :, order])


def test_json_dump(fig1):
    d = json.loads(encode(fig1).to_json())
    assert len(d["nodes"]) == 9 and len(d["edges"]) == 12
    assert d["nodes"][0] == {"id": 0, "kind": "EXIST_LIT", "tag": "+1"}
    assert {e["type"] for e in d["edges"]} == {"E2A", "A2E", "L2C", "COMPLEMENT"}
