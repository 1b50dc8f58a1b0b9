import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_tree_mask, random_unary
from hsilbp.errors import DimensionMismatchError, EmptyGraphError, MissingUnaryError
from hsilbp.exact_oracle import exact_marginals
from hsilbp.hsidata import LabelField
from hsilbp.mrf_lbp import (
    assemble_unaries,
    build_graph,
    lbp_run,
    make_pairwise,
    mam_decide,
)


def _graph_invariants(g):
    adj = g.adjacency()
    for i, nbrs in enumerate(adj):
        assert i not in nbrs
        assert len(nbrs) <= g.connectivity
        for j in nbrs:
            assert i in adj[j]
    pairs = {tuple(e) for e in g.edges.tolist()}
    assert len(pairs) == g.num_edges
    assert all(a < b for a, b in pairs)


def test_build_graph_counts():
    assert build_graph(np.ones((2, 2))).num_edges == 4
    g = build_graph(np.array([[1, 1], [0, 1]]))
    assert (g.num_nodes, g.num_edges) == (3, 2)
    g = build_graph(np.ones((3, 3)))
    assert (g.num_nodes, g.num_edges) == (9, 2 * 3 * 3 - 3 - 3)
    g8 = build_graph(np.ones((3, 3)), connectivity=8)
    assert g8.num_edges == 12 + 8
    _graph_invariants(g8)


def test_build_graph_background_severs():
    mask = np.array([[1, 0, 1]])
    g = build_graph(LabelField(mask, 1))
    assert g.num_nodes == 2 and g.num_edges == 0
    with pytest.raises(EmptyGraphError):
        build_graph(np.zeros((2, 2)))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([4, 8]))
def test_build_graph_random_masks(seed, conn):
    rng = np.random.default_rng(seed)
    mask = rng.uniform(size=(6, 7)) < 0.7
    if not mask.any():
        return
    g = build_graph(mask, conn)
    _graph_invariants(g)
    assert g.num_nodes == mask.sum()
    assert all(mask[r, c] for r, c in g.node_coords)
    # brute-force neighbour count
    offs = [(0, 1), (1, 0)] + ([(1, 1), (1, -1)] if conn == 8 else [])
    expected = sum(1 for r in range(6) for c in range(7) for dr, dc in offs
                   if mask[r, c] and 0 <= r + dr < 6 and 0 <= c + dc < 7 and mask[r + dr, c + dc])
    assert g.num_edges == expected


def test_make_pairwise():
    np.testing.assert_array_equal(make_pairwise(0.0, 3).table, np.ones((3, 3)))
    np.testing.assert_allclose(make_pairwise(math.log(2), 2).table, [[2, 1], [1, 2]], atol=1e-15)
    t = make_pairwise(1.7, 4).table
    np.testing.assert_array_equal(t, t.T)
    assert (t > 0).all()


def test_assemble_unaries():
    g = build_graph(np.ones((1, 2)))
    probs = np.array([[0.7, 0.3], [0.4, 0.6]])
    u = assemble_unaries(probs, g, train_indices=[(0, 1)], train_labels=[2], clamp_eps=1e-6)
    np.testing.assert_allclose(u[0], [0.7, 0.3], atol=1e-15)
    np.testing.assert_allclose(u[1], [1e-6, 1 - 1e-6], atol=1e-15)
    np.testing.assert_allclose(u.sum(axis=1), 1.0, atol=1e-15)


def test_assemble_unaries_floor_and_missing():
    g = build_graph(np.ones((1, 2)))
    u = assemble_unaries(np.array([[1.0, 0.0], [0.5, 0.5]]), g)
    assert (u > 0).all()
    with pytest.raises(MissingUnaryError):
        assemble_unaries(np.ones((1, 2)) / 2, g)
    field = np.full((1, 2, 2), 0.5)
    field[0, 1] = np.nan
    with pytest.raises(MissingUnaryError):
        assemble_unaries(field, g)


def test_mu_zero_gives_uniform_messages_and_unary_beliefs(rng):
    g = build_graph(np.ones((3, 4)))
    u = random_unary(rng, g.num_nodes, 3)
    res = lbp_run(g, u, make_pairwise(0.0, 3), keep_messages=True)
    assert res.iterations == 1
    assert np.all(res.messages == res.messages[:, :1])  # every message constant
    np.testing.assert_allclose(res.beliefs, u, rtol=0, atol=1e-15)
    np.testing.assert_array_equal(res.beliefs.argmax(axis=1), u.argmax(axis=1))


def test_two_node_chain():
    g = build_graph(np.ones((1, 2)))
    u = np.array([[0.8, 0.2], [0.5, 0.5]])
    res = lbp_run(g, u, make_pairwise(math.log(2), 2), damping=0.0, keep_messages=True, tol=1e-14)
    # row 0 is the message from node 0 (a) to node 1 (b)
    np.testing.assert_allclose(res.messages[0], [0.6, 0.4], atol=1e-15)
    np.testing.assert_allclose(res.beliefs[1], [0.6, 0.4], atol=1e-15)
    np.testing.assert_allclose(res.beliefs, exact_marginals(g, u, make_pairwise(math.log(2), 2)).beliefs, atol=1e-15)


def test_single_node():
    g = build_graph(np.ones((1, 1)))
    u = np.array([[0.3, 0.7]])
    for mu in (0.0, 1.0, 50.0):
        np.testing.assert_allclose(lbp_run(g, u, make_pairwise(mu, 2)).beliefs, u, atol=1e-15)


def _tree_diameter(g):
    adj = g.adjacency()

    def farthest(start):
        dist = {start: 0}
        frontier = [start]
        while frontier:
            nxt = []
            for v in frontier:
                for w in adj[v]:
                    if w not in dist:
                        dist[w] = dist[v] + 1
                        nxt.append(w)
            frontier = nxt
        far = max(dist, key=dist.get)
        return far, dist[far]

    far, _ = farthest(0)
    return farthest(far)[1]


def test_tree_exact_after_diameter_plus_one(rng):
    for _ in range(20):
        g = build_graph(random_tree_mask(rng, max_nodes=10))
        if g.num_edges == 0:
            continue
        M = int(rng.integers(2, 5))
        u = random_unary(rng, g.num_nodes, M)
        pw = make_pairwise(rng.uniform(0, 3), M)
        res = lbp_run(g, u, pw, max_iters=_tree_diameter(g) + 1, damping=0.0, tol=0.0 + 1e-300)
        np.testing.assert_allclose(res.beliefs, exact_marginals(g, u, pw).beliefs, atol=1e-9)


def test_message_normalization_every_iteration(rng):
    g = build_graph(np.ones((4, 4)))
    u = random_unary(rng, g.num_nodes, 3)
    pw = make_pairwise(1.5, 3)
    for t in range(1, 8):
        res = lbp_run(g, u, pw, max_iters=t, tol=1e-300, keep_messages=True)
        assert res.iterations == t
        assert np.max(np.abs(res.messages.sum(axis=1) - 1)) <= 1e-12
        assert (res.messages > 0).all()
        assert np.max(np.abs(res.beliefs.sum(axis=1) - 1)) <= 1e-12


def test_permutation_equivariance(rng):
    g = build_graph(rng.uniform(size=(4, 5)) < 0.8)
    M = 4
    u = random_unary(rng, g.num_nodes, M)
    pw = make_pairwise(1.2, M)
    perm = rng.permutation(M)
    base = lbp_run(g, u, pw)
    permuted = lbp_run(g, u[:, perm], pw)
    np.testing.assert_allclose(permuted.beliefs, base.beliefs[:, perm], atol=1e-12)
    dec = mam_decide(base, g).labels
    dec_p = mam_decide(permuted, g).labels
    inverse = np.argsort(perm) + 1  # class k in the permuted problem is perm[k-1]+1 in the original
    mask = dec > 0
    np.testing.assert_array_equal(dec[mask], perm[dec_p[mask] - 1] + 1)
    assert inverse.size == M


def test_deterministic(rng):
    g = build_graph(np.ones((6, 6)))
    u = random_unary(rng, g.num_nodes, 3)
    a = lbp_run(g, u, make_pairwise(2.0, 3))
    b = lbp_run(g, u, make_pairwise(2.0, 3))
    assert a.beliefs.tobytes() == b.beliefs.tobytes()
    assert (a.iterations, a.max_delta) == (b.iterations, b.max_delta)


def test_components_are_independent(rng):
    mask = np.ones((3, 7), dtype=int)
    mask[:, 3] = 0  # two 3x3 components
    g = build_graph(mask)
    u = random_unary(rng, g.num_nodes, 3)
    left = g.node_coords[:, 1] < 3
    u2 = u.copy()
    u2[~left] = random_unary(rng, int((~left).sum()), 3)
    pw = make_pairwise(1.0, 3)
    a = lbp_run(g, u, pw, tol=1e-300, max_iters=30)
    b = lbp_run(g, u2, pw, tol=1e-300, max_iters=30)
    np.testing.assert_array_equal(a.beliefs[left], b.beliefs[left])


def test_center_flip_with_growing_mu():
    g = build_graph(np.ones((1, 3)))
    u = np.array([[0.6, 0.4], [0.45, 0.55], [0.6, 0.4]])
    decisions = {}
    for mu in (0.0, 0.1, 0.3, 0.5, 1.0, 2.0, 5.0):
        pw = make_pairwise(mu, 2)
        exact = exact_marginals(g, u, pw).beliefs
        lbp = lbp_run(g, u, pw, damping=0.0, tol=1e-300, max_iters=5).beliefs
        np.testing.assert_allclose(lbp, exact, atol=1e-12)
        decisions[mu] = mam_decide(lbp, g).labels[0, 1]
    assert decisions[0.0] == 2
    flips = [mu for mu, d in decisions.items() if d == 1]
    assert flips and all(decisions[mu] == 1 for mu in decisions if mu >= min(flips))


def test_mam_decide():
    g = build_graph(np.array([[1, 0, 1]]))
    field = mam_decide(np.array([[0.2, 0.5, 0.3], [0.5, 0.5, 0.0]]), g, (1, 3))
    np.testing.assert_array_equal(field.labels, [[2, 0, 1]])
    with pytest.raises(DimensionMismatchError):
        mam_decide(np.ones((3, 3)) / 3, g)


def test_lbp_argument_checks(rng):
    g = build_graph(np.ones((2, 2)))
    u = random_unary(rng, 4, 2)
    with pytest.raises(DimensionMismatchError):
        lbp_run(g, u, make_pairwise(1.0, 3))
    with pytest.raises(ValueError):
        lbp_run(g, u, make_pairwise(1.0, 2), damping=1.0)
    with pytest.raises(ValueError):
        lbp_run(g, u, make_pairwise(1.0, 2), max_iters=0)
