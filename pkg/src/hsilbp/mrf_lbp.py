"""Background-masked grid MRF with a Potts prior and sum-product loopy BP.

Nodes are the non-background pixels only; background pixels cut the grid,
so no message ever passes through them. Messages are updated on a
synchronous (flood) schedule, so results do not depend on edge order.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from hsilbp.errors import (
    DimensionMismatchError,
    EmptyGraphError,
    MissingUnaryError,
    NumericalError,
)
from hsilbp.hsidata import LabelField

UNARY_FLOOR = 1e-30

_OFFSETS = {
    4: ((0, 1), (1, 0)),
    8: ((0, 1), (1, 0), (1, 1), (1, -1)),
}


@dataclass(frozen=True)
class GridGraph:
    shape: tuple
    node_coords: np.ndarray  # (n, 2) row-major order
    node_index: np.ndarray  # (H, W) -> node id, -1 on background
    edges: np.ndarray  # (E, 2), each unordered pair once, a < b
    connectivity: int = 4

    @property
    def num_nodes(self):
        return len(self.node_coords)

    @property
    def num_edges(self):
        return len(self.edges)

    def neighbors(self, node):
        e = self.edges
        return sorted(np.concatenate([e[e[:, 0] == node, 1], e[e[:, 1] == node, 0]]).tolist())

    def adjacency(self):
        adj = [[] for _ in range(self.num_nodes)]
        for a, b in self.edges.tolist():
            adj[a].append(b)
            adj[b].append(a)
        return [sorted(n) for n in adj]


@dataclass(frozen=True)
class PairwisePotential:
    mu: float
    table: np.ndarray  # (M, M)

    @property
    def num_classes(self):
        return self.table.shape[0]


@dataclass(frozen=True)
class BeliefField:
    beliefs: np.ndarray  # (n, M)
    iterations: int
    max_delta: float
    converged: bool
    messages: np.ndarray | None = None  # (2E, M); row 2k is edges[k] a->b, row 2k+1 is b->a


def build_graph(mask, connectivity=4):
    """Graph over the non-background pixels of ``mask`` (LabelField or array; 0 = background)."""
    if isinstance(mask, LabelField):
        mask = mask.labels
    mask = np.asarray(mask) != 0
    if mask.ndim != 2 or min(mask.shape) < 1:
        raise DimensionMismatchError(f"mask must be a non-empty 2-D array, got {mask.shape}")
    if connectivity not in _OFFSETS:
        raise ValueError("connectivity must be 4 or 8")
    h, w = mask.shape
    node_index = np.full((h, w), -1, dtype=np.int64)
    coords = np.argwhere(mask)
    if len(coords) == 0:
        raise EmptyGraphError("no non-background pixels")
    node_index[coords[:, 0], coords[:, 1]] = np.arange(len(coords))

    pairs = []
    for dr, dc in _OFFSETS[connectivity]:
        r0, r1 = 0, h - dr
        c0, c1 = max(0, -dc), w - max(0, dc)
        src = node_index[r0:r1, c0:c1]
        dst = node_index[r0 + dr:r1 + dr, c0 + dc:c1 + dc]
        ok = (src >= 0) & (dst >= 0)
        pairs.append(np.stack([src[ok], dst[ok]], axis=1))
    edges = np.concatenate(pairs) if pairs else np.empty((0, 2), dtype=np.int64)
    edges = np.sort(edges, axis=1)
    edges = edges[np.lexsort((edges[:, 1], edges[:, 0]))]
    node_index.setflags(write=False)
    return GridGraph((h, w), coords, node_index, edges.reshape(-1, 2), connectivity)


def make_pairwise(mu, M):
    """Potts compatibility: exp(mu) on the diagonal, 1 elsewhere."""
    if mu < 0:
        raise ValueError("mu must be nonnegative")
    if M < 2:
        raise ValueError("need at least two classes")
    table = np.ones((M, M))
    np.fill_diagonal(table, np.exp(mu))
    table.setflags(write=False)
    return PairwisePotential(float(mu), table)


def _normalize_rows(p):
    return p / p.sum(axis=1, keepdims=True)


def assemble_unaries(probs, graph, train_indices=(), train_labels=(), clamp_eps=1e-6):
    """Per-node unary vectors.

    ``probs`` is either an (n_nodes, M) array aligned with the graph's nodes
    or an (H, W, M) array. Training nodes are clamped to ``1 - clamp_eps`` on
    their known label; every other node gets its probabilities floored at
    1e-30 and renormalized.
    """
    probs = np.asarray(probs, dtype=np.float64)
    if probs.ndim == 3:
        if probs.shape[:2] != graph.shape:
            raise MissingUnaryError(f"probability field {probs.shape[:2]} does not cover grid {graph.shape}")
        probs = probs[graph.node_coords[:, 0], graph.node_coords[:, 1]]
    if probs.ndim != 2 or probs.shape[0] != graph.num_nodes:
        raise MissingUnaryError(f"expected a probability vector for each of {graph.num_nodes} nodes")
    if np.isnan(probs).any():
        raise MissingUnaryError("probability field has missing (NaN) entries at graph nodes")
    M = probs.shape[1]
    unary = _normalize_rows(np.maximum(probs, UNARY_FLOOR))

    train_indices = np.asarray(train_indices, dtype=np.int64).reshape(-1, 2)
    if len(train_indices):
        nodes = graph.node_index[train_indices[:, 0], train_indices[:, 1]]
        if (nodes < 0).any():
            raise MissingUnaryError("training pixel lies on background")
        labels = np.asarray(train_labels, dtype=np.int64).ravel()
        if M == 1:
            unary[nodes] = 1.0
        else:
            unary[nodes] = clamp_eps / (M - 1)
            unary[nodes, labels - 1] = 1.0 - clamp_eps
    return unary


def lbp_run(graph, unary, pairwise, max_iters=50, tol=1e-6, damping=0.5, keep_messages=False):
    """Sum-product loopy belief propagation.

    Messages start uniform. At iteration t every directed message is
    recomputed from the iteration t-1 messages, normalized to sum 1 and then
    damped: m = (1 - damping) * m_new + damping * m_old. Iteration stops once
    the largest absolute message change drops below ``tol`` or after
    ``max_iters`` sweeps. Products of incoming messages are taken in log space.
    """
    unary = np.asarray(unary, dtype=np.float64)
    n = graph.num_nodes
    M = pairwise.num_classes
    if unary.shape != (n, M):
        raise DimensionMismatchError(f"unary shape {unary.shape} does not match ({n}, {M})")
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    if not 0.0 <= damping < 1.0:
        raise ValueError("damping must lie in [0, 1)")
    log_unary = np.log(np.maximum(unary, UNARY_FLOOR))
    table = pairwise.table

    E = graph.num_edges
    src = graph.edges.reshape(-1)  # 2k -> a, 2k+1 -> b
    dst = graph.edges[:, ::-1].reshape(-1)
    rev = np.arange(2 * E) ^ 1

    msgs = np.full((2 * E, M), 1.0 / M)
    log_msgs = np.log(msgs)
    iterations, delta = 0, 0.0

    def incoming(log_m):
        total = np.empty((n, M))
        for k in range(M):
            total[:, k] = np.bincount(dst, weights=log_m[:, k], minlength=n)
        return total

    if E:
        for iterations in range(1, max_iters + 1):
            cavity = (log_unary + incoming(log_msgs))[src] - log_msgs[rev]
            cavity -= cavity.max(axis=1, keepdims=True)
            new = _normalize_rows(np.exp(cavity) @ table)
            if damping:
                new = _normalize_rows((1.0 - damping) * new + damping * msgs)
            if not np.all(np.isfinite(new)) or not np.all(new > 0):
                raise NumericalError(f"non-finite or zero message at iteration {iterations}")
            delta = float(np.max(np.abs(new - msgs)))
            msgs = new
            log_msgs = np.log(msgs)
            if delta < tol:
                break

    log_belief = log_unary + incoming(log_msgs)
    log_belief -= log_belief.max(axis=1, keepdims=True)
    beliefs = _normalize_rows(np.exp(log_belief))
    return BeliefField(beliefs, iterations, delta, delta < tol, msgs if keep_messages else None)


def mam_decide(beliefs, graph, original_shape=None):
    """Label each node with 1 + argmax of its belief (first index wins ties); background stays 0."""
    b = beliefs.beliefs if isinstance(beliefs, BeliefField) else np.asarray(beliefs)
    shape = tuple(original_shape) if original_shape is not None else graph.shape
    if b.shape[0] != graph.num_nodes:
        raise DimensionMismatchError("beliefs do not cover every node")
    out = np.zeros(shape, dtype=np.int64)
    out[graph.node_coords[:, 0], graph.node_coords[:, 1]] = np.argmax(b, axis=1) + 1
    return LabelField(out, b.shape[1])
