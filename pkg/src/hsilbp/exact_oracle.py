"""Exact marginals by brute-force enumeration of every joint labelling.

Only meant for tiny graphs; it is the reference that loopy BP is tested
against. The log-weights of all M^n labellings are materialized as an
n-dimensional tensor (axis i = label of node i), one slab per label of
node 0, and reduced with a streaming log-sum-exp.
"""
from __future__ import annotations

import numpy as np

from hsilbp.errors import DimensionMismatchError, EnumerationLimitError
from hsilbp.mrf_lbp import UNARY_FLOOR, BeliefField, mam_decide

MAX_NODES = 14
MAX_CONFIGS = 2**24


def _slab(log_unary, log_table, edges, first):
    """Log-weights of every labelling with node 0 fixed to ``first``; axis k-1 is node k.

    Built one axis at a time: when node k's axis is appended, its unary and
    every edge to an earlier node are added while the tensor is still small.
    """
    n, M = log_unary.shape
    w = np.array(log_unary[0, first])
    back = {k: [] for k in range(n)}
    for a, b in edges:
        back[max(a, b)].append(min(a, b))
    for k in range(1, n):
        term = log_unary[k]
        if 0 in back[k]:
            term = term + log_table[first]
        w = w[..., None] + term
        for j in back[k]:
            if j:
                shape = [1] * w.ndim
                shape[j - 1] = shape[k - 1] = M
                w = w + log_table.reshape(shape)
    return w


def _enumerate(graph, unary, pairwise):
    unary = np.asarray(unary, dtype=np.float64)
    n, M = graph.num_nodes, pairwise.num_classes
    if unary.shape != (n, M):
        raise DimensionMismatchError(f"unary shape {unary.shape} does not match ({n}, {M})")
    if n > MAX_NODES or M**n > MAX_CONFIGS:
        raise EnumerationLimitError(f"{M}^{n} configurations exceeds the enumeration limit")
    log_unary = np.log(np.maximum(unary, UNARY_FLOOR))
    log_table = np.log(pairwise.table)
    edges = [tuple(e) for e in graph.edges.tolist()]

    peak = -np.inf
    marg = np.zeros((n, M))
    for first in range(M):
        w = _slab(log_unary, log_table, edges, first)
        m = w.max()
        if m > peak:
            marg *= np.exp(peak - m)
            peak = m
        p = np.exp(w - peak)
        marg[0, first] += p.sum()
        # peel one leading axis at a time: node i's marginal, then the rest
        q = p.reshape(-1)
        for i in range(1, n):
            q = q.reshape(M, -1)
            marg[i] += q.sum(axis=1)
            q = q.sum(axis=0)
    return marg, peak + np.log(marg[0].sum())


def exact_marginals(graph, unary, pairwise):
    """q(y_i = k): summed mass of every labelling with y_i = k, divided by Z."""
    marg, _ = _enumerate(graph, unary, pairwise)
    return BeliefField(marg / marg.sum(axis=1, keepdims=True), 0, 0.0, True)


def log_partition(graph, unary, pairwise):
    """log Z of the unnormalized product of unaries and edge potentials."""
    return float(_enumerate(graph, unary, pairwise)[1])


def exact_mam(graph, unary, pairwise):
    return mam_decide(exact_marginals(graph, unary, pairwise), graph)
