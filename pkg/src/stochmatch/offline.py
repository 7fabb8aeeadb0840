"""Offline benchmarks: optimal cost of a realized request stream.

opt_general solves the assignment by exact min-cost flow (requests
collapsed by location, servers with unit capacity).  opt_tree uses the
closed form on trees: sum over edges of length times |requests in the
cut - servers in the cut|, which equals the assignment optimum there.
opt_max_weight is the mirrored maximization.
"""

from __future__ import annotations

from collections import Counter

from .bmatching import tree_context
from .flows import MinCostFlow
from .metrics import MetricInstance, WeightedTree


def _request_counts(n: int, requests) -> Counter:
    counts = Counter(requests)
    if sum(counts.values()) != n:
        raise ValueError(f"need exactly n={n} requests")
    for r in counts:
        if not 0 <= r < n:
            raise ValueError(f"request location {r} outside the instance")
    return counts


def opt_general(instance: MetricInstance, requests) -> int:
    """Min-cost perfect assignment of the stream to the n servers."""
    n = instance.n
    counts = _request_counts(n, requests)
    spots = sorted(counts)
    m = len(spots)
    g = MinCostFlow(m + n + 2)
    sink = m + n + 1
    for a, r in enumerate(spots):
        g.add_edge(0, 1 + a, counts[r], 0)
        row = instance.matrix[r]
        for s in range(n):
            g.add_edge(1 + a, 1 + m + s, counts[r], row[s])
    for s in range(n):
        g.add_edge(1 + m + s, sink, 1, 0)
    _, cost = g.min_cost_flow(0, sink, n)
    return cost


def opt_tree(tree_or_instance: WeightedTree | MetricInstance, requests) -> int:
    """Closed-form optimum on a tree: sum_e len_e * |X_e - n_e|."""
    if isinstance(tree_or_instance, MetricInstance):
        tree = tree_or_instance.tree
        if tree is None:
            raise ValueError("instance has no tree backing")
    else:
        tree = tree_or_instance
    n = tree.n_points
    counts = _request_counts(n, requests)
    ctx = tree_context(tree)
    node_point = ctx.node_point
    parent = ctx.parent
    parent_len = ctx.parent_len
    # per node: requests minus servers in its subtree
    bal = [0] * tree.num_nodes
    total = 0
    for x in ctx.bottom_up:
        p = node_point[x]
        if p >= 0:
            bal[x] += counts.get(p, 0) - 1
        par = parent[x]
        if par >= 0:
            if parent_len[x] and bal[x]:
                total += parent_len[x] * abs(bal[x])
            bal[par] += bal[x]
    assert bal[ctx.bottom_up[-1]] == 0
    return total


def opt_max_weight(weights: list[list[int]], requests) -> int:
    """Max-weight perfect assignment of the stream to the n servers.

    weights[s][r] is the gain of serving a request at r with server s.
    """
    n = len(weights)
    counts = _request_counts(n, requests)
    spots = sorted(counts)
    m = len(spots)
    shift = max(max(row) for row in weights)
    g = MinCostFlow(m + n + 2)
    sink = m + n + 1
    for a, r in enumerate(spots):
        g.add_edge(0, 1 + a, counts[r], 0)
        for s in range(n):
            g.add_edge(1 + a, 1 + m + s, counts[r], shift - weights[s][r])
    for s in range(n):
        g.add_edge(1 + m + s, sink, 1, 0)
    _, cost = g.min_cost_flow(0, sink, n)
    return n * shift - cost
