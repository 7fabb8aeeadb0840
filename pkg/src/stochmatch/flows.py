"""Exact integral min-cost flow via successive shortest paths with potentials.

Internal engine shared by the fractional-matching solver, the offline
benchmarks and the distribution-coupling solver.  Everything is integer
arithmetic: capacities, costs and flows are Python ints, so results are
exact at any magnitude.

Determinism: arcs keep insertion order, Dijkstra breaks ties by node
index, so identical inputs produce identical flows.
"""

from __future__ import annotations

import heapq

_INF = float("inf")


class MinCostFlow:
    """Successive-shortest-path min-cost flow on a directed graph.

    Node ids are 0..n-1.  Costs must be non-negative on the initial
    arcs (reduced costs stay non-negative thanks to the potentials).
    """

    def __init__(self, n: int):
        self.n = n
        # arc storage: parallel lists, adj[u] holds arc indices out of u
        self.to: list[int] = []
        self.cap: list[int] = []
        self.cost: list[int] = []
        self.adj: list[list[int]] = [[] for _ in range(n)]

    def add_edge(self, u: int, v: int, cap: int, cost: int) -> int:
        """Add arc u->v; returns the arc index (reverse arc is index^1)."""
        idx = len(self.to)
        self.to.append(v)
        self.cap.append(cap)
        self.cost.append(cost)
        self.adj[u].append(idx)
        self.to.append(u)
        self.cap.append(0)
        self.cost.append(-cost)
        self.adj[v].append(idx + 1)
        return idx

    def flow_on(self, idx: int) -> int:
        """Units currently routed through arc idx (its reverse residual)."""
        return self.cap[idx ^ 1]

    def min_cost_flow(self, s: int, t: int, maxf: int) -> tuple[int, int]:
        """Push up to maxf units from s to t; returns (flow, cost).

        Raises ValueError if fewer than maxf units can be routed, so
        callers can rely on exact saturation.
        """
        n = self.n
        to, cap, cost, adj = self.to, self.cap, self.cost, self.adj
        potential = [0] * n
        total_flow = 0
        total_cost = 0
        while total_flow < maxf:
            dist: list[float] = [_INF] * n
            dist[s] = 0
            prev_arc = [-1] * n
            heap: list[tuple[int, int]] = [(0, s)]
            while heap:
                d, u = heapq.heappop(heap)
                if d > dist[u]:
                    continue
                pu = potential[u]
                for idx in adj[u]:
                    if cap[idx] <= 0:
                        continue
                    v = to[idx]
                    nd = d + cost[idx] + pu - potential[v]
                    if nd < dist[v]:
                        dist[v] = nd
                        prev_arc[v] = idx
                        heapq.heappush(heap, (nd, v))
            if dist[t] is _INF or dist[t] == _INF:
                raise ValueError(
                    f"only {total_flow} of {maxf} units routable"
                )
            for v in range(n):
                if dist[v] < _INF:
                    potential[v] += int(dist[v])
            # bottleneck along the shortest path
            push = maxf - total_flow
            v = t
            while v != s:
                idx = prev_arc[v]
                if cap[idx] < push:
                    push = cap[idx]
                v = to[idx ^ 1]
            v = t
            while v != s:
                idx = prev_arc[v]
                cap[idx] -= push
                cap[idx ^ 1] += push
                total_cost += push * cost[idx]
                v = to[idx ^ 1]
            total_flow += push
        return total_flow, total_cost

    def residual_has_negative_cycle(self) -> bool:
        """Bellman-Ford over the residual graph; certifies optimality.

        A feasible flow is min-cost iff the residual graph has no
        negative-cost cycle.  Independent of the search used to build
        the flow, so tests use it as an optimality certificate.
        """
        n = self.n
        dist = [0] * n  # virtual source into every node
        to, cap, cost = self.to, self.cap, self.cost
        for it in range(n):
            changed = False
            for idx in range(len(to)):
                if cap[idx] <= 0:
                    continue
                u = to[idx ^ 1]
                v = to[idx]
                if dist[u] + cost[idx] < dist[v]:
                    dist[v] = dist[u] + cost[idx]
                    changed = True
            if not changed:
                return False
        return changed
