"""Online matching by sampling servers from exact optimal plans.

At every arrival the algorithm re-solves the fractional matching of the
current free set, canonicalized so co-located mass matches itself, and
assigns the request to free server s with probability n * x[s][r].  The
sampling distribution is carried as integer units with an exact total,
so a single uniform integer draw per step implements inverse-CDF
sampling with no floating point.

A plan provider per backing keeps this fast: tree-backed instances use
the bottom-up canonical plan, checked matrix metrics solve the reduced
surplus/deficit flow (self-matches are implicit), unchecked instances
solve the full program and sample its raw columns.  Providers memoize
plans per free set; the solver is deterministic, so memoization cannot
change behavior, it only skips identical re-solves.
"""

from __future__ import annotations

import random
from bisect import bisect_right
from dataclasses import dataclass

from .bmatching import solve_max_weight, solve_min_cost, tree_context, tree_plan
from .flows import MinCostFlow
from .metrics import MetricInstance

Column = tuple[list[int], list[int]]  # servers, cumulative units


@dataclass
class MatchingResult:
    """One episode: per-step assignments and costs plus the total."""

    algorithm: str
    seed: int | None
    assignments: list[tuple[int, int]]  # (request, server) in arrival order
    step_costs: list[int]
    total_cost: int


@dataclass
class OnlineState:
    free: tuple[int, ...]
    free_set: set[int]

    @property
    def k(self) -> int:
        return len(self.free)


class PlanProvider:
    """Sampling columns of the canonical plan for each free set."""

    def __init__(
        self,
        instance: MetricInstance,
        *,
        allow_unchecked: bool = False,
        cache: bool = True,
    ):
        if not instance.verified_metric and not allow_unchecked:
            raise ValueError(
                "instance is not a checked metric; pass allow_unchecked=True "
                "to run on it anyway"
            )
        self.instance = instance
        self.n = instance.n
        self.canonical = instance.verified_metric
        self._ctx = (
            tree_context(instance.tree)
            if instance.verified_metric and instance.tree is not None
            else None
        )
        self._cache: dict[tuple[int, ...], dict[int, Column]] | None = (
            {} if cache else None
        )

    def columns(self, free: tuple[int, ...]) -> dict[int, Column]:
        if self._cache is not None:
            hit = self._cache.get(free)
            if hit is not None:
                return hit
        cols = self._build(free)
        if self._cache is not None:
            self._cache[free] = cols
        return cols

    def _build(self, free: tuple[int, ...]) -> dict[int, Column]:
        n = self.n
        k = len(free)
        if self._ctx is not None:
            counts = dict.fromkeys(free, 1)
            _, cols = tree_plan(self._ctx, counts, k, n)
            return cols
        if self.canonical:
            return self._build_reduced(free)
        full = solve_min_cost(self.instance, list(free))
        raw: dict[int, list[tuple[int, int]]] = {}
        for i, j, f in full.entries:
            units = f * n * k
            assert units.denominator == 1
            raw.setdefault(j, []).append((i, int(units)))
        return {r: _cumulative(pairs) for r, pairs in raw.items()}

    def _build_reduced(self, free: tuple[int, ...]) -> dict[int, Column]:
        # surplus n-k per free server vs deficit k per occupied location,
        # in the same n*k-scaled units as the full program
        n = self.n
        k = len(free)
        if k == n:
            return {}
        occupied = [p for p in range(n) if p not in set(free)]
        m = len(occupied)
        g = MinCostFlow(k + m + 2)
        sink = k + m + 1
        matrix = self.instance.matrix
        arc_of = {}
        for a, s in enumerate(free):
            g.add_edge(0, 1 + a, n - k, 0)
            row = matrix[s]
            for b, r in enumerate(occupied):
                arc_of[(s, r)] = g.add_edge(1 + a, 1 + k + b, k, row[r])
        for b in range(m):
            g.add_edge(1 + k + b, sink, k, 0)
        g.min_cost_flow(0, sink, k * (n - k))
        raw: dict[int, list[tuple[int, int]]] = {}
        for (s, r), idx in sorted(arc_of.items()):
            f = g.flow_on(idx)
            if f > 0:
                raw.setdefault(r, []).append((s, f))
        return {r: _cumulative(pairs) for r, pairs in raw.items()}


def _cumulative(pairs: list[tuple[int, int]]) -> Column:
    servers = [s for s, _ in pairs]
    cum = []
    acc = 0
    for _, u in pairs:
        acc += u
        cum.append(acc)
    return servers, cum


def init_state(n: int) -> OnlineState:
    free = tuple(range(n))
    return OnlineState(free, set(free))


def step(
    provider: PlanProvider,
    state: OnlineState,
    request: int,
    rng: random.Random,
) -> tuple[int, int]:
    """Serve one arrival; returns (server, cost) and shrinks the free set."""
    k = state.k
    if k == 0:
        raise ValueError("no free servers left")
    if provider.canonical and request in state.free_set:
        # canonical plans put the full column on the co-located server
        server = request
    else:
        cols = provider.columns(state.free)
        servers, cum = cols[request]
        assert cum[-1] == k, "column mass must be exactly the free count"
        t = rng.randrange(k)
        server = servers[bisect_right(cum, t)]
    cost = provider.instance.matrix[server][request]
    state.free_set.discard(server)
    state.free = tuple(p for p in state.free if p != server)
    return server, cost


def run_episode(
    instance: MetricInstance,
    stream: list[int],
    *,
    seed: int | None = None,
    rng: random.Random | None = None,
    provider: PlanProvider | None = None,
    allow_unchecked: bool = False,
) -> MatchingResult:
    """Play one full episode (n arrivals against n servers)."""
    n = instance.n
    if len(stream) != n:
        raise ValueError(f"stream must have exactly n={n} requests")
    if any(not 0 <= r < n for r in stream):
        raise ValueError("request location outside the instance")
    if rng is None:
        rng = random.Random(seed)
    if provider is None:
        provider = PlanProvider(instance, allow_unchecked=allow_unchecked)
    state = init_state(n)
    provider.columns(state.free)  # full free set: value 0, empty columns
    assignments = []
    costs = []
    for r in stream:
        s, c = step(provider, state, r, rng)
        assignments.append((r, s))
        costs.append(c)
    return MatchingResult("fair-bias", seed, assignments, costs, sum(costs))


# ---------------------------------------------------------------------------
# maximum-weight variant


class MaxWeightProvider:
    """Plan columns for the weighted-gain variant."""

    def __init__(
        self,
        weights: list[list[int]],
        location_weights: list[int],
        *,
        cache: bool = True,
    ):
        self.n = len(weights)
        self.weights = weights
        self.location_weights = list(location_weights)
        self.total_weight = sum(self.location_weights)
        self._cache: dict[tuple[int, ...], dict[int, Column]] | None = (
            {} if cache else None
        )

    def columns(self, free: tuple[int, ...]) -> dict[int, Column]:
        if self._cache is not None:
            hit = self._cache.get(free)
            if hit is not None:
                return hit
        k = len(free)
        scale = k * self.total_weight
        sol = solve_max_weight(self.weights, list(free), self.location_weights)
        raw: dict[int, list[tuple[int, int]]] = {}
        for i, j, f in sol.entries:
            units = f * scale
            assert units.denominator == 1
            raw.setdefault(j, []).append((i, int(units)))
        cols = {r: _cumulative(pairs) for r, pairs in raw.items()}
        if self._cache is not None:
            self._cache[free] = cols
        return cols


def run_episode_max_weight(
    weights: list[list[int]],
    location_weights: list[int],
    stream: list[int],
    *,
    seed: int | None = None,
    rng: random.Random | None = None,
    provider: MaxWeightProvider | None = None,
) -> MatchingResult:
    """Weighted episode: server s serves r with probability x[s][r] / p_r."""
    n = len(weights)
    if len(stream) != n:
        raise ValueError(f"stream must have exactly n={n} requests")
    if rng is None:
        rng = random.Random(seed)
    if provider is None:
        provider = MaxWeightProvider(weights, location_weights)
    state = init_state(n)
    assignments = []
    gains = []
    for r in stream:
        k = state.k
        w_r = provider.location_weights[r]
        if w_r <= 0:
            raise ValueError(f"arrival at zero-probability location {r}")
        cols = provider.columns(state.free)
        servers, cum = cols[r]
        assert cum[-1] == k * w_r, "column mass must be exactly k * w_r"
        t = rng.randrange(k * w_r)
        server = servers[bisect_right(cum, t)]
        state.free_set.discard(server)
        state.free = tuple(p for p in state.free if p != server)
        assignments.append((r, server))
        gains.append(weights[server][r])
    return MatchingResult("max-weight", seed, assignments, gains, sum(gains))
