"""Reduction from arbitrary arrival distributions to the uniform one.

An exact transport plan couples the arrival distribution p with the
uniform distribution over server locations.  Each arrival at r is
relocated to j with probability x[r][j] / p_r; the relocated sequence
is then exactly uniform, and the online matcher runs on the relocated
requests while true costs are charged against the original locations.
The plan's mass moved, M = n * (plan LP value), prices the relocation.
"""

from __future__ import annotations

import random
from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction

from .fairbias import MatchingResult, PlanProvider, init_state, step
from .flows import MinCostFlow
from .metrics import MetricInstance


@dataclass(frozen=True)
class RequestDistribution:
    """Integer-weighted distribution over the n points."""

    weights: tuple[int, ...]

    def __post_init__(self):
        if not self.weights:
            raise ValueError("empty distribution")
        if any(w < 0 for w in self.weights):
            raise ValueError("weights must be >= 0")
        if sum(self.weights) <= 0:
            raise ValueError("total weight must be positive")

    @property
    def n(self) -> int:
        return len(self.weights)

    @property
    def total(self) -> int:
        return sum(self.weights)

    def prob(self, i: int) -> Fraction:
        return Fraction(self.weights[i], self.total)

    def cumulative(self) -> list[int]:
        cum = []
        acc = 0
        for w in self.weights:
            acc += w
            cum.append(acc)
        return cum

    def sample(self, rng: random.Random) -> int:
        t = rng.randrange(self.total)
        return bisect_right(self.cumulative(), t)


def uniform_distribution(n: int) -> RequestDistribution:
    return RequestDistribution(tuple([1] * n))


def geometric_distribution(n: int, base: int = 2) -> RequestDistribution:
    """Skewed weights base**i; sharply favors the highest point ids."""
    return RequestDistribution(tuple(base**i for i in range(n)))


def load_distribution(path: str, n: int) -> RequestDistribution:
    """Read "point_id weight" integer lines; absent points get weight 0."""
    weights = [0] * n
    with open(path, encoding="utf-8") as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            pid, w = line.split()
            if not 0 <= int(pid) < n:
                raise ValueError(f"point {pid} outside 0..{n - 1}")
            weights[int(pid)] = int(w)
    return RequestDistribution(tuple(weights))


@dataclass
class CouplingPlan:
    """Exact transport between the arrival and uniform distributions.

    Units are integers at scale n * total_weight: row i holds n * w_i
    units, every column holds total_weight units.
    """

    n: int
    dist: RequestDistribution
    rows: dict[int, tuple[list[int], list[int]]]  # r -> (targets, cum units)
    value: Fraction  # LP optimum (mass-weighted distance)

    @property
    def mass_moved(self) -> Fraction:
        """M = n * LP value, the price of one relocated episode in expectation."""
        return self.n * self.value

    def entry_units(self) -> dict[tuple[int, int], int]:
        out = {}
        for r, (targets, cum) in self.rows.items():
            prev = 0
            for j, acc in zip(targets, cum):
                out[(r, j)] = acc - prev
                prev = acc
        return out

    def validate(self) -> None:
        W = self.dist.total
        units = self.entry_units()
        row_tot: dict[int, int] = {}
        col_tot: dict[int, int] = {}
        for (i, j), u in units.items():
            if u < 0:
                raise AssertionError("negative plan mass")
            row_tot[i] = row_tot.get(i, 0) + u
            col_tot[j] = col_tot.get(j, 0) + u
        for i in range(self.n):
            if row_tot.get(i, 0) != self.n * self.dist.weights[i]:
                raise AssertionError(f"row {i} mass mismatch")
        for j in range(self.n):
            if col_tot.get(j, 0) != W:
                raise AssertionError(f"column {j} mass mismatch")


def solve_transshipment(
    instance: MetricInstance, dist: RequestDistribution
) -> CouplingPlan:
    """Min-cost exact coupling of dist with uniform over the n points."""
    n = instance.n
    if dist.n != n:
        raise ValueError("distribution size does not match the instance")
    W = dist.total
    scale = n * W
    rows = [i for i in range(n) if dist.weights[i] > 0]
    m = len(rows)
    g = MinCostFlow(m + n + 2)
    sink = m + n + 1
    arc_of = {}
    for a, i in enumerate(rows):
        g.add_edge(0, 1 + a, n * dist.weights[i], 0)
        row = instance.matrix[i]
        for j in range(n):
            arc_of[(i, j)] = g.add_edge(1 + a, 1 + m + j, scale, row[j])
    for j in range(n):
        g.add_edge(1 + m + j, sink, W, 0)
    _, cost = g.min_cost_flow(0, sink, scale)
    plan_rows: dict[int, tuple[list[int], list[int]]] = {}
    for i in rows:
        targets = []
        cum = []
        acc = 0
        for j in range(n):
            f = g.flow_on(arc_of[(i, j)])
            if f > 0:
                targets.append(j)
                acc += f
                cum.append(acc)
        plan_rows[i] = (targets, cum)
    return CouplingPlan(n, dist, plan_rows, Fraction(cost, scale))


def relocate(plan: CouplingPlan, r: int, rng: random.Random) -> int:
    """Sample the uniformized stand-in location for an arrival at r."""
    w_r = plan.dist.weights[r]
    if w_r <= 0:
        raise ValueError(f"arrival at zero-probability location {r}")
    targets, cum = plan.rows[r]
    total = plan.n * w_r
    assert cum[-1] == total, "row mass must be exactly n * w_r"
    t = rng.randrange(total)
    return targets[bisect_right(cum, t)]


@dataclass
class WrappedResult:
    """Episode under the relocated stream, with both cost accountings."""

    result: MatchingResult  # step costs against the true arrival locations
    relocated_cost: int  # same assignments, costs against stand-in locations
    relocation_cost: int  # distance arrivals were moved


def run_wrapped(
    instance: MetricInstance,
    dist: RequestDistribution,
    *,
    seed: int | None = None,
    rng: random.Random | None = None,
    stream: list[int] | None = None,
    plan: CouplingPlan | None = None,
    provider: PlanProvider | None = None,
) -> WrappedResult:
    """Draw (or take) a stream from dist, relocate, and match online."""
    if not instance.verified_metric:
        raise ValueError("the wrapper's accounting needs a checked metric")
    n = instance.n
    if rng is None:
        rng = random.Random(seed)
    if plan is None:
        plan = solve_transshipment(instance, dist)
    if provider is None:
        provider = PlanProvider(instance)
    if stream is None:
        stream = [dist.sample(rng) for _ in range(n)]
    elif len(stream) != n:
        raise ValueError(f"stream must have exactly n={n} requests")
    state = init_state(n)
    matrix = instance.matrix
    assignments = []
    true_costs = []
    relocated_cost = 0
    relocation_cost = 0
    for a in stream:
        b = relocate(plan, a, rng)
        s, c_rel = step(provider, state, b, rng)
        true_cost = matrix[s][a]
        assert true_cost <= matrix[a][b] + matrix[b][s], "triangle accounting"
        assignments.append((a, s))
        true_costs.append(true_cost)
        relocated_cost += c_rel
        relocation_cost += matrix[a][b]
    result = MatchingResult(
        "fair-bias-wrapped", seed, assignments, true_costs, sum(true_costs)
    )
    return WrappedResult(result, relocated_cost, relocation_cost)
