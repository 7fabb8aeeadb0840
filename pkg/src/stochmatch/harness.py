"""Scenario files, seeded trial runs, and the lemma verifiers.

A scenario is a small key-value text file (``key = value`` lines, ``#``
comments).  ``run_trials`` replays it deterministically: trial t uses
``random.Random(seed + t)``, so reruns produce identical CSV rows apart
from the wall-time column.  Summaries report the ratio of sample means
E[ALG]/E[OPT] with a bootstrap 95% interval, never a mean of ratios.

The verify_* functions are the checkable counterparts of the structural
facts the matcher relies on: free-set uniformity, cost decomposition
across free-set sizes, subset-versus-iid monotonicity, the canonical
self-match shape, and the complement scaling identity.
"""

from __future__ import annotations

import csv
import math
import random
import time
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, combinations_with_replacement

import numpy as np
from scipy.stats import chi2

from .bmatching import (
    canonicalize,
    scaling_identity_check,
    solve_min_cost,
    solve_min_cost_tree,
)
from .fairbias import (
    MatchingResult,
    MaxWeightProvider,
    PlanProvider,
    init_state,
    run_episode,
    run_episode_max_weight,
    step,
)
from .metrics import (
    MetricInstance,
    frt_embed,
    line_metric,
    load_metric,
    matrix_metric,
    matrix_unchecked,
    random_recursive_tree,
    star_tree,
    tree_metric,
    uniform_metric,
)
from .offline import opt_general, opt_max_weight, opt_tree
from .splitmatch import run_episode_hier, split_decomposition, ternarize
from .transship import (
    geometric_distribution,
    load_distribution,
    run_wrapped,
    solve_transshipment,
    uniform_distribution,
)

_TREE_SALT = 0x7E11
_FRT_SALT = 0x0F47
_SUBSET_SALT = 0xD150

ALGORITHMS = ("fair-bias", "split-match", "fair-bias-on-frt", "max-weight")


# ---------------------------------------------------------------------------
# scenarios


@dataclass
class Scenario:
    """One reproducible experiment: metric, distribution, algorithm, seeds."""

    metric_kind: str  # line | star | uniform | random | nonmetric | file
    metric_arg: str  # size for generators, path for files
    distribution: str = "uniform"  # uniform | geometric | weights
    dist_arg: str = ""
    algorithm: str = "fair-bias"
    trials: int = 100
    seed: int = 0
    output: str | None = None
    spacing: int = 1
    frt_mode: str = "per-trial"  # per-trial | once

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if self.frt_mode not in ("per-trial", "once"):
            raise ValueError(f"unknown frt_mode {self.frt_mode!r}")
        if self.distribution not in ("uniform", "geometric", "weights"):
            raise ValueError(f"unknown distribution {self.distribution!r}")


def parse_scenario(path: str) -> Scenario:
    fields: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"bad scenario line {line!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            fields[key] = value
    if "metric" not in fields:
        raise ValueError("scenario needs a metric line")
    mk, _, marg = fields.pop("metric").partition(" ")
    sc = Scenario(metric_kind=mk, metric_arg=marg.strip())
    if "distribution" in fields:
        dk, _, darg = fields.pop("distribution").partition(" ")
        sc.distribution = dk
        sc.dist_arg = darg.strip()
    for key in ("algorithm", "frt_mode", "output"):
        if key in fields:
            setattr(sc, key, fields.pop(key))
    for key in ("trials", "seed", "spacing"):
        if key in fields:
            setattr(sc, key, int(fields.pop(key)))
    if fields:
        raise ValueError(f"unknown scenario keys: {sorted(fields)}")
    sc.__post_init__()
    return sc


def build_instance(sc: Scenario) -> MetricInstance:
    kind, arg = sc.metric_kind, sc.metric_arg
    if kind == "line":
        return line_metric(int(arg), sc.spacing)
    if kind == "star":
        return tree_metric(star_tree(int(arg), max(sc.spacing, 1)))
    if kind == "uniform":
        return uniform_metric(int(arg), max(sc.spacing, 1))
    if kind == "random":
        gen = random.Random(sc.seed ^ _TREE_SALT)
        return tree_metric(random_recursive_tree(int(arg), gen))
    if kind == "nonmetric":
        return gen_nonmetric_instance(int(arg))
    if kind == "file":
        return load_metric(arg)
    raise ValueError(f"unknown metric kind {kind!r}")


def build_distribution(sc: Scenario, n: int):
    if sc.distribution == "uniform":
        return uniform_distribution(n)
    if sc.distribution == "geometric":
        return geometric_distribution(n)
    return load_distribution(sc.dist_arg, n)


# ---------------------------------------------------------------------------
# trial runner


@dataclass
class TrialRecord:
    trial: int
    seed: int
    alg_cost: int
    opt_cost: int
    reloc_cost: int
    steps: int
    millis: float
    step_costs: list[int] = field(default_factory=list, repr=False)


@dataclass(frozen=True)
class RunSummary:
    trials: int
    mean_alg: float
    mean_opt: float
    ratio: float
    ci_low: float
    ci_high: float
    zero_over_zero: bool

    def lines(self) -> list[str]:
        flag = "  (0/0 reported as 1)" if self.zero_over_zero else ""
        return [
            f"trials    {self.trials}",
            f"mean ALG  {self.mean_alg:.6g}",
            f"mean OPT  {self.mean_opt:.6g}",
            f"ratio     {self.ratio:.6g}{flag}",
            f"95% CI    [{self.ci_low:.6g}, {self.ci_high:.6g}]",
        ]


def ratio_of_means(
    algs: list[float], opts: list[float], seed: int, resamples: int = 1000
) -> tuple[float, float, float, bool]:
    """Ratio of sample means with a bootstrap percentile interval."""
    a = np.asarray(algs, dtype=float)
    o = np.asarray(opts, dtype=float)
    ma, mo = float(a.mean()), float(o.mean())
    if ma == 0.0 and mo == 0.0:
        return 1.0, 1.0, 1.0, True
    if mo == 0.0:
        return math.inf, math.inf, math.inf, False
    gen = np.random.default_rng(seed)
    idx = gen.integers(0, len(a), size=(resamples, len(a)))
    am = a[idx].mean(axis=1)
    om = o[idx].mean(axis=1)
    ratios = np.where(
        (am == 0.0) & (om == 0.0),
        1.0,
        np.divide(am, om, out=np.full_like(am, np.inf), where=om != 0.0),
    )
    lo, hi = np.percentile(ratios, [2.5, 97.5])
    return ma / mo, float(lo), float(hi), False


def summarize(records: list[TrialRecord], seed: int) -> RunSummary:
    algs = [float(r.alg_cost) for r in records]
    opts = [float(r.opt_cost) for r in records]
    ratio, lo, hi, flag = ratio_of_means(algs, opts, seed)
    return RunSummary(
        len(records),
        sum(algs) / len(algs),
        sum(opts) / len(opts),
        ratio,
        lo,
        hi,
        flag,
    )


def write_csv(records: list[TrialRecord], path: str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["trial", "seed", "alg_cost", "opt_cost", "reloc_cost", "steps", "millis"]
        )
        for r in records:
            writer.writerow(
                [r.trial, r.seed, r.alg_cost, r.opt_cost, r.reloc_cost, r.steps,
                 f"{r.millis:.3f}"]
            )


def run_trials(sc: Scenario) -> tuple[list[TrialRecord], RunSummary]:
    """Replay a scenario; returns per-trial records and the summary."""
    instance = build_instance(sc)
    n = instance.n
    alg = sc.algorithm
    if alg == "split-match":
        if instance.tree is None:
            raise ValueError("split-match needs a tree-backed metric")
        if sc.distribution != "uniform":
            raise ValueError("split-match scenarios are uniform-arrival only")
    if alg == "fair-bias-on-frt":
        if not instance.verified_metric:
            raise ValueError("the embedding variant needs a checked metric")
        if sc.distribution != "uniform":
            raise ValueError("the embedding variant is uniform-arrival only")

    dist = build_distribution(sc, n)
    wrapped = alg == "fair-bias" and sc.distribution != "uniform"
    cache = n <= 20

    provider = None
    plan = None
    decomp = None
    frt_provider = None
    mw_provider = None
    weights = instance.matrix
    if alg == "fair-bias":
        provider = PlanProvider(
            instance, allow_unchecked=not instance.verified_metric, cache=cache
        )
        if wrapped:
            plan = solve_transshipment(instance, dist)
    elif alg == "split-match":
        decomp = split_decomposition(ternarize(instance.tree))
    elif alg == "fair-bias-on-frt" and sc.frt_mode == "once":
        ftree = frt_embed(instance, random.Random(sc.seed ^ _FRT_SALT))
        frt_provider = PlanProvider(tree_metric(ftree), cache=cache)
    elif alg == "max-weight":
        mw_provider = MaxWeightProvider(
            weights, list(dist.weights), cache=n <= 12
        )

    records: list[TrialRecord] = []
    for t in range(sc.trials):
        ep_seed = sc.seed + t
        rng = random.Random(ep_seed)
        t0 = time.perf_counter()
        reloc = 0
        if alg == "fair-bias" and not wrapped:
            stream = [rng.randrange(n) for _ in range(n)]
            result = run_episode(instance, stream, rng=rng, provider=provider)
        elif alg == "fair-bias":
            wres = run_wrapped(
                instance, dist, rng=rng, plan=plan, provider=provider
            )
            result = wres.result
            stream = [a for a, _ in result.assignments]
            reloc = wres.relocation_cost
        elif alg == "split-match":
            stream = [rng.randrange(n) for _ in range(n)]
            result = run_episode_hier(
                instance.tree, stream, rng=rng, decomp=decomp
            )
        elif alg == "fair-bias-on-frt":
            stream = [rng.randrange(n) for _ in range(n)]
            if sc.frt_mode == "once":
                prov = frt_provider
            else:
                ftree = frt_embed(instance, rng)
                prov = PlanProvider(tree_metric(ftree), cache=False)
            on_tree = run_episode(prov.instance, stream, rng=rng, provider=prov)
            true_steps = [instance.matrix[s][r] for r, s in on_tree.assignments]
            result = MatchingResult(
                "fair-bias-on-frt",
                ep_seed,
                on_tree.assignments,
                true_steps,
                sum(true_steps),
            )
        else:  # max-weight
            stream = [dist.sample(rng) for _ in range(n)]
            result = run_episode_max_weight(
                weights, list(dist.weights), stream, rng=rng, provider=mw_provider
            )

        if alg == "max-weight":
            opt = opt_max_weight(weights, stream)
            assert result.total_cost <= opt, "online gain above the offline optimum"
        else:
            if instance.tree is not None:
                opt = opt_tree(instance, stream)
            else:
                opt = opt_general(instance, stream)
            assert result.total_cost >= opt, "online cost below the offline optimum"
        millis = (time.perf_counter() - t0) * 1000.0
        records.append(
            TrialRecord(
                t, ep_seed, result.total_cost, opt, reloc, n, millis,
                list(result.step_costs),
            )
        )
    if sc.output:
        write_csv(records, sc.output)
    return records, summarize(records, sc.seed)


def run_frt_variant(sc: Scenario) -> RunSummary:
    """Embed, match on the sampled tree, charge true distances."""
    if sc.algorithm != "fair-bias-on-frt":
        raise ValueError("scenario does not use the embedding variant")
    _, summary = run_trials(sc)
    return summary


# ---------------------------------------------------------------------------
# non-metric demonstration


def gen_nonmetric_instance(n: int) -> MetricInstance:
    """Cost structure with two mutually expensive request types.

    Points 0..n-3 cost 1 pairwise.  Point n-2 costs 2^(n/2) against the
    upper half of the servers, point n-1 costs 2^(n/2) against the lower
    half, and the two special points cost 2^(n/2) to each other.  From
    n = 6 up some expensive pairs have cheap two-hop detours, so the
    triangle inequality fails and the cost of serving the special
    points outruns any fixed multiple of the offline optimum.
    """
    if n < 4 or n % 2:
        raise ValueError("need even n >= 4")
    big = 2 ** (n // 2)
    half = n // 2
    lo_special, hi_special = n - 2, n - 1

    def cost(i: int, j: int) -> int:
        if {i, j} == {lo_special, hi_special}:
            return big
        if lo_special in (i, j):
            other = i if j == lo_special else j
            return big if other >= half else 1
        if hi_special in (i, j):
            other = i if j == hi_special else j
            return big if other < half else 1
        return 1

    matrix = [
        [0 if i == j else cost(i, j) for j in range(n)] for i in range(n)
    ]
    return matrix_unchecked(matrix)


def gen_nonmetric_scenario(n: int, trials: int = 400, seed: int = 1) -> Scenario:
    return Scenario(
        metric_kind="nonmetric",
        metric_arg=str(n),
        algorithm="fair-bias",
        trials=trials,
        seed=seed,
    )


# ---------------------------------------------------------------------------
# verifiers


def _mean_stderr(values: list[float]) -> tuple[float, float]:
    t = len(values)
    mean = sum(values) / t
    if t < 2:
        return mean, 0.0
    var = sum((v - mean) ** 2 for v in values) / (t - 1)
    return mean, math.sqrt(var / t)


def _matching_value(instance: MetricInstance, T, memo: dict) -> Fraction:
    key = tuple(sorted(T))
    hit = memo.get(key)
    if hit is None:
        if instance.tree is not None and instance.verified_metric:
            hit = solve_min_cost_tree(instance, list(key)).value
        else:
            hit = solve_min_cost(instance, list(key)).value
        memo[key] = hit
    return hit


@dataclass(frozen=True)
class ChiSquareRow:
    k: int
    categories: int
    statistic: float
    pvalue: float
    ok: bool


@dataclass(frozen=True)
class StructureReport:
    n: int
    trials: int
    rows: tuple[ChiSquareRow, ...]

    @property
    def ok(self) -> bool:
        return all(r.ok for r in self.rows)


def verify_structure_lemma(
    n: int, trials: int, seed: int, instance: MetricInstance | None = None
) -> StructureReport:
    """Chi-square test that each free set is uniform over its k-subsets."""
    if n > 8:
        raise ValueError("subset space too large to tabulate beyond n=8")
    if instance is None:
        instance = uniform_metric(n)
    provider = PlanProvider(instance, cache=True)
    counts: dict[int, Counter] = {k: Counter() for k in range(1, n)}
    for t in range(trials):
        rng = random.Random(seed + t)
        state = init_state(n)
        for _ in range(n):
            step(provider, state, rng.randrange(n), rng)
            if 1 <= state.k < n:
                counts[state.k][state.free] += 1
    rows = []
    for k in range(1, n):
        cats = list(combinations(range(n), k))
        expected = trials / len(cats)
        stat = sum(
            (counts[k].get(c, 0) - expected) ** 2 / expected for c in cats
        )
        pvalue = float(chi2.sf(stat, len(cats) - 1))
        rows.append(ChiSquareRow(k, len(cats), stat, pvalue, pvalue > 0.01))
    return StructureReport(n, trials, tuple(rows))


@dataclass(frozen=True)
class ReplacementRow:
    k: int
    e_subsets: Fraction  # uniform k-subset of the servers
    e_iid: Fraction  # k independent uniform draws (multiset)
    ok: bool


@dataclass(frozen=True)
class ReplacementReport:
    n: int
    rows: tuple[ReplacementRow, ...]

    @property
    def ok(self) -> bool:
        return all(r.ok for r in self.rows)


def verify_replacement(
    instance: MetricInstance, ks: list[int] | None = None
) -> ReplacementReport:
    """Exact check that subset-average cost is at most iid-average cost."""
    n = instance.n
    if n > 6:
        raise ValueError("exact enumeration is only tractable up to n=6")
    memo: dict = {}
    rows = []
    for k in ks if ks is not None else range(1, n + 1):
        subs = list(combinations(range(n), k))
        e_sub = sum(
            (_matching_value(instance, T, memo) for T in subs), Fraction(0)
        ) / len(subs)
        e_iid = Fraction(0)
        total_w = Fraction(0)
        for ms in combinations_with_replacement(range(n), k):
            tally = Counter(ms)
            perms = math.factorial(k)
            for c in tally.values():
                perms //= math.factorial(c)
            w = Fraction(perms, n**k)
            total_w += w
            e_iid += w * _matching_value(instance, ms, memo)
        assert total_w == 1, "multiset weights must sum to one"
        rows.append(ReplacementRow(k, e_sub, e_iid, e_sub <= e_iid))
    return ReplacementReport(n, tuple(rows))


@dataclass(frozen=True)
class DecompositionReport:
    n: int
    trials: int
    mean_alg: float
    stderr_alg: float
    sum_per_size: float
    stderr_sum: float
    per_size: tuple[tuple[int, float, float], ...]  # (k, mean, stderr)

    @property
    def combined_sigma(self) -> float:
        return math.sqrt(self.stderr_alg**2 + self.stderr_sum**2)

    @property
    def ok(self) -> bool:
        return abs(self.mean_alg - self.sum_per_size) <= 3 * self.combined_sigma


def verify_cost_decomposition(
    instance: MetricInstance, trials: int, seed: int
) -> DecompositionReport:
    """Monte Carlo check of total cost against per-free-set-size costs.

    The left side replays full episodes; the right side samples uniform
    k-subsets independently for every size k and sums the matching
    values, which is what the free-set uniformity predicts the episode
    total should decompose into.
    """
    n = instance.n
    provider = PlanProvider(instance, cache=True)
    totals = []
    for t in range(trials):
        rng = random.Random(seed + t)
        stream = [rng.randrange(n) for _ in range(n)]
        result = run_episode(instance, stream, rng=rng, provider=provider)
        totals.append(float(result.total_cost))
    mean_alg, se_alg = _mean_stderr(totals)
    srng = random.Random(seed ^ _SUBSET_SALT)
    memo: dict = {}
    per_size = []
    var_sum = 0.0
    rhs = 0.0
    for k in range(1, n + 1):
        samples = []
        for _ in range(trials):
            T = srng.sample(range(n), k)
            samples.append(float(_matching_value(instance, T, memo)))
        mean_k, se_k = _mean_stderr(samples)
        per_size.append((k, mean_k, se_k))
        rhs += mean_k
        var_sum += se_k**2
    return DecompositionReport(
        n, trials, mean_alg, se_alg, rhs, math.sqrt(var_sum), tuple(per_size)
    )


@dataclass(frozen=True)
class CheckReport:
    checked: int
    failures: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.failures


def random_metric(n: int, rng: random.Random, max_d: int = 64) -> MetricInstance:
    """Random metric via shortest-path closure of a random complete graph."""
    d = [[0] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            d[i][j] = d[j][i] = rng.randint(1, max_d)
    for via in range(n):
        dv = d[via]
        for i in range(n):
            div = d[i][via]
            row = d[i]
            for j in range(n):
                alt = div + dv[j]
                if alt < row[j]:
                    row[j] = alt
    return matrix_metric(d)


def verify_match_to_self(
    count: int, seed: int, max_n: int = 8
) -> CheckReport:
    """Canonicalization keeps the value and pins every diagonal entry."""
    rng = random.Random(seed)
    failures = []
    checked = 0
    for case in range(count):
        n = rng.randint(2, max_n)
        instance = random_metric(n, rng)
        k = rng.randint(1, n)
        T = [rng.randrange(n) for _ in range(k)]
        base = solve_min_cost(instance, T)
        canon = canonicalize(base, instance)
        checked += 1
        if canon.value != base.value:
            failures.append(f"case {case}: value drifted")
            continue
        tally = Counter(T)
        entries = canon.entry_map()
        for i in range(n):
            want = min(Fraction(tally.get(i, 0), k), Fraction(1, n))
            got = entries.get((i, i), Fraction(0))
            if got != want:
                failures.append(
                    f"case {case}: diagonal {i} is {got}, expected {want}"
                )
                break
    return CheckReport(checked, tuple(failures))


def verify_scaling(count: int, seed: int, max_n: int = 8) -> CheckReport:
    """Complement identity over every small subset of random instances."""
    rng = random.Random(seed)
    failures = []
    checked = 0
    for case in range(count):
        n = rng.randint(2, max_n)
        instance = random_metric(n, rng)
        for k in range(1, n // 2 + 1):
            for T in combinations(range(n), k):
                lhs, rhs, ok = scaling_identity_check(instance, set(T))
                checked += 1
                if not ok:
                    failures.append(
                        f"case {case}: T={T} gives {lhs} vs {rhs}"
                    )
    return CheckReport(checked, tuple(failures))
