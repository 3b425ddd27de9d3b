"""Pruning statistics over run logs and closed-form calculators.

Everything here is binary floating point; it feeds reports only.  Certified
decisions stay in the exact LP code.
"""

from __future__ import annotations

import cmath
import math
import random
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping, Sequence

import networkx as nx
from scipy import stats

from .solver import RunLog

MAX_ALPHA_VERTICES = 24
SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class DepthRate:
    depth: int
    events: int
    survivors: int
    rho: float
    ci_low: float
    ci_high: float


@dataclass(frozen=True)
class DepthStats:
    per_depth: tuple[DepthRate, ...]
    rho_tilde: float
    confidence: float

    @property
    def effective_base(self) -> float:
        return 2.0 - self.rho_tilde

    def to_json(self) -> dict:
        return {
            "rho_tilde": self.rho_tilde,
            "effective_base": self.effective_base,
            "confidence": self.confidence,
            "per_depth": [{"depth": r.depth, "branching_events": r.events, "surviving_children": r.survivors,
                           "rho": r.rho, "ci": [r.ci_low, r.ci_high]} for r in self.per_depth],
        }


def clopper_pearson(successes: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    """Exact binomial interval from beta quantiles."""
    if trials <= 0 or not 0 <= successes <= trials:
        raise ValueError("need 0 <= successes <= trials and trials > 0")
    alpha = 1.0 - confidence
    lo = 0.0 if successes == 0 else float(stats.beta.ppf(alpha / 2, successes, trials - successes + 1))
    hi = 1.0 if successes == trials else float(stats.beta.ppf(1 - alpha / 2, successes + 1, trials - successes))
    return lo, hi


def pool_depths(logs: Iterable[RunLog]) -> dict[int, tuple[int, int]]:
    pooled: dict[int, list[int]] = {}
    for log in logs:
        for depth, events, survivors in log.depth_rows():
            entry = pooled.setdefault(depth, [0, 0])
            entry[0] += events
            entry[1] += survivors
    return {d: (e, s) for d, (e, s) in sorted(pooled.items())}


def depth_stats_from_counts(counts: Mapping[int, tuple[int, int]], confidence: float = 0.95) -> DepthStats:
    """rho_d = 1 - survivors / (2 events); the aggregate averages depths that have events."""
    if not 0 < confidence < 1:
        raise ValueError("confidence must lie in (0, 1)")
    rows = []
    for depth, (events, survivors) in sorted(counts.items()):
        if events == 0:
            continue
        if survivors > 2 * events:
            raise ValueError(f"depth {depth}: more survivors than children")
        pruned = 2 * events - survivors
        lo, hi = clopper_pearson(pruned, 2 * events, confidence)
        rows.append(DepthRate(depth, events, survivors, pruned / (2 * events), lo, hi))
    if not rows:
        raise ValueError("no branching events in the log")
    return DepthStats(tuple(rows), sum(r.rho for r in rows) / len(rows), confidence)


def depth_stats(log: RunLog | Sequence[RunLog], confidence: float = 0.95) -> DepthStats:
    logs = [log] if isinstance(log, RunLog) else list(log)
    return depth_stats_from_counts(pool_depths(logs), confidence)


def t_interval(values: Sequence[float], confidence: float = 0.95) -> tuple[float, float, float]:
    """Mean and Student-t interval across seeds."""
    n = len(values)
    if n < 2:
        raise ValueError("a t-interval needs at least two values")
    mean = sum(values) / n
    sd = math.sqrt(sum((v - mean) ** 2 for v in values) / (n - 1))
    half = float(stats.t.ppf(0.5 + confidence / 2, n - 1)) * sd / math.sqrt(n)
    return mean, mean - half, mean + half


def bootstrap_interval(values: Sequence[float], confidence: float = 0.95, resamples: int = 1000,
                       seed: int = 0) -> tuple[float, float, float]:
    """Percentile bootstrap of the mean with a seeded generator."""
    if not values:
        raise ValueError("empty sample")
    rng = random.Random(seed)
    n = len(values)
    means = sorted(sum(rng.choice(values) for _ in range(n)) / n for _ in range(resamples))
    lo_idx = int(math.floor((1 - confidence) / 2 * resamples))
    hi_idx = min(resamples - 1, int(math.ceil((1 + confidence) / 2 * resamples)) - 1)
    return sum(values) / n, means[lo_idx], means[hi_idx]


def delta_bits(rho: float, n_eff: float) -> float:
    """n_eff * log2(2 / (2 - rho))."""
    if not 0 < rho < 1:
        raise ValueError("rho must lie in (0, 1)")
    if n_eff <= 0:
        raise ValueError("n_eff must be positive")
    return n_eff * math.log2(2.0 / (2.0 - rho))


def effective_base(rho: float) -> float:
    return 2.0 - rho


def required_samples(rho: float, constant: float = 10) -> int:
    if not 0 < rho < 1:
        raise ValueError("rho must lie in (0, 1)")
    # round before the ceiling so 10 / 0.1**2 lands on 1000, not 1001
    return math.ceil(round(constant / rho**2, 9))


def graph_alpha(graph) -> int:
    """Exact independence number by branch and bound on bitmasks."""
    if not isinstance(graph, nx.Graph):
        graph = nx.Graph(graph)
    nodes = list(graph.nodes)
    n = len(nodes)
    if n > MAX_ALPHA_VERTICES:
        raise ValueError(f"{n} vertices exceeds the exact-search limit of {MAX_ALPHA_VERTICES}")
    index = {v: i for i, v in enumerate(nodes)}
    nbr = [0] * n
    for u, v in graph.edges:
        if u != v:
            nbr[index[u]] |= 1 << index[v]
            nbr[index[v]] |= 1 << index[u]

    best = 0

    def search(cand: int, size: int) -> None:
        nonlocal best
        if size + bin(cand).count("1") <= best:
            return
        if not cand:
            best = size
            return
        v = (cand & -cand).bit_length() - 1
        search(cand & ~nbr[v] & ~(1 << v), size + 1)
        search(cand & ~(1 << v), size)

    search((1 << n) - 1, 0)
    return best


def theta_odd_cycle(k: int) -> float:
    """Lovasz theta of C_{2k+1}."""
    if k < 2:
        raise ValueError("k must be >= 2")
    n = 2 * k + 1
    c = math.cos(math.pi / n)
    return n * c / (1 + c)


def contextuality_density(alpha: int, theta: float, num_vertices: int) -> float:
    if num_vertices < 1:
        raise ValueError("num_vertices must be >= 1")
    if theta < alpha:
        raise ValueError("theta must be at least alpha")
    return (theta - alpha) / num_vertices


@dataclass(frozen=True)
class GraphMetrics:
    alpha: int
    theta: float
    density: float


def odd_cycle_metrics(k: int) -> GraphMetrics:
    n = 2 * k + 1
    alpha = graph_alpha(nx.cycle_graph(n))
    theta = theta_odd_cycle(k)
    return GraphMetrics(alpha, theta, contextuality_density(alpha, theta, n))


def cyclic_exclusivity_bound(n: int, epsilon: float) -> float:
    if n < 3:
        raise ValueError("n must be >= 3")
    if epsilon < 0:
        raise ValueError("epsilon must be nonnegative")
    return n // 2 + 2 * n * epsilon


def ring_eta(p: float, eps_explode: float) -> float:
    if not 0 <= eps_explode < 1:
        raise ValueError("eps_explode must lie in [0, 1)")
    return p / (1 - eps_explode)


def ring_violation_margin(eta: float, n: int, c: float, eps_diamond: float) -> float:
    """1 - n c eps - eta^n; positive means the ring shows a violation."""
    if not 0 < eta <= 1:
        raise ValueError("eta must lie in (0, 1]")
    return 1 - n * c * eps_diamond - eta**n


def epsilon_from_visibility(v0: float, v_dec: float, sigma_v0: float = 0.0,
                            sigma_vdec: float = 0.0) -> tuple[float, float]:
    """Estimate 1 - v_dec/v0 with first-order error propagation."""
    if v0 == 0:
        raise ValueError("v0 must be nonzero")
    if not 0 < v_dec <= v0 <= 1:
        raise ValueError("need 0 < v_dec <= v0 <= 1")
    estimate = 1 - v_dec / v0
    se = math.sqrt((sigma_vdec / v0) ** 2 + (v_dec / v0**2 * sigma_v0) ** 2)
    return estimate, se


def zeno_epsilon(eps_vis: float, delta_cal: float, c_zeno: float, n_stages: int) -> float:
    if n_stages < 1:
        raise ValueError("n_stages must be >= 1")
    return min(eps_vis + delta_cal, c_zeno / n_stages)


class Topology(Enum):
    FIGURE_OF_8 = "fo8"
    CLOVERLEAF = "clover"


class Budget(Enum):
    WITHIN_CLASSICAL = "within_classical"
    WITHIN_QUANTUM = "within_quantum"
    BREACHES_QUANTUM = "breaches_quantum"


_BUDGETS = {Topology.FIGURE_OF_8: (2, 4.0), Topology.CLOVERLEAF: (3, 6.0)}


def budget_thresholds(topology: Topology) -> tuple[float, float]:
    _, classical = _BUDGETS[Topology(topology)]
    return classical, classical + SQRT2


def budget_check(values: Sequence[float], topology: Topology | str) -> Budget:
    topology = Topology(topology)
    arity, _ = _BUDGETS[topology]
    if len(values) != arity:
        raise ValueError(f"{topology.value} takes {arity} loop values, got {len(values)}")
    total = sum(values)
    classical, quantum = budget_thresholds(topology)
    if total <= classical:
        return Budget.WITHIN_CLASSICAL
    if total <= quantum:
        return Budget.WITHIN_QUANTUM
    return Budget.BREACHES_QUANTUM


OMEGA = cmath.exp(2j * math.pi / 3)


def tritter_witness(a1: complex, a2: complex, a3: complex) -> float:
    """Middle-port power |(a1 + w a2 + w^2 a3) / sqrt 3|^2."""
    return abs((a1 + OMEGA * a2 + OMEGA**2 * a3) / math.sqrt(3)) ** 2


class ClauseReading(Enum):
    UNSAT = "UNSAT"
    SAT = "SAT"
    INCONCLUSIVE = "inconclusive"


def tritter_decision(s: float, s_cl: float, tau: float) -> ClauseReading:
    if tau <= 0:
        raise ValueError("tau must be positive")
    if s > s_cl + tau:
        return ClauseReading.UNSAT
    if s <= s_cl - tau:
        return ClauseReading.SAT
    return ClauseReading.INCONCLUSIVE
