"""Library of NGCC cuts a.p <= b with stability metadata.

Each cut lives on its own small context network (the C_n edge network for the
cycle cuts, one block over (Y1, Y2, Y3) for the Feistel chain).  Indicator
slots are numbered from 1; each names an event on one context of that network
and can be bound to a solver variable that is reified to the same event in
the CNF.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field, replace
from enum import Enum
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .cnf import Clause, Literal
from .lp import LinearSystem
from .network import ContextNetwork, assignment_marginals, build_system, network_from_scopes

FEISTEL_COEFFS = (0, 1, 1, 2, 1, 2, 2, 3)


def exact(x) -> Fraction:
    """Exact rational from an int, Fraction, string or decimal float literal."""
    if isinstance(x, float):
        return Fraction(repr(x))
    return Fraction(x)


@dataclass(frozen=True)
class IndicatorSpec:
    semantics: str  # "disagreement_on_edge" or "boundary_disagreement"
    slot: int
    context: int
    true_outcomes: frozenset[int]
    detail: tuple[int, ...]  # the edge (u, v) or the boundary index


@dataclass(frozen=True)
class Cut:
    name: str
    kind: str
    params: tuple[tuple[str, int], ...]
    blocks: tuple[tuple[Fraction, ...], ...]
    bound: Fraction
    gamma: Fraction
    num_contexts: int
    coeff_inf_norm: Fraction
    network: ContextNetwork = field(compare=False)
    indicators: tuple[IndicatorSpec, ...] = ()
    monotone_bound: int | None = None  # B in sum_i Y_i <= B
    excluded_corners: tuple[tuple[bool, ...], ...] = ()
    indicator_bindings: tuple[tuple[int, int], ...] | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.gamma < 0:
            raise ValueError("gamma must be nonnegative")
        if self.coeff_inf_norm != max(abs(a) for b in self.blocks for a in b):
            raise ValueError("coeff_inf_norm does not match the coefficients")

    def coeff_vector(self) -> list[Fraction]:
        return [a for block in self.blocks for a in block]

    def value(self, p: Sequence) -> Fraction:
        return sum((a * exact(x) for a, x in zip(self.coeff_vector(), p)), Fraction(0))

    def with_bindings(self, bindings: Mapping[int, int]) -> Cut:
        slots = {ind.slot for ind in self.indicators}
        unknown = set(bindings) - slots
        if unknown:
            raise ValueError(f"unknown indicator slots {sorted(unknown)}")
        return replace(self, indicator_bindings=tuple(sorted(bindings.items())))

    @property
    def bindings(self) -> dict[int, int]:
        return dict(self.indicator_bindings or ())

    def same_inequality(self, other: Cut) -> bool:
        return (self.blocks == other.blocks and self.bound == other.bound and self.gamma == other.gamma
                and self.num_contexts == other.num_contexts and self.coeff_inf_norm == other.coeff_inf_norm
                and [c.scope for c in self.network.contexts] == [c.scope for c in other.network.contexts])

    def to_json(self) -> dict:
        pair = lambda x: [str(x.numerator), str(x.denominator)]  # noqa: E731
        return {
            "name": self.name,
            "kind": self.kind,
            "params": dict(self.params),
            "bound": pair(self.bound),
            "gamma": pair(self.gamma),
            "m": self.num_contexts,
            "a_inf": pair(self.coeff_inf_norm),
            "blocks": [[pair(a) for a in block] for block in self.blocks],
        }


def make_odd_cycle_cut(k: int) -> Cut:
    """Sum of edge disagreements on C_{2k+1} is at most 2k."""
    if k < 2:
        raise ValueError("odd cycle cuts need k >= 2")
    n = 2 * k + 1
    scopes = [(i, i % n + 1) for i in range(1, n + 1)]
    network = network_from_scopes(scopes)
    block = tuple(Fraction(a) for a in (0, 1, 1, 0))
    indicators = tuple(
        IndicatorSpec("disagreement_on_edge", i + 1, i, frozenset({1, 2}), scopes[i]) for i in range(n))
    return Cut(f"odd_cycle_c{n}", "odd_cycle", (("k", k),), (block,) * n, Fraction(2 * k), Fraction(0),
               n, Fraction(1), network, indicators, 2 * k)


def make_kcbs_cut() -> Cut:
    return replace(make_odd_cycle_cut(2), name="kcbs_c5", kind="kcbs", params=())


def make_feistel_cut() -> Cut:
    """E[Y1 + Y2 + Y3] <= 2 over the boundary disagreement indicators."""
    network = network_from_scopes([(1, 2, 3)])
    block = tuple(Fraction(a) for a in FEISTEL_COEFFS)
    indicators = tuple(
        IndicatorSpec("boundary_disagreement", r, 0,
                      frozenset(o for o in range(8) if o >> (3 - r) & 1), (r,))
        for r in (1, 2, 3))
    return Cut("feistel_chain", "feistel", (), (block,), Fraction(2), Fraction(1), 3, Fraction(3),
               network, indicators, 2, ((True, True, True),))


def library_cut(name: str) -> Cut:
    """Look a cut up by its library name (kcbs_c5, odd_cycle_c7, feistel_chain, ...)."""
    if name == "kcbs_c5":
        return make_kcbs_cut()
    if name == "feistel_chain":
        return make_feistel_cut()
    m = re.fullmatch(r"odd_cycle_c(\d+)", name)
    if m and int(m.group(1)) % 2 == 1:
        return make_odd_cycle_cut(int(m.group(1)) // 2)
    raise ValueError(f"no library cut named {name!r}")


def cut_from_json(data: Mapping) -> Cut:
    kind = data["kind"]
    if kind == "kcbs":
        cut = make_kcbs_cut()
    elif kind == "odd_cycle":
        cut = make_odd_cycle_cut(int(data["params"]["k"]))
    elif kind == "feistel":
        cut = make_feistel_cut()
    else:
        raise ValueError(f"unknown cut kind {kind!r}")
    stored = cut.to_json()
    for key in ("bound", "gamma", "m", "a_inf", "blocks"):
        if _norm(data[key]) != _norm(stored[key]):
            raise ValueError(f"cut file field {key!r} disagrees with the {kind} construction")
    return replace(cut, name=data.get("name", cut.name))


def _norm(value):
    if isinstance(value, list) and len(value) == 2 and all(isinstance(x, str) for x in value):
        return Fraction(int(value[0]), int(value[1]))
    if isinstance(value, list):
        return [_norm(v) for v in value]
    return value


def stability_threshold(cut: Cut) -> Fraction:
    return cut.gamma / (2 * cut.num_contexts * cut.coeff_inf_norm)


def margin_coefficient(cut: Cut) -> Fraction:
    """The factor 2 m ||a||_inf multiplying epsilon in the margin rule."""
    return 2 * cut.num_contexts * cut.coeff_inf_norm


class Verdict(Enum):
    GENUINE = "genuine"
    INCONCLUSIVE = "inconclusive"


def certify_violation(cut: Cut, observed_value, epsilon) -> Verdict:
    observed_value, epsilon = exact(observed_value), exact(epsilon)
    if epsilon < 0:
        raise ValueError("epsilon must be nonnegative")
    tau = observed_value - cut.bound
    if tau > margin_coefficient(cut) * epsilon:
        return Verdict.GENUINE
    if cut.gamma > 0 and epsilon < stability_threshold(cut) and tau > 0:
        return Verdict.GENUINE
    return Verdict.INCONCLUSIVE


def robustness_slack(cut: Cut, m_contexts: int, epsilon) -> Fraction:
    epsilon = exact(epsilon)
    if epsilon < 0:
        raise ValueError("epsilon must be nonnegative")
    return -cut.gamma + 2 * m_contexts * cut.coeff_inf_norm * epsilon


def violation_level(cut: Cut) -> Fraction:
    """Reference level for the robustness bound: the attained maximum plus the gap.

    Library cuts are tight at ``bound``; the Feistel gap of 1 is measured to the
    excluded corner, so its level is 3 while the clause still uses bound 2.
    """
    return cut.bound + cut.gamma


def cut_to_clause(cut: Cut, true_indicators: Iterable[int]) -> Clause:
    """The clause OR_{i in T} not Y_i over the bound solver variables."""
    if cut.monotone_bound is None:
        raise ValueError(f"{cut.name} is not a monotone sum cut")
    slots = sorted(set(true_indicators))
    if len(slots) != cut.monotone_bound + 1:
        raise ValueError(f"need exactly {cut.monotone_bound + 1} indicators, got {len(slots)}")
    bindings = cut.bindings
    missing = [s for s in slots if s not in bindings]
    if missing:
        raise ValueError(f"unbound indicator slots {missing}")
    return Clause(tuple(Literal(bindings[s], False) for s in slots))


def certificate_system(cut: Cut, true_indicators: Iterable[int]) -> LinearSystem:
    """Channel polyhedron of the cut network with the indicators in T forced to 1, plus the cut row."""
    by_slot = {ind.slot: ind for ind in cut.indicators}
    restrict: dict[int, set[int]] = {}
    for s in sorted(set(true_indicators)):
        ind = by_slot[s]
        allowed = restrict.setdefault(ind.context, set(range(cut.network.contexts[ind.context].size)))
        allowed &= ind.true_outcomes
    return build_system(cut.network, None, [cut], restrict=restrict, include_clauses=False)


def brute_force_max(cut: Cut) -> Fraction:
    """Max of a.p over deterministic global assignments of the cut network."""
    variables = cut.network.variables
    best = None
    for values in itertools.product((False, True), repeat=len(variables)):
        if values in cut.excluded_corners:
            continue
        p = assignment_marginals(cut.network, dict(zip(variables, values)))
        v = cut.value(p)
        best = v if best is None else max(best, v)
    return best


def indicator_sum_bound_holds(cut: Cut, indicator_values: Mapping[int, bool]) -> bool:
    """Check sum_i Y_i <= B for a 0/1 indicator assignment."""
    return sum(bool(indicator_values[ind.slot]) for ind in cut.indicators) <= cut.monotone_bound
