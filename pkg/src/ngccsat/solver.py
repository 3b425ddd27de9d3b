"""CDCL with two watched literals, 1UIP learning and certified cut pruning.

With ``enable_ngcc`` the solver checks both children of every branching
variable before descending: a child is dead if unit propagation conflicts at
its root or if a cut in the cascade certifies it infeasible.  Dead children are
recorded per depth (the pruning statistics) and turned into learned clauses,
so the survivor is reached by propagation instead of a decision.  Without it
the solver is plain CDCL.

Literals are encoded internally as 2*var + sign (sign 1 = negative).
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

from .cnf import Clause, Cnf, Literal
from .cuts import Cut, certificate_system, cut_to_clause
from .lp import DEFAULT_PIVOT_BUDGET, FarkasCertificate, Infeasible, solve_feasibility, verify_farkas

UNASSIGNED = -1
ACTIVITY_DECAY = 0.95
INITIAL_JITTER = 1e-6


class Verdict(Enum):
    SAT = "SAT"
    UNSAT = "UNSAT"
    UNKNOWN = "UNKNOWN"


@dataclass
class SolverConfig:
    seed: int = 0
    max_lp_checks_per_node: int = 4
    enable_ngcc: bool = True
    restart_policy: tuple[str, int] | None = None  # ("luby", base) or None
    pivot_budget: int = DEFAULT_PIVOT_BUDGET
    conflict_limit: int | None = None

    def __post_init__(self):
        if self.max_lp_checks_per_node < 0:
            raise ValueError("max_lp_checks_per_node must be >= 0")
        if self.restart_policy is not None and self.restart_policy[0] != "luby":
            raise ValueError("restart policy must be None or ('luby', base)")


@dataclass
class RunLog:
    seed: int = 0
    per_depth: dict[int, list[int]] = field(default_factory=dict)  # depth -> [events, survivors]
    decisions: int = 0
    conflicts: int = 0
    propagations: int = 0
    probes: int = 0
    lp_checks: int = 0
    cache_hits: int = 0
    lp_time: float = 0.0
    total_time: float = 0.0

    @property
    def nodes_explored(self) -> int:
        return self.decisions

    @property
    def lp_time_fraction(self) -> float:
        return self.lp_time / self.total_time if self.total_time > 0 else 0.0

    def depth_rows(self) -> list[tuple[int, int, int]]:
        return [(d, ev, sv) for d, (ev, sv) in sorted(self.per_depth.items())]


def record_branch_event(log: RunLog, depth: int, surviving: int) -> RunLog:
    if surviving not in (0, 1, 2):
        raise ValueError("surviving must be 0, 1 or 2")
    entry = log.per_depth.setdefault(depth, [0, 0])
    entry[0] += 1
    entry[1] += surviving
    return log


@dataclass(frozen=True)
class CertifiedClause:
    clause: Clause
    certificate: FarkasCertificate
    cut_name: str
    slots: tuple[int, ...]
    depth: int

    def to_json(self) -> dict:
        return {"clause": self.clause.to_ints(), "certificate": self.certificate.to_json(),
                "cut_name": self.cut_name, "slots": list(self.slots), "depth": self.depth}


@dataclass
class SolveResult:
    verdict: Verdict
    model: dict[int, bool] | None
    stats: RunLog
    learned_certified: list[CertifiedClause]


@dataclass(frozen=True)
class Prune:
    clause: Clause
    certificate: FarkasCertificate
    cut: Cut
    slots: tuple[int, ...]


def _luby(i: int) -> int:
    """i-th element (1-based) of the Luby sequence 1 1 2 1 1 2 4 ..."""
    k = 1
    while (1 << k) - 1 < i:
        k += 1
    while i != (1 << k) - 1:
        i -= (1 << (k - 1)) - 1
        k = 1
        while (1 << k) - 1 < i:
            k += 1
    return 1 << (k - 1)


class Solver:
    def __init__(self, cnf: Cnf, cuts: Sequence[Cut] = (), config: SolverConfig | None = None):
        self.cnf = cnf
        self.config = config or SolverConfig()
        self.n = cnf.num_vars
        n = self.n
        self.assigns = [UNASSIGNED] * (n + 1)
        self.level = [0] * (n + 1)
        self.reason: list[int | None] = [None] * (n + 1)
        rng = random.Random(self.config.seed)
        # seeded jitter far below one bump orders the first decisions
        self.activity = [0.0] + [rng.random() * INITIAL_JITTER for _ in range(n)]
        self.var_inc = 1.0
        self.phase = [0] + [int(rng.random() < 0.5) for _ in range(n)]  # 1 = positive
        self.clauses: list[list[int]] = []
        self.watches: list[list[int]] = [[] for _ in range(2 * n + 2)]
        self.trail: list[int] = []
        self.trail_lim: list[int] = []
        self.qhead = 0
        self.log = RunLog(seed=self.config.seed)
        self.learned_certified: list[CertifiedClause] = []
        self.cert_cache: dict[tuple[str, tuple[int, ...]], FarkasCertificate | None] = {}
        self.node_lp_checks = 0
        self.unsat = False
        for cut in cuts:
            for slot, var in cut.bindings.items():
                if not 1 <= var <= n:
                    raise ValueError(f"cut {cut.name} binds slot {slot} to variable {var} outside the formula")
            if cut.indicator_bindings is None or len(cut.bindings) < len(cut.indicators):
                raise ValueError(f"cut {cut.name} has unbound indicator slots")
        # small-support cuts first
        self.cuts = sorted(cuts, key=lambda c: (len(c.indicators), c.name))
        self._cut_vars = [[(s, v) for s, v in sorted(c.bindings.items())] for c in self.cuts]
        for clause in cnf.clauses:
            if clause.is_tautology:
                continue
            lits = [2 * lit.var + (0 if lit.positive else 1) for lit in clause]
            if not self._add_input_clause(lits):
                self.unsat = True
                break

    # --- basic assignment machinery --------------------------------------

    def value(self, lit: int) -> int:
        v = self.assigns[lit >> 1]
        return UNASSIGNED if v == UNASSIGNED else v ^ (lit & 1)

    def decision_level(self) -> int:
        return len(self.trail_lim)

    def enqueue(self, lit: int, reason: int | None) -> None:
        var = lit >> 1
        self.assigns[var] = 1 - (lit & 1)
        self.level[var] = self.decision_level()
        self.reason[var] = reason
        self.trail.append(lit)
        self.log.propagations += 1

    def new_level(self) -> None:
        self.trail_lim.append(len(self.trail))

    def backtrack(self, lvl: int) -> None:
        if self.decision_level() <= lvl:
            return
        stop = self.trail_lim[lvl]
        for lit in self.trail[stop:]:
            var = lit >> 1
            self.phase[var] = self.assigns[var]
            self.assigns[var] = UNASSIGNED
            self.reason[var] = None
        del self.trail[stop:]
        del self.trail_lim[lvl:]
        self.qhead = min(self.qhead, len(self.trail))

    def _add_input_clause(self, lits: list[int]) -> bool:
        lits = list(dict.fromkeys(lits))
        if not lits:
            return False
        if len(lits) == 1:
            v = self.value(lits[0])
            if v == 0:
                return False
            if v == UNASSIGNED:
                self.enqueue(lits[0], None)
            return True
        ci = len(self.clauses)
        self.clauses.append(lits)
        self.watches[lits[0]].append(ci)
        self.watches[lits[1]].append(ci)
        return True

    def propagate(self) -> int | None:
        clauses, watches, assigns = self.clauses, self.watches, self.assigns
        while self.qhead < len(self.trail):
            p = self.trail[self.qhead]
            self.qhead += 1
            false_lit = p ^ 1
            ws = watches[false_lit]
            i = j = 0
            end = len(ws)
            while i < end:
                ci = ws[i]
                i += 1
                c = clauses[ci]
                if c[0] == false_lit:
                    c[0], c[1] = c[1], false_lit
                first = c[0]
                fv = assigns[first >> 1]
                if fv != UNASSIGNED and fv ^ (first & 1) == 1:
                    ws[j] = ci
                    j += 1
                    continue
                for k in range(2, len(c)):
                    lk = c[k]
                    av = assigns[lk >> 1]
                    if av == UNASSIGNED or av ^ (lk & 1) == 1:
                        c[1], c[k] = lk, false_lit
                        watches[lk].append(ci)
                        break
                else:
                    ws[j] = ci
                    j += 1
                    if fv != UNASSIGNED:  # first is false: conflict
                        while i < end:
                            ws[j] = ws[i]
                            i += 1
                            j += 1
                        del ws[j:]
                        return ci
                    self.enqueue(first, ci)
            del ws[j:]
        return None

    # --- learning ----------------------------------------------------------

    def bump(self, var: int) -> None:
        self.activity[var] += self.var_inc
        if self.activity[var] > 1e100:
            self.activity = [a * 1e-100 for a in self.activity]
            self.var_inc *= 1e-100

    def analyze(self, confl: int) -> tuple[list[int], int]:
        """First-UIP clause (asserting literal first) and the backjump level."""
        seen = [False] * (self.n + 1)
        learnt = [0]
        counter = 0
        p = None
        idx = len(self.trail) - 1
        cur = self.decision_level()
        while True:
            for q in self.clauses[confl]:
                v = q >> 1
                if p is not None and v == p >> 1:
                    continue
                if not seen[v] and self.level[v] > 0:
                    seen[v] = True
                    self.bump(v)
                    if self.level[v] >= cur:
                        counter += 1
                    else:
                        learnt.append(q)
            while not seen[self.trail[idx] >> 1]:
                idx -= 1
            p = self.trail[idx]
            idx -= 1
            seen[p >> 1] = False
            counter -= 1
            if counter == 0:
                break
            confl = self.reason[p >> 1]
        learnt[0] = p ^ 1
        self.var_inc /= ACTIVITY_DECAY
        if len(learnt) == 1:
            return learnt, 0
        # put the highest-level remaining literal second so it gets watched
        best = max(range(1, len(learnt)), key=lambda i: self.level[learnt[i] >> 1])
        learnt[1], learnt[best] = learnt[best], learnt[1]
        return learnt, self.level[learnt[1] >> 1]

    def learn(self, learnt: list[int], btlevel: int) -> None:
        self.backtrack(btlevel)
        if len(learnt) == 1:
            self.enqueue(learnt[0], None)
            return
        ci = len(self.clauses)
        self.clauses.append(learnt)
        self.watches[learnt[0]].append(ci)
        self.watches[learnt[1]].append(ci)
        self.enqueue(learnt[0], ci)

    def handle_conflict(self, confl: int) -> bool:
        """Analyze and backjump; False when the conflict is at level 0."""
        self.log.conflicts += 1
        if self.decision_level() == 0:
            return False
        learnt, btlevel = self.analyze(confl)
        self.learn(learnt, btlevel)
        return True

    def add_clause(self, lits: list[int]) -> int | None:
        """Attach a clause mid-search.  Returns a clause index if it is in conflict."""
        key = lambda l: (0, 0) if self.value(l) != 0 else (1, -self.level[l >> 1])  # noqa: E731
        lits = sorted(dict.fromkeys(lits), key=key)
        if len(lits) == 1:
            # unit: assert it at level 0
            self.backtrack(0)
            if self.value(lits[0]) == 0:
                self.unsat = True
                return None
            if self.value(lits[0]) == UNASSIGNED:
                self.enqueue(lits[0], None)
            return None
        ci = len(self.clauses)
        self.clauses.append(lits)
        self.watches[lits[0]].append(ci)
        self.watches[lits[1]].append(ci)
        v0, v1 = self.value(lits[0]), self.value(lits[1])
        if v0 == 0:
            top = self.level[lits[0] >> 1]
            if top == 0:
                self.unsat = True
                return None
            self.backtrack(top)
            if self.level[lits[1] >> 1] < top:
                # only one literal at the top level: assert it lower down
                self.backtrack(self.level[lits[1] >> 1])
                self.enqueue(lits[0], ci)
                return None
            return ci
        if v0 == UNASSIGNED and v1 == 0:
            self.enqueue(lits[0], ci)
        return None

    # --- cut oracle --------------------------------------------------------

    def ngcc_check(self) -> Prune | None:
        """Cheap indicator count first, then an exact LP certificate."""
        for cut, pairs in zip(self.cuts, self._cut_vars):
            true_slots = [s for s, v in pairs if self.assigns[v] == 1]
            if len(true_slots) <= cut.monotone_bound:
                continue
            slots = tuple(true_slots[: cut.monotone_bound + 1])
            key = (cut.name, slots)
            if key in self.cert_cache:
                self.log.cache_hits += 1
                cert = self.cert_cache[key]
            else:
                if self.node_lp_checks >= self.config.max_lp_checks_per_node:
                    continue
                self.node_lp_checks += 1
                self.log.lp_checks += 1
                t0 = time.perf_counter()
                system = certificate_system(cut, slots)
                outcome = solve_feasibility(system, self.config.pivot_budget)
                cert = None
                if isinstance(outcome, Infeasible) and verify_farkas(system, outcome.certificate):
                    cert = outcome.certificate
                self.log.lp_time += time.perf_counter() - t0
                self.cert_cache[key] = cert
            if cert is not None:
                return Prune(cut_to_clause(cut, slots), cert, cut, slots)
        return None

    def _learn_prune(self, prune: Prune) -> int | None:
        self.learned_certified.append(
            CertifiedClause(prune.clause, prune.certificate, prune.cut.name, prune.slots, self.decision_level()))
        return self.add_clause([2 * lit.var + 1 for lit in prune.clause])

    # --- search -------------------------------------------------------------

    def pick_branch(self) -> int | None:
        best, best_act = None, -1.0
        for v in range(1, self.n + 1):
            if self.assigns[v] == UNASSIGNED and self.activity[v] > best_act:
                best, best_act = v, self.activity[v]
        return best

    def probe(self, lit: int) -> tuple[bool, Prune | None]:
        """Assign lit at a fresh level; report whether the child survives."""
        self.log.probes += 1
        self.new_level()
        self.enqueue(lit, None)
        dead = self.propagate() is not None
        prune = None
        if not dead and self.cuts:
            prune = self.ngcc_check()
            dead = prune is not None
        self.backtrack(self.decision_level() - 1)
        return not dead, prune

    def solve(self) -> SolveResult:
        start = time.perf_counter()
        verdict = self._search()
        self.log.total_time = time.perf_counter() - start
        model = None
        if verdict is Verdict.SAT:
            model = {v: self.assigns[v] == 1 for v in range(1, self.n + 1)}
        return SolveResult(verdict, model, self.log, self.learned_certified)

    def _search(self) -> Verdict:
        if self.unsat or self.cnf.has_empty_clause:
            return Verdict.UNSAT
        ngcc = self.config.enable_ngcc
        restart_at = None
        restarts = 0
        if self.config.restart_policy:
            restart_at = self.config.restart_policy[1] * _luby(1)
        since_restart = 0
        while True:
            confl = self.propagate()
            if confl is not None:
                if not self.handle_conflict(confl):
                    return Verdict.UNSAT
                since_restart += 1
                limit = self.config.conflict_limit
                if limit is not None and self.log.conflicts >= limit:
                    return Verdict.UNKNOWN
                if restart_at is not None and since_restart >= restart_at:
                    restarts += 1
                    since_restart = 0
                    restart_at = self.config.restart_policy[1] * _luby(restarts + 1)
                    self.backtrack(0)
                continue
            if self.unsat:
                return Verdict.UNSAT
            if ngcc and self.cuts:
                prune = self.ngcc_check()
                if prune is not None:
                    confl = self._learn_prune(prune)
                    if self.unsat:
                        return Verdict.UNSAT
                    if confl is not None and not self.handle_conflict(confl):
                        return Verdict.UNSAT
                    continue
            var = self.pick_branch()
            if var is None:
                return Verdict.SAT
            first = 2 * var + (0 if self.phase[var] else 1)
            if not ngcc:
                self.log.decisions += 1
                self.new_level()
                self.enqueue(first, None)
                continue
            self.node_lp_checks = 0
            depth = self.decision_level() + 1
            results = [(lit, *self.probe(lit)) for lit in (first, first ^ 1)]
            survivors = sum(ok for _, ok, _ in results)
            record_branch_event(self.log, depth, survivors)
            if survivors == 2:
                self.log.decisions += 1
                self.new_level()
                self.enqueue(first, None)
                continue
            level = self.decision_level()
            for _, ok, prune in results:
                if prune is not None:
                    self.learned_certified.append(
                        CertifiedClause(prune.clause, prune.certificate, prune.cut.name, prune.slots, depth))
                    self.add_clause([2 * lit.var + 1 for lit in prune.clause])
                    if self.unsat:
                        return Verdict.UNSAT
            if self.decision_level() != level:
                continue  # attaching a pruning clause already backjumped
            # replay the first dead child to learn from its conflict
            dead = next(lit for lit, ok, _ in results if not ok)
            self.new_level()
            self.enqueue(dead, None)
            confl = self.propagate()
            if confl is None:
                # the pruning clause may have been watched on unassigned literals; look again
                prune = self.ngcc_check()
                if prune is not None:
                    confl = self.add_clause([2 * lit.var + 1 for lit in prune.clause])
            if confl is None:
                raise AssertionError("a dead child did not reproduce its conflict")
            if not self.handle_conflict(confl):
                return Verdict.UNSAT


def solve(cnf: Cnf, cuts: Sequence[Cut] = (), config: SolverConfig | None = None) -> SolveResult:
    config = config or SolverConfig()
    result = Solver(cnf, cuts if config.enable_ngcc else (), config).solve()
    return result


def ngcc_check(cnf: Cnf, cuts: Sequence[Cut], assignment: dict[int, bool],
               config: SolverConfig | None = None) -> Prune | None:
    """Run the cut cascade against a fixed partial assignment (no search)."""
    solver = Solver(Cnf(cnf.num_vars, ()), cuts, config)
    for var, val in sorted(assignment.items()):
        solver.assigns[var] = int(val)
    return solver.ngcc_check()
