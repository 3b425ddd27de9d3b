"""Context networks, the channel polyhedron N and the marginal polytope oracle.

Each context owns a block of the marginal vector with one entry per outcome
of its scope.  Outcomes are ordered lexicographically with false < true and the
first scope variable most significant, so the block of scope (a, b) is indexed
00, 01, 10, 11.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import networkx as nx

from .cnf import Assignment, Cnf, Literal
from .lp import Feasible, LinearSystem, solve_feasibility

DEFAULT_SCOPE_CAP = 8
MAX_ORACLE_VARS = 20


@dataclass(frozen=True)
class Context:
    id: int
    scope: tuple[int, ...]
    offset: int
    forbidden: frozenset[int] = frozenset()  # outcomes falsifying the source clause

    @property
    def size(self) -> int:
        return 1 << len(self.scope)

    def outcome(self, index: int) -> tuple[bool, ...]:
        k = len(self.scope)
        return tuple(bool(index >> (k - 1 - t) & 1) for t in range(k))

    def index_of(self, values: Mapping[int, bool]) -> int:
        idx = 0
        for v in self.scope:
            idx = idx << 1 | int(values[v])
        return idx

    def slot(self, outcome: int) -> int:
        return self.offset + outcome


@dataclass(frozen=True)
class Channel:
    overlap: tuple[int, ...]
    members: tuple[int, int]


@dataclass(frozen=True)
class ContextNetwork:
    contexts: tuple[Context, ...]
    channels: tuple[Channel, ...]
    marginal_dim: int

    @property
    def variables(self) -> list[int]:
        return sorted({v for c in self.contexts for v in c.scope})

    def to_json(self) -> dict:
        return {
            "contexts": [{"id": c.id, "scope": list(c.scope), "offset": c.offset,
                          "forbidden": sorted(c.forbidden)} for c in self.contexts],
            "channels": [{"overlap": list(ch.overlap), "members": list(ch.members)} for ch in self.channels],
            "marginal_dim": self.marginal_dim,
        }


def network_from_scopes(scopes: Sequence[Sequence[int]], forbidden: Sequence[Iterable[int]] | None = None,
                        scope_cap: int = DEFAULT_SCOPE_CAP) -> ContextNetwork:
    contexts = []
    offset = 0
    for i, scope in enumerate(scopes):
        scope = tuple(scope)
        if len(set(scope)) != len(scope):
            raise ValueError(f"duplicate variable in scope {scope}")
        if len(scope) > scope_cap:
            raise ValueError(f"scope of width {len(scope)} exceeds the cap of {scope_cap}")
        bad = frozenset(forbidden[i]) if forbidden is not None else frozenset()
        contexts.append(Context(i, scope, offset, bad))
        offset += 1 << len(scope)
    by_var: dict[int, list[int]] = {}
    for c in contexts:
        for v in c.scope:
            by_var.setdefault(v, []).append(c.id)
    pairs = sorted({(a, b) for ids in by_var.values() for a, b in itertools.combinations(ids, 2)})
    channels = []
    for a, b in pairs:
        shared = set(contexts[a].scope) & set(contexts[b].scope)
        channels.append(Channel(tuple(sorted(shared)), (a, b)))
    return ContextNetwork(tuple(contexts), tuple(channels), offset)


def build_network(cnf: Cnf, scope_cap: int = DEFAULT_SCOPE_CAP) -> ContextNetwork:
    """One context per clause, pairwise channels on maximal shared scopes."""
    if not cnf.clauses:
        raise ValueError("cannot build a network from an empty formula")
    scopes = []
    forbidden = []
    for clause in cnf.clauses:
        scopes.append(clause.variables)
        # the single outcome falsifying the clause sets every literal false
        bad = 0
        for lit in clause:
            bad = bad << 1 | int(not lit.positive)
        forbidden.append({bad})
    return network_from_scopes(scopes, forbidden, scope_cap)


def _alpha_values(network: ContextNetwork, alpha) -> dict[int, bool]:
    if alpha is None:
        return {}
    if isinstance(alpha, Assignment):
        return dict(alpha.values)
    if isinstance(alpha, Mapping):
        return {int(k): bool(v) for k, v in alpha.items()}
    values: dict[int, bool] = {}
    for lit in alpha:
        if not isinstance(lit, Literal):
            lit = Literal.from_int(int(lit))
        if values.get(lit.var, lit.positive) != lit.positive:
            raise ValueError(f"inconsistent assignment on variable {lit.var}")
        values[lit.var] = lit.positive
    return values


def channel_system(network: ContextNetwork) -> LinearSystem:
    """Normalization, nonnegativity and equal-marginal rows only."""
    system = LinearSystem(network.marginal_dim, range(network.marginal_dim))
    for c in network.contexts:
        system.add_eq({c.slot(o): 1 for o in range(c.size)}, 1)
    for ch in network.channels:
        u, v = (network.contexts[i] for i in ch.members)
        pos_u = [u.scope.index(x) for x in ch.overlap]
        pos_v = [v.scope.index(x) for x in ch.overlap]
        for s in range(1 << len(ch.overlap)):
            row: dict[int, int] = {}
            for o in range(u.size):
                if _project(u, o, pos_u) == s:
                    row[u.slot(o)] = row.get(u.slot(o), 0) + 1
            for o in range(v.size):
                if _project(v, o, pos_v) == s:
                    row[v.slot(o)] = row.get(v.slot(o), 0) - 1
            system.add_eq(row, 0)
    return system


def _project(ctx: Context, outcome: int, positions: Sequence[int]) -> int:
    k = len(ctx.scope)
    s = 0
    for p in positions:
        s = s << 1 | (outcome >> (k - 1 - p) & 1)
    return s


def build_system(network: ContextNetwork, alpha=None, extra_cuts: Sequence = (), *,
                 restrict: Mapping[int, Iterable[int]] | None = None,
                 include_clauses: bool = True) -> LinearSystem:
    """The restricted channel polyhedron N_alpha plus one row per cut.

    ``restrict`` maps a context id to the outcomes allowed in it (used for
    indicator events); every other outcome of that context gets a zero row.
    """
    values = _alpha_values(network, alpha)
    system = channel_system(network)
    for c in network.contexts:
        zero = set(c.forbidden) if include_clauses else set()
        fixed = [(t, values[v]) for t, v in enumerate(c.scope) if v in values]
        if fixed:
            for o in range(c.size):
                bits = c.outcome(o)
                if any(bits[t] != val for t, val in fixed):
                    zero.add(o)
        if restrict and c.id in restrict:
            allowed = set(restrict[c.id])
            zero.update(o for o in range(c.size) if o not in allowed)
        for o in sorted(zero):
            system.add_eq({c.slot(o): 1}, 0)
    for cut in extra_cuts:
        coeffs = cut.coeff_vector()
        if len(coeffs) != network.marginal_dim:
            raise ValueError(f"cut {cut.name} has dimension {len(coeffs)}, network has {network.marginal_dim}")
        system.add_le({j: a for j, a in enumerate(coeffs) if a}, cut.bound)
    return system


def assignment_marginals(network: ContextNetwork, values: Mapping[int, bool]) -> list[Fraction]:
    """Marginal vector of a deterministic global assignment (point masses)."""
    q = [Fraction(0)] * network.marginal_dim
    for c in network.contexts:
        q[c.slot(c.index_of(values))] = Fraction(1)
    return q


def in_marginal_polytope(network: ContextNetwork, q: Sequence) -> bool:
    """Brute force: is q a convex combination of deterministic global marginals?"""
    variables = network.variables
    if len(variables) > MAX_ORACLE_VARS:
        raise ValueError(f"{len(variables)} variables exceeds the oracle limit of {MAX_ORACLE_VARS}")
    if len(q) != network.marginal_dim:
        raise ValueError("marginal vector has the wrong dimension")
    images = set()
    for bits in range(1 << len(variables)):
        values = {v: bool(bits >> t & 1) for t, v in enumerate(variables)}
        images.add(tuple(c.slot(c.index_of(values)) for c in network.contexts))
    images = sorted(images)
    system = LinearSystem(len(images), range(len(images)))
    system.add_eq({j: 1 for j in range(len(images))}, 1)
    rows: dict[int, dict[int, int]] = {k: {} for k in range(network.marginal_dim)}
    for j, image in enumerate(images):
        for k in image:
            rows[k][j] = 1
    for k in range(network.marginal_dim):
        system.add_eq(rows[k], q[k])
    return isinstance(solve_feasibility(system), Feasible)


def is_junction_tree(network: ContextNetwork) -> bool:
    """True iff some tree over the contexts has the running-intersection property."""
    g = nx.Graph()
    g.add_nodes_from(c.id for c in network.contexts)
    for ch in network.channels:
        g.add_edge(*ch.members, weight=len(ch.overlap))
    tree = nx.maximum_spanning_tree(g)
    holders: dict[int, list[int]] = {}
    for c in network.contexts:
        for v in c.scope:
            holders.setdefault(v, []).append(c.id)
    return all(nx.is_connected(tree.subgraph(ids)) for ids in holders.values())
