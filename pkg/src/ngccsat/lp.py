"""Exact rational linear programming with Farkas certificates.

Everything here works over ``fractions.Fraction``; there is no floating point
anywhere on the path from a system to a verified certificate.

A system is ``A_eq p = b_eq, A_le p <= b_le, p_j >= 0 for j in nonneg``.
An infeasibility certificate is a triple (y_eq free, y_le >= 0, y_nonneg >= 0) with

    y_eq A_eq + y_le A_le - y_nonneg = 0      (as a vector over p)
    y_eq b_eq + y_le b_le < 0

which rules out any solution by weak duality.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

Rational = Fraction
DEFAULT_PIVOT_BUDGET = 10**6


def as_rational(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        raise TypeError("floats are not allowed in exact systems")
    return Fraction(x)


@dataclass(frozen=True)
class Row:
    coeffs: tuple[tuple[int, Fraction], ...]  # sorted by index, no zeros
    rhs: Fraction

    def dot(self, point: Sequence[Fraction]) -> Fraction:
        return sum((c * point[j] for j, c in self.coeffs), Fraction(0))


def _make_row(coeffs: Mapping[int, object] | Iterable[tuple[int, object]], rhs, num_vars: int) -> Row:
    items = coeffs.items() if isinstance(coeffs, Mapping) else coeffs
    acc: dict[int, Fraction] = {}
    for j, c in items:
        if not 0 <= j < num_vars:
            raise ValueError(f"coefficient index {j} outside 0..{num_vars - 1}")
        acc[j] = acc.get(j, Fraction(0)) + as_rational(c)
    return Row(tuple(sorted((j, c) for j, c in acc.items() if c != 0)), as_rational(rhs))


class LinearSystem:
    """Rational linear system; identical rows are stored once."""

    def __init__(self, num_vars: int, nonneg_vars: Iterable[int] = ()):
        self.num_vars = num_vars
        self.eq_rows: list[Row] = []
        self.le_rows: list[Row] = []
        self.nonneg_vars: frozenset[int] = frozenset()
        self._seen: set[tuple[str, Row]] = set()
        self.add_nonneg(nonneg_vars)

    def add_nonneg(self, vars: Iterable[int]) -> None:
        vars = frozenset(vars)
        if any(not 0 <= j < self.num_vars for j in vars):
            raise ValueError("nonnegativity index out of range")
        self.nonneg_vars = self.nonneg_vars | vars

    def add_eq(self, coeffs, rhs) -> None:
        self._add("eq", _make_row(coeffs, rhs, self.num_vars))

    def add_le(self, coeffs, rhs) -> None:
        self._add("le", _make_row(coeffs, rhs, self.num_vars))

    def _add(self, kind: str, row: Row) -> None:
        if (kind, row) in self._seen:
            return
        self._seen.add((kind, row))
        (self.eq_rows if kind == "eq" else self.le_rows).append(row)

    @property
    def nonneg_order(self) -> list[int]:
        return sorted(self.nonneg_vars)

    def contains(self, point: Sequence) -> bool:
        """Exact membership test (zero residual, no tolerance)."""
        if len(point) != self.num_vars:
            raise ValueError("point has wrong dimension")
        point = [as_rational(x) for x in point]
        return (
            all(point[j] >= 0 for j in self.nonneg_vars)
            and all(r.dot(point) == r.rhs for r in self.eq_rows)
            and all(r.dot(point) <= r.rhs for r in self.le_rows)
        )

    def copy(self) -> LinearSystem:
        other = LinearSystem(self.num_vars, self.nonneg_vars)
        other.eq_rows = list(self.eq_rows)
        other.le_rows = list(self.le_rows)
        other._seen = set(self._seen)
        return other

    def __repr__(self) -> str:
        return (f"LinearSystem(vars={self.num_vars}, eq={len(self.eq_rows)}, "
                f"le={len(self.le_rows)}, nonneg={len(self.nonneg_vars)})")


@dataclass(frozen=True)
class FarkasCertificate:
    y_eq: tuple[Fraction, ...]
    y_le: tuple[Fraction, ...]
    y_nonneg: tuple[Fraction, ...]  # aligned with sorted(system.nonneg_vars)

    def to_json(self) -> dict:
        enc = lambda v: [[str(x.numerator), str(x.denominator)] for x in v]  # noqa: E731
        return {"y_eq": enc(self.y_eq), "y_le": enc(self.y_le), "y_nonneg": enc(self.y_nonneg)}

    @classmethod
    def from_json(cls, data: Mapping) -> FarkasCertificate:
        dec = lambda v: tuple(Fraction(int(n), int(d)) for n, d in v)  # noqa: E731
        return cls(dec(data["y_eq"]), dec(data["y_le"]), dec(data["y_nonneg"]))

    def dumps(self) -> str:
        return json.dumps(self.to_json(), separators=(",", ":"))


@dataclass(frozen=True)
class Feasible:
    point: tuple[Fraction, ...]


@dataclass(frozen=True)
class Infeasible:
    certificate: FarkasCertificate


@dataclass(frozen=True)
class Optimal:
    value: Fraction
    point: tuple[Fraction, ...]


@dataclass(frozen=True)
class Unbounded:
    pass


@dataclass(frozen=True)
class BudgetExhausted:
    pivots: int


def verify_farkas(system: LinearSystem, cert: FarkasCertificate, b_tol: Fraction = Fraction(0)) -> bool:
    if (len(cert.y_eq) != len(system.eq_rows) or len(cert.y_le) != len(system.le_rows)
            or len(cert.y_nonneg) != len(system.nonneg_vars)):
        raise ValueError("certificate shape does not match the system")
    if any(y < 0 for y in cert.y_le) or any(y < 0 for y in cert.y_nonneg):
        return False
    combined = [Fraction(0)] * system.num_vars
    rhs = Fraction(0)
    for y, row in zip(cert.y_eq, system.eq_rows):
        if y:
            for j, c in row.coeffs:
                combined[j] += y * c
            rhs += y * row.rhs
    for y, row in zip(cert.y_le, system.le_rows):
        if y:
            for j, c in row.coeffs:
                combined[j] += y * c
            rhs += y * row.rhs
    for y, j in zip(cert.y_nonneg, system.nonneg_order):
        combined[j] -= y
    return all(c == 0 for c in combined) and rhs < -b_tol


class _Budget(Exception):
    pass


class _Tableau:
    """Dense simplex tableau in standard form  A z = b, z >= 0, b >= 0.

    Columns: structural (x+ per variable, x- for free ones), one slack per
    inequality row, then artificials.  Rows whose slack can start basic get no
    artificial.
    """

    def __init__(self, system: LinearSystem, budget: int):
        self.budget = budget
        self.pivots = 0
        n = system.num_vars
        self.col_of: list[tuple[int, int | None]] = []  # var -> (plus col, minus col)
        ncols = 0
        for j in range(n):
            if j in system.nonneg_vars:
                self.col_of.append((ncols, None))
                ncols += 1
            else:
                self.col_of.append((ncols, ncols + 1))
                ncols += 2
        self.num_struct = ncols
        rows = [(r, None) for r in system.eq_rows] + [(r, k) for k, r in enumerate(system.le_rows)]
        self.num_eq = len(system.eq_rows)
        m = len(rows)
        slack_start = ncols
        ncols += len(system.le_rows)
        self.sign: list[int] = []
        need_art = []
        for r, k in rows:
            s = -1 if r.rhs < 0 else 1
            self.sign.append(s)
            need_art.append(k is None or s < 0)
        art_start = ncols
        ncols += sum(need_art)
        self.art_start = art_start
        self.ncols = ncols
        self.T: list[list[Fraction]] = []
        self.basis: list[int] = []
        self.init_col: list[int] = []
        a = art_start
        zero = Fraction(0)
        for i, (r, k) in enumerate(rows):
            s = self.sign[i]
            line = [zero] * (ncols + 1)
            for j, c in r.coeffs:
                p, q = self.col_of[j]
                line[p] = s * c
                if q is not None:
                    line[q] = -s * c
            if k is not None:
                line[slack_start + k] = Fraction(s)
            line[ncols] = s * r.rhs
            if need_art[i]:
                line[a] = Fraction(1)
                self.basis.append(a)
                self.init_col.append(a)
                a += 1
            else:
                self.basis.append(slack_start + k)
                self.init_col.append(slack_start + k)
            self.T.append(line)
        self.m = m

    def pivot(self, r: int, e: int) -> None:
        self.pivots += 1
        if self.pivots > self.budget:
            raise _Budget()
        row = self.T[r]
        pv = row[e]
        if pv != 1:
            inv = 1 / pv
            row = [x * inv if x else x for x in row]
            self.T[r] = row
        nz = [j for j, x in enumerate(row) if x]
        for i, other in enumerate(self.T):
            if i == r:
                continue
            f = other[e]
            if f:
                for j in nz:
                    other[j] -= f * row[j]
        if self.obj is not None:
            f = self.obj[e]
            if f:
                for j in nz:
                    self.obj[j] -= f * row[j]
        self.basis[r] = e

    obj: list[Fraction] | None = None

    def set_objective(self, cost: Sequence[Fraction]) -> None:
        """Reduced-cost row d_j = c_j - c_B B^-1 A_j, last entry = -objective."""
        obj = list(cost) + [Fraction(0)]
        for i, b in enumerate(self.basis):
            cb = cost[b]
            if cb:
                line = self.T[i]
                for j, x in enumerate(line):
                    if x:
                        obj[j] -= cb * x
        self.obj = obj

    def run(self, allowed: int) -> bool:
        """Bland's rule over columns < allowed. Returns False if unbounded."""
        while True:
            e = next((j for j in range(allowed) if self.obj[j] < 0), None)
            if e is None:
                return True
            best = None
            for i, line in enumerate(self.T):
                a = line[e]
                if a > 0:
                    ratio = line[-1] / a
                    key = (ratio, self.basis[i])
                    if best is None or key < best[0]:
                        best = (key, i)
            if best is None:
                return False
            self.pivot(best[1], e)

    def values(self) -> list[Fraction]:
        z = [Fraction(0)] * self.ncols
        for i, b in enumerate(self.basis):
            z[b] = self.T[i][-1]
        return z

    def point(self) -> tuple[Fraction, ...]:
        z = self.values()
        return tuple(z[p] - (z[q] if q is not None else 0) for p, q in self.col_of)

    def drive_out_artificials(self) -> None:
        keep = []
        for i in range(self.m):
            if self.basis[i] >= self.art_start:
                line = self.T[i]
                e = next((j for j in range(self.art_start) if line[j]), None)
                if e is None:
                    continue  # redundant row
                self.pivot(i, e)
            keep.append(i)
        if len(keep) != self.m:
            self.T = [self.T[i] for i in keep]
            self.basis = [self.basis[i] for i in keep]
            self.m = len(keep)


def _phase_one(system: LinearSystem, budget: int):
    tab = _Tableau(system, budget)
    cost = [Fraction(0)] * tab.ncols
    for j in range(tab.art_start, tab.ncols):
        cost[j] = Fraction(1)
    tab.set_objective(cost)
    tab.run(tab.ncols)
    if -tab.obj[-1] > 0:
        # u_i = c(init col) - d(init col); certificate w = -u in the sign-adjusted rows
        w = [-(cost[c] - tab.obj[c]) * s for c, s in zip(tab.init_col, tab.sign)]
        y_eq = tuple(w[: tab.num_eq])
        y_le = tuple(w[tab.num_eq:])
        combined = [Fraction(0)] * system.num_vars
        for y, row in zip(w, system.eq_rows + system.le_rows):
            if y:
                for j, c in row.coeffs:
                    combined[j] += y * c
        y_nonneg = tuple(combined[j] for j in system.nonneg_order)
        cert = FarkasCertificate(y_eq, y_le, y_nonneg)
        if not verify_farkas(system, cert):
            raise AssertionError("simplex produced an invalid Farkas certificate")
        return tab, cert
    return tab, None


def solve_feasibility(system: LinearSystem, pivot_budget: int = DEFAULT_PIVOT_BUDGET):
    """Return Feasible(point), Infeasible(certificate) or BudgetExhausted."""
    try:
        tab, cert = _phase_one(system, pivot_budget)
    except _Budget:
        return BudgetExhausted(pivot_budget)
    if cert is not None:
        return Infeasible(cert)
    point = tab.point()
    if not system.contains(point):
        raise AssertionError("simplex produced a point that violates the system")
    return Feasible(point)


def optimize_linear(system: LinearSystem, objective: Mapping[int, object], sense: str = "min",
                    pivot_budget: int = DEFAULT_PIVOT_BUDGET):
    """Exact optimum of objective . p over the system.

    Returns Optimal(value, point), Infeasible(certificate), Unbounded() or BudgetExhausted.
    """
    if sense not in ("min", "max"):
        raise ValueError("sense must be 'min' or 'max'")
    obj = {j: as_rational(c) for j, c in objective.items()}
    if any(not 0 <= j < system.num_vars for j in obj):
        raise ValueError("objective index out of range")
    try:
        tab, cert = _phase_one(system, pivot_budget)
        if cert is not None:
            return Infeasible(cert)
        tab.drive_out_artificials()
        flip = -1 if sense == "max" else 1
        cost = [Fraction(0)] * tab.ncols
        for j, c in obj.items():
            p, q = tab.col_of[j]
            cost[p] = flip * c
            if q is not None:
                cost[q] = -flip * c
        tab.set_objective(cost)
        if not tab.run(tab.art_start):
            return Unbounded()
    except _Budget:
        return BudgetExhausted(pivot_budget)
    point = tab.point()
    value = sum((c * point[j] for j, c in obj.items()), Fraction(0))
    return Optimal(value, point)
