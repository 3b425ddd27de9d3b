"""CNF formulas, DIMACS I/O and evaluation helpers.

Variables are 1-based everywhere in the public API, matching DIMACS.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, Sequence


class DimacsError(ValueError):
    """Base class for DIMACS parse failures; carries the offending line number."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class MalformedHeader(DimacsError):
    pass


class LiteralOutOfRange(DimacsError):
    pass


class MissingTerminator(DimacsError):
    pass


class ClauseCountMismatch(DimacsError):
    pass


@dataclass(frozen=True, order=True)
class Literal:
    var: int
    positive: bool = True

    def __post_init__(self):
        if self.var < 1:
            raise ValueError(f"variable index must be >= 1, got {self.var}")

    def __neg__(self) -> Literal:
        return Literal(self.var, not self.positive)

    def to_int(self) -> int:
        return self.var if self.positive else -self.var

    @classmethod
    def from_int(cls, value: int) -> Literal:
        if value == 0:
            raise ValueError("0 is not a literal")
        return cls(abs(value), value > 0)

    def __repr__(self) -> str:
        return f"{'' if self.positive else '~'}x{self.var}"


@dataclass(frozen=True)
class Clause:
    """Ordered, duplicate-free disjunction of literals.

    An empty clause is allowed and is unsatisfiable.
    """

    literals: tuple[Literal, ...]

    def __post_init__(self):
        if len(set(self.literals)) != len(self.literals):
            raise ValueError(f"duplicate literal in clause {self.literals}")

    @classmethod
    def of(cls, *ints: int) -> Clause:
        return cls(tuple(Literal.from_int(i) for i in ints))

    @property
    def is_tautology(self) -> bool:
        lits = set(self.literals)
        return any(-lit in lits for lit in lits)

    @property
    def variables(self) -> tuple[int, ...]:
        return tuple(lit.var for lit in self.literals)

    def to_ints(self) -> list[int]:
        return [lit.to_int() for lit in self.literals]

    def __iter__(self):
        return iter(self.literals)

    def __len__(self) -> int:
        return len(self.literals)


@dataclass(frozen=True)
class Cnf:
    num_vars: int
    clauses: tuple[Clause, ...]
    comments: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        for clause in self.clauses:
            for lit in clause:
                if lit.var > self.num_vars:
                    raise ValueError(f"literal {lit} exceeds num_vars={self.num_vars}")

    @classmethod
    def from_ints(cls, num_vars: int, clauses: Iterable[Iterable[int]], comments: Sequence[str] = ()) -> Cnf:
        return cls(num_vars, tuple(Clause.of(*c) for c in clauses), tuple(comments))

    @property
    def has_empty_clause(self) -> bool:
        return any(len(c) == 0 for c in self.clauses)


class Assignment:
    """Partial assignment with a trail of (literal, decision level, reason)."""

    def __init__(self, num_vars: int):
        self.num_vars = num_vars
        self.values: dict[int, bool] = {}
        self.trail: list[tuple[Literal, int, object]] = []

    @classmethod
    def from_dict(cls, num_vars: int, values: Mapping[int, bool]) -> Assignment:
        a = cls(num_vars)
        for var in sorted(values):
            a.assign(Literal(var, bool(values[var])))
        return a

    @classmethod
    def from_bits(cls, num_vars: int, bits: int) -> Assignment:
        """Total assignment where bit i-1 of ``bits`` is the value of variable i."""
        return cls.from_dict(num_vars, {v: bool(bits >> (v - 1) & 1) for v in range(1, num_vars + 1)})

    def assign(self, lit: Literal, level: int = 0, reason: object = None) -> None:
        if lit.var > self.num_vars:
            raise ValueError(f"{lit} out of range")
        current = self.values.get(lit.var)
        if current is not None:
            if current != lit.positive:
                raise ValueError(f"{lit} contradicts the assignment")
            return
        if self.trail and level < self.trail[-1][1]:
            raise ValueError("decision levels must be non-decreasing along the trail")
        self.values[lit.var] = lit.positive
        self.trail.append((lit, level, reason))

    def value(self, lit: Literal) -> bool | None:
        v = self.values.get(lit.var)
        if v is None:
            return None
        return v == lit.positive

    def is_total(self) -> bool:
        return len(self.values) == self.num_vars

    def __contains__(self, var: int) -> bool:
        return var in self.values


class Status(Enum):
    SATISFIED = "satisfied"
    CONFLICTING = "conflicting"
    UNIT = "unit"
    UNRESOLVED = "unresolved"


def clause_status(clause: Clause, assignment: Assignment) -> tuple[Status, Literal | None]:
    """Return the clause status and, for UNIT, the single open literal."""
    open_lits = []
    for lit in clause:
        v = assignment.value(lit)
        if v is True:
            return Status.SATISFIED, None
        if v is None:
            open_lits.append(lit)
    if not open_lits:
        return Status.CONFLICTING, None
    if len(open_lits) == 1:
        return Status.UNIT, open_lits[0]
    return Status.UNRESOLVED, None


def evaluate(cnf: Cnf, assignment: Assignment) -> bool:
    if not assignment.is_total():
        raise ValueError("evaluate needs a total assignment")
    return all(any(assignment.value(lit) for lit in clause) for clause in cnf.clauses)


def parse_dimacs(text: bytes | str) -> Cnf:
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    header = None
    comments: list[str] = []
    clauses: list[Clause] = []
    current: list[int] = []
    current_line = 0
    lineno = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("c"):
            comments.append(line[1:].strip())
            continue
        if line.startswith("p"):
            parts = line.split()
            if header is not None or len(parts) != 4 or parts[1] != "cnf":
                raise MalformedHeader(f"bad header {line!r}", lineno)
            try:
                header = (int(parts[2]), int(parts[3]))
            except ValueError:
                raise MalformedHeader(f"non-integer counts in {line!r}", lineno) from None
            if header[0] < 0 or header[1] < 0:
                raise MalformedHeader("negative counts", lineno)
            continue
        if line.startswith("%"):
            # some benchmark sets end with a '%' trailer
            break
        if header is None:
            raise MalformedHeader("clause before header", lineno)
        for tok in line.split():
            try:
                value = int(tok)
            except ValueError:
                raise DimacsError(f"bad token {tok!r}", lineno) from None
            if value == 0:
                clauses.append(_make_clause(current, lineno))
                current = []
            else:
                if abs(value) > header[0]:
                    raise LiteralOutOfRange(f"literal {value} exceeds {header[0]} variables", lineno)
                if not current:
                    current_line = lineno
                current.append(value)
    if header is None:
        raise MalformedHeader("missing header", lineno)
    if current:
        raise MissingTerminator("clause not terminated by 0", current_line)
    if len(clauses) != header[1]:
        raise ClauseCountMismatch(f"header declares {header[1]} clauses, found {len(clauses)}", lineno)
    kept = []
    for clause in clauses:
        if clause.is_tautology:
            warnings.warn(f"dropping tautological clause {clause.to_ints()}", stacklevel=2)
        else:
            kept.append(clause)
    return Cnf(header[0], tuple(kept), tuple(comments))


def _make_clause(values: list[int], lineno: int) -> Clause:
    seen = dict.fromkeys(values)  # dedupe, keep first occurrence
    return Clause(tuple(Literal.from_int(v) for v in seen))


def emit_dimacs(cnf: Cnf) -> bytes:
    lines = [f"c {c}" if c else "c" for c in cnf.comments]
    lines.append(f"p cnf {cnf.num_vars} {len(cnf.clauses)}")
    for clause in cnf.clauses:
        lines.append(" ".join(str(v) for v in clause.to_ints() + [0]))
    return ("\n".join(lines) + "\n").encode("ascii")
