import warnings

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ngccsat.cnf import (
    Assignment,
    Clause,
    ClauseCountMismatch,
    Cnf,
    Literal,
    LiteralOutOfRange,
    MalformedHeader,
    MissingTerminator,
    Status,
    clause_status,
    emit_dimacs,
    evaluate,
    parse_dimacs,
)
from ngccsat.generators import gen_cycle_sat


def test_emit_single_unit():
    assert emit_dimacs(Cnf.from_ints(1, [[1]])) == b"p cnf 1 1\n1 0\n"


def test_emit_mixed_polarity():
    assert emit_dimacs(Cnf.from_ints(2, [[1, -2]])) == b"p cnf 2 1\n1 -2 0\n"


def test_parse_basic_with_comments_and_trailer():
    cnf = parse_dimacs("c hello\np cnf 3 2\n1 -3 0\n2 3 -1 0\n%\n0\n")
    assert cnf.num_vars == 3
    assert [c.to_ints() for c in cnf.clauses] == [[1, -3], [2, 3, -1]]
    assert cnf.comments == ("hello",)


def test_parse_clause_spanning_lines():
    cnf = parse_dimacs("p cnf 2 1\n1\n-2 0\n")
    assert cnf.clauses[0].to_ints() == [1, -2]


def test_parse_dedupes_literals():
    assert parse_dimacs("p cnf 2 1\n1 1 2 0\n").clauses[0].to_ints() == [1, 2]


def test_parse_drops_tautology_with_warning():
    with pytest.warns(UserWarning):
        cnf = parse_dimacs("p cnf 2 2\n1 -1 0\n2 0\n")
    assert [c.to_ints() for c in cnf.clauses] == [[2]]


@pytest.mark.parametrize("text, error, line", [
    ("p cnf x 1\n1 0\n", MalformedHeader, 1),
    ("1 0\n", MalformedHeader, 1),
    ("c only\n", MalformedHeader, 1),
    ("p cnf 2 1\n1 3 0\n", LiteralOutOfRange, 2),
    ("p cnf 2 1\n1 2\n", MissingTerminator, 2),
    ("p cnf 2 2\n1 2 0\n", ClauseCountMismatch, 2),
])
def test_parse_errors_carry_line(text, error, line):
    with pytest.raises(error) as info:
        parse_dimacs(text)
    assert info.value.line == line


def test_empty_clause_is_allowed_and_unsat():
    cnf = parse_dimacs("p cnf 1 1\n0\n")
    assert cnf.has_empty_clause
    assert not evaluate(cnf, Assignment.from_dict(1, {1: True}))


def test_cycle_round_trip_byte_identical():
    data = emit_dimacs(gen_cycle_sat(5).cnf)
    assert emit_dimacs(parse_dimacs(data)) == data


def test_evaluate_examples():
    cnf = Cnf.from_ints(2, [[1, 2], [-1, -2]])
    assert evaluate(cnf, Assignment.from_dict(2, {1: True, 2: False}))
    assert not evaluate(cnf, Assignment.from_dict(2, {1: True, 2: True}))


def test_evaluate_rejects_partial():
    with pytest.raises(ValueError):
        evaluate(Cnf.from_ints(2, [[1]]), Assignment.from_dict(2, {1: True}))


def test_cycle5_unsat_under_every_assignment():
    cnf = gen_cycle_sat(5).cnf
    assert not any(evaluate(cnf, Assignment.from_bits(cnf.num_vars, bits)) for bits in range(1 << cnf.num_vars))


def test_clause_status_cases():
    clause = Clause.of(1, -2, 3)
    a = Assignment(3)
    assert clause_status(clause, a) == (Status.UNRESOLVED, None)
    a.assign(Literal(1, False))
    a.assign(Literal(2, True))
    assert clause_status(clause, a) == (Status.UNIT, Literal(3))
    a.assign(Literal(3, False))
    assert clause_status(clause, a) == (Status.CONFLICTING, None)
    b = Assignment.from_dict(3, {2: False})
    assert clause_status(clause, b) == (Status.SATISFIED, None)


def test_assignment_rejects_contradiction_and_level_drop():
    a = Assignment(2)
    a.assign(Literal(1), level=2)
    with pytest.raises(ValueError):
        a.assign(Literal(1, False), level=2)
    with pytest.raises(ValueError):
        a.assign(Literal(2), level=1)


def test_clause_rejects_duplicates():
    with pytest.raises(ValueError):
        Clause((Literal(1), Literal(1)))


clause_lists = st.integers(1, 8).flatmap(lambda n: st.tuples(
    st.just(n),
    st.lists(st.lists(st.integers(1, n).flatmap(lambda v: st.sampled_from([v, -v])), min_size=1, max_size=4,
                      unique_by=abs), max_size=10)))


@settings(max_examples=150, deadline=None)
@given(clause_lists)
def test_round_trip_property(data):
    n, clauses = data
    cnf = Cnf.from_ints(n, clauses)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        back = parse_dimacs(emit_dimacs(cnf))
    assert back == cnf
    assert emit_dimacs(back) == emit_dimacs(cnf)
