import pytest

from ngccsat.cnf import Cnf, emit_dimacs
from ngccsat.generators import (
    SBOX,
    boundary_views,
    consistent_keys,
    feistel_encrypt,
    gen_cycle_sat,
    gen_feistel_toy,
    gen_grid_sat,
    gen_random_3sat,
    split_key,
)
from ngccsat.solver import SolverConfig, Verdict, solve

from oracles import brute_force_sat


def _verdict(cnf):
    return solve(cnf, [], SolverConfig(seed=0, enable_ngcc=False)).verdict


def test_cycle_base_clauses():
    inst = gen_cycle_sat(5)
    base = [c.to_ints() for c in inst.cnf.clauses if max(c.variables) <= 5]
    assert len(base) == 10
    assert [1, 2] in base and [-5, -1] in base
    assert inst.indicators[0].cut == "kcbs_c5"
    assert inst.indicators[0].bindings == {i: 5 + i for i in range(1, 6)}
    with pytest.raises(ValueError):
        gen_cycle_sat(2)


@pytest.mark.parametrize("n", range(3, 14))
def test_cycle_parity_decides_satisfiability(n):
    inst = gen_cycle_sat(n)
    base = Cnf.from_ints(n, [c.to_ints() for c in inst.cnf.clauses if max(c.variables) <= n])
    expected = n % 2 == 0
    assert brute_force_sat(base) == expected
    assert _verdict(inst.cnf) == (Verdict.SAT if expected else Verdict.UNSAT)


def test_cycle_seven_carries_the_c7_cut():
    (cut,) = gen_cycle_sat(7).cuts()
    assert cut.name == "odd_cycle_c7" and cut.bound == 6


def test_grid_two_by_two():
    sat = gen_grid_sat(2, seed=0, unsat=False)
    assert brute_force_sat(sat.cnf)
    assert not brute_force_sat(gen_grid_sat(2, seed=0, unsat=True).cnf)
    assert sat.name == "grid_2x2"
    with pytest.raises(ValueError):
        gen_grid_sat(1)


@pytest.mark.parametrize("m", [3, 4])
def test_grid_obstruction_toggles(m):
    for seed in range(3):
        assert _verdict(gen_grid_sat(m, seed, unsat=False).cnf) is Verdict.SAT
        assert _verdict(gen_grid_sat(m, seed, unsat=True).cnf) is Verdict.UNSAT
    assert gen_grid_sat(4).name == "grid_4x4"


def test_random_3sat_shape():
    cnf = gen_random_3sat(20, 4.26, seed=1)
    assert len(cnf.clauses) == 86
    assert all(len(set(c.variables)) == 3 for c in cnf.clauses)
    small = gen_random_3sat(3, 1, seed=0)
    assert len(small.clauses) == 3 and small.num_vars == 3
    with pytest.raises(ValueError):
        gen_random_3sat(2)


def test_generators_are_deterministic():
    for make in (lambda: gen_cycle_sat(6).cnf, lambda: gen_grid_sat(3, 5).cnf,
                 lambda: gen_random_3sat(12, 4.26, 9), lambda: gen_feistel_toy(2, 3).cnf):
        assert emit_dimacs(make()) == emit_dimacs(make())
    assert emit_dimacs(gen_random_3sat(12, 4.26, 1)) != emit_dimacs(gen_random_3sat(12, 4.26, 2))


def test_headers_record_family_and_seed():
    assert gen_grid_sat(3, 7).cnf.comments[0].startswith("family=grid seed=7")
    assert gen_feistel_toy(2, 4).cnf.comments[0].startswith("family=feistel seed=4")


def test_sbox_is_a_fixed_point_free_permutation():
    assert sorted(SBOX) == list(range(16))
    assert all(SBOX[x] != x for x in range(16))


def test_feistel_instance_is_unsat_by_key_search():
    for seed in range(5):
        inst = gen_feistel_toy(2, seed)
        pairs = [tuple(p) for p in inst.meta["pairs"]]
        assert consistent_keys(pairs) == []
        assert all(150 <= n <= 300 for n in inst.meta["clauses_per_pair"])
        assert len(inst.indicators) == 2
    with pytest.raises(ValueError):
        gen_feistel_toy(1)


def test_feistel_encrypt_round_trip_through_views():
    # views coincide exactly for keys consistent with the pair
    plain = 0x3A
    key = 0x5C7
    cipher = feistel_encrypt(plain, split_key(key))
    views = boundary_views(plain, cipher, key)
    assert views[0] == views[1] == views[2]


def _pair_layout(inst, idx):
    ys = [inst.indicators[idx].bindings[s] for s in (1, 2, 3)]
    start = ys[0]
    fwd = list(range(start + 3, start + 7))
    mid = list(range(start + 7, start + 11))
    bwd = list(range(start + 11, start + 15))
    t = list(range(start + 15, start + 19))
    diffs = [list(range(start + 19 + 4 * j, start + 23 + 4 * j)) for j in range(3)]
    return ys, fwd, mid, bwd, t, diffs


def _bits(x):
    return [bool(x >> (3 - i) & 1) for i in range(4)]


def test_feistel_reification_exhaustive_over_keys():
    inst = gen_feistel_toy(2, 0)
    plain, cipher = inst.meta["pairs"][0]
    ys, fwd, mid, bwd, t, diffs = _pair_layout(inst, 0)
    last = diffs[-1][-1]
    assert inst.indicators[1].bindings[1] == last + 1
    clauses = [c.to_ints() for c in inst.cnf.clauses if max(c.variables) <= last]
    ties = {frozenset(c) for a, b in list(zip(fwd, mid)) + list(zip(mid, bwd)) for c in ([-a, b], [a, -b])}

    agreeing = []
    for key in range(1 << 12):
        views = boundary_views(plain, cipher, key)
        values = {}
        for i, bit in enumerate(_bits(key >> 8) + _bits(key >> 4 & 0xF) + _bits(key & 0xF)):
            values[i + 1] = bit
        for wires, view in zip((fwd, mid, bwd), views):
            values.update(zip(wires, _bits(view)))
        values.update(zip(t, _bits(views[1] ^ split_key(key)[1])))
        for j, (u, w) in enumerate(((0, 1), (1, 2), (2, 0))):
            values.update(zip(diffs[j], _bits(views[u] ^ views[w])))
            values[ys[j]] = views[u] != views[w]
        sat = lambda c: any(values[abs(l)] == (l > 0) for l in c)  # noqa: E731
        tie_ok = all(sat(c) for c in clauses if frozenset(c) in ties)
        assert all(sat(c) for c in clauses if frozenset(c) not in ties)
        assert tie_ok == (views[0] == views[1] == views[2])
        # each Y is pinned by its circuit: flipping it breaks a clause
        for y in ys:
            values[y] = not values[y]
            assert not all(sat(c) for c in clauses if y in map(abs, c))
            values[y] = not values[y]
        if tie_ok:
            agreeing.append(key)
            assert not any(values[y] for y in ys)
    assert agreeing == consistent_keys([(plain, cipher)])
    assert len(agreeing) == 16
