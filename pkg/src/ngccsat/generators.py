"""Seeded CNF generators for the benchmark families.

All generators are deterministic functions of their parameters.  Each returns
the formula plus whatever indicator wiring the cut library needs; the seed and
parameters are written into the DIMACS comment header.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction

from .cnf import Cnf
from .cuts import Cut, library_cut
from .network import ContextNetwork, build_network

# PRESENT S-box: a 4-bit permutation without fixed points, algebraic degree 3.
SBOX = (0xC, 0x5, 0x6, 0xB, 0x9, 0x0, 0xA, 0xD, 0x3, 0xE, 0xF, 0x8, 0x4, 0x7, 0x1, 0x2)
SBOX_INV = tuple(SBOX.index(x) for x in range(16))
ROUNDS = 3
BRANCH_BITS = 4


@dataclass
class IndicatorGroup:
    """Binds the slots of one library cut to DIMACS variables."""

    cut: str
    bindings: dict[int, int]
    note: str = ""

    def to_json(self) -> dict:
        return {"cut": self.cut, "bindings": {str(k): v for k, v in sorted(self.bindings.items())},
                "note": self.note}


@dataclass
class Instance:
    name: str
    cnf: Cnf
    indicators: list[IndicatorGroup] = field(default_factory=list)
    network: ContextNetwork | None = None
    meta: dict = field(default_factory=dict)

    def cuts(self) -> list[Cut]:
        """Library cuts with their slots bound to this formula's variables."""
        return [library_cut(g.cut).with_bindings(g.bindings) for g in self.indicators]

    def sidecar(self) -> dict:
        return {"instance": self.name, "num_vars": self.cnf.num_vars,
                "indicators": [g.to_json() for g in self.indicators], **self.meta}


class _Builder:
    def __init__(self):
        self.num_vars = 0
        self.clauses: list[list[int]] = []
        self._seen: set[tuple[int, ...]] = set()

    def var(self) -> int:
        self.num_vars += 1
        return self.num_vars

    def add(self, *lits: int) -> None:
        key = tuple(sorted(set(lits)))
        if any(-l in key for l in key):
            return  # tautology; produced when constants fold away
        if key not in self._seen:
            self._seen.add(key)
            self.clauses.append(list(dict.fromkeys(lits)))

    def xor2(self, a: int, b: int, out: int) -> None:
        """out <-> a xor b, the usual four clauses."""
        self.add(-out, a, b)
        self.add(-out, -a, -b)
        self.add(out, -a, b)
        self.add(out, a, -b)

    def or_into(self, inputs: list[int], out: int) -> None:
        """out <-> OR(inputs)."""
        self.add(-out, *inputs)
        for x in inputs:
            self.add(out, -x)

    def cnf(self, comments: list[str]) -> Cnf:
        return Cnf.from_ints(self.num_vars, self.clauses, comments)


def _header(family: str, seed: int, **params) -> list[str]:
    ps = " ".join(f"{k}={v}" for k, v in params.items())
    return [f"family={family} seed={seed} params={ps}"]


def gen_cycle_sat(n: int) -> Instance:
    """Adjacent variables on an n-cycle must disagree; UNSAT iff n is odd.

    Variables 1..n are X_1..X_n and n+1..2n are the edge disagreement
    indicators Y_i <-> (X_i xor X_{i+1}).
    """
    if n < 3:
        raise ValueError("cycle_sat needs n >= 3")
    b = _Builder()
    xs = [b.var() for _ in range(n)]
    ys = [b.var() for _ in range(n)]
    base = []
    for i in range(n):
        u, v = xs[i], xs[(i + 1) % n]
        base.append([u, v])
        base.append([-u, -v])
    for c in base:
        b.add(*c)
    for i in range(n):
        b.xor2(xs[i], xs[(i + 1) % n], ys[i])
    comments = _header("cycle", 0, n=n) + [
        f"vars 1..{n} are the cycle variables, {n + 1}..{2 * n} edge disagreement indicators"]
    cnf = b.cnf(comments)
    network = build_network(Cnf.from_ints(cnf.num_vars, base))
    groups = []
    if n % 2 == 1 and n >= 5:  # the odd-cycle cuts start at C5
        name = "kcbs_c5" if n == 5 else f"odd_cycle_c{n}"
        groups.append(IndicatorGroup(name, {i + 1: ys[i] for i in range(n)}, "edge disagreement"))
    return Instance(f"cycle_k{n}", cnf, groups, network, {"family": "cycle", "n": n})


def gen_grid_sat(m: int, seed: int = 0, unsat: bool | None = None) -> Instance:
    """XOR parity on every 2x2 window of an m x m lattice plus a corner parity.

    The four corners are covered by exactly one window each and every other cell
    by an even number, so the corner parity is implied by the window targets.
    Setting it to the opposite value makes the formula UNSAT.
    """
    if m < 2:
        raise ValueError("grid_sat needs m >= 2")
    rng = random.Random(seed)
    if unsat is None:
        unsat = rng.random() < 0.5
    b = _Builder()
    cell = [[b.var() for _ in range(m)] for _ in range(m)]
    total = 0
    for i in range(m - 1):
        for j in range(m - 1):
            target = rng.randrange(2)
            total ^= target
            _xor_chain(b, [cell[i][j], cell[i][j + 1], cell[i + 1][j], cell[i + 1][j + 1]], target)
    corners = [cell[0][0], cell[0][m - 1], cell[m - 1][0], cell[m - 1][m - 1]]
    _xor_chain(b, corners, total ^ int(unsat))
    comments = _header("grid", seed, m=m, unsat=int(unsat)) + [
        f"vars 1..{m * m} are lattice cells (row-major), the rest are xor chain auxiliaries"]
    cnf = b.cnf(comments)
    return Instance(f"grid_{m}x{m}", cnf, [], build_network(cnf), {"family": "grid", "m": m, "seed": seed,
                                                                   "unsat": unsat})


def _xor_chain(b: _Builder, inputs: list[int], parity: int) -> None:
    """inputs[0] xor ... xor inputs[-1] = parity, with Tseitin auxiliaries."""
    acc = inputs[0]
    for x in inputs[1:-1]:
        t = b.var()
        b.xor2(acc, x, t)
        acc = t
    last = inputs[-1]
    # acc xor last = parity
    if parity:
        b.add(acc, last)
        b.add(-acc, -last)
    else:
        b.add(-acc, last)
        b.add(acc, -last)


def gen_random_3sat(n: int, ratio=4.26, seed: int = 0) -> Cnf:
    if n < 3:
        raise ValueError("random 3-SAT needs n >= 3")
    rng = random.Random(seed)
    m = math.ceil(Fraction(str(ratio)) * n)
    clauses = []
    for _ in range(m):
        vs = rng.sample(range(1, n + 1), 3)
        clauses.append([v if rng.random() < 0.5 else -v for v in vs])
    return Cnf.from_ints(n, clauses, _header("random3sat", seed, n=n, ratio=ratio))


# --- toy Feistel -----------------------------------------------------------

def feistel_round(left: int, right: int, key: int) -> tuple[int, int]:
    return right, left ^ SBOX[right ^ key]


def feistel_encrypt(plain: int, keys: tuple[int, int, int]) -> int:
    left, right = plain >> 4, plain & 0xF
    for k in keys:
        left, right = feistel_round(left, right, k)
    return left << 4 | right


def split_key(key: int) -> tuple[int, int, int]:
    """12-bit key -> (k1, k2, k3), k1 in the top nibble."""
    return key >> 8 & 0xF, key >> 4 & 0xF, key & 0xF


def consistent_keys(pairs: list[tuple[int, int]]) -> list[int]:
    """Brute force over all 4096 keys."""
    return [key for key in range(1 << 12)
            if all(feistel_encrypt(p, split_key(key)) == c for p, c in pairs)]


def boundary_views(plain: int, cipher: int, key: int) -> tuple[int, int, int]:
    """The value each round context implies for the free boundary word R1.

    Round 1 computes it forward from the plaintext, round 3 backward from the
    ciphertext, and round 2 holds the value its S-box input must come from.
    """
    k1, k2, k3 = split_key(key)
    l0, r0 = plain >> 4, plain & 0xF
    cl, cr = cipher >> 4, cipher & 0xF
    forward = l0 ^ SBOX[r0 ^ k1]
    middle = k2 ^ SBOX_INV[r0 ^ cl]
    backward = cr ^ SBOX[cl ^ k3]
    return forward, middle, backward


def _bits(x: int) -> list[int]:
    return [x >> (BRANCH_BITS - 1 - t) & 1 for t in range(BRANCH_BITS)]


def _lit(var: int, bit: int) -> int:
    """Literal that is true when var takes the value ``bit``."""
    return var if bit else -var


def _sbox_clauses(b: _Builder, inputs: list[int], in_mask: int, outputs: list[int | None],
                  out_mask: int, out_const: int | None = None) -> None:
    """Direct S-box encoding on literals with constant masks folded in.

    The relation is  out xor out_mask = S(in xor in_mask).  When ``outputs`` is
    None the output is the constant ``out_const`` and only blocking clauses for
    the inconsistent input patterns remain.
    """
    for x in range(16):
        y = SBOX[x]
        in_bits = _bits(x ^ in_mask)
        guard = [-_lit(v, bit) for v, bit in zip(inputs, in_bits)]
        if out_const is not None:
            if y != out_const:
                b.add(*guard)
            continue
        for v, bit in zip(outputs, _bits(y ^ out_mask)):
            b.add(*guard, _lit(v, bit))


def _sample_pairs(io_pairs: int, rng: random.Random) -> list[tuple[int, int]]:
    while True:
        plains = rng.sample(range(256), io_pairs)
        pairs = [(p, rng.randrange(256)) for p in plains]
        if not consistent_keys(pairs):
            return pairs


def gen_feistel_toy(io_pairs: int = 2, seed: int = 0) -> Instance:
    """Three rounds, two 4-bit branches, 12 key bits; UNSAT by construction.

    With plaintext and ciphertext fixed, the only free boundary word is R1.
    Each round context gets its own copy of it (forward from round 1, the
    S-box input side of round 2, backward from round 3), the copies are tied by
    equality, and Y_k flags a disagreement between two adjacent copies.

    Variables 1..12 are the key bits (k1, k2, k3, most significant first).
    A single pair is consistent with exactly 16 keys for this cipher, so at
    least two pairs are needed for an UNSAT instance.
    """
    if io_pairs < 2:
        raise ValueError("one I/O pair is always consistent with 16 keys; use io_pairs >= 2")
    rng = random.Random(seed)
    pairs = _sample_pairs(io_pairs, rng)
    b = _Builder()
    key = [[b.var() for _ in range(BRANCH_BITS)] for _ in range(ROUNDS)]
    groups = []
    per_pair_clauses = []
    for idx, (plain, cipher) in enumerate(pairs):
        before = len(b.clauses)
        l0, r0 = plain >> 4, plain & 0xF
        cl, cr = cipher >> 4, cipher & 0xF
        ys = [b.var() for _ in range(3)]
        fwd = [b.var() for _ in range(BRANCH_BITS)]
        mid = [b.var() for _ in range(BRANCH_BITS)]
        bwd = [b.var() for _ in range(BRANCH_BITS)]
        # round 1: fwd = L0 xor S(R0 xor k1)
        _sbox_clauses(b, key[0], r0, fwd, l0)
        # round 2: S(mid xor k2) = R0 xor L3, since R2 = L3 and L1 = R0
        t = [b.var() for _ in range(BRANCH_BITS)]
        for m_, k_, t_ in zip(mid, key[1], t):
            b.xor2(m_, k_, t_)
        _sbox_clauses(b, t, 0, [None] * BRANCH_BITS, 0, out_const=r0 ^ cl)
        # round 3: bwd = R3 xor S(L3 xor k3), since L2 = R1
        _sbox_clauses(b, key[2], cl, bwd, cr)
        # copies of the same wires must agree
        for a, c in zip(fwd, mid):
            b.add(-a, c)
            b.add(a, -c)
        for a, c in zip(mid, bwd):
            b.add(-a, c)
            b.add(a, -c)
        # boundary disagreement indicators
        for y, (u, w) in zip(ys, ((fwd, mid), (mid, bwd), (bwd, fwd))):
            diffs = [b.var() for _ in range(BRANCH_BITS)]
            for d, a, c in zip(diffs, u, w):
                b.xor2(a, c, d)
            b.or_into(diffs, y)
        per_pair_clauses.append(len(b.clauses) - before)
        groups.append(IndicatorGroup("feistel_chain", {1: ys[0], 2: ys[1], 3: ys[2]},
                                     f"pair {idx}: plain={plain:#04x} cipher={cipher:#04x}"))
    comments = _header("feistel", seed, rounds=ROUNDS, branch_bits=BRANCH_BITS, io_pairs=io_pairs) + [
        "vars 1..12 are key bits k1|k2|k3, msb first",
        "pairs " + " ".join(f"{p:02x}:{c:02x}" for p, c in pairs),
    ]
    meta = {"family": "feistel", "seed": seed, "pairs": [[p, c] for p, c in pairs],
            "key_vars": [v for k in key for v in k], "clauses_per_pair": per_pair_clauses}
    return Instance("feistel_3r_8b", b.cnf(comments), groups, None, meta)
