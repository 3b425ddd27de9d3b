"""CDCL SAT solving with certified pruning from context-network inequalities."""

from .cnf import Assignment, Clause, Cnf, Literal, emit_dimacs, evaluate, parse_dimacs
from .cuts import Cut, library_cut, make_feistel_cut, make_kcbs_cut, make_odd_cycle_cut
from .generators import gen_cycle_sat, gen_feistel_toy, gen_grid_sat, gen_random_3sat
from .lp import FarkasCertificate, LinearSystem, solve_feasibility, verify_farkas
from .solver import SolverConfig, Verdict, solve

__all__ = [
    "Assignment", "Clause", "Cnf", "Literal", "emit_dimacs", "evaluate", "parse_dimacs",
    "Cut", "library_cut", "make_feistel_cut", "make_kcbs_cut", "make_odd_cycle_cut",
    "gen_cycle_sat", "gen_feistel_toy", "gen_grid_sat", "gen_random_3sat",
    "FarkasCertificate", "LinearSystem", "solve_feasibility", "verify_farkas",
    "SolverConfig", "Verdict", "solve",
]
