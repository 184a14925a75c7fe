"""Hybrid SAT-on-Ising pipeline.

Factoring CNFs are generated from multiplier netlists, shrunk by a ladder of
clause-preprocessing passes, cut into spin-budget-sized pieces, converted to
QUBO/Ising form, and solved on an emulated small annealer.
"""
from .cnf import Cnf, DimacsError, evaluate, make_cnf, parse_dimacs, write_dimacs

__version__ = "0.1.0"

__all__ = [
    "Cnf",
    "DimacsError",
    "evaluate",
    "make_cnf",
    "parse_dimacs",
    "write_dimacs",
    "__version__",
]
