"""Numerical study of asymptotic stability of KdV solitons in weighted spaces.

Pseudospectral KdV solver, the linearised operator about the soliton and its
generalised kernel, the smoothing multiplier I_N, modulation dynamics, and
dyadic spacetime norms.
"""
__version__ = "0.1.0"

from .grid import Grid
from .soliton import SolitonParams, eval_soliton
from .kdv import SolverConfig, run as run_kdv

__all__ = ["Grid", "SolitonParams", "eval_soliton", "SolverConfig", "run_kdv", "__version__"]
