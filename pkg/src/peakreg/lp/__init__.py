"""Linear programming: model container, reformulation helpers and solvers."""

from __future__ import annotations

from .model import (
    EQ,
    GE,
    LE,
    Affine,
    LinearProgram,
    LpSolution,
    SolverError,
    abs_split,
    epigraph_max,
    primal_residual,
)
from .solve import solve

__all__ = [
    "EQ", "GE", "LE", "Affine", "LinearProgram", "LpSolution", "SolverError",
    "abs_split", "epigraph_max", "primal_residual", "solve",
]
