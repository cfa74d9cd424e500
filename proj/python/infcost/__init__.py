"""Optimal transport with costs that may be +inf.

Costs, measures and Hall polytopes are thin wrappers over the C++ library;
solvers return plain dicts and lists. Plans are lists of
(source index, target index, mass).
"""

from ._infcost import (
    Cost,
    GeomConvexFn,
    HallPolytope,
    Infeasible,
    MaxIterExceeded,
    Measure,
    NotInterior,
    NotPathBounded,
    a_transform,
    check_cyclic_monotone,
    hall_feasible,
    optimal_plan,
    polar_subgradient,
    reconstruct_potential,
    solve_semidiscrete,
)

__all__ = [
    "Cost",
    "GeomConvexFn",
    "HallPolytope",
    "Infeasible",
    "MaxIterExceeded",
    "Measure",
    "NotInterior",
    "NotPathBounded",
    "a_transform",
    "check_cyclic_monotone",
    "hall_feasible",
    "optimal_plan",
    "polar_subgradient",
    "reconstruct_potential",
    "solve_semidiscrete",
]
