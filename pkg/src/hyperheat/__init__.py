"""Diffusion on weighted hypergraphs with pinned vertices.

The heat on a hypergraph evolves by the gradient flow of the edge-spread
energy; a subset of vertices is pinned to prescribed time functions.  The
package integrates the constrained flow by implicit Euler prox steps,
offers the quadratic-penalty relaxation of the constraint, computes steady
states, and ships executable checks for the governing estimates.
"""

from ._backend import backend_name
from .constraint import ConstraintSet, Schedule, lift, project, reduce
from .energy import (
    Exponent,
    SubgradientSelection,
    argmax_pairs,
    edge_spread,
    energy,
    poincare_check,
    poincare_constant,
    subgradient_any,
    subgradient_min_norm,
)
from .hypergraph import Hypergraph, components, is_connected, load, save, validate
from .solver import (
    SolverConfig,
    StationaryPoint,
    Trajectory,
    UnboundedBelow,
    implicit_euler,
    implicit_euler_unconstrained,
    laplacian_matrix,
    linear_oracle,
    prox_step,
    steady_state,
    time_grid,
    trajectory_to_csv,
    yosida_trajectory,
)
from .analysis import (
    DecayReport,
    DependenceReport,
    YosidaStudy,
    decay_study,
    dependence_check,
    omega_limit,
    yosida_study,
)

__version__ = "0.1.0"

__all__ = [
    "ConstraintSet",
    "DecayReport",
    "DependenceReport",
    "Exponent",
    "Hypergraph",
    "Schedule",
    "SolverConfig",
    "StationaryPoint",
    "SubgradientSelection",
    "Trajectory",
    "UnboundedBelow",
    "YosidaStudy",
    "argmax_pairs",
    "backend_name",
    "components",
    "decay_study",
    "dependence_check",
    "edge_spread",
    "energy",
    "implicit_euler",
    "implicit_euler_unconstrained",
    "is_connected",
    "laplacian_matrix",
    "lift",
    "linear_oracle",
    "load",
    "omega_limit",
    "poincare_check",
    "poincare_constant",
    "project",
    "prox_step",
    "reduce",
    "save",
    "steady_state",
    "subgradient_any",
    "subgradient_min_norm",
    "time_grid",
    "trajectory_to_csv",
    "validate",
    "yosida_trajectory",
]
