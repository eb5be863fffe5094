"""Wide-stencil infinity-Laplacian toolkit for planar convex domains.

Computes infinity-harmonic potentials (0 on the boundary, 1 on the set of
interior points farthest from it) on exact arc/segment geometries and checks
candidate first eigenfunctions of the infinity Laplacian nodewise.
"""

__version__ = "0.1.0"

from .geometry import (Arc, Ball, Domain, GeometryError, NodeSet, Point2,
                       RidgeSegment, SEps, Segment, SinglePoint, Square,
                       Stadium, boundary_exit, build_domain, convexity_defect,
                       delta, domain_json, high_ridge, inradius, lambda_value,
                       signed_distance)
from .grid import (ArmTable, Field, Grid, GridError, StencilSet, arm_sample,
                   build_arm_table, build_grid, build_stencil, delta_field,
                   dump_field_csv, field_from_function)
from .solver import (BVProblem, SolveReport, SolverNonConvergence,
                     discrete_inf_laplacian, operator_on_function, potential,
                     solve_dirichlet)
from .eigen import (EigenReport, VerdictTolerances, default_tolerances,
                    eigen_residuals, eigen_verdict, grad_magnitude,
                    rayleigh_quotient)

__all__ = [name for name in dir() if not name.startswith("_")]
