"""Planar Minkowski problem for the sub-linear equation ``-lap(phi) = phi**beta``.

Solve the Dirichlet problem on convex polygons, push ``|grad phi|^2`` on the
boundary forward to a measure on the circle, evaluate the domain energy and
recover a body from a prescribed measure.
"""
__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .geometry import (
    ConvexBody,
    body_from_support,
    disk,
    halfplane_intersection,
    hausdorff_distance,
    mean_width,
    minkowski_sum,
    random_convex_body,
    recenter,
    regular_polygon,
    square,
    steiner_point,
    support_function,
    transform,
)
from .grid import SupportVector, SurfaceMeasure, grid_angles, measure_centroid, pair
from .pde import FieldStats, Mesh, ScalarField, SolverConfig, field_stats, solve_body, solve_sublinear, triangulate
from .radial import RadialSolution, radial_oracle
from .measure import BoundaryFlux, boundary_flux, body_measure, surface_measure
from .functional import (
    EnergyReport,
    HomogeneityExponents,
    VariationReport,
    energy,
    first_variation,
    homogeneity_exponents,
    isoperimetric_gap,
)
from .solver import MinkowskiSolution, OptimizerConfig, TargetMeasure, residual, solve_minkowski, validate_target
