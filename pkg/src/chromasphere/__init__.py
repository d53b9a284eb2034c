"""Constructive upper bounds for chromatic numbers of spheres and balls.

The package builds explicit colorings that avoid a forbidden chord
distance: a saturated cap packing, a shrunken distance-avoiding set,
greedy rotation covers with numeric transfer certificates, and a
shell-by-shell extension from spheres to solid balls.
"""

__version__ = "0.1.0"

from .ball import (BallColorConfig, BallColoring, ShellPlan,
                   build_ball_coloring, certify_ball, plan_shells,
                   total_colors)
from .covering import (SphereColorConfig, SphereColoring,
                       build_sphere_coloring, cover_count_bound,
                       cover_count_bound_log, unit_chord_pairs)
from .errors import (CertificateError, ChromaError, DomainError,
                     IncompleteCoverError, InfeasibleError,
                     InvalidParameterError, RegimeError, StateError)
from .forbidden import (CapPacking, ForbiddenSet, boundary_clearance,
                        build_packing, certify_forbidden, forbidden_margins,
                        make_forbidden, mc_density)
from .geometry import SphereSpec, cap_measure
from .parameters import (RadiusParams, ShellParams, bound_base, cap_angle,
                         critical_shrink, shell_params, shell_radii,
                         small_radius_params, solve_params, verify_system)
from .pipeline import ExperimentConfig, run_verify

__all__ = [
    "__version__",
    "BallColorConfig", "BallColoring", "ShellPlan", "build_ball_coloring",
    "certify_ball", "plan_shells", "total_colors",
    "SphereColorConfig", "SphereColoring", "build_sphere_coloring",
    "cover_count_bound", "cover_count_bound_log", "unit_chord_pairs",
    "CertificateError", "ChromaError", "DomainError", "IncompleteCoverError",
    "InfeasibleError", "InvalidParameterError", "RegimeError", "StateError",
    "CapPacking", "ForbiddenSet", "boundary_clearance", "build_packing",
    "certify_forbidden", "forbidden_margins", "make_forbidden", "mc_density",
    "SphereSpec", "cap_measure",
    "RadiusParams", "ShellParams", "bound_base", "cap_angle",
    "critical_shrink", "shell_params", "shell_radii", "small_radius_params",
    "solve_params", "verify_system",
    "ExperimentConfig", "run_verify",
]
