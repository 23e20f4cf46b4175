"""Doubling indices, star-shaped geometry and nodal sets on polygons."""

from .doubling import (
    doubling,
    four_sphere_check,
    frequency_profile,
    frequency_profiles,
    monotonicity_check,
    propagation_check,
    radius_grid,
)
from .errors import NodalPolyError
from .mesh import DiscreteField, generate_mesh, interpolate
from .nodal import extract_nodal_set, nodal_measure, shell_accounting, yau_upper_survey
from .polytope import NAMED, build_polytope, face_distance_constant, load_polytope, skeleton_distance
from .spectral import lift, solve_eigen, solve_polytope
from .star import boundary_cover, cover_verify, max_star_radius, msr_lower_bounds, star_certificate

__version__ = "0.1.0"

__all__ = [
    "NAMED",
    "DiscreteField",
    "NodalPolyError",
    "boundary_cover",
    "build_polytope",
    "cover_verify",
    "doubling",
    "extract_nodal_set",
    "face_distance_constant",
    "four_sphere_check",
    "frequency_profile",
    "frequency_profiles",
    "generate_mesh",
    "interpolate",
    "lift",
    "load_polytope",
    "max_star_radius",
    "monotonicity_check",
    "msr_lower_bounds",
    "nodal_measure",
    "propagation_check",
    "radius_grid",
    "shell_accounting",
    "skeleton_distance",
    "solve_eigen",
    "solve_polytope",
    "star_certificate",
    "yau_upper_survey",
]
