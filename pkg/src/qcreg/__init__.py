"""Guaranteed-bijective planar registration via quasi-conformal maps."""

from .errors import QcregError, MeshError, InputError, NumericalError
from .mesh import (
    TriMesh,
    FaceAffine,
    DivergenceCoeffs,
    grid_mesh,
    face_affine,
    divergence_coeffs,
    discrete_divergence,
    read_mesh,
    write_mesh,
)
from .beltrami import (
    BeltramiField,
    beltrami_from_map,
    jacobian,
    max_dilation,
    face_to_vertex,
    vertex_to_face,
    compose_beltrami,
    clamp_to_disk,
)
from .lbs import AlphaCoeffs, ConstraintSet, LbsSystem, alpha_coeffs, assemble_lbs, solve_lbs
from .smoothing import cot_laplacian, smooth_coefficient, CoefficientSmoother
from .landmark import (
    RegistrationParams,
    RegistrationResult,
    energy_lm,
    register_landmarks,
)
from .hybrid import (
    HybridParams,
    demon_force,
    demon_beltrami,
    intensity_mismatch,
    prolongate_map,
    register_hybrid,
)
from .image import IntensityField, build_pyramid, read_pgm, write_pgm
from .warp import eval_map, warp_image, render_deformed_grid
from .diagnostics import QualityReport, count_flips, quality_report

__version__ = "0.1.0"

__all__ = [
    "QcregError", "MeshError", "InputError", "NumericalError",
    "TriMesh", "FaceAffine", "DivergenceCoeffs", "grid_mesh", "face_affine",
    "divergence_coeffs", "discrete_divergence", "read_mesh", "write_mesh",
    "BeltramiField", "beltrami_from_map", "jacobian", "max_dilation",
    "face_to_vertex", "vertex_to_face", "compose_beltrami", "clamp_to_disk",
    "AlphaCoeffs", "ConstraintSet", "LbsSystem", "alpha_coeffs", "assemble_lbs",
    "solve_lbs", "cot_laplacian", "smooth_coefficient", "CoefficientSmoother",
    "RegistrationParams", "RegistrationResult", "energy_lm", "register_landmarks",
    "HybridParams", "demon_force", "demon_beltrami", "intensity_mismatch",
    "prolongate_map", "register_hybrid",
    "IntensityField", "build_pyramid", "read_pgm", "write_pgm",
    "eval_map", "warp_image", "render_deformed_grid",
    "QualityReport", "count_flips", "quality_report",
]
