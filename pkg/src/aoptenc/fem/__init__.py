"""Finite-element core: mesh, P1/P2 spaces, assembly, point evaluation and linear algebra."""
from .assembly import (
    Trilinear,
    assemble_mass,
    assemble_stiffness,
    assemble_weighted_mass,
    element_geometry,
    product_project,
)
from .linalg import (
    Factorization,
    MassInverseSampler,
    NegativeCurvatureError,
    PCGResult,
    SingularMatrixError,
    factorize,
    pcg,
    sample_mass_inverse_gaussian,
    solve,
    steihaug_pcg,
)
from .mesh import FemSpace, Mesh, build_mesh, function_space
from .pointwise import (
    evaluation_matrix,
    locate,
    mollified_source_vector,
    mollifier_constant,
    mollifier_value,
    observe,
    point_source_vector,
)

__all__ = [
    "FemSpace", "Factorization", "MassInverseSampler", "Mesh", "NegativeCurvatureError",
    "PCGResult", "SingularMatrixError", "Trilinear", "assemble_mass", "assemble_stiffness",
    "assemble_weighted_mass", "build_mesh", "element_geometry", "evaluation_matrix", "factorize",
    "function_space", "locate", "mollified_source_vector", "mollifier_constant", "mollifier_value",
    "observe", "pcg", "point_source_vector", "product_project", "sample_mass_inverse_gaussian", "solve", "steihaug_pcg",
]
