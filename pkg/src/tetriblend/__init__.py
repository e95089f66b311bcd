"""Shape blending on triangle meshes via tetrahedral structures.

A rest mesh and vertexwise-correspondent deformed meshes are converted to
a shared tetrahedral structure (ghost vertices keep every triangle inside
a non-degenerate tet). Per-tet affine transforms are extracted, blended in
log space with arbitrary scalar weights, and stitched back into vertex
positions by a sparse least-squares solve.

Typical use::

    from tetriblend import load_obj, precompute, blend, BlendRequest

    rest = load_obj("rest.obj")
    targets = [load_obj("a.obj"), load_obj("b.obj")]
    model = precompute(rest, targets, method="vertex")
    mesh, report = blend(model, BlendRequest(weights=[1.0, 1.5], energy="ES"))
"""

from .algebra import (
    PolarPair,
    TetAdjacency,
    TransformLog,
    blend_local_C,
    blend_local_P,
    continuous_rot_log,
    polar_decompose,
    rot_exp,
    rot_log_principal,
    sym_exp,
    sym_log,
)
from .errors import (
    AssumptionViolated,
    CacheFormatError,
    CorrespondenceError,
    DegenerateTet,
    DegenerateTriangle,
    FaceIndexError,
    FoldDegenerate,
    NotOrientationPreserving,
    NotRotation,
    NotSPD,
    ParseError,
    SingularSystem,
    TetriblendError,
)
from .mesh import (
    CorrespondenceReport,
    MeshStats,
    TriangleMesh,
    load_obj,
    mesh_stats,
    validate_correspondence,
    write_obj,
)
from .pipeline import (
    BlendModel,
    BlendRequest,
    LocalTransformSet,
    blend,
    load_model,
    morph_sequence,
    precompute,
    save_model,
)
from .solver import (
    SolveReport,
    SolverContext,
    TargetSet,
    assemble_context,
    energy_ES,
    energy_ET,
    solve_ES,
    solve_ET,
)
from .tetra import (
    FrameMatrixSet,
    GhostRule,
    RestFactorization,
    TetMethod,
    TetStructure,
    dump_structure,
    frame_matrices,
    instantiate_ghosts,
    rest_factorization,
    tetrise,
    triangle_normal_area,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # mesh
    "TriangleMesh",
    "CorrespondenceReport",
    "MeshStats",
    "load_obj",
    "write_obj",
    "validate_correspondence",
    "mesh_stats",
    # tetra
    "TetMethod",
    "GhostRule",
    "TetStructure",
    "FrameMatrixSet",
    "RestFactorization",
    "tetrise",
    "instantiate_ghosts",
    "frame_matrices",
    "rest_factorization",
    "triangle_normal_area",
    "dump_structure",
    # algebra
    "PolarPair",
    "TransformLog",
    "TetAdjacency",
    "polar_decompose",
    "rot_exp",
    "rot_log_principal",
    "sym_log",
    "sym_exp",
    "continuous_rot_log",
    "blend_local_P",
    "blend_local_C",
    # solver
    "SolverContext",
    "TargetSet",
    "SolveReport",
    "assemble_context",
    "energy_ET",
    "energy_ES",
    "solve_ET",
    "solve_ES",
    # pipeline
    "LocalTransformSet",
    "BlendModel",
    "BlendRequest",
    "precompute",
    "blend",
    "morph_sequence",
    "save_model",
    "load_model",
    # errors
    "TetriblendError",
    "ParseError",
    "FaceIndexError",
    "CacheFormatError",
    "DegenerateTriangle",
    "AssumptionViolated",
    "FoldDegenerate",
    "DegenerateTet",
    "NotOrientationPreserving",
    "NotRotation",
    "NotSPD",
    "SingularSystem",
    "CorrespondenceError",
]
