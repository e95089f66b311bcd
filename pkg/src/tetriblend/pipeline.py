"""End-to-end blending: precompute a model once, then blend per request.

Precompute tetrises the rest mesh, factorizes its frames, extracts every
target's per-tet transforms (polar factors plus branch-adjusted logs), and
assembles the shared solver context. A blend request mixes the stored logs
with scalar weights, stitches the resulting per-tet targets, and returns a
mesh over the original vertices.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import tetra
from .algebra import (
    TetAdjacency,
    continuous_rot_log,
    polar_many,
    rot_exp_many,
    rot_log_many,
    sym_exp_many,
    sym_log_many,
)
from .errors import CacheFormatError, CorrespondenceError, NotOrientationPreserving
from .mesh import TriangleMesh, validate_correspondence
from .solver import SolverContext, SolveReport, TargetSet, assemble_context, solve_ES, solve_ET
from .tetra import GhostRule, RestFactorization, TetMethod, TetStructure

__all__ = [
    "LocalTransformSet",
    "BlendModel",
    "BlendRequest",
    "precompute",
    "blend",
    "morph_sequence",
    "save_model",
    "load_model",
    "CACHE_MAGIC",
]

CACHE_MAGIC = "TBLD1"

# the pipeline's entry points cover the common path without importing tetra
tetrise = tetra.tetrise


def _frozen(a, dtype=np.float64):
    out = np.ascontiguousarray(np.asarray(a, dtype=dtype))
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class LocalTransformSet:
    """Per-shape, per-tet transform data extracted at precompute.

    ``rot_logs`` are branch-adjusted over the tet adjacency (angles may
    exceed pi); ``rotations``/``shears`` cache the polar factors for the
    principal-log blend mode. ``barycentres`` holds each target shape's
    original-vertex mean.
    """

    rot_logs: np.ndarray  # (m, n, 3)
    shear_logs: np.ndarray  # (m, n, 3, 3)
    rotations: np.ndarray  # (m, n, 3, 3)
    shears: np.ndarray  # (m, n, 3, 3)
    barycentres: np.ndarray  # (m, 3)

    def __post_init__(self):
        m, n = np.shape(self.rot_logs)[:2]
        expect = {
            "rot_logs": (m, n, 3),
            "shear_logs": (m, n, 3, 3),
            "rotations": (m, n, 3, 3),
            "shears": (m, n, 3, 3),
            "barycentres": (m, 3),
        }
        for name, shape in expect.items():
            arr = _frozen(getattr(self, name))
            if arr.shape != shape:
                raise ValueError(f"{name} must have shape {shape}, got {arr.shape}")
            object.__setattr__(self, name, arr)

    @property
    def shape_count(self) -> int:
        return int(self.rot_logs.shape[0])

    @property
    def tet_count(self) -> int:
        return int(self.rot_logs.shape[1])

    @cached_property
    def principal_logs(self) -> np.ndarray:
        """Principal rotation logs of the cached polar rotations (m, n, 3)."""
        out = rot_log_many(self.rotations)
        out.setflags(write=False)
        return out


@dataclass(frozen=True)
class BlendModel:
    """Everything blend-time needs, built once per (rest, targets, method)."""

    rest: TriangleMesh
    structure: TetStructure
    rest_factorization: RestFactorization
    context: SolverContext
    transforms: LocalTransformSet
    method: TetMethod

    def __post_init__(self):
        s = self.structure
        if self.rest.vertex_count != s.base_vertex_count:
            raise ValueError("rest mesh and structure disagree on vertex count")
        if self.rest_factorization.linear_blocks.shape[0] != s.tet_count:
            raise ValueError("rest factorization does not cover every tet")
        if self.context.extended_count != s.extended_vertex_count:
            raise ValueError("solver context was built for a different structure")
        if self.transforms.tet_count != s.tet_count:
            raise ValueError("transform set does not cover every tet")

    @property
    def shape_count(self) -> int:
        return self.transforms.shape_count

    @property
    def rest_barycentre(self) -> np.ndarray:
        return self.rest.barycentre()


@dataclass(frozen=True)
class BlendRequest:
    """Blend weights plus solve settings.

    Weights are unbounded (negative and greater-than-one values
    extrapolate). ``energy`` picks the stitching functional, ``blend_fn``
    the local mixing rule; the iteration options only apply to the
    shear energy.
    """

    weights: np.ndarray
    energy: str = "ET"
    blend_fn: str = "C"
    max_iterations: int = 100
    tol: float = 1e-6

    def __post_init__(self):
        object.__setattr__(self, "weights", _frozen(np.reshape(self.weights, -1)))
        energy = str(self.energy).upper()
        if energy not in ("ET", "ES"):
            raise ValueError(f"energy must be 'ET' or 'ES', got {self.energy!r}")
        blend_fn = str(self.blend_fn).upper()
        if blend_fn not in ("C", "P"):
            raise ValueError(f"blend_fn must be 'C' or 'P', got {self.blend_fn!r}")
        object.__setattr__(self, "energy", energy)
        object.__setattr__(self, "blend_fn", blend_fn)


def precompute(
    rest: TriangleMesh, targets, method=TetMethod.VERTEX, tet_weights=None
) -> BlendModel:
    """Build a blend model from a rest mesh and its deformed counterparts.

    Targets must correspond to the rest mesh vertex-for-vertex and
    face-for-face. Every target tet must be orientation preserving; the
    offender's (shape, tet) pair is reported otherwise.
    """
    targets = list(targets)
    report = validate_correspondence(rest, targets)
    if not report.ok:
        raise CorrespondenceError(report)
    method = TetMethod.parse(method)

    structure = tetrise(rest, method)
    rest_ext = tetra.instantiate_ghosts(structure, rest.vertices)
    frames = tetra.frame_matrices(rest_ext, structure)
    fact = tetra.rest_factorization(frames)
    context = assemble_context(fact, structure, tet_weights)
    adjacency = TetAdjacency.from_tets(structure.tets)

    m = len(targets)
    n = structure.tet_count
    rot_logs = np.empty((m, n, 3))
    shear_logs = np.empty((m, n, 3, 3))
    rotations = np.empty((m, n, 3, 3))
    shears = np.empty((m, n, 3, 3))
    barycentres = np.empty((m, 3))
    rest_diag = max(rest.bbox_diagonal(), 1e-300)
    for j, target in enumerate(targets):
        ext = tetra.instantiate_ghosts(structure, target.vertices)
        blocks = ext[structure.tets].transpose(0, 2, 1)  # (n, 3, 4)
        A = blocks @ fact.linear_blocks
        # induced transforms are scale ratios; threshold follows the cube
        # of the relative model size
        tau = 1e-12 * (target.bbox_diagonal() / rest_diag) ** 3
        dets = np.linalg.det(A)
        bad = dets <= tau
        if bad.any():
            i = int(np.flatnonzero(bad)[0])
            raise NotOrientationPreserving(
                f"target {j + 1}, tet {i}: induced transform determinant "
                f"{dets[i]:.3e} <= {tau:.3e}"
            )
        R, S = polar_many(A)
        rotations[j] = R
        shears[j] = S
        rot_logs[j] = continuous_rot_log(adjacency, R)
        shear_logs[j] = sym_log_many(S)
        barycentres[j] = target.barycentre()

    transforms = LocalTransformSet(
        rot_logs=rot_logs,
        shear_logs=shear_logs,
        rotations=rotations,
        shears=shears,
        barycentres=barycentres,
    )
    return BlendModel(
        rest=rest,
        structure=structure,
        rest_factorization=fact,
        context=context,
        transforms=transforms,
        method=method,
    )


def _blend_targets(model: BlendModel, request: BlendRequest) -> TargetSet:
    t = model.transforms
    w = request.weights
    if len(w) != t.shape_count:
        raise ValueError(f"{len(w)} weights for {t.shape_count} target shapes")
    if request.blend_fn == "C":
        omega = np.einsum("j,jnc->nc", w, t.rot_logs)
        L = np.einsum("j,jnab->nab", w, t.shear_logs)
        targets = rot_exp_many(omega) @ sym_exp_many(L)
    else:
        omega = np.einsum("j,jnc->nc", w, t.principal_logs)
        shear = np.einsum("j,jnab->nab", w, t.shears)
        shear += (1.0 - w.sum()) * np.eye(3)
        targets = rot_exp_many(omega) @ shear
    barycentre = w @ t.barycentres + (1.0 - w.sum()) * model.rest_barycentre
    return TargetSet(targets=targets, barycentre_target=barycentre)


def blend(model: BlendModel, request: BlendRequest):
    """Evaluate one weight vector; returns (mesh, report).

    Zero weights reproduce the rest mesh and the k-th unit weight vector
    reproduces target k. The output mesh reuses the rest faces; ghost
    positions stay internal to the report.
    """
    targets = _blend_targets(model, request)
    if request.energy == "ES":
        report = solve_ES(
            model.context,
            model.rest_factorization,
            model.structure,
            targets,
            max_iterations=request.max_iterations,
            tol=request.tol,
        )
    else:
        report = solve_ET(
            model.context, model.rest_factorization, model.structure, targets
        )
    mesh = TriangleMesh(
        vertices=report.positions[: model.structure.base_vertex_count],
        faces=model.rest.faces,
    )
    return mesh, report


def _path_waypoints(model: BlendModel, weight_path) -> list:
    m = model.shape_count
    if isinstance(weight_path, dict):
        try:
            path = [weight_path["from"], weight_path["to"]]
        except KeyError as exc:
            raise ValueError("weight path dict needs 'from' and 'to'") from exc
    else:
        path = list(weight_path)
    points = [np.asarray(p, dtype=np.float64).reshape(-1) for p in path]
    if len(points) < 2:
        raise ValueError("weight path needs at least two waypoints")
    for p in points:
        if len(p) != m:
            raise ValueError(f"waypoint has {len(p)} weights, model has {m} shapes")
    return points


def morph_sequence(
    model: BlendModel,
    frames: int,
    weight_path,
    energy: str = "ET",
    blend_fn: str = "C",
    max_iterations: int = 100,
    tol: float = 1e-6,
) -> list:
    """Sample the piecewise-linear weight path at ``frames`` evenly spaced
    parameters, endpoints inclusive, and blend each sample."""
    if frames < 2:
        raise ValueError("frames must be >= 2")
    points = _path_waypoints(model, weight_path)
    segs = len(points) - 1
    meshes = []
    for k in range(frames):
        s = (k / (frames - 1)) * segs
        i = min(int(np.floor(s)), segs - 1)
        local = s - i
        w = (1.0 - local) * points[i] + local * points[i + 1]
        mesh, _ = blend(
            model,
            BlendRequest(
                weights=w,
                energy=energy,
                blend_fn=blend_fn,
                max_iterations=max_iterations,
                tol=tol,
            ),
        )
        meshes.append(mesh)
    return meshes


# ---------------------------------------------------------------------------
# model cache


def save_model(model: BlendModel, path) -> None:
    """Write the model to a JSON cache file.

    The cache stores the rest mesh, the tetrahedral structure, the
    extracted transform logs, and barycentres; the factorization is
    rebuilt on load. Floats round-trip exactly through JSON's shortest
    representation.
    """
    s = model.structure
    doc = {
        "magic": CACHE_MAGIC,
        "method": model.method.value,
        "rest": {
            "vertices": model.rest.vertices.tolist(),
            "faces": model.rest.faces.tolist(),
        },
        "structure": {
            "base_vertex_count": s.base_vertex_count,
            "tets": s.tets.tolist(),
            "ghost_rules": [
                {
                    "kind": r.kind.value,
                    "source": list(r.source),
                    "ghost_index": r.ghost_index,
                    "triangles": [list(t) for t in r.triangles],
                }
                for r in s.ghost_rules
            ],
        },
        "transforms": {
            "rot_logs": model.transforms.rot_logs.tolist(),
            "shear_logs": model.transforms.shear_logs.tolist(),
            "rotations": model.transforms.rotations.tolist(),
            "shears": model.transforms.shears.tolist(),
            "barycentres": model.transforms.barycentres.tolist(),
        },
        "tet_weights": model.context.tet_weights.tolist(),
    }
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(doc, handle)


def load_model(path) -> BlendModel:
    """Rebuild a BlendModel from a cache file written by save_model."""
    try:
        with open(path, "r", encoding="utf-8") as handle:
            doc = json.load(handle)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise CacheFormatError(f"not a model cache: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("magic") != CACHE_MAGIC:
        raise CacheFormatError(f"missing or wrong magic string (expected {CACHE_MAGIC!r})")
    try:
        method = TetMethod.parse(doc["method"])
        rest = TriangleMesh(
            vertices=np.asarray(doc["rest"]["vertices"], dtype=np.float64),
            faces=np.asarray(doc["rest"]["faces"], dtype=np.int64),
        )
        sdoc = doc["structure"]
        rules = tuple(
            GhostRule(
                kind=TetMethod.parse(r["kind"]),
                source=tuple(int(x) for x in r["source"]),
                ghost_index=int(r["ghost_index"]),
                triangles=tuple(tuple(int(v) for v in t) for t in r["triangles"]),
            )
            for r in sdoc["ghost_rules"]
        )
        structure = TetStructure(
            base_vertex_count=int(sdoc["base_vertex_count"]),
            ghost_rules=rules,
            tets=np.asarray(sdoc["tets"], dtype=np.int64),
            method=method,
        )
        tdoc = doc["transforms"]
        transforms = LocalTransformSet(
            rot_logs=np.asarray(tdoc["rot_logs"], dtype=np.float64),
            shear_logs=np.asarray(tdoc["shear_logs"], dtype=np.float64),
            rotations=np.asarray(tdoc["rotations"], dtype=np.float64),
            shears=np.asarray(tdoc["shears"], dtype=np.float64),
            barycentres=np.asarray(tdoc["barycentres"], dtype=np.float64),
        )
        tet_weights = doc.get("tet_weights")
    except (KeyError, TypeError, ValueError) as exc:
        raise CacheFormatError(f"malformed model cache: {exc}") from exc

    rest_ext = tetra.instantiate_ghosts(structure, rest.vertices)
    frames = tetra.frame_matrices(rest_ext, structure)
    fact = tetra.rest_factorization(frames)
    context = assemble_context(fact, structure, tet_weights)
    return BlendModel(
        rest=rest,
        structure=structure,
        rest_factorization=fact,
        context=context,
        transforms=transforms,
        method=method,
    )
