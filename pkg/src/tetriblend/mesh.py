"""Triangle-mesh data model, Wavefront OBJ I/O, and blendability checks.

The mesh is the I/O currency of the whole pipeline: a rest shape and its
deformations must share one face list and one vertex count so that vertex
index doubles as the correspondence.
"""

from __future__ import annotations

import warnings
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .errors import FaceIndexError, ParseError

__all__ = [
    "TriangleMesh",
    "CorrespondenceReport",
    "MeshStats",
    "load_obj",
    "write_obj",
    "validate_correspondence",
    "mesh_stats",
]


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class TriangleMesh:
    """Immutable vertex positions plus oriented triangle index triples.

    vertices: (n, 3) float64, model units.
    faces: (f, 3) int64, 0-based indices, pairwise distinct per face.
    """

    vertices: np.ndarray
    faces: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        f = np.asarray(self.faces, dtype=np.int64).reshape(-1, 3)
        if f.size:
            if f.min() < 0 or f.max() >= len(v):
                raise FaceIndexError(
                    f"face index out of range [0, {len(v)}): "
                    f"min {f.min() if f.size else 0}, max {f.max() if f.size else 0}"
                )
            same = (f[:, 0] == f[:, 1]) | (f[:, 1] == f[:, 2]) | (f[:, 0] == f[:, 2])
            if same.any():
                raise ParseError(f"face {int(np.flatnonzero(same)[0])} repeats a vertex index")
        object.__setattr__(self, "vertices", _frozen(v))
        object.__setattr__(self, "faces", _frozen(f))

    @property
    def vertex_count(self) -> int:
        return len(self.vertices)

    @property
    def face_count(self) -> int:
        return len(self.faces)

    def bbox_diagonal(self) -> float:
        if not len(self.vertices):
            return 0.0
        return float(np.linalg.norm(self.vertices.max(axis=0) - self.vertices.min(axis=0)))

    def barycentre(self) -> np.ndarray:
        return self.vertices.mean(axis=0)


@dataclass(frozen=True)
class CorrespondenceReport:
    """Outcome of comparing target shapes against the rest shape.

    ``issues`` holds (shape_index, kind, element_index) triples; shape_index
    counts the rest shape as 0, targets as 1..m. Empty iff all shapes are
    blendable.
    """

    shape_count: int
    vertex_count: int
    face_count: int
    issues: tuple = field(default_factory=tuple)

    @property
    def ok(self) -> bool:
        return not self.issues


@dataclass(frozen=True)
class MeshStats:
    """Unoriented-edge census of a mesh.

    shared: contained in exactly two faces with opposite orientations.
    boundary: contained in exactly one face.
    nonmanifold: more than two incidences, or two with the same orientation.
    shared_vertex_count: vertices adjacent to at least two faces.
    """

    shared_edge_count: int
    boundary_edge_count: int
    nonmanifold_edge_count: int
    shared_vertex_count: int


def load_obj(path) -> TriangleMesh:
    """Parse a Wavefront OBJ file into a TriangleMesh.

    Only ``v`` and ``f`` records are honoured; everything else (vt, vn,
    materials, groups, comments) is skipped. Faces with more than three
    vertices are fan-triangulated from their first vertex. 1-based and
    negative (relative) indices are normalised to 0-based. Vertices never
    referenced by a face are pruned, preserving relative order.
    """
    vertices: list[tuple[float, float, float]] = []
    faces: list[tuple[int, int, int]] = []
    with open(path, "r", encoding="utf-8", errors="replace") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            tokens = line.split()
            key = tokens[0]
            if key == "v":
                if len(tokens) < 4:
                    raise ParseError(f"vertex record needs 3 coordinates: {raw.strip()!r}", lineno)
                try:
                    vertices.append((float(tokens[1]), float(tokens[2]), float(tokens[3])))
                except ValueError:
                    raise ParseError(f"bad vertex coordinate: {raw.strip()!r}", lineno) from None
            elif key == "f":
                refs = tokens[1:]
                if len(refs) < 3:
                    raise ParseError(f"face record needs at least 3 vertices: {raw.strip()!r}", lineno)
                idx = [_face_ref(tok, len(vertices), lineno) for tok in refs]
                for k in range(1, len(idx) - 1):
                    faces.append((idx[0], idx[k], idx[k + 1]))
            # all other record types are ignored
    v = np.asarray(vertices, dtype=np.float64).reshape(-1, 3)
    f = np.asarray(faces, dtype=np.int64).reshape(-1, 3)
    if f.size and f.max() >= len(v):
        bad = int(f.max())
        raise FaceIndexError(f"face references vertex {bad + 1} but only {len(v)} vertices exist")
    v, f = _prune_unreferenced(v, f, path)
    return TriangleMesh(v, f)


def _face_ref(token: str, n_verts: int, lineno: int) -> int:
    # "3", "3/2", "3//7", "3/2/7"; texture/normal sub-indices dropped
    head = token.split("/", 1)[0]
    try:
        i = int(head)
    except ValueError:
        raise ParseError(f"bad face index {token!r}", lineno) from None
    if i == 0:
        raise ParseError("face index 0 is invalid (OBJ is 1-based)", lineno)
    if i < 0:
        j = n_verts + i  # relative to the vertices defined so far
        if j < 0:
            raise FaceIndexError(f"relative index {i} precedes the first vertex", lineno)
        return j
    return i - 1


def _prune_unreferenced(v: np.ndarray, f: np.ndarray, path) -> tuple[np.ndarray, np.ndarray]:
    used = np.zeros(len(v), dtype=bool)
    if f.size:
        used[f.ravel()] = True
    if used.all():
        return v, f
    n_drop = int((~used).sum())
    warnings.warn(f"{path}: pruned {n_drop} unreferenced vertex(es)", stacklevel=3)
    remap = np.cumsum(used) - 1
    return v[used], remap[f] if f.size else f


def write_obj(mesh: TriangleMesh, path) -> None:
    """Write ``v``/``f`` records; reloading reproduces the mesh bitwise.

    Vertex values use repr-precision decimals so a load/write round trip is
    exact; faces are emitted 1-based.
    """
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for x, y, z in mesh.vertices:
            fh.write(f"v {float(x)!r} {float(y)!r} {float(z)!r}\n")
        for a, b, c in mesh.faces:
            fh.write(f"f {a + 1} {b + 1} {c + 1}\n")


def validate_correspondence(rest: TriangleMesh, targets) -> CorrespondenceReport:
    """Report every way a target shape fails to share the rest topology.

    A target is blendable iff its vertex count matches and its face list is
    element-wise identical to the rest's (same triples, same order, same
    orientation). Nothing is raised; all findings land in the report.
    """
    targets = list(targets)
    issues = []
    for j, tgt in enumerate(targets, start=1):
        if tgt.vertex_count != rest.vertex_count:
            issues.append((j, "vertex-count-mismatch", tgt.vertex_count))
            continue
        if tgt.face_count != rest.face_count:
            issues.append((j, "face-count-mismatch", tgt.face_count))
            continue
        diff = np.flatnonzero((tgt.faces != rest.faces).any(axis=1))
        for fi in diff:
            issues.append((j, "face-mismatch", int(fi)))
    return CorrespondenceReport(
        shape_count=len(targets) + 1,
        vertex_count=rest.vertex_count,
        face_count=rest.face_count,
        issues=tuple(issues),
    )


def mesh_stats(mesh: TriangleMesh) -> MeshStats:
    """Classify unoriented edges by incidence count and orientation."""
    incidence: dict[tuple[int, int], list[bool]] = {}
    for a, b, c in mesh.faces:
        for u, v in ((a, b), (b, c), (c, a)):
            u, v = int(u), int(v)
            key = (u, v) if u < v else (v, u)
            incidence.setdefault(key, []).append(u < v)
    shared = boundary = nonmanifold = 0
    for orientations in incidence.values():
        if len(orientations) == 1:
            boundary += 1
        elif len(orientations) == 2 and orientations[0] != orientations[1]:
            shared += 1
        else:
            nonmanifold += 1
    deg = Counter(int(i) for i in mesh.faces.ravel())
    shared_vertices = sum(1 for n in deg.values() if n >= 2)
    return MeshStats(
        shared_edge_count=shared,
        boundary_edge_count=boundary,
        nonmanifold_edge_count=nonmanifold,
        shared_vertex_count=shared_vertices,
    )
