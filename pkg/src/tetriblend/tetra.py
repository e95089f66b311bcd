"""Tetrahedral structures built over a triangle mesh via ghost vertices.

Three constructions are offered. Each adds off-surface ghost vertices so
that every surface triangle becomes part of at least one non-degenerate
tetrahedron:

* face: one ghost per triangle, offset along the scaled face normal.
* edge: one ghost per shared edge, offset along the mean of the two
  adjacent face normals; encodes dihedral angles.
* vertex: one ghost per shared vertex, offset along the area-weighted
  normal sum of the incident faces; encodes the angle around vertices.

Ghost rules are purely combinatorial: re-evaluating them on deformed
vertex positions yields the deformed ghosts, so one structure serves the
rest shape and every deformation of it.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import cached_property

import numpy as np

from .errors import (
    AssumptionViolated,
    DegenerateTet,
    DegenerateTriangle,
    FoldDegenerate,
)
from .mesh import TriangleMesh

__all__ = [
    "TetMethod",
    "GhostRule",
    "TetStructure",
    "FrameMatrixSet",
    "RestFactorization",
    "triangle_normal_area",
    "tetrise",
    "instantiate_ghosts",
    "frame_matrices",
    "rest_factorization",
    "dump_structure",
]

NORMAL_SUM_EPS = 1e-8  # threshold on the norm of summed unit normals


class TetMethod(Enum):
    FACE = "face"
    EDGE = "edge"
    VERTEX = "vertex"

    @classmethod
    def parse(cls, name) -> "TetMethod":
        if isinstance(name, TetMethod):
            return name
        try:
            return cls(str(name).lower())
        except ValueError:
            raise ValueError(f"unknown tetrisation method {name!r}; expected face, edge, or vertex") from None


@dataclass(frozen=True)
class GhostRule:
    """Recipe for one ghost vertex.

    source identifies the generating element (face index, shared-edge
    vertex pair, or vertex index); triangles are the oriented vertex
    triples whose normals/areas enter the offset formula.
    """

    kind: TetMethod
    source: tuple
    ghost_index: int
    triangles: tuple


@dataclass(frozen=True)
class TetStructure:
    """Ghost-vertex rules plus tetrahedron index 4-tuples.

    Topology only; positions are supplied per shape via
    :func:`instantiate_ghosts`. Ghost indices are contiguous starting at
    ``base_vertex_count``.
    """

    base_vertex_count: int
    ghost_rules: tuple
    tets: np.ndarray
    method: TetMethod

    def __post_init__(self):
        t = np.asarray(self.tets, dtype=np.int64).reshape(-1, 4)
        t = np.ascontiguousarray(t)
        t.setflags(write=False)
        object.__setattr__(self, "tets", t)
        for k, rule in enumerate(self.ghost_rules):
            if rule.ghost_index != self.base_vertex_count + k:
                raise ValueError("ghost indices must be contiguous in rule order")

    @property
    def ghost_count(self) -> int:
        return len(self.ghost_rules)

    @property
    def extended_vertex_count(self) -> int:
        return self.base_vertex_count + len(self.ghost_rules)

    @property
    def tet_count(self) -> int:
        return len(self.tets)

    @cached_property
    def _packed(self):
        """Per-kind arrays so ghost evaluation vectorises across rules."""
        face_tris, face_ghost = [], []
        edge_pairs, edge_tri1, edge_tri2, edge_ghost = [], [], [], []
        vert_ids, vert_tris, vert_counts, vert_ghost = [], [], [], []
        for rule in self.ghost_rules:
            if rule.kind is TetMethod.FACE:
                face_tris.append(rule.triangles[0])
                face_ghost.append(rule.ghost_index)
            elif rule.kind is TetMethod.EDGE:
                edge_pairs.append(rule.source)
                edge_tri1.append(rule.triangles[0])
                edge_tri2.append(rule.triangles[1])
                edge_ghost.append(rule.ghost_index)
            else:
                vert_ids.append(rule.source[0])
                vert_tris.extend(rule.triangles)
                vert_counts.append(len(rule.triangles))
                vert_ghost.append(rule.ghost_index)
        asi = lambda x, w: np.asarray(x, dtype=np.int64).reshape(-1, w)
        return {
            "face": (asi(face_tris, 3), np.asarray(face_ghost, dtype=np.int64)),
            "edge": (
                asi(edge_pairs, 2),
                asi(edge_tri1, 3),
                asi(edge_tri2, 3),
                np.asarray(edge_ghost, dtype=np.int64),
            ),
            "vertex": (
                np.asarray(vert_ids, dtype=np.int64),
                asi(vert_tris, 3),
                np.asarray(vert_counts, dtype=np.int64),
                np.asarray(vert_ghost, dtype=np.int64),
            ),
        }


@dataclass(frozen=True)
class FrameMatrixSet:
    """One 4x4 homogeneous matrix per tetrahedron, columns = vertex positions."""

    matrices: np.ndarray

    def __post_init__(self):
        m = np.ascontiguousarray(np.asarray(self.matrices, dtype=np.float64).reshape(-1, 4, 4))
        m.setflags(write=False)
        object.__setattr__(self, "matrices", m)


@dataclass(frozen=True)
class RestFactorization:
    """Inverted rest frames: G_i and their 4x3 linear blocks.

    The linear block maps a tet's deformed 3x4 position block to the 3x3
    linear part of the affine transform carrying the rest tet onto it.
    """

    inverses: np.ndarray
    linear_blocks: np.ndarray

    def __post_init__(self):
        g = np.ascontiguousarray(np.asarray(self.inverses, dtype=np.float64).reshape(-1, 4, 4))
        g.setflags(write=False)
        object.__setattr__(self, "inverses", g)
        lb = np.ascontiguousarray(np.asarray(self.linear_blocks, dtype=np.float64).reshape(-1, 4, 3))
        lb.setflags(write=False)
        object.__setattr__(self, "linear_blocks", lb)


def triangle_normal_area(p1, p2, p3, eps=None):
    """Unit normal and area of an oriented triangle.

    ``eps`` bounds the cross-product norm from below; when omitted it is
    1e-12 times the squared bbox diagonal of the three points.
    """
    p1 = np.asarray(p1, dtype=np.float64)
    p2 = np.asarray(p2, dtype=np.float64)
    p3 = np.asarray(p3, dtype=np.float64)
    cross = np.cross(p2 - p1, p3 - p1)
    norm = float(np.linalg.norm(cross))
    if eps is None:
        pts = np.stack([p1, p2, p3])
        diag = float(np.linalg.norm(pts.max(axis=0) - pts.min(axis=0)))
        eps = 1e-12 * diag * diag
    if norm <= eps:
        raise DegenerateTriangle(f"collinear triangle (cross norm {norm:.3e} <= {eps:.3e})")
    return cross / norm, 0.5 * norm


def _edge_incidence(faces):
    """Map each unoriented edge to [(face index, oriented as (min,max))]."""
    inc: dict[tuple[int, int], list[tuple[int, bool]]] = {}
    for fi, (a, b, c) in enumerate(faces):
        for u, v in ((a, b), (b, c), (c, a)):
            u, v = int(u), int(v)
            key = (u, v) if u < v else (v, u)
            inc.setdefault(key, []).append((fi, u < v))
    return inc


def _vertex_faces(faces, n_vertices):
    vf = [[] for _ in range(n_vertices)]
    for fi, tri in enumerate(faces):
        for v in tri:
            vf[int(v)].append(fi)
    return vf


def _third_vertex(tri, u, v):
    return next(int(w) for w in tri if int(w) not in (u, v))


def _check_vertex_fans(faces, vf, inc):
    """Require the incident faces of every vertex to form a single fan.

    One union-find per vertex over its incident faces; every interior edge
    merges the two faces flanking it in both endpoint structures.
    """
    local = [{fi: k for k, fi in enumerate(fids)} for fids in vf]
    parent = [list(range(len(fids))) for fids in vf]

    def find(p, x):
        while p[x] != x:
            p[x] = p[p[x]]
            x = p[x]
        return x

    for (u, v), hits in inc.items():
        if len(hits) != 2:
            continue
        f1, f2 = hits[0][0], hits[1][0]
        for w in (u, v):
            a, b = local[w][f1], local[w][f2]
            ra, rb = find(parent[w], a), find(parent[w], b)
            if ra != rb:
                parent[w][ra] = rb
    for v, fids in enumerate(vf):
        if len(fids) < 2:
            continue
        roots = {find(parent[v], k) for k in range(len(fids))}
        if len(roots) > 1:
            raise AssumptionViolated(
                f"vertex {v} is non-manifold ({len(roots)} incident face fans)", element=v
            )


def tetrise(mesh: TriangleMesh, method) -> TetStructure:
    """Build a tetrahedral structure over ``mesh`` with the given method.

    Raises AssumptionViolated when the mesh breaks the method's structural
    assumptions (non-manifold edge, lone triangle, unshared vertices),
    DegenerateTriangle for collinear faces, and FoldDegenerate when summed
    normals cancel. Ghost ordering is canonical: face rules by face index,
    edge rules by sorted (min, max) vertex pair, vertex rules by vertex
    index.
    """
    method = TetMethod.parse(method)
    faces = mesh.faces
    if not len(faces):
        raise AssumptionViolated("mesh has no faces")
    rules: list[GhostRule] = []
    tets: list[tuple[int, int, int, int]] = []
    base = mesh.vertex_count

    if method is TetMethod.FACE:
        for fi, tri in enumerate(faces):
            g = base + fi
            rules.append(GhostRule(TetMethod.FACE, (fi,), g, (tuple(int(x) for x in tri),)))
            tets.append((g, int(tri[0]), int(tri[1]), int(tri[2])))
    elif method is TetMethod.EDGE:
        inc = _edge_incidence(faces)
        shared_edges = []
        faces_with_shared = set()
        for key in sorted(inc):
            hits = inc[key]
            if len(hits) > 2 or (len(hits) == 2 and hits[0][1] == hits[1][1]):
                raise AssumptionViolated(f"non-manifold edge {key}", element=key)
            if len(hits) == 2:
                shared_edges.append(key)
                faces_with_shared.update(fi for fi, _ in hits)
        for fi in range(len(faces)):
            if fi not in faces_with_shared:
                raise AssumptionViolated(f"lone triangle {fi} (no shared edge)", element=fi)
        for k, (v1, v2) in enumerate(shared_edges):
            hits = inc[(v1, v2)]
            f_fwd = next(fi for fi, fwd in hits if fwd)  # contains oriented edge v1->v2
            f_rev = next(fi for fi, fwd in hits if not fwd)
            tri1 = tuple(int(x) for x in faces[f_fwd])
            tri2 = tuple(int(x) for x in faces[f_rev])
            v3 = _third_vertex(tri1, v1, v2)
            v4 = _third_vertex(tri2, v1, v2)
            g = base + k
            rules.append(GhostRule(TetMethod.EDGE, (v1, v2), g, (tri1, tri2)))
            tets.append((g, v1, v2, v3))
            tets.append((g, v1, v4, v2))
    else:
        inc = _edge_incidence(faces)
        for key, hits in inc.items():
            if len(hits) > 2 or (len(hits) == 2 and hits[0][1] == hits[1][1]):
                raise AssumptionViolated(f"non-manifold edge {key}", element=key)
        vf = _vertex_faces(faces, base)
        _check_vertex_fans(faces, vf, inc)
        shared = [v for v in range(base) if len(vf[v]) >= 2]
        shared_set = set(shared)
        for fi, tri in enumerate(faces):
            if not any(int(v) in shared_set for v in tri):
                raise AssumptionViolated(f"lone triangle {fi} (no shared vertex)", element=fi)
        for k, v in enumerate(shared):
            tris = tuple(tuple(int(x) for x in faces[fi]) for fi in vf[v])
            g = base + k
            rules.append(GhostRule(TetMethod.VERTEX, (v,), g, tris))
            for tri in tris:
                tets.append((g, tri[0], tri[1], tri[2]))

    structure = TetStructure(base, tuple(rules), np.asarray(tets, dtype=np.int64), method)
    instantiate_ghosts(structure, mesh.vertices)  # validate degeneracy/folds on rest geometry
    return structure


def _tri_normals(pos, tris, eps_area, what):
    """Unit normals and areas for a (k, 3) triangle index array."""
    p1, p2, p3 = pos[tris[:, 0]], pos[tris[:, 1]], pos[tris[:, 2]]
    cross = np.cross(p2 - p1, p3 - p1)
    norm = np.linalg.norm(cross, axis=1)
    bad = norm <= eps_area
    if bad.any():
        k = int(np.flatnonzero(bad)[0])
        raise DegenerateTriangle(f"{what}: triangle {tuple(tris[k])} is collinear")
    return cross / norm[:, None], 0.5 * norm, cross, norm


def instantiate_ghosts(structure: TetStructure, base_positions) -> np.ndarray:
    """Evaluate every ghost rule on the given positions.

    Returns the extended (base + ghost) position array. Deformed geometry
    may fold even when the rest does not; that surfaces here as
    FoldDegenerate (or DegenerateTriangle for collapsed faces).
    """
    pos = np.asarray(base_positions, dtype=np.float64).reshape(-1, 3)
    if len(pos) != structure.base_vertex_count:
        raise ValueError(
            f"expected {structure.base_vertex_count} base positions, got {len(pos)}"
        )
    out = np.empty((structure.extended_vertex_count, 3), dtype=np.float64)
    out[: len(pos)] = pos
    diag = float(np.linalg.norm(pos.max(axis=0) - pos.min(axis=0))) if len(pos) else 0.0
    eps_area = 1e-12 * diag * diag
    packed = structure._packed

    face_tris, face_ghost = packed["face"]
    if len(face_tris):
        _, _, cross, norm = _tri_normals(pos, face_tris, eps_area, "face rule")
        centroid = (pos[face_tris[:, 0]] + pos[face_tris[:, 1]] + pos[face_tris[:, 2]]) / 3.0
        out[face_ghost] = centroid + cross / np.sqrt(norm)[:, None]

    edge_pairs, edge_tri1, edge_tri2, edge_ghost = packed["edge"]
    if len(edge_pairs):
        n1, _, _, _ = _tri_normals(pos, edge_tri1, eps_area, "edge rule")
        n2, _, _, _ = _tri_normals(pos, edge_tri2, eps_area, "edge rule")
        s = n1 + n2
        sn = np.linalg.norm(s, axis=1)
        fold = sn < NORMAL_SUM_EPS
        if fold.any():
            k = int(np.flatnonzero(fold)[0])
            raise FoldDegenerate(f"edge {tuple(edge_pairs[k])}: adjacent normals cancel")
        a, b = pos[edge_pairs[:, 0]], pos[edge_pairs[:, 1]]
        length = np.linalg.norm(a - b, axis=1)
        out[edge_ghost] = 0.5 * (a + b) + (length / sn)[:, None] * s

    vert_ids, vert_tris, vert_counts, vert_ghost = packed["vertex"]
    if len(vert_ids):
        normals, areas, _, _ = _tri_normals(pos, vert_tris, eps_area, "vertex rule")
        offsets = np.zeros(len(vert_counts) + 1, dtype=np.int64)
        np.cumsum(vert_counts, out=offsets[1:])
        nsum = np.add.reduceat(normals, offsets[:-1], axis=0)
        asum = np.add.reduceat(areas, offsets[:-1])
        sn = np.linalg.norm(nsum, axis=1)
        fold = sn < NORMAL_SUM_EPS
        if fold.any():
            k = int(np.flatnonzero(fold)[0])
            raise FoldDegenerate(f"vertex {int(vert_ids[k])}: incident normals cancel")
        out[vert_ghost] = pos[vert_ids] + (np.sqrt(asum) / sn)[:, None] * nsum

    return out


def frame_matrices(positions, structure: TetStructure) -> FrameMatrixSet:
    """Pack each tetrahedron's homogeneous vertex positions column-wise."""
    pos = np.asarray(positions, dtype=np.float64).reshape(-1, 3)
    if len(pos) < structure.extended_vertex_count:
        raise ValueError("positions do not cover all extended indices")
    n = structure.tet_count
    P = np.empty((n, 4, 4), dtype=np.float64)
    P[:, :3, :] = pos[structure.tets].transpose(0, 2, 1)
    P[:, 3, :] = 1.0
    return FrameMatrixSet(P)


def rest_factorization(frames: FrameMatrixSet) -> RestFactorization:
    """Invert every rest frame matrix.

    The determinant floor scales with the cube of the frame cloud's bbox
    diagonal so degeneracy detection is unit-independent.
    """
    P = frames.matrices
    pts = P[:, :3, :].transpose(0, 2, 1).reshape(-1, 3)
    diag = float(np.linalg.norm(pts.max(axis=0) - pts.min(axis=0))) if len(pts) else 0.0
    eps_d = 1e-12 * diag**3
    dets = np.linalg.det(P)
    small = np.abs(dets) <= eps_d
    if small.any():
        i = int(np.flatnonzero(small)[0])
        raise DegenerateTet(i, float(dets[i]))
    G = np.linalg.inv(P)
    return RestFactorization(G, G[:, :, :3].copy())


def dump_structure(structure: TetStructure, positions, path) -> None:
    """Plain-text debug dump: extended vertices then tet 4-tuples."""
    pos = np.asarray(positions, dtype=np.float64).reshape(-1, 3)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# tetrisation method={structure.method.value}\n")
        fh.write(
            f"# base_vertices={structure.base_vertex_count} "
            f"ghosts={structure.ghost_count} tets={structure.tet_count}\n"
        )
        for x, y, z in pos:
            fh.write(f"v {float(x)!r} {float(y)!r} {float(z)!r}\n")
        for a, b, c, d in structure.tets:
            fh.write(f"t {a} {b} {c} {d}\n")
