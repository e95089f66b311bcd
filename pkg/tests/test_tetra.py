"""Tetrahedral structure construction: ghosts, count laws, frames."""

import numpy as np
import pytest

from tetriblend import (
    AssumptionViolated,
    DegenerateTet,
    DegenerateTriangle,
    FoldDegenerate,
    TetMethod,
    TetStructure,
    TriangleMesh,
    dump_structure,
    frame_matrices,
    instantiate_ghosts,
    mesh_stats,
    rest_factorization,
    tetrise,
    triangle_normal_area,
)
from tetriblend.meshgen import rigid_move

from conftest import random_rotation


def single_triangle():
    v = np.array([[0.0, 0.0, 0.0], [2.0, 0.0, 0.0], [0.0, 2.0, 0.0]])
    return TriangleMesh(v, np.array([[0, 1, 2]]))


def coplanar_pair():
    """Two triangles sharing edge (0,1), both with +z normals."""
    v = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, -1.0, 0.0]])
    return TriangleMesh(v, np.array([[0, 1, 2], [0, 3, 1]]))


def test_method_parse():
    assert TetMethod.parse("face") is TetMethod.FACE
    assert TetMethod.parse("EDGE") is TetMethod.EDGE
    assert TetMethod.parse(TetMethod.VERTEX) is TetMethod.VERTEX
    with pytest.raises(ValueError, match="unknown tetrisation"):
        TetMethod.parse("corner")


def test_triangle_normal_area():
    n, a = triangle_normal_area([0, 0, 0], [2, 0, 0], [0, 2, 0])
    np.testing.assert_allclose(n, [0, 0, 1])
    assert a == pytest.approx(2.0)
    with pytest.raises(DegenerateTriangle):
        triangle_normal_area([0, 0, 0], [1, 0, 0], [2, 0, 0])


@pytest.mark.parametrize("method", ["face", "edge", "vertex"])
def test_count_laws(method, bar, patch, tetra4):
    for mesh in (bar, patch, tetra4):
        stats = mesh_stats(mesh)
        st = tetrise(mesh, method)
        if method == "face":
            assert st.ghost_count == mesh.face_count
            assert st.tet_count == mesh.face_count
        elif method == "edge":
            assert st.ghost_count == stats.shared_edge_count
            assert st.tet_count == 2 * stats.shared_edge_count
        else:
            assert st.ghost_count == stats.shared_vertex_count
            lone = mesh.vertex_count - stats.shared_vertex_count
            assert st.tet_count == 3 * mesh.face_count - lone


def test_counts_regular_tetrahedron(tetra4):
    assert tetrise(tetra4, "face").tet_count == 4
    assert tetrise(tetra4, "edge").tet_count == 12
    st = tetrise(tetra4, "vertex")
    assert st.ghost_count == 4
    assert st.tet_count == 12


def test_face_ghost_position():
    st = tetrise(single_triangle(), "face")
    ext = instantiate_ghosts(st, single_triangle().vertices)
    # centroid (2/3, 2/3, 0) plus cross (0,0,4) over sqrt(4)
    np.testing.assert_allclose(ext[3], [2.0 / 3.0, 2.0 / 3.0, 2.0])
    np.testing.assert_array_equal(st.tets, [[3, 0, 1, 2]])


def test_edge_ghost_position_and_tets():
    mesh = coplanar_pair()
    st = tetrise(mesh, "edge")
    assert st.ghost_count == 1
    ext = instantiate_ghosts(st, mesh.vertices)
    # midpoint (0.5, 0, 0) plus |v0-v1| * (n1+n2)/|n1+n2| = (0, 0, 1)
    np.testing.assert_allclose(ext[4], [0.5, 0.0, 1.0])
    np.testing.assert_array_equal(st.tets, [[4, 0, 1, 2], [4, 0, 3, 1]])


def test_vertex_ghost_position_and_tets():
    mesh = coplanar_pair()
    st = tetrise(mesh, "vertex")
    # only vertices 0 and 1 touch two faces; 2 and 3 get no ghost
    assert [r.source for r in st.ghost_rules] == [(0,), (1,)]
    assert st.tet_count == 4
    ext = instantiate_ghosts(st, mesh.vertices)
    # v + sqrt(total area 1.0) * (0,0,2)/2 with both face normals +z
    np.testing.assert_allclose(ext[4], [0.0, 0.0, 1.0])
    np.testing.assert_allclose(ext[5], [1.0, 0.0, 1.0])
    assert all(t[0] in (4, 5) for t in st.tets)


def test_ghost_rules_canonically_ordered(bar):
    for method in ("face", "edge", "vertex"):
        st = tetrise(bar, method)
        sources = [r.source for r in st.ghost_rules]
        assert sources == sorted(sources)
        assert [r.ghost_index for r in st.ghost_rules] == list(
            range(bar.vertex_count, bar.vertex_count + st.ghost_count)
        )


def test_tets_lead_with_ghost_and_cover_faces(bar):
    faces = {tuple(f) for f in bar.faces.tolist()}
    for method in ("face", "edge", "vertex"):
        st = tetrise(bar, method)
        assert (st.tets[:, 0] >= bar.vertex_count).all()
        assert (st.tets[:, 1:] < bar.vertex_count).all()
        if method in ("face", "vertex"):
            # base triples are faces verbatim (vertex method repeats them)
            for t in st.tets:
                assert tuple(int(x) for x in t[1:]) in faces


def test_ghosts_equivariant_under_rigid_motion(small_bar, rng):
    R = random_rotation(rng)
    t = np.array([0.3, -2.0, 1.1])
    moved = rigid_move(small_bar, rotation=R, translation=t)
    for method in ("face", "edge", "vertex"):
        st = tetrise(small_bar, method)
        ghosts = instantiate_ghosts(st, small_bar.vertices)
        moved_ghosts = instantiate_ghosts(st, moved.vertices)
        expected = ghosts @ R.T + t
        err = np.abs(moved_ghosts - expected).max()
        assert err <= 1e-12 * small_bar.bbox_diagonal()


def test_tetrise_rejects_empty_mesh():
    mesh = TriangleMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64))
    with pytest.raises(AssumptionViolated, match="no faces"):
        tetrise(mesh, "face")


def test_edge_method_rejects_lone_triangle():
    with pytest.raises(AssumptionViolated, match="lone triangle"):
        tetrise(single_triangle(), "edge")


def test_vertex_method_rejects_isolated_triangle():
    with pytest.raises(AssumptionViolated, match="lone triangle"):
        tetrise(single_triangle(), "vertex")


def test_nonmanifold_edge_rejected():
    v = np.array(
        [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [0.0, -1.0, 0.0]]
    )
    f = np.array([[0, 1, 2], [0, 3, 1], [0, 1, 4]])  # edge (0,1) in three faces
    mesh = TriangleMesh(v, f)
    for method in ("edge", "vertex"):
        with pytest.raises(AssumptionViolated, match="non-manifold edge"):
            tetrise(mesh, method)
    tetrise(mesh, "face")  # face rule has no sharing requirement


def test_bowtie_vertex_rejected():
    """Two fans meeting only at vertex 0 violate the single-fan assumption."""
    v = np.array(
        [
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [1.0, 1.0, 0.0],
            [0.0, 1.0, 0.0],
            [-1.0, 0.0, 0.0],
            [-1.0, -1.0, 0.0],
            [0.0, -1.0, 0.0],
        ]
    )
    f = np.array([[0, 1, 2], [0, 2, 3], [0, 4, 5], [0, 5, 6]])
    with pytest.raises(AssumptionViolated) as exc:
        tetrise(TriangleMesh(v, f), "vertex")
    assert exc.value.element == 0


def test_collinear_face_rejected():
    v = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0]])
    mesh = TriangleMesh(v, np.array([[0, 1, 2]]))
    with pytest.raises(DegenerateTriangle):
        tetrise(mesh, "face")


def test_folded_pair_cancels_normals():
    # second triangle folded flat onto the first: normals +z and -z
    v = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 1.0, 0.0]])
    mesh = TriangleMesh(v, np.array([[0, 1, 2], [0, 3, 1]]))
    for method in ("edge", "vertex"):
        with pytest.raises(FoldDegenerate):
            tetrise(mesh, method)


def test_fold_surfaces_on_deformed_geometry_too():
    mesh = coplanar_pair()
    st = tetrise(mesh, "edge")
    folded = mesh.vertices.copy()
    folded[3] = [0.0, 1.0, 0.0]  # collapse onto vertex 2's position
    with pytest.raises(FoldDegenerate):
        instantiate_ghosts(st, folded)


def test_instantiate_requires_base_count(small_bar):
    st = tetrise(small_bar, "face")
    with pytest.raises(ValueError, match="base positions"):
        instantiate_ghosts(st, small_bar.vertices[:-1])


def test_frame_matrices_layout(small_bar):
    st = tetrise(small_bar, "face")
    ext = instantiate_ghosts(st, small_bar.vertices)
    P = frame_matrices(ext, st).matrices
    assert P.shape == (st.tet_count, 4, 4)
    np.testing.assert_array_equal(P[:, 3, :], 1.0)
    np.testing.assert_array_equal(P[0, :3, 2], ext[st.tets[0, 2]])


def test_rest_factorization_properties(small_bar):
    st = tetrise(small_bar, "edge")
    ext = instantiate_ghosts(st, small_bar.vertices)
    frames = frame_matrices(ext, st)
    fact = rest_factorization(frames)
    # inverse property
    prod = frames.matrices @ fact.inverses
    np.testing.assert_allclose(prod, np.broadcast_to(np.eye(4), prod.shape), atol=1e-10)
    # row of ones in the frame kills the linear block: translations vanish
    ones = np.ones(4)
    np.testing.assert_allclose(np.einsum("j,ijk->ik", ones, fact.linear_blocks), 0.0, atol=1e-10)
    # identity deformation induces identity linear parts
    A = ext[st.tets].transpose(0, 2, 1) @ fact.linear_blocks
    np.testing.assert_allclose(A, np.broadcast_to(np.eye(3), A.shape), atol=1e-10)


def test_negative_orientation_frames_accepted():
    # the standard simplex: homogeneous frame det is -1, still invertible
    pos = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    st = TetStructure(4, (), np.array([[0, 1, 2, 3]]), TetMethod.FACE)
    frames = frame_matrices(pos, st)
    assert float(np.linalg.det(frames.matrices[0])) < 0
    fact = rest_factorization(frames)
    A = pos[st.tets].transpose(0, 2, 1) @ fact.linear_blocks
    np.testing.assert_allclose(A[0], np.eye(3), atol=1e-12)


def test_degenerate_tet_detected():
    pos = np.zeros((4, 3))
    pos[1, 0] = pos[2, 1] = 1.0
    pos[3] = [1.0, 1.0, 0.0]  # coplanar
    st = TetStructure(4, (), np.array([[0, 1, 2, 3]]), TetMethod.FACE)
    with pytest.raises(DegenerateTet) as exc:
        rest_factorization(frame_matrices(pos, st))
    assert exc.value.tet_index == 0


def test_dump_structure(tmp_path, small_bar):
    st = tetrise(small_bar, "face")
    ext = instantiate_ghosts(st, small_bar.vertices)
    out = tmp_path / "dump.txt"
    dump_structure(st, ext, out)
    lines = out.read_text().splitlines()
    assert sum(1 for ln in lines if ln.startswith("v ")) == st.extended_vertex_count
    assert sum(1 for ln in lines if ln.startswith("t ")) == st.tet_count
