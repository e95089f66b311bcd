"""Rotation/shear algebra: exps, logs, polar splits, branch-tracked logs."""

import numpy as np
import pytest
import scipy.linalg
from scipy.spatial.transform import Rotation, Slerp

from tetriblend import (
    NotOrientationPreserving,
    NotRotation,
    NotSPD,
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
from tetriblend.algebra import polar_many, psd_shear_many, rot_exp_many, rot_log_many, sym_log_many

from conftest import random_rotation, rot_z


def skew(w):
    return np.array([[0, -w[2], w[1]], [w[2], 0, -w[0]], [-w[1], w[0], 0.0]])


# ---------------------------------------------------------------------------
# rotation exponential / logarithm


def test_rot_exp_zero_is_identity():
    np.testing.assert_array_equal(rot_exp([0.0, 0.0, 0.0]), np.eye(3))


def test_rot_exp_quarter_turn():
    np.testing.assert_allclose(rot_exp([0, 0, np.pi / 2]), rot_z(np.pi / 2), atol=1e-15)


def test_rot_exp_matches_matrix_exponential(rng):
    for _ in range(50):
        w = rng.uniform(-3.0, 3.0, 3)
        np.testing.assert_allclose(rot_exp(w), scipy.linalg.expm(skew(w)), atol=1e-12)


def test_rot_exp_small_angle_series(rng):
    for scale in (1e-5, 1e-7, 1e-10):
        w = scale * rng.standard_normal(3)
        np.testing.assert_allclose(rot_exp(w), scipy.linalg.expm(skew(w)), atol=1e-15)


def test_rot_log_round_trip_batch(rng):
    axes = rng.standard_normal((1000, 3))
    axes /= np.linalg.norm(axes, axis=1, keepdims=True)
    thetas = rng.uniform(1e-9, np.pi - 1e-9, 1000)
    w = axes * thetas[:, None]
    back = rot_log_many(rot_exp_many(w))
    assert np.abs(back - w).max() <= 1e-9


def test_rot_log_near_pi_round_trip(rng):
    axes = rng.standard_normal((200, 3))
    axes /= np.linalg.norm(axes, axis=1, keepdims=True)
    thetas = np.pi - 10.0 ** rng.uniform(-12, -6.2, 200)
    R = rot_exp_many(axes * thetas[:, None])
    back = rot_exp_many(rot_log_many(R))
    assert np.abs(back - R).max() <= 1e-9


@pytest.mark.parametrize(
    "R, expected",
    [
        (np.diag([1.0, -1.0, -1.0]), [np.pi, 0.0, 0.0]),
        (np.diag([-1.0, 1.0, -1.0]), [0.0, np.pi, 0.0]),
        (np.diag([-1.0, -1.0, 1.0]), [0.0, 0.0, np.pi]),
    ],
)
def test_rot_log_at_pi_fixes_axis_sign(R, expected):
    np.testing.assert_allclose(rot_log_principal(R), expected, atol=1e-12)


def test_rot_log_at_pi_general_axis():
    axis = np.array([1.0, 2.0, 2.0]) / 3.0
    R = rot_exp(np.pi * axis)
    w = rot_log_principal(R)
    np.testing.assert_allclose(w, np.pi * axis, atol=1e-7)
    np.testing.assert_allclose(rot_exp(w), R, atol=1e-12)


def test_rot_log_rejects_non_rotations():
    with pytest.raises(NotRotation):
        rot_log_principal(2.0 * np.eye(3))
    with pytest.raises(NotRotation):
        rot_log_principal(np.diag([1.0, 1.0, -1.0]))


# ---------------------------------------------------------------------------
# symmetric exponential / logarithm


def random_spd(rng, cond=100.0):
    Q = random_rotation(rng)
    lam = np.exp(rng.uniform(0.0, np.log(cond), 3))
    lam /= lam.max() ** 0.5
    return (Q * lam) @ Q.T


def test_sym_round_trips(rng):
    for _ in range(200):
        S = random_spd(rng, cond=1e4)
        L = sym_log(S)
        np.testing.assert_allclose(sym_exp(L), S, atol=1e-9 * np.abs(S).max())
        np.testing.assert_allclose(L, L.T)
    for _ in range(200):
        L = rng.standard_normal((3, 3))
        L = 0.5 * (L + L.T)
        S = sym_exp(L)
        np.testing.assert_allclose(sym_log(S), L, atol=1e-9 * max(1.0, np.abs(L).max()))


def test_sym_log_matches_scipy(rng):
    for _ in range(25):
        S = random_spd(rng)
        np.testing.assert_allclose(sym_log(S), scipy.linalg.logm(S), atol=1e-10)


def test_sym_log_rejects_bad_inputs(rng):
    with pytest.raises(NotSPD, match="not symmetric"):
        sym_log(np.array([[1.0, 0.5, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]))
    with pytest.raises(NotSPD, match="eigenvalue"):
        sym_log(np.diag([1.0, 1.0, -0.5]))
    with pytest.raises(NotSPD, match="eigenvalue"):
        sym_log(np.diag([1.0, 1.0, 0.0]))


def test_sym_exp_requires_symmetry():
    with pytest.raises(NotSPD, match="not symmetric"):
        sym_exp(np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]]))


# ---------------------------------------------------------------------------
# polar decomposition


def test_polar_recovers_rotation_times_diagonal():
    M = rot_z(np.pi / 2) @ np.diag([2.0, 1.0, 1.0])
    pair = polar_decompose(M)
    np.testing.assert_allclose(pair.rotation, rot_z(np.pi / 2), atol=1e-12)
    np.testing.assert_allclose(pair.shear, np.diag([2.0, 1.0, 1.0]), atol=1e-12)


def test_polar_batch_reconstruction(rng):
    M = rng.standard_normal((1000, 3, 3))
    M += np.sign(np.linalg.det(M))[:, None, None] * 0.3 * np.eye(3)
    R, S = polar_many(M)
    scale = np.abs(M).max()
    assert np.abs(R @ S - M).max() <= 1e-9 * scale
    assert np.abs(R.swapaxes(-1, -2) @ R - np.eye(3)).max() <= 1e-9
    # orthogonal factor carries the orientation sign
    np.testing.assert_allclose(np.linalg.det(R), np.sign(np.linalg.det(M)), atol=1e-9)
    # shear factors are PSD regardless
    assert np.linalg.eigvalsh(S).min() >= -1e-12 * scale
    np.testing.assert_allclose(S, psd_shear_many(M), atol=1e-12 * scale)


def test_polar_matches_scipy(rng):
    for _ in range(50):
        M = rng.standard_normal((3, 3))
        U, P = scipy.linalg.polar(M)
        R, S = polar_many(M[None])
        np.testing.assert_allclose(R[0], U, atol=1e-9)
        np.testing.assert_allclose(S[0], P, atol=1e-9)


def test_polar_rank_deficient_falls_back():
    M = np.diag([1.0, 1.0, 0.0])
    R, S = polar_many(M[None])
    np.testing.assert_allclose(R[0].T @ R[0], np.eye(3), atol=1e-9)
    np.testing.assert_allclose(S[0], M, atol=1e-12)


def test_polar_decompose_rejects_nonpositive_det():
    with pytest.raises(NotOrientationPreserving):
        polar_decompose(np.diag([1.0, 1.0, -1.0]))
    with pytest.raises(NotOrientationPreserving):
        polar_decompose(np.diag([1.0, 1.0, 0.5]), eps_det=0.5)
    polar_decompose(np.diag([1.0, 1.0, 0.5]), eps_det=0.1)


def test_pair_and_log_storage_symmetrize():
    lop = np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
    pair = PolarPair(np.eye(3), np.eye(3) + lop)
    np.testing.assert_allclose(pair.shear, pair.shear.T)
    log = TransformLog(np.zeros(3), lop)
    np.testing.assert_allclose(log.shear_log, log.shear_log.T)


# ---------------------------------------------------------------------------
# adjacency and the continuous logarithm


def path_adjacency(n):
    return TetAdjacency.from_neighbors(
        [[j for j in (i - 1, i + 1) if 0 <= j < n] for i in range(n)]
    )


def test_adjacency_forest_structure():
    adj = path_adjacency(4)
    np.testing.assert_array_equal(adj.parent, [-1, 0, 1, 2])
    np.testing.assert_array_equal(adj.order, [0, 1, 2, 3])
    two = TetAdjacency.from_neighbors([[1], [0], [3], [2]])
    np.testing.assert_array_equal(two.parent, [-1, 0, -1, 2])


def test_adjacency_requires_symmetry():
    with pytest.raises(ValueError, match="not symmetric"):
        TetAdjacency.from_neighbors([[1], []])


def test_adjacency_from_tets_requires_two_shared_vertices():
    tets = np.array(
        [
            [0, 1, 2, 3],
            [1, 2, 3, 4],  # shares a face with 0
            [4, 5, 6, 7],  # shares only vertex 4 with 1
        ]
    )
    adj = TetAdjacency.from_tets(tets)
    assert adj.neighbors[0] == (1,)
    assert adj.neighbors[1] == (0,)
    assert adj.neighbors[2] == ()


@pytest.mark.parametrize(
    "degrees",
    [
        [170.0, 175.0, 185.0],
        [170.0, 185.0, 200.0, 215.0],
        [150.0, 300.0, 360.0, 420.0],  # includes an identity rotation mid-chain
    ],
)
def test_continuous_log_tracks_branches_along_chain(degrees):
    R = np.stack([rot_z(np.deg2rad(d)) for d in degrees])
    logs = continuous_rot_log(path_adjacency(len(degrees)), R)
    np.testing.assert_allclose(logs[:, 2], np.deg2rad(degrees), atol=1e-12)
    np.testing.assert_allclose(logs[:, :2], 0.0, atol=1e-12)


def test_continuous_log_reexponentiates(rng):
    # random walk with increments big enough to force branch shifts
    n = 60
    steps = rng.uniform(-2.5, 2.5, (n, 3))
    R = np.empty((n, 3, 3))
    R[0] = rot_exp(steps[0])
    for i in range(1, n):
        R[i] = R[i - 1] @ rot_exp(steps[i])
    logs = continuous_rot_log(path_adjacency(n), R)
    assert np.abs(rot_exp_many(logs) - R).max() <= 1e-9
    # adjacent distances never exceed the principal alternative by construction
    principal = rot_log_many(R)
    for i in range(1, n):
        d_cont = np.linalg.norm(logs[i] - logs[i - 1])
        d_prin = np.linalg.norm(principal[i] - logs[i - 1])
        assert d_cont <= d_prin + 1e-12


def test_continuous_log_roots_take_principal(rng):
    R = np.stack([random_rotation(rng) for _ in range(5)])
    adj = TetAdjacency.from_neighbors([[] for _ in range(5)])  # no edges: all roots
    logs = continuous_rot_log(adj, R)
    np.testing.assert_array_equal(logs, rot_log_many(R))


def test_continuous_log_is_deterministic(rng):
    R = np.stack([random_rotation(rng) for _ in range(20)])
    adj = path_adjacency(20)
    a = continuous_rot_log(adj, R)
    b = continuous_rot_log(adj, R)
    np.testing.assert_array_equal(a, b)


def test_continuous_log_count_mismatch():
    with pytest.raises(ValueError, match="rotations"):
        continuous_rot_log(path_adjacency(3), np.stack([np.eye(3)] * 2))


# ---------------------------------------------------------------------------
# local blend functions


def test_blend_weight_one_reproduces_transform(rng):
    R = random_rotation(rng)
    S = random_spd(rng)
    M = R @ S
    pair = polar_decompose(M)
    log = TransformLog(rot_log_principal(pair.rotation), sym_log(pair.shear))
    np.testing.assert_allclose(blend_local_P([1.0], [pair]), M, atol=1e-9)
    np.testing.assert_allclose(blend_local_C([1.0], [log]), M, atol=1e-9)


def test_blend_empty_weights_give_identity():
    np.testing.assert_array_equal(blend_local_P([], []), np.eye(3))
    np.testing.assert_array_equal(blend_local_C([], []), np.eye(3))


def test_blend_count_mismatch():
    pair = PolarPair(np.eye(3), np.eye(3))
    with pytest.raises(ValueError, match="weights"):
        blend_local_P([0.5, 0.5], [pair])
    with pytest.raises(ValueError, match="weights"):
        blend_local_C([], [TransformLog(np.zeros(3), np.zeros((3, 3)))])


def test_blend_pure_rotation_matches_slerp(rng):
    R = random_rotation(rng)
    pair = PolarPair(R, np.eye(3))
    log = TransformLog(rot_log_principal(R), np.zeros((3, 3)))
    key = Slerp([0.0, 1.0], Rotation.from_matrix(np.stack([np.eye(3), R])))
    for w in (0.25, 0.37, 0.5, 0.99):
        expected = key(w).as_matrix()
        np.testing.assert_allclose(blend_local_P([w], [pair]), expected, atol=1e-9)
        np.testing.assert_allclose(blend_local_C([w], [log]), expected, atol=1e-9)


def test_blend_half_quarter_turn():
    R = rot_z(np.pi / 2)
    log = TransformLog(rot_log_principal(R), np.zeros((3, 3)))
    np.testing.assert_allclose(blend_local_C([0.5], [log]), rot_z(np.pi / 4), atol=1e-12)


def test_shrink_extrapolation_signs():
    shear = np.diag([0.4, 1.0, 1.0])
    pair = PolarPair(np.eye(3), shear)
    log = TransformLog(np.zeros(3), sym_log(shear))
    out_p = blend_local_P([2.0], [pair])
    out_c = blend_local_C([2.0], [log])
    np.testing.assert_allclose(out_p, np.diag([-0.2, 1.0, 1.0]), atol=1e-12)
    np.testing.assert_allclose(out_c, np.diag([0.16, 1.0, 1.0]), atol=1e-12)
    assert np.linalg.det(out_p) < 0.0
    assert np.linalg.det(out_c) > 0.0


def test_blend_C_stays_orientation_preserving(rng):
    logs = [
        TransformLog(rng.uniform(-2, 2, 3), 0.4 * (lambda a: a + a.T)(rng.standard_normal((3, 3))))
        for _ in range(3)
    ]
    weights = rng.uniform(-5.0, 5.0, (500, 3))
    dets = [np.linalg.det(blend_local_C(w, logs)) for w in weights]
    assert min(dets) > 0.0
