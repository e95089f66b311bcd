"""Dense 3x3 transform algebra: polar factors, exp/log maps, blending.

Every public operation accepts a single matrix; the ``*_many`` helpers act
on (n, 3, 3) stacks and back the pipeline hot paths. Rotation logs use
axis-angle vectors (radians times unit axis); shear logs are symmetric
matrices.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NotOrientationPreserving, NotRotation, NotSPD

__all__ = [
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
]

_EYE3 = np.eye(3)
_TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class PolarPair:
    """Rotation and symmetric positive-definite shear with M = rotation @ shear."""

    rotation: np.ndarray
    shear: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.rotation, dtype=np.float64).reshape(3, 3)
        s = np.asarray(self.shear, dtype=np.float64).reshape(3, 3)
        s = 0.5 * (s + s.T)  # symmetrized storage
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "shear", s)


@dataclass(frozen=True)
class TransformLog:
    """Axis-angle rotation log plus symmetric shear log."""

    rot_log: np.ndarray
    shear_log: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.rot_log, dtype=np.float64).reshape(3)
        l = np.asarray(self.shear_log, dtype=np.float64).reshape(3, 3)
        l = 0.5 * (l + l.T)
        object.__setattr__(self, "rot_log", w)
        object.__setattr__(self, "shear_log", l)


# ---------------------------------------------------------------------------
# batched primitives


def _skew_many(w):
    w = np.asarray(w, dtype=np.float64)
    K = np.zeros(w.shape[:-1] + (3, 3), dtype=np.float64)
    K[..., 0, 1] = -w[..., 2]
    K[..., 0, 2] = w[..., 1]
    K[..., 1, 0] = w[..., 2]
    K[..., 1, 2] = -w[..., 0]
    K[..., 2, 0] = -w[..., 1]
    K[..., 2, 1] = w[..., 0]
    return K


def rot_exp_many(w):
    """Rodrigues formula on an (..., 3) stack of axis-angle vectors."""
    w = np.asarray(w, dtype=np.float64)
    theta = np.linalg.norm(w, axis=-1)
    t2 = theta * theta
    small = theta < 1e-4
    with np.errstate(invalid="ignore", divide="ignore"):
        a = np.where(small, 1.0 - t2 / 6.0 + t2 * t2 / 120.0, np.sin(theta) / np.where(small, 1.0, theta))
        b = np.where(small, 0.5 - t2 / 24.0 + t2 * t2 / 720.0, (1.0 - np.cos(theta)) / np.where(small, 1.0, t2))
    K = _skew_many(w)
    return _EYE3 + a[..., None, None] * K + b[..., None, None] * (K @ K)


def _check_rotation_many(R):
    err = np.abs(R.swapaxes(-1, -2) @ R - _EYE3).max(axis=(-1, -2))
    dets = np.linalg.det(R)
    bad = (err > 1e-6) | (dets <= 0)
    if np.any(bad):
        i = np.argwhere(np.atleast_1d(bad))[0]
        raise NotRotation(
            f"matrix {tuple(int(x) for x in i)} is not special orthogonal "
            f"(orthogonality error {float(np.atleast_1d(err)[tuple(i)]):.2e}, "
            f"det {float(np.atleast_1d(dets)[tuple(i)]):.6f})"
        )


def rot_log_many(R, check=True):
    """Principal axis-angle log on an (..., 3, 3) rotation stack."""
    R = np.asarray(R, dtype=np.float64)
    if check:
        _check_rotation_many(R)
    vec = np.stack(
        [
            R[..., 2, 1] - R[..., 1, 2],
            R[..., 0, 2] - R[..., 2, 0],
            R[..., 1, 0] - R[..., 0, 1],
        ],
        axis=-1,
    )
    s = 0.5 * np.linalg.norm(vec, axis=-1)
    c = 0.5 * (np.trace(R, axis1=-2, axis2=-1) - 1.0)
    theta = np.arctan2(s, np.clip(c, -1.0, 1.0))
    t2 = theta * theta
    small = theta < 1e-4
    near_pi = (np.pi - theta) < 1e-6
    with np.errstate(invalid="ignore", divide="ignore"):
        factor = np.where(
            small,
            0.5 + t2 / 12.0 + 7.0 * t2 * t2 / 720.0,
            theta / np.where(near_pi | small, 1.0, 2.0 * np.sin(theta)),
        )
    out = factor[..., None] * vec
    if np.any(near_pi):
        flat_out = out.reshape(-1, 3)
        flat_R = R.reshape(-1, 3, 3)
        flat_vec = vec.reshape(-1, 3)
        flat_theta = theta.reshape(-1)
        for i in np.flatnonzero(near_pi.reshape(-1)):
            flat_out[i] = _log_near_pi(flat_R[i], flat_vec[i], flat_theta[i])
        out = flat_out.reshape(out.shape)
    return out


def _log_near_pi(R, vec, theta):
    # (R + I)/2 symmetrized equals axis outer product up to O((pi-theta)^2)
    B = 0.25 * (R + R.T) + 0.5 * _EYE3
    j = int(np.argmax(np.diag(B)))
    axis = B[:, j] / np.sqrt(max(B[j, j], 1e-300))
    axis = axis / np.linalg.norm(axis)
    if np.linalg.norm(vec) > 1e-12:
        if float(vec @ axis) < 0.0:
            axis = -axis
    else:
        # angle is pi to machine precision: first nonzero component positive
        for comp in axis:
            if abs(comp) > 1e-12:
                if comp < 0.0:
                    axis = -axis
                break
    return theta * axis


def _sym_eig_apply(S, fn):
    w, Q = np.linalg.eigh(S)
    out = (Q * fn(w)[..., None, :]) @ Q.swapaxes(-1, -2)
    return 0.5 * (out + out.swapaxes(-1, -2))


def sym_exp_many(L):
    L = np.asarray(L, dtype=np.float64)
    return _sym_eig_apply(0.5 * (L + L.swapaxes(-1, -2)), np.exp)


def sym_log_many(S):
    S = np.asarray(S, dtype=np.float64)
    return _sym_eig_apply(0.5 * (S + S.swapaxes(-1, -2)), np.log)


def polar_many(M):
    """Rotation/shear stacks for (..., 3, 3) matrices.

    The shear is always the PSD square root of M^T M; the orthogonal factor
    carries det(M)'s sign (a reflection when the input is not orientation
    preserving). Rank-deficient inputs fall back to an SVD per item.
    """
    M = np.asarray(M, dtype=np.float64)
    MtM = M.swapaxes(-1, -2) @ M
    w, Q = np.linalg.eigh(MtM)
    w = np.clip(w, 0.0, None)
    sq = np.sqrt(w)
    S = (Q * sq[..., None, :]) @ Q.swapaxes(-1, -2)
    S = 0.5 * (S + S.swapaxes(-1, -2))
    floor = np.maximum(sq[..., -1:] * 1e-14, 1e-300)
    Sinv = (Q * (1.0 / np.maximum(sq, floor))[..., None, :]) @ Q.swapaxes(-1, -2)
    R = M @ Sinv
    # one symmetric orthogonalisation step scrubs last-digit drift
    R = R @ (1.5 * _EYE3 - 0.5 * (R.swapaxes(-1, -2) @ R))
    err = np.abs(R.swapaxes(-1, -2) @ R - _EYE3).max(axis=(-1, -2))
    bad = err > 1e-9
    if np.any(bad):
        flat_R = R.reshape(-1, 3, 3)
        flat_M = M.reshape(-1, 3, 3)
        for i in np.flatnonzero(bad.reshape(-1)):
            U, _, Vt = np.linalg.svd(flat_M[i])
            flat_R[i] = U @ Vt
        R = flat_R.reshape(R.shape)
    return R, S


def psd_shear_many(M):
    """PSD shear factors only (cheaper than full polar)."""
    M = np.asarray(M, dtype=np.float64)
    w, Q = np.linalg.eigh(M.swapaxes(-1, -2) @ M)
    sq = np.sqrt(np.clip(w, 0.0, None))
    S = (Q * sq[..., None, :]) @ Q.swapaxes(-1, -2)
    return 0.5 * (S + S.swapaxes(-1, -2))


# ---------------------------------------------------------------------------
# public single-matrix operations


def polar_decompose(M, eps_det=0.0) -> PolarPair:
    """Split M into rotation @ SPD shear.

    Rejects reflections and singular inputs: det(M) must exceed ``eps_det``
    (supply a scaled threshold for dimensional data).
    """
    M = np.asarray(M, dtype=np.float64).reshape(3, 3)
    det = float(np.linalg.det(M))
    if det <= eps_det:
        raise NotOrientationPreserving(f"det = {det:.3e} <= {eps_det:.3e}")
    R, S = polar_many(M[None])
    return PolarPair(R[0], S[0])


def rot_exp(w) -> np.ndarray:
    """Rodrigues exponential of an axis-angle vector."""
    return rot_exp_many(np.asarray(w, dtype=np.float64).reshape(3))


def rot_log_principal(R) -> np.ndarray:
    """Principal axis-angle log; angle in [0, pi].

    At angle pi the axis sign is fixed by making the first nonzero
    component positive.
    """
    return rot_log_many(np.asarray(R, dtype=np.float64).reshape(3, 3))


def _require_symmetric(A, what):
    scale = max(1.0, float(np.abs(A).max()))
    if float(np.abs(A - A.T).max()) > 1e-9 * scale:
        raise NotSPD(f"{what}: matrix is not symmetric within tolerance")


def sym_log(S) -> np.ndarray:
    """Matrix log of a symmetric positive-definite matrix."""
    S = np.asarray(S, dtype=np.float64).reshape(3, 3)
    _require_symmetric(S, "sym_log")
    w = np.linalg.eigvalsh(0.5 * (S + S.T))
    if w.min() <= 1e-12:
        raise NotSPD(f"sym_log: eigenvalue {w.min():.3e} <= 1e-12")
    return sym_log_many(S)


def sym_exp(L) -> np.ndarray:
    """Matrix exponential of a symmetric matrix; result is SPD."""
    L = np.asarray(L, dtype=np.float64).reshape(3, 3)
    _require_symmetric(L, "sym_exp")
    return sym_exp_many(L)


# ---------------------------------------------------------------------------
# adjacency and the continuous logarithm


@dataclass(frozen=True)
class TetAdjacency:
    """Neighbour lists plus a spanning forest for branch tracking.

    Tets are adjacent when they share at least two extended vertices. The
    forest is rooted at the lowest-index tet of each connected component;
    ``order`` lists tets so parents precede children (BFS, ascending
    neighbour order).
    """

    neighbors: tuple
    parent: np.ndarray
    order: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.parent, dtype=np.int64)
        o = np.asarray(self.order, dtype=np.int64)
        p.setflags(write=False)
        o.setflags(write=False)
        object.__setattr__(self, "parent", p)
        object.__setattr__(self, "order", o)

    @classmethod
    def from_neighbors(cls, neighbor_lists) -> "TetAdjacency":
        n = len(neighbor_lists)
        neighbors = tuple(tuple(sorted(set(int(j) for j in lst))) for lst in neighbor_lists)
        for i, nbrs in enumerate(neighbors):
            for j in nbrs:
                if i not in neighbors[j]:
                    raise ValueError(f"adjacency is not symmetric: {i} -> {j}")
        parent = np.full(n, -1, dtype=np.int64)
        order = []
        seen = np.zeros(n, dtype=bool)
        for root in range(n):
            if seen[root]:
                continue
            seen[root] = True
            queue = [root]
            order.append(root)
            head = 0
            while head < len(queue):
                cur = queue[head]
                head += 1
                for nb in neighbors[cur]:
                    if not seen[nb]:
                        seen[nb] = True
                        parent[nb] = cur
                        queue.append(nb)
                        order.append(nb)
        return cls(neighbors, parent, np.asarray(order, dtype=np.int64))

    @classmethod
    def from_tets(cls, tets) -> "TetAdjacency":
        tets = np.asarray(tets, dtype=np.int64).reshape(-1, 4)
        pair_map: dict[tuple[int, int], list[int]] = {}
        for ti, tet in enumerate(tets):
            vs = [int(v) for v in tet]
            for a in range(4):
                for b in range(a + 1, 4):
                    u, v = vs[a], vs[b]
                    key = (u, v) if u < v else (v, u)
                    pair_map.setdefault(key, []).append(ti)
        lists = [set() for _ in range(len(tets))]
        for members in pair_map.values():
            if len(members) < 2:
                continue
            for a in range(len(members)):
                for b in range(a + 1, len(members)):
                    lists[members[a]].add(members[b])
                    lists[members[b]].add(members[a])
        return cls.from_neighbors([sorted(s) for s in lists])


def continuous_rot_log(adjacency: TetAdjacency, rotations) -> np.ndarray:
    """Branch-tracked rotation logs over the adjacency's spanning forest.

    Roots take the principal log. Every child picks, among the 2*pi-shifted
    branches of its own log (both axis signs when the angle is pi, the
    parent's axis when the angle is zero), the vector closest to its
    parent's choice; ties resolve toward the smaller norm. Angles may
    therefore exceed pi, but re-exponentiation always reproduces the input.
    """
    R = np.asarray(rotations, dtype=np.float64).reshape(-1, 3, 3)
    n = len(R)
    if len(adjacency.parent) != n:
        raise ValueError(f"adjacency covers {len(adjacency.parent)} tets, got {n} rotations")
    principal = rot_log_many(R)
    theta = np.linalg.norm(principal, axis=1)
    out = np.empty((n, 3), dtype=np.float64)
    ks = np.arange(-3, 4)
    for idx in adjacency.order:
        p = int(adjacency.parent[idx])
        if p < 0:
            out[idx] = principal[idx]
            continue
        target = out[p]
        th = theta[idx]
        if th < 1e-12:
            cands = [np.zeros(3)]
            pn = np.linalg.norm(target)
            if pn > 1e-12:
                u = target / pn
                cands.extend((_TWO_PI * k) * u for k in ks if k != 0)
        else:
            axis = principal[idx] / th
            axes = (axis, -axis) if (np.pi - th) < 1e-9 else (axis,)
            cands = [(th + _TWO_PI * k) * ax for ax in axes for k in ks]
        cands = np.asarray(cands)
        dist = ((cands - target) ** 2).sum(axis=1)
        best = dist.min()
        close = np.flatnonzero(dist <= best + 1e-12)
        norms = np.linalg.norm(cands[close], axis=1)
        out[idx] = cands[close[int(np.argmin(norms))]]
    return out


# ---------------------------------------------------------------------------
# blend functions


def blend_local_P(weights, decomps) -> np.ndarray:
    """Principal-log rotation blend with linearly mixed shears.

    The shear mix carries a (1 - sum w) identity term so zero weights give
    the identity; the result can leave GL+(3) under extrapolation, which is
    exactly the deficiency the continuous blend avoids.
    """
    weights = np.asarray(weights, dtype=np.float64).reshape(-1)
    if len(weights) != len(decomps):
        raise ValueError(f"{len(weights)} weights for {len(decomps)} transforms")
    if not len(weights):
        return _EYE3.copy()
    Rs = np.stack([d.rotation for d in decomps])
    Ss = np.stack([d.shear for d in decomps])
    omega = np.einsum("k,kc->c", weights, rot_log_many(Rs))
    shear = np.einsum("k,kab->ab", weights, Ss) + (1.0 - weights.sum()) * _EYE3
    return rot_exp_many(omega) @ shear


def blend_local_C(weights, logs) -> np.ndarray:
    """Log-space blend: exp of mixed rotation logs times exp of mixed shear logs.

    Stays in GL+(3) for every real weight vector. Rotation logs should be
    branch-adjusted (see :func:`continuous_rot_log`) when blending fields
    over adjacent tetrahedra.
    """
    weights = np.asarray(weights, dtype=np.float64).reshape(-1)
    if len(weights) != len(logs):
        raise ValueError(f"{len(weights)} weights for {len(logs)} transforms")
    if not len(weights):
        return _EYE3.copy()
    omega = np.einsum("k,kc->c", weights, np.stack([l.rot_log for l in logs]))
    L = np.einsum("k,kab->ab", weights, np.stack([l.shear_log for l in logs]))
    return rot_exp_many(omega) @ sym_exp_many(L)
