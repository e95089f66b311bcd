"""Least-squares stitching of per-tet target transforms into vertex positions.

Two error functionals over extended (original + ghost) vertex positions:

* translation-invariant: sum of W_i ||A_i - C_i||_F^2 with A_i the affine
  linear part induced by the current positions of tet i,
* rotation-and-translation-invariant: same with both factors replaced by
  their polar shear parts, minimized by a local-global iteration.

The quadratic form shared by both is factorized once per rest structure and
reused across every solve.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import splu

from .algebra import polar_many, psd_shear_many
from .errors import SingularSystem
from .tetra import RestFactorization, TetStructure

__all__ = [
    "SolverContext",
    "TargetSet",
    "SolveReport",
    "assemble_context",
    "energy_ET",
    "energy_ES",
    "solve_ET",
    "solve_ES",
]

# dimensionless energies this small are treated as exactly attained
_ZERO_ENERGY = 1e-20


@dataclass(frozen=True)
class TargetSet:
    """Per-tet 3x3 target transforms plus the prescribed output barycentre."""

    targets: np.ndarray
    barycentre_target: np.ndarray

    def __post_init__(self):
        t = np.ascontiguousarray(np.asarray(self.targets, dtype=np.float64))
        if t.ndim != 3 or t.shape[1:] != (3, 3):
            raise ValueError(f"targets must be (n, 3, 3), got {t.shape}")
        b = np.asarray(self.barycentre_target, dtype=np.float64).reshape(3)
        t.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "targets", t)
        object.__setattr__(self, "barycentre_target", b)

    @property
    def tet_count(self) -> int:
        return int(self.targets.shape[0])


@dataclass(frozen=True)
class SolveReport:
    """Solve outcome: positions over extended vertices plus diagnostics.

    ``iterations`` counts global solves past initialization (1 for the
    translation-invariant energy). ``energy_trace`` holds the shear energy
    after initialization and after every subsequent cycle (empty for plain
    translation-invariant solves). ``reflection_events`` counts tets whose
    induced transform had non-positive determinant at any polar step.
    """

    positions: np.ndarray
    final_energy: float
    iterations: int
    energy_trace: tuple
    converged: bool
    reflection_events: int = 0

    def __post_init__(self):
        p = np.ascontiguousarray(np.asarray(self.positions, dtype=np.float64))
        p.setflags(write=False)
        object.__setattr__(self, "positions", p)
        object.__setattr__(self, "energy_trace", tuple(float(e) for e in self.energy_trace))


@dataclass(frozen=True, repr=False)
class SolverContext:
    """Assembled quadratic form with its reusable factorization.

    ``gram`` is the N x N positive-semidefinite matrix whose kernel is the
    all-ones translation vector; ``factorization`` solves the system with
    ``pinned_vertex``'s row and column removed. Immutable and shareable
    across concurrent solves.
    """

    gram: sp.csc_matrix
    factorization: object
    pinned_vertex: int
    tet_weights: np.ndarray
    extended_count: int
    _keep: np.ndarray = field(compare=False)

    def __repr__(self):
        return (
            f"SolverContext(extended_count={self.extended_count}, "
            f"nnz={self.gram.nnz}, pinned_vertex={self.pinned_vertex})"
        )


def _normalize_weights(tet_weights, n: int) -> np.ndarray:
    if tet_weights is None:
        w = np.ones(n, dtype=np.float64)
    else:
        w = np.asarray(tet_weights, dtype=np.float64).reshape(-1).copy()
        if len(w) != n:
            raise ValueError(f"{len(w)} tet weights for {n} tets")
        if np.any(w < 0):
            raise ValueError("tet weights must be non-negative")
    w.setflags(write=False)
    return w


def _connectivity_or_raise(tets: np.ndarray, weights: np.ndarray, n_vertices: int):
    live = tets[weights > 0]
    pairs_a = live[:, [0, 0, 0, 1, 1, 2]].ravel()
    pairs_b = live[:, [1, 2, 3, 2, 3, 3]].ravel()
    graph = sp.coo_matrix(
        (np.ones(len(pairs_a)), (pairs_a, pairs_b)), shape=(n_vertices, n_vertices)
    )
    n_comp, labels = connected_components(graph, directed=False)
    if n_comp > 1:
        groups: list[list[int]] = [[] for _ in range(n_comp)]
        for v, lab in enumerate(labels):
            groups[lab].append(v)
        raise SingularSystem(
            f"tet graph over extended vertices has {n_comp} connected components; "
            "the reduced system is not positive definite",
            components=tuple(tuple(g) for g in groups),
        )


def assemble_context(
    rest: RestFactorization, structure: TetStructure, tet_weights=None
) -> SolverContext:
    """Build and factorize the position-independent quadratic form.

    The per-tet blocks are W_i * G_i G_i^T scattered over that tet's four
    extended vertices; one vertex is pinned to remove the translation
    kernel before factorization.
    """
    tets = structure.tets
    n = structure.tet_count
    nv = structure.extended_vertex_count
    weights = _normalize_weights(tet_weights, n)
    _connectivity_or_raise(tets, weights, nv)

    G = rest.linear_blocks  # (n, 4, 3)
    blocks = weights[:, None, None] * (G @ G.transpose(0, 2, 1))  # (n, 4, 4)
    rows = np.repeat(tets, 4, axis=1).ravel()
    cols = np.tile(tets, (1, 4)).ravel()
    gram = sp.coo_matrix((blocks.ravel(), (rows, cols)), shape=(nv, nv)).tocsc()

    pinned = 0
    keep = np.arange(nv)
    keep = keep[keep != pinned]
    reduced = gram[keep][:, keep].tocsc()
    try:
        factor = splu(reduced)
    except RuntimeError as exc:
        raise SingularSystem(f"factorization of the reduced system failed: {exc}") from exc
    keep.setflags(write=False)
    return SolverContext(
        gram=gram,
        factorization=factor,
        pinned_vertex=pinned,
        tet_weights=weights,
        extended_count=nv,
        _keep=keep,
    )


def _induced_transforms(positions, rest: RestFactorization, structure: TetStructure):
    """A_i stack: current 3x4 position block of tet i times its rest block."""
    pos = np.asarray(positions, dtype=np.float64)
    if pos.shape != (structure.extended_vertex_count, 3):
        raise ValueError(
            f"positions must be ({structure.extended_vertex_count}, 3), got {pos.shape}"
        )
    blocks = pos[structure.tets].transpose(0, 2, 1)  # (n, 3, 4)
    return blocks @ rest.linear_blocks


def energy_ET(positions, rest, structure, targets: TargetSet, tet_weights=None) -> float:
    """Weighted squared Frobenius mismatch between induced and target transforms."""
    A = _induced_transforms(positions, rest, structure)
    w = _normalize_weights(tet_weights, structure.tet_count)
    diff = A - targets.targets
    return float(np.einsum("i,iab,iab->", w, diff, diff))


def energy_ES(positions, rest, structure, targets: TargetSet, tet_weights=None) -> float:
    """Weighted squared Frobenius mismatch between polar shear factors.

    Shears come from the PSD square root of M^T M, so non-orientation-
    preserving transforms still evaluate (their orthogonal factor is a
    reflection); callers tracking that condition count it separately.
    """
    A = _induced_transforms(positions, rest, structure)
    w = _normalize_weights(tet_weights, structure.tet_count)
    diff = psd_shear_many(A) - psd_shear_many(targets.targets)
    return float(np.einsum("i,iab,iab->", w, diff, diff))


def _check_targets(ctx: SolverContext, structure: TetStructure, targets: TargetSet):
    if targets.tet_count != structure.tet_count:
        raise ValueError(f"{targets.tet_count} targets for {structure.tet_count} tets")
    if ctx.extended_count != structure.extended_vertex_count:
        raise ValueError("solver context was built for a different structure")


def _solve_positions(ctx: SolverContext, rest, structure, target_matrices, barycentre):
    """Minimize the translation-invariant energy; mean of original vertices
    is moved to the prescribed barycentre afterwards."""
    tets = structure.tets
    nv = ctx.extended_count
    contrib = ctx.tet_weights[:, None, None] * (
        rest.linear_blocks @ target_matrices.transpose(0, 2, 1)
    )  # (n, 4, 3)
    rhs = np.zeros((nv, 3), dtype=np.float64)
    np.add.at(rhs, tets.ravel(), contrib.reshape(-1, 3))

    solved = ctx.factorization.solve(rhs[ctx._keep])
    positions = np.zeros((nv, 3), dtype=np.float64)
    positions[ctx._keep] = solved

    residual = ctx.gram @ positions - rhs
    rel = float(np.linalg.norm(residual)) / max(float(np.linalg.norm(rhs)), 1e-300)
    if not np.isfinite(rel) or rel > 1e-6:
        raise SingularSystem(f"linear solve residual {rel:.3e} exceeds tolerance")

    base = structure.base_vertex_count
    positions += barycentre - positions[:base].mean(axis=0)
    return positions


def solve_ET(ctx: SolverContext, rest, structure, targets: TargetSet) -> SolveReport:
    """One factorized solve of the translation-invariant problem."""
    _check_targets(ctx, structure, targets)
    positions = _solve_positions(
        ctx, rest, structure, targets.targets, targets.barycentre_target
    )
    energy = energy_ET(positions, rest, structure, targets, ctx.tet_weights)
    return SolveReport(
        positions=positions,
        final_energy=energy,
        iterations=1,
        energy_trace=(),
        converged=True,
    )


def solve_ES(
    ctx: SolverContext,
    rest,
    structure,
    targets: TargetSet,
    max_iterations: int = 100,
    tol: float = 1e-6,
) -> SolveReport:
    """Local-global minimization of the shear mismatch energy.

    Initialization solves the translation-invariant problem with the raw
    targets; every cycle then re-fits rotations (polar factors of the
    current induced transforms) and re-solves against rotation times target
    shear. The update has no descent guarantee when target shears differ
    from the identity, so a cycle that raises the energy by more than
    1e-12 is discarded and iteration stops at the previous iterate; the
    recorded trace is therefore never increasing. Otherwise stops when the
    relative energy change drops below ``tol``, the energy is numerically
    zero, or ``max_iterations`` cycles have run; at least one cycle always
    runs. Non-convergence is reported, not raised.
    """
    _check_targets(ctx, structure, targets)
    if max_iterations < 1:
        raise ValueError("max_iterations must be >= 1")
    target_shear = psd_shear_many(targets.targets)
    w = ctx.tet_weights
    barycentre = targets.barycentre_target

    positions = _solve_positions(ctx, rest, structure, targets.targets, barycentre)
    trace = []
    reflections = 0
    cycles = 0
    converged = False
    previous = positions
    while True:
        A = _induced_transforms(positions, rest, structure)
        rotations, shear = polar_many(A)
        diff = shear - target_shear
        energy = float(np.einsum("i,iab,iab->", w, diff, diff))
        if cycles > 0 and energy > trace[-1] + 1e-12:
            positions = previous  # the step made things worse; keep the old iterate
            converged = True
            break
        trace.append(energy)
        if cycles > 0:
            if abs(energy - trace[-2]) / max(energy, 1e-30) < tol or energy < _ZERO_ENERGY:
                converged = True
                break
        if cycles >= max_iterations:
            break
        cycles += 1
        reflections += int(np.count_nonzero(np.linalg.det(A) <= 0))
        previous = positions
        positions = _solve_positions(
            ctx, rest, structure, rotations @ target_shear, barycentre
        )

    return SolveReport(
        positions=positions,
        final_energy=trace[-1],
        iterations=len(trace) - 1,
        energy_trace=tuple(trace),
        converged=converged,
        reflection_events=reflections,
    )
