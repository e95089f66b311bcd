"""Synthetic fixture meshes and scripted deformations.

Everything here exists for tests, benchmarks, and demos: closed bars and
spheres, an open patch with boundary, and the bend/twist/scale maps that
produce deformed counterparts with identical connectivity. Run as a module
to write the standard fixture set as OBJ files.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .mesh import TriangleMesh, write_obj

__all__ = [
    "box_bar",
    "grid_patch",
    "uv_sphere",
    "bend_arc",
    "twist_x",
    "scale_axes",
    "rigid_move",
]


def box_bar(segments=(14, 4, 4), size=(4.0, 1.0, 1.0)) -> TriangleMesh:
    """Closed axis-aligned box centred at the origin, long axis along x.

    Default segmentation gives 512 faces. Quads on each of the six sides
    are split consistently and wound outward.
    """
    nx, ny, nz = (int(s) for s in segments)
    if min(nx, ny, nz) < 1:
        raise ValueError("each segment count must be >= 1")
    lx, ly, lz = (float(s) for s in size)
    xs = np.linspace(-lx / 2, lx / 2, nx + 1)
    ys = np.linspace(-ly / 2, ly / 2, ny + 1)
    zs = np.linspace(-lz / 2, lz / 2, nz + 1)

    index: dict[tuple[int, int, int], int] = {}
    verts: list[tuple[float, float, float]] = []

    def vid(i, j, k):
        key = (i, j, k)
        if key not in index:
            index[key] = len(verts)
            verts.append((xs[i], ys[j], zs[k]))
        return index[key]

    faces: list[tuple[int, int, int]] = []

    def quad(a, b, c, d, flip):
        if flip:
            faces.append((a, c, b))
            faces.append((a, d, c))
        else:
            faces.append((a, b, c))
            faces.append((a, c, d))

    for i in range(nx):
        for j in range(ny):
            for k, flip in ((nz, False), (0, True)):
                quad(vid(i, j, k), vid(i + 1, j, k), vid(i + 1, j + 1, k), vid(i, j + 1, k), flip)
    for i in range(nx):
        for k in range(nz):
            for j, flip in ((ny, True), (0, False)):
                quad(vid(i, j, k), vid(i + 1, j, k), vid(i + 1, j, k + 1), vid(i, j, k + 1), flip)
    for j in range(ny):
        for k in range(nz):
            for i, flip in ((nx, False), (0, True)):
                quad(vid(i, j, k), vid(i, j + 1, k), vid(i, j + 1, k + 1), vid(i, j, k + 1), flip)

    return TriangleMesh(
        vertices=np.asarray(verts, dtype=np.float64),
        faces=np.asarray(faces, dtype=np.int64),
    )


def grid_patch(nx=10, ny=10, size=(1.0, 1.0)) -> TriangleMesh:
    """Open rectangular patch in the z = 0 plane (a mesh with boundary)."""
    nx, ny = int(nx), int(ny)
    if min(nx, ny) < 1:
        raise ValueError("each segment count must be >= 1")
    lx, ly = (float(s) for s in size)
    xs = np.linspace(-lx / 2, lx / 2, nx + 1)
    ys = np.linspace(-ly / 2, ly / 2, ny + 1)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    verts = np.column_stack([gx.ravel(), gy.ravel(), np.zeros(gx.size)])

    def vid(i, j):
        return i * (ny + 1) + j

    faces = []
    for i in range(nx):
        for j in range(ny):
            a, b = vid(i, j), vid(i + 1, j)
            c, d = vid(i + 1, j + 1), vid(i, j + 1)
            faces.append((a, b, c))
            faces.append((a, c, d))
    return TriangleMesh(vertices=verts, faces=np.asarray(faces, dtype=np.int64))


def uv_sphere(rings=51, segments=50, radius=1.0) -> TriangleMesh:
    """Closed UV sphere with poles on the x axis.

    Face count is 2 * segments * (rings - 1); the defaults give 5000.
    """
    rings, segments = int(rings), int(segments)
    if rings < 2 or segments < 3:
        raise ValueError("need rings >= 2 and segments >= 3")
    r = float(radius)
    verts = [(r, 0.0, 0.0)]
    for i in range(1, rings):
        theta = np.pi * i / rings
        for k in range(segments):
            phi = 2.0 * np.pi * k / segments
            verts.append(
                (
                    r * np.cos(theta),
                    r * np.sin(theta) * np.cos(phi),
                    r * np.sin(theta) * np.sin(phi),
                )
            )
    verts.append((-r, 0.0, 0.0))
    top, bottom = 0, len(verts) - 1

    def vid(i, k):
        return 1 + (i - 1) * segments + (k % segments)

    faces = []
    for k in range(segments):
        faces.append((top, vid(1, k), vid(1, k + 1)))
    for i in range(1, rings - 1):
        for k in range(segments):
            u0, u1 = vid(i, k), vid(i, k + 1)
            l0, l1 = vid(i + 1, k), vid(i + 1, k + 1)
            faces.append((u0, l0, l1))
            faces.append((u0, l1, u1))
    for k in range(segments):
        faces.append((bottom, vid(rings - 1, k + 1), vid(rings - 1, k)))
    return TriangleMesh(
        vertices=np.asarray(verts, dtype=np.float64),
        faces=np.asarray(faces, dtype=np.int64),
    )


def _as_positions(mesh: TriangleMesh) -> np.ndarray:
    return np.array(mesh.vertices, dtype=np.float64)


def bend_arc(mesh: TriangleMesh, angle: float) -> TriangleMesh:
    """Bend the x axis into a circular arc of the given total angle.

    The arc lies in the xy plane; the mid cross-section (at the mean x)
    stays fixed and arc length is preserved on the y = 0 fibre. Requires
    the bend radius to exceed the mesh's y extent.
    """
    pos = _as_positions(mesh)
    angle = float(angle)
    if abs(angle) < 1e-12:
        return TriangleMesh(vertices=pos, faces=mesh.faces)
    x = pos[:, 0]
    span = float(x.max() - x.min())
    if span <= 0:
        raise ValueError("mesh has no x extent to bend")
    rho = span / angle
    if np.abs(pos[:, 1]).max() >= abs(rho):
        raise ValueError("bend radius smaller than the mesh's y extent")
    xc = 0.5 * float(x.max() + x.min())
    t = (x - xc) / rho
    out = pos.copy()
    out[:, 0] = xc + (rho - pos[:, 1]) * np.sin(t)
    out[:, 1] = rho - (rho - pos[:, 1]) * np.cos(t)
    return TriangleMesh(vertices=out, faces=mesh.faces)


def twist_x(mesh: TriangleMesh, angle: float) -> TriangleMesh:
    """Rotate each yz cross-section about the x axis, linearly from 0 at
    the minimum x to ``angle`` at the maximum. Volume preserving."""
    pos = _as_positions(mesh)
    x = pos[:, 0]
    span = float(x.max() - x.min())
    if span <= 0:
        raise ValueError("mesh has no x extent to twist")
    theta = float(angle) * (x - float(x.min())) / span
    c, s = np.cos(theta), np.sin(theta)
    out = pos.copy()
    out[:, 1] = c * pos[:, 1] - s * pos[:, 2]
    out[:, 2] = s * pos[:, 1] + c * pos[:, 2]
    return TriangleMesh(vertices=out, faces=mesh.faces)


def scale_axes(mesh: TriangleMesh, sx=1.0, sy=1.0, sz=1.0) -> TriangleMesh:
    """Scale about the origin by per-axis factors."""
    pos = _as_positions(mesh) * np.array([sx, sy, sz], dtype=np.float64)
    return TriangleMesh(vertices=pos, faces=mesh.faces)


def rigid_move(mesh: TriangleMesh, rotation=None, translation=None) -> TriangleMesh:
    """Apply a rotation about the origin followed by a translation."""
    pos = _as_positions(mesh)
    if rotation is not None:
        pos = pos @ np.asarray(rotation, dtype=np.float64).reshape(3, 3).T
    if translation is not None:
        pos = pos + np.asarray(translation, dtype=np.float64).reshape(3)
    return TriangleMesh(vertices=pos, faces=mesh.faces)


_STANDARD = {
    "bar_rest.obj": lambda: box_bar(),
    "bar_bent.obj": lambda: bend_arc(box_bar(), np.deg2rad(60.0)),
    "bar_twisted.obj": lambda: twist_x(box_bar(), np.deg2rad(120.0)),
    "patch_rest.obj": lambda: grid_patch(),
    "sphere_rest.obj": lambda: uv_sphere(),
    "sphere_twisted.obj": lambda: twist_x(uv_sphere(), np.deg2rad(60.0)),
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="python -m tetriblend.meshgen",
        description="Write the standard synthetic fixture meshes as OBJ files.",
    )
    parser.add_argument("--out", default="fixtures", help="output directory")
    args = parser.parse_args(argv)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name, build in _STANDARD.items():
        path = out / name
        write_obj(build(), path)
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
