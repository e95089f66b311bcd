"""Shared fixtures: synthetic meshes and prebuilt blend models."""

import numpy as np
import pytest

from tetriblend import TriangleMesh, precompute
from tetriblend.meshgen import bend_arc, box_bar, grid_patch, twist_x


@pytest.fixture(scope="session")
def bar():
    return box_bar(segments=(14, 4, 4), size=(4.0, 1.0, 1.0))


@pytest.fixture(scope="session")
def small_bar():
    return box_bar(segments=(6, 2, 2), size=(3.0, 1.0, 1.0))


@pytest.fixture(scope="session")
def bar_bent(bar):
    return bend_arc(bar, np.deg2rad(60.0))


@pytest.fixture(scope="session")
def bar_twisted(bar):
    return twist_x(bar, np.deg2rad(120.0))


@pytest.fixture(scope="session")
def patch():
    return grid_patch(nx=10, ny=10)


@pytest.fixture(scope="session")
def tetra4():
    """Regular tetrahedron: the smallest closed mesh, every vertex shared."""
    vertices = np.array(
        [[1.0, 1.0, 1.0], [1.0, -1.0, -1.0], [-1.0, 1.0, -1.0], [-1.0, -1.0, 1.0]]
    )
    faces = np.array([[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]])
    return TriangleMesh(vertices=vertices, faces=faces)


@pytest.fixture(scope="session")
def bent_model(bar, bar_bent):
    return precompute(bar, [bar_bent], method="vertex")


@pytest.fixture(scope="session")
def twisted_model(bar, bar_twisted):
    return precompute(bar, [bar_twisted], method="vertex")


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_rotation(rng):
    q = rng.standard_normal(4)
    w, x, y, z = q / np.linalg.norm(q)
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def rot_z(angle):
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
