"""Point location in triangle meshes."""

from __future__ import annotations

import numpy as np
from matplotlib.tri import Triangulation

from .mesh import Mesh

_finders: dict = {}


def locate_points(mesh: Mesh, points) -> np.ndarray:
    """Index of the triangle containing each point, -1 outside the mesh."""
    key = id(mesh)
    hit = _finders.get(key)
    if hit is None or hit[0] is not mesh:
        tri = Triangulation(mesh.nodes[:, 0], mesh.nodes[:, 1], mesh.triangles)
        hit = (mesh, tri.get_trifinder())
        if len(_finders) > 8:
            _finders.clear()
        _finders[key] = hit
    points = np.atleast_2d(np.asarray(points, dtype=float))
    return np.asarray(hit[1](points[:, 0], points[:, 1]), dtype=np.int64)


def barycentric(mesh: Mesh, tri: np.ndarray, points: np.ndarray) -> np.ndarray:
    p = mesh.nodes[mesh.triangles[tri]]
    d1, d2 = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
    det = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    r = points - p[:, 0]
    l1 = (r[:, 0] * d2[:, 1] - r[:, 1] * d2[:, 0]) / det
    l2 = (d1[:, 0] * r[:, 1] - d1[:, 1] * r[:, 0]) / det
    return np.column_stack([1 - l1 - l2, l1, l2])
