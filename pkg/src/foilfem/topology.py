"""Global basis objects: cohomology cuts, winding functions, voltage bases."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from numpy.polynomial import legendre

from .fem_kernel import circulation_matrix
from .mesh import AXISYMMETRIC, Mesh


class TopologyError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class CutCochain:
    """Edge cochain with unit circulation around ``region``.

    ``coefficients`` holds -1, 0 or +1 per mesh edge. It is curl-free on
    every triangle outside the conductors it was built against.
    """

    coefficients: np.ndarray
    region: str
    seam: np.ndarray

    def circulation(self, mesh: Mesh, tri_mask: np.ndarray) -> float:
        """Counter-clockwise circulation around the boundary of a triangle set."""
        circ = circulation_matrix(mesh) @ self.coefficients
        return float(circ[tri_mask].sum())

    def loop_circulation(self, mesh: Mesh, loop_nodes) -> float:
        """Circulation along the closed node loop ``loop_nodes`` (consecutive nodes share an edge)."""
        index = _edge_index(mesh)
        total = 0.0
        loop = list(loop_nodes)
        for a, b in zip(loop, loop[1:] + loop[:1]):
            e = index[(min(a, b), max(a, b))]
            total += self.coefficients[e] * (1.0 if a < b else -1.0)
        return total


def _edge_index(mesh: Mesh) -> dict:
    return {(int(a), int(b)): k for k, (a, b) in enumerate(mesh.edges)}


def _edge_lookup(mesh: Mesh, a, b) -> np.ndarray:
    """Edge numbers of the node pairs (a, b), in either orientation."""
    a, b = np.asarray(a, dtype=np.int64), np.asarray(b, dtype=np.int64)
    e = mesh.edges.astype(np.int64)
    keys = e[:, 0] * mesh.n_nodes + e[:, 1]
    order = np.argsort(keys)
    q = np.minimum(a, b) * mesh.n_nodes + np.maximum(a, b)
    pos = order[np.searchsorted(keys, q, sorter=order)]
    if not np.array_equal(keys[pos], q):
        raise TopologyError("node pair is not a mesh edge")
    return pos


def _half_edges(mesh: Mesh, allowed: np.ndarray) -> dict:
    he = {}
    for t in np.flatnonzero(allowed):
        a, b, c = (int(v) for v in mesh.triangles[t])
        he[(a, b)] = c
        he[(b, c)] = a
        he[(c, a)] = b
    return he


def _rotate(he, s, q, stop=None, ccw=True):
    """Neighbours of ``s`` met when rotating from edge (s, q) through allowed triangles."""
    out = []
    cur = q
    for _ in range(len(he)):
        nxt = he.get((s, cur)) if ccw else he.get((cur, s))
        if nxt is None or nxt == stop:
            return out
        out.append(nxt)
        cur = nxt
    raise TopologyError("fan rotation did not terminate")


def build_cut(mesh: Mesh, enclosed: str | np.ndarray, conductors: np.ndarray | None = None) -> CutCochain:
    """Thin-cut cochain around one conducting region.

    ``enclosed`` is a region name or a triangle mask; ``conductors`` is the
    mask of all conducting triangles (defaults to ``enclosed``). The seam is
    the shortest node path through non-conducting triangles from the
    enclosed region to the mesh boundary; ties go to the lowest node index.
    """
    if isinstance(enclosed, str):
        name = enclosed
        enclosed = mesh.region_mask(enclosed)
    else:
        name = "bulk"
        enclosed = np.asarray(enclosed, dtype=bool)
    if conductors is None:
        conductors = enclosed
    conductors = conductors | enclosed
    air = ~conductors
    tris = mesh.triangles
    on_cond = np.zeros(mesh.n_nodes, bool)
    on_cond[tris[conductors].ravel()] = True
    on_other = np.zeros(mesh.n_nodes, bool)
    on_other[tris[conductors & ~enclosed].ravel()] = True
    on_air = np.zeros(mesh.n_nodes, bool)
    on_air[tris[air].ravel()] = True
    on_enclosed = np.zeros(mesh.n_nodes, bool)
    on_enclosed[tris[enclosed].ravel()] = True
    boundary = np.zeros(mesh.n_nodes, bool)
    boundary[mesh.boundary_nodes] = True

    sources = np.flatnonzero(on_enclosed & on_air & ~on_other & ~boundary)
    if len(sources) == 0:
        raise TopologyError(f"region {name!r} has no boundary node exposed to air only")

    e = mesh.edges
    air_edge = np.zeros(mesh.n_edges, bool)
    et = mesh.edge_triangles
    air_edge |= air[et[:, 0]]
    air_edge |= (et[:, 1] >= 0) & air[np.maximum(et[:, 1], 0)]
    ae = e[air_edge]
    adj = sp.csr_matrix((np.ones(2 * len(ae)), (np.r_[ae[:, 0], ae[:, 1]], np.r_[ae[:, 1], ae[:, 0]])),
                        shape=(mesh.n_nodes, mesh.n_nodes))
    adj.sort_indices()
    ptr, nbr = adj.indptr, adj.indices
    parent = -np.ones(mesh.n_nodes, dtype=np.int64)
    seen = np.zeros(mesh.n_nodes, bool)
    queue = deque()
    for s in sources:
        seen[s] = True
        queue.append(int(s))
    target = -1
    while queue:
        u = queue.popleft()
        if boundary[u]:
            target = u
            break
        for v in nbr[ptr[u]:ptr[u + 1]].tolist():
            if seen[v] or on_cond[v]:
                continue
            seen[v] = True
            parent[v] = u
            queue.append(v)
    if target < 0:
        raise TopologyError(f"no path from region {name!r} to the outer boundary")
    seam = [target]
    while parent[seam[-1]] >= 0:
        seam.append(int(parent[seam[-1]]))
    seam = seam[::-1]
    if len(seam) < 2:
        raise TopologyError("degenerate seam")

    # only the air triangles around the seam matter
    near = air & np.isin(tris, seam).any(axis=1)
    he = _half_edges(mesh, near)
    coef = np.zeros(mesh.n_edges)
    pairs, signs = [], []
    m = len(seam) - 1
    for k, s in enumerate(seam):
        if k == 0:
            left = _rotate(he, s, seam[1])
        elif k == m:
            left = _rotate(he, s, seam[m - 1], ccw=False)
        else:
            left = _rotate(he, s, seam[k + 1], stop=seam[k - 1])
        for q in left:
            pairs.append((q, s))
            signs.append(1.0 if q < s else -1.0)
    if pairs:
        pq = np.array(pairs)
        coef[_edge_lookup(mesh, pq[:, 0], pq[:, 1])] = signs

    circ = circulation_matrix(mesh) @ coef
    total = circ[enclosed].sum()
    if abs(abs(total) - 1.0) > 1e-12:
        raise TopologyError(f"cut circulation around {name!r} is {total}, expected +-1")
    if total < 0:
        coef = -coef
        circ = -circ
    if np.any(np.abs(circ[air]) > 1e-12):
        raise TopologyError("cut is not curl-free outside the conductors")
    cut = CutCochain(coef, name, np.asarray(seam))
    cut.coefficients.setflags(write=False)
    return cut


# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class WindingFunction:
    """Out-of-plane source field of one turn (or of the whole bulk).

    ``density`` is |grad v_s|: 1 in planar meshes (per unit length) and
    1/(2 pi r) in axisymmetric ones, so one full turn has unit line integral.
    """

    mask: np.ndarray
    coordinate_system: str
    region: str

    def density(self, points: np.ndarray, tri: np.ndarray | None = None) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        if self.coordinate_system == AXISYMMETRIC:
            val = 1.0 / (2.0 * np.pi * points[..., 0])
        else:
            val = np.ones(points.shape[:-1])
        if tri is not None:
            val = np.where(self.mask[tri] & (tri >= 0), val, 0.0)
        return val

    def field(self, mesh: Mesh, points) -> np.ndarray:
        """3-vector field at arbitrary points; zero outside the turn."""
        from .mesh_search import locate_points

        points = np.atleast_2d(np.asarray(points, dtype=float))
        tri = locate_points(mesh, points)
        out = np.zeros((len(points), 3))
        out[:, 2] = self.density(points, tri)
        return out

    def circulation(self, radius: float) -> float:
        if self.coordinate_system == AXISYMMETRIC:
            return 2.0 * np.pi * radius * (1.0 / (2.0 * np.pi * radius))
        return 1.0


def build_winding_function(mesh: Mesh, turn_region: str, coordinate_system: str | None = None) -> WindingFunction:
    if turn_region == "bulk":
        mask = mesh.bulk_mask()
    else:
        mask = mesh.region_mask(turn_region)
    if not mask.any():
        raise KeyError(f"region {turn_region!r} has no triangles")
    return WindingFunction(mask, coordinate_system or mesh.coordinate_system, turn_region)


# --------------------------------------------------------------------------


@dataclass(frozen=True)
class VoltageBasis:
    """Functions p_k(alpha) on [0, 1] spanning the voltage continuum.

    ``poly``: shifted Legendre polynomials of degree 0..n-1. ``pwl``: hat
    functions on n uniformly spaced nodes (n = 1 gives the constant).
    """

    kind: str
    n: int

    def __post_init__(self):
        if self.kind not in ("poly", "pwl"):
            raise ValueError(f"unknown basis kind {self.kind!r}")
        if self.n < 1:
            raise ValueError("a voltage basis needs at least one function")

    @property
    def degree(self) -> int:
        if self.kind == "poly":
            return self.n - 1
        return 0 if self.n == 1 else 1

    @property
    def breakpoints(self) -> np.ndarray:
        if self.kind == "pwl" and self.n > 1:
            return np.linspace(0.0, 1.0, self.n)
        return np.array([0.0, 1.0])

    @property
    def label(self) -> str:
        return f"poly:{self.n - 1}" if self.kind == "poly" else f"pwl:{self.n}"

    def __call__(self, alpha) -> np.ndarray:
        alpha = np.asarray(alpha, dtype=float)
        out = np.empty((self.n,) + alpha.shape)
        if self.kind == "poly":
            x = 2.0 * alpha - 1.0
            for k in range(self.n):
                c = np.zeros(k + 1)
                c[k] = 1.0
                out[k] = legendre.legval(x, c)
        elif self.n == 1:
            out[0] = 1.0
        else:
            nodes = self.breakpoints
            for k in range(self.n):
                e = np.zeros(self.n)
                e[k] = 1.0
                out[k] = np.interp(alpha, nodes, e)
        return out

    def integrals(self, a: float = 0.0, b: float = 1.0) -> np.ndarray:
        """Integral of every basis function over [a, b], exact."""
        pts = np.union1d(self.breakpoints, [a, b])
        pts = pts[(pts >= a) & (pts <= b)]
        x, w = np.polynomial.legendre.leggauss(max(1, (self.degree + 2) // 2 + 1))
        total = np.zeros(self.n)
        for lo, hi in zip(pts[:-1], pts[1:]):
            xm = 0.5 * (hi + lo) + 0.5 * (hi - lo) * x
            total += self(xm) @ (0.5 * (hi - lo) * w)
        return total


def build_voltage_basis(kind: str, n_functions: int) -> VoltageBasis:
    return VoltageBasis(kind, int(n_functions))


def parse_basis(spec: str) -> VoltageBasis:
    """Parse ``poly:p`` (order p, p+1 functions) or ``pwl:N`` (N hat functions)."""
    try:
        kind, value = spec.split(":")
        value = int(value)
    except ValueError:
        raise ValueError(f"malformed basis spec {spec!r}; expected poly:p or pwl:N") from None
    if kind == "poly":
        if value < 0:
            raise ValueError(f"polynomial order must be >= 0 in {spec!r}")
        return VoltageBasis("poly", value + 1)
    if kind == "pwl":
        if value < 1:
            raise ValueError(f"pwl basis needs at least one function in {spec!r}")
        return VoltageBasis("pwl", value)
    raise ValueError(f"unknown basis kind in {spec!r}")
