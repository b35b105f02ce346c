"""Benchmark geometries, structured triangular meshes and mesh-file I/O.

Lengths are in meters. Planar meshes live in the (x, y) plane; axisymmetric
meshes use (r, z) with the symmetry axis at r = 0. The stacking direction
of the foils is always the first coordinate (x or r).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

PLANAR = "planar"
AXISYMMETRIC = "axisymmetric"
COORDINATE_SYSTEMS = (PLANAR, AXISYMMETRIC)


class GeometryError(ValueError):
    """Inconsistent or invalid geometry description."""


class MeshFormatError(ValueError):
    """Malformed or unsupported mesh file."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


@dataclass(frozen=True)
class Rect:
    """Axis-aligned rectangle [x0, x1] x [y0, y1] with a region name."""

    name: str
    x0: float
    x1: float
    y0: float
    y1: float

    @property
    def area(self) -> float:
        return (self.x1 - self.x0) * (self.y1 - self.y0)

    def contains(self, x, y, tol: float = 0.0):
        return (x >= self.x0 - tol) & (x <= self.x1 + tol) & (y >= self.y0 - tol) & (y <= self.y1 + tol)

    def overlaps(self, other: "Rect") -> bool:
        eps = 1e-12 * max(self.x1 - self.x0, self.y1 - self.y0, 1e-300)
        return (
            min(self.x1, other.x1) - max(self.x0, other.x0) > eps
            and min(self.y1, other.y1) - max(self.y0, other.y0) > eps
        )


@dataclass(frozen=True)
class MeshSizing:
    """Target element sizes at refinement level 1.

    ``cells_per_turn`` counts cells across one turn pitch in the stacking
    direction, ``cells_across_width`` across the bulk in the other one.
    Air cells grow linearly with the distance to the refined regions by
    ``growth`` and never exceed ``max_size``.
    """

    cells_per_turn: int = 2
    cells_across_width: int = 24
    core_size: float = 1.5e-3
    max_size: float = 6e-3
    growth: float = 0.25
    width_grading: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.width_grading <= 1.0:
            raise GeometryError("width_grading must lie in [0, 1]")


@dataclass(frozen=True)
class GeometrySpec:
    """Rectangular benchmark geometry.

    ``regions`` lists the non-overlapping sub-rectangles (``core``,
    ``turn:i``, ``gap:i``); anything inside ``box`` and not covered is air.
    ``bulk`` is the homogenized foil-winding rectangle, the bounding box of
    the turn stack.
    """

    coordinate_system: str
    box: Rect
    regions: tuple[Rect, ...]
    bulk: Rect
    n_turns: int
    fill_factor: float
    sizing: MeshSizing = field(default_factory=MeshSizing)

    def __post_init__(self):
        validate_geometry(self)

    @property
    def turns(self) -> tuple[Rect, ...]:
        return tuple(r for r in self.regions if r.name.startswith("turn:"))

    @property
    def alpha_map(self) -> "AlphaMap":
        return AlphaMap(origin=self.bulk.x0, thickness=self.bulk.x1 - self.bulk.x0)

    def foil_area(self) -> float:
        return sum(t.area for t in self.turns)


def validate_geometry(geom: GeometrySpec) -> None:
    if geom.coordinate_system not in COORDINATE_SYSTEMS:
        raise GeometryError(f"unknown coordinate system {geom.coordinate_system!r}")
    if geom.n_turns < 1:
        raise GeometryError("n_turns must be >= 1")
    if not 0.0 < geom.fill_factor <= 1.0:
        raise GeometryError("fill factor must lie in (0, 1]")
    rects = (geom.box, geom.bulk) + geom.regions
    for r in rects:
        if not (r.x1 > r.x0 and r.y1 > r.y0):
            raise GeometryError(f"region {r.name!r} has non-positive dimensions")
    for i, a in enumerate(geom.regions):
        for b in geom.regions[i + 1:]:
            if a.overlaps(b):
                raise GeometryError(f"regions {a.name!r} and {b.name!r} overlap")
    tol = 1e-12 * max(geom.box.x1 - geom.box.x0, geom.box.y1 - geom.box.y0)
    for r in (geom.bulk,) + geom.regions:
        if not (r.x0 >= geom.box.x0 - tol and r.x1 <= geom.box.x1 + tol
                and r.y0 >= geom.box.y0 - tol and r.y1 <= geom.box.y1 + tol):
            raise GeometryError(f"region {r.name!r} leaves the outer box")
    if geom.coordinate_system == AXISYMMETRIC and geom.box.x0 < -tol:
        raise GeometryError("axisymmetric geometries must lie in r >= 0")
    turns = geom.turns
    if len(turns) != geom.n_turns:
        raise GeometryError(f"expected {geom.n_turns} turn regions, found {len(turns)}")
    for t in turns:
        if not (t.x0 >= geom.bulk.x0 - tol and t.x1 <= geom.bulk.x1 + tol
                and t.y0 >= geom.bulk.y0 - tol and t.y1 <= geom.bulk.y1 + tol):
            raise GeometryError(f"turn {t.name!r} lies outside the bulk")


def _turn_stack(x0, thickness, y0, y1, n_turns, fill_factor):
    # gaps only between turns so that the stack's bounding box is the bulk
    t = fill_factor * thickness / n_turns
    g = (1.0 - fill_factor) * thickness / (n_turns - 1) if n_turns > 1 else 0.0
    regions = []
    for i in range(n_turns):
        a = x0 + i * (t + g)
        regions.append(Rect(f"turn:{i}", a, a + t, y0, y1))
        if g > 0 and i < n_turns - 1:
            regions.append(Rect(f"gap:{i}", a + t, a + t + g, y0, y1))
    # close the last face exactly on the bulk face
    last = regions[-1]
    regions[-1] = replace(last, x1=x0 + thickness)
    return regions


AXI20_DEFAULTS = {
    "n_turns": 20,
    "fill_factor": 1.0,
    "bulk_inner_radius": 20e-3,
    "bulk_thickness": 10e-3,
    "bulk_width": 30e-3,
    "core_radius": 15e-3,
    "core_height": 60e-3,
    "box_radius": 120e-3,
    "box_height": 120e-3,
}

# the open core corners dominate the discretization error of the inductance
AXI20_SIZING = MeshSizing(cells_per_turn=2, cells_across_width=24, core_size=0.75e-3,
                          max_size=3e-3, growth=0.25)

HTS20_DEFAULTS = {
    "n_turns": 20,
    "fill_factor": 0.01,
    "bulk_thickness": 2e-3,
    "bulk_width": 4e-3,
    "box_width": 20e-3,
    "box_height": 20e-3,
}


def build_benchmark_geometry(preset: str = "axi20", params: Mapping | None = None,
                             sizing: MeshSizing | None = None) -> GeometrySpec:
    """Return the geometry of a named benchmark.

    ``axi20`` is an axisymmetric 20-turn foil winding around an open core,
    ``hts20`` a planar stack of 20 thin superconducting tapes. ``custom``
    expects the ``axi20``-style keys plus ``coordinate_system`` and builds
    the same layout with arbitrary dimensions (core optional).
    """
    params = dict(params or {})
    if preset == "axi20":
        p = {**AXI20_DEFAULTS, **params}
        p["coordinate_system"] = AXISYMMETRIC
        return _winding_geometry(p, sizing or AXI20_SIZING)
    if preset == "hts20":
        p = {**HTS20_DEFAULTS, **params}
        for key in p:
            if key not in HTS20_DEFAULTS:
                raise GeometryError(f"unknown hts20 parameter {key!r}")
        _check_positive(p)
        L, w = p["bulk_thickness"], p["bulk_width"]
        box = Rect("air", -p["box_width"] / 2, p["box_width"] / 2,
                   -p["box_height"] / 2, p["box_height"] / 2)
        bulk = Rect("bulk", -L / 2, L / 2, -w / 2, w / 2)
        regions = _turn_stack(-L / 2, L, -w / 2, w / 2, int(p["n_turns"]), p["fill_factor"])
        default = MeshSizing(cells_per_turn=1, cells_across_width=32, core_size=1e-3,
                             max_size=2e-3, growth=0.3)
        return GeometrySpec(PLANAR, box, tuple(regions), bulk, int(p["n_turns"]),
                            float(p["fill_factor"]), sizing or default)
    if preset == "custom":
        p = {**AXI20_DEFAULTS, **params}
        p.setdefault("coordinate_system", AXISYMMETRIC)
        return _winding_geometry(p, sizing or MeshSizing())
    raise GeometryError(f"unknown geometry preset {preset!r}")


def _check_positive(p):
    for key, value in p.items():
        if key == "coordinate_system":
            continue
        if not isinstance(value, (int, float)) or value <= 0:
            if key in ("core_radius", "core_height") and value == 0:
                continue
            raise GeometryError(f"parameter {key!r} must be positive, got {value!r}")


def _winding_geometry(p, sizing: MeshSizing) -> GeometrySpec:
    allowed = set(AXI20_DEFAULTS) | {"coordinate_system"}
    for key in p:
        if key not in allowed:
            raise GeometryError(f"unknown geometry parameter {key!r}")
    _check_positive(p)
    axi = p["coordinate_system"] == AXISYMMETRIC
    n = int(p["n_turns"])
    r0, L, w = p["bulk_inner_radius"], p["bulk_thickness"], p["bulk_width"]
    x_box0 = 0.0 if axi else -p["box_radius"]
    box = Rect("air", x_box0, p["box_radius"], -p["box_height"] / 2, p["box_height"] / 2)
    bulk = Rect("bulk", r0, r0 + L, -w / 2, w / 2)
    regions = []
    if p["core_radius"] > 0 and p["core_height"] > 0:
        cx0 = 0.0 if axi else -p["core_radius"]
        regions.append(Rect("core", cx0, p["core_radius"], -p["core_height"] / 2, p["core_height"] / 2))
    regions += _turn_stack(r0, L, -w / 2, w / 2, n, p["fill_factor"])
    return GeometrySpec(p["coordinate_system"], box, tuple(regions), bulk, n,
                        float(p["fill_factor"]), sizing)


# --------------------------------------------------------------------------
# Mesh


@dataclass(frozen=True, eq=False)
class Mesh:
    """Linear triangle mesh with oriented edges and region tags.

    Edges are oriented from the lower to the higher node index. Local edge
    ``k`` of a triangle joins its local vertices ``k`` and ``(k + 1) % 3``.
    """

    nodes: np.ndarray
    triangles: np.ndarray
    tri_region: np.ndarray
    region_names: tuple[str, ...]
    coordinate_system: str = PLANAR
    boundary_tags: Mapping[str, np.ndarray] = field(default_factory=dict)
    geometry: GeometrySpec | None = None

    def __post_init__(self):
        for arr in (self.nodes, self.triangles, self.tri_region):
            arr.setflags(write=False)

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @cached_property
    def _edge_data(self):
        tris = self.triangles
        local = np.stack([tris[:, [0, 1]], tris[:, [1, 2]], tris[:, [2, 0]]], axis=1)
        flat = local.reshape(-1, 2)
        key = np.sort(flat, axis=1)
        edges, inverse = np.unique(key, axis=0, return_inverse=True)
        inverse = inverse.reshape(-1)
        tri_edges = inverse.reshape(-1, 3)
        signs = np.where(flat[:, 0] < flat[:, 1], 1, -1).reshape(-1, 3)
        count = np.bincount(inverse, minlength=len(edges))
        if np.any(count > 2):
            bad = edges[np.argmax(count)].tolist()
            raise GeometryError(f"edge {bad} shared by more than two triangles")
        order = np.argsort(inverse, kind="stable")
        owner = order // 3
        first = np.concatenate([[0], np.cumsum(count)[:-1]])
        edge_tris = -np.ones((len(edges), 2), dtype=np.int64)
        edge_tris[:, 0] = owner[first]
        two = count == 2
        edge_tris[two, 1] = owner[first[two] + 1]
        for arr in (edges, tri_edges, signs, edge_tris):
            arr.setflags(write=False)
        return edges, tri_edges, signs, edge_tris

    @property
    def edges(self) -> np.ndarray:
        return self._edge_data[0]

    @property
    def tri_edges(self) -> np.ndarray:
        return self._edge_data[1]

    @property
    def tri_edge_signs(self) -> np.ndarray:
        return self._edge_data[2]

    @property
    def edge_triangles(self) -> np.ndarray:
        return self._edge_data[3]

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @cached_property
    def boundary_edges(self) -> np.ndarray:
        return np.flatnonzero(self.edge_triangles[:, 1] < 0)

    @cached_property
    def boundary_nodes(self) -> np.ndarray:
        return np.unique(self.edges[self.boundary_edges])

    @cached_property
    def signed_areas(self) -> np.ndarray:
        p = self.nodes[self.triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    @cached_property
    def centroids(self) -> np.ndarray:
        return self.nodes[self.triangles].mean(axis=1)

    def region_id(self, name: str) -> int:
        try:
            return self.region_names.index(name)
        except ValueError:
            raise KeyError(f"unknown region {name!r}") from None

    def region_mask(self, *names: str) -> np.ndarray:
        """Triangle mask of the union of the named regions (prefix ``turn:*`` allowed)."""
        ids = []
        for name in names:
            if name.endswith("*"):
                ids += [i for i, n in enumerate(self.region_names) if n.startswith(name[:-1])]
            else:
                ids.append(self.region_id(name))
        return np.isin(self.tri_region, ids)

    def turn_regions(self) -> list[str]:
        names = [n for n in self.region_names if n.startswith("turn:")]
        present = set(np.unique(self.tri_region).tolist())
        names = [n for n in names if self.region_id(n) in present]
        return sorted(names, key=lambda n: int(n.split(":")[1]))

    def bulk_mask(self) -> np.ndarray:
        """Triangles of the homogenized foil-winding bulk."""
        names = [n for n in self.region_names if n == "bulk" or n.startswith(("turn:", "gap:"))]
        if not names:
            raise KeyError("mesh has no winding regions")
        return self.region_mask(*names)

    @cached_property
    def node_triangles(self) -> list[np.ndarray]:
        order = np.argsort(self.triangles.reshape(-1), kind="stable")
        owners = order // 3
        counts = np.bincount(self.triangles.reshape(-1), minlength=self.n_nodes)
        return np.split(owners, np.cumsum(counts)[:-1])

    def euler_characteristic(self) -> int:
        return self.n_nodes - self.n_edges + self.n_triangles


def _size_profile(breaks, fine, max_size, growth):
    """Cell boundaries on one axis at refinement 1.

    ``fine`` maps interval index -> prescribed cell size; other intervals are
    graded from neighbouring prescribed sizes.
    """
    fine_iv = [(breaks[i], breaks[i + 1], h) for i, h in fine.items()]

    def size(x):
        s = np.full_like(x, max_size)
        for a, b, h in fine_iv:
            d = np.maximum(np.maximum(a - x, x - b), 0.0)
            s = np.minimum(s, h + growth * d)
        return s

    points = [breaks[0]]
    for i in range(len(breaks) - 1):
        a, b = breaks[i], breaks[i + 1]
        if i in fine:
            n = max(1, math.ceil((b - a) / fine[i] - 1e-9))
            pts = np.linspace(a, b, n + 1)
        else:
            xs = np.linspace(a, b, 2001)
            inv = 1.0 / size(xs)
            cum = np.concatenate([[0.0], np.cumsum(0.5 * (inv[1:] + inv[:-1]) * np.diff(xs))])
            n = max(1, math.ceil(cum[-1] - 1e-9))
            pts = np.interp(np.linspace(0, cum[-1], n + 1), cum, xs)
            pts[0], pts[-1] = a, b
        points.extend(pts[1:])
    return np.asarray(points)


def _refine_axis(points, k):
    if k == 1:
        return points
    out = [points[:1]]
    for a, b in zip(points[:-1], points[1:]):
        out.append(np.linspace(a, b, k + 1)[1:])
    return np.concatenate(out)


def _axis_breaks(values, tol):
    values = np.sort(np.asarray(values, dtype=float))
    keep = [values[0]]
    for v in values[1:]:
        if v - keep[-1] > tol:
            keep.append(v)
    return np.asarray(keep)


def generate_structured_mesh(geom: GeometrySpec, refinement: int = 1) -> Mesh:
    """Tensor-product triangulation conforming to every region interface.

    Breakpoints are collected from all rectangles and from the virtual-foil
    strip boundaries of the bulk. Every cell is split along its rising
    diagonal. Refinement ``k`` splits each level-1 cell into k x k cells.
    """
    if int(refinement) != refinement or refinement < 1:
        raise GeometryError("refinement must be a positive integer")
    refinement = int(refinement)
    s = geom.sizing
    size_box = max(geom.box.x1 - geom.box.x0, geom.box.y1 - geom.box.y0)
    tol = 1e-9 * size_box
    rects = (geom.box, geom.bulk) + geom.regions
    L = geom.bulk.x1 - geom.bulk.x0
    strips = geom.bulk.x0 + L * np.arange(geom.n_turns + 1) / geom.n_turns
    xb = _axis_breaks([v for r in rects for v in (r.x0, r.x1)] + list(strips), tol)
    yb = _axis_breaks([v for r in rects for v in (r.y0, r.y1)], tol)

    h_alpha = L / (geom.n_turns * s.cells_per_turn)
    h_beta = (geom.bulk.y1 - geom.bulk.y0) / s.cells_across_width
    core = [r for r in geom.regions if r.name == "core"]

    def prescribed(breaks, lo, hi, h, out, core_lo=None, core_hi=None):
        for i in range(len(breaks) - 1):
            mid = 0.5 * (breaks[i] + breaks[i + 1])
            if lo - tol <= mid <= hi + tol:
                out[i] = min(out.get(i, np.inf), h)
            elif core_lo is not None and core_lo - tol <= mid <= core_hi + tol:
                out[i] = min(out.get(i, np.inf), s.core_size)
        return out

    fx, fy = {}, {}
    prescribed(xb, geom.bulk.x0, geom.bulk.x1, h_alpha, fx,
               *( (core[0].x0, core[0].x1) if core else (None, None)))
    prescribed(yb, geom.bulk.y0, geom.bulk.y1, h_beta, fy,
               *( (core[0].y0, core[0].y1) if core else (None, None)))
    xs = _refine_axis(_size_profile(xb, fx, s.max_size, s.growth), refinement)
    ys = _refine_axis(_size_profile(yb, fy, s.max_size, s.growth), refinement)
    if s.width_grading > 0:
        ys = _grade_span(ys, geom.bulk.y0, geom.bulk.y1, s.width_grading, tol)
    return _tensor_mesh(xs, ys, geom)


def _grade_span(coords, lo, hi, g, tol):
    """Blend the points inside [lo, hi] towards cosine spacing (clustered at both ends)."""
    inside = (coords > lo + tol) & (coords < hi - tol)
    t = (coords[inside] - lo) / (hi - lo)
    coords = coords.copy()
    coords[inside] = lo + (hi - lo) * ((1.0 - g) * t + g * 0.5 * (1.0 - np.cos(np.pi * t)))
    return coords


def _tensor_mesh(xs, ys, geom: GeometrySpec) -> Mesh:
    nx, ny = len(xs) - 1, len(ys) - 1
    X, Y = np.meshgrid(xs, ys)
    nodes = np.column_stack([X.ravel(), Y.ravel()])
    i, j = np.meshgrid(np.arange(nx), np.arange(ny))
    i, j = i.ravel(), j.ravel()
    n00 = j * (nx + 1) + i
    n10, n01, n11 = n00 + 1, n00 + nx + 1, n00 + nx + 2
    tris = np.empty((2 * len(n00), 3), dtype=np.int64)
    tris[0::2] = np.column_stack([n00, n10, n11])
    tris[1::2] = np.column_stack([n00, n11, n01])

    names = ["air"] + [r.name for r in geom.regions]
    cx = 0.5 * (xs[i] + xs[i + 1])
    cy = 0.5 * (ys[j] + ys[j + 1])
    cell_region = np.zeros(len(n00), dtype=np.int64)
    for k, r in enumerate(geom.regions, start=1):
        cell_region[r.contains(cx, cy)] = k
    tri_region = np.repeat(cell_region, 2)

    mesh = Mesh(nodes, tris, tri_region, tuple(names), geom.coordinate_system, {}, geom)
    bedges = mesh.boundary_edges
    p = nodes[mesh.edges[bedges]]
    on_axis = np.all(np.abs(p[:, :, 0]) <= 1e-12 * max(xs[-1] - xs[0], 1.0), axis=1)
    tags = {"outer": bedges}
    if geom.coordinate_system == AXISYMMETRIC and xs[0] == 0.0:
        tags = {"axis": bedges[on_axis], "outer": bedges[~on_axis]}
    object.__setattr__(mesh, "boundary_tags", tags)
    return mesh


def rectangle_mesh(x0: float, x1: float, y0: float, y1: float, nx: int, ny: int,
                   region: str = "air", coordinate_system: str = PLANAR) -> Mesh:
    """Uniform mesh of one rectangle tagged as a single region."""
    if nx < 1 or ny < 1 or not (x1 > x0 and y1 > y0):
        raise GeometryError("rectangle mesh needs a non-empty box and at least one cell")
    xs, ys = np.linspace(x0, x1, nx + 1), np.linspace(y0, y1, ny + 1)
    X, Y = np.meshgrid(xs, ys)
    nodes = np.column_stack([X.ravel(), Y.ravel()])
    i, j = np.meshgrid(np.arange(nx), np.arange(ny))
    n00 = (j * (nx + 1) + i).ravel()
    tris = np.empty((2 * len(n00), 3), dtype=np.int64)
    tris[0::2] = np.column_stack([n00, n00 + 1, n00 + nx + 2])
    tris[1::2] = np.column_stack([n00, n00 + nx + 2, n00 + nx + 1])
    mesh = Mesh(nodes, tris, np.zeros(len(tris), dtype=np.int64), (region,), coordinate_system)
    object.__setattr__(mesh, "boundary_tags", {"outer": mesh.boundary_edges})
    return mesh


# --------------------------------------------------------------------------
# Gmsh ASCII 2.2 subset


def read_msh(path: str | Path, coordinate_system: str = PLANAR) -> Mesh:
    """Read an ASCII mesh file (format 2.2) with line and triangle elements only."""
    path = Path(path)
    lines = path.read_text().splitlines()
    pos = 0

    def next_line():
        nonlocal pos
        if pos >= len(lines):
            raise MeshFormatError("unexpected end of file", pos)
        pos += 1
        return lines[pos - 1].strip()

    sections = {}
    phys_names = {}
    while pos < len(lines):
        head = next_line()
        if not head:
            continue
        if not head.startswith("$"):
            raise MeshFormatError(f"expected a section header, got {head!r}", pos)
        name = head[1:]
        start = pos
        body = []
        while True:
            ln = next_line()
            if ln == f"$End{name}":
                break
            if ln.startswith("$"):
                raise MeshFormatError(f"section ${name} not terminated", pos)
            body.append((pos, ln))
        sections[name] = (start, body)

    for required in ("MeshFormat", "Nodes", "Elements"):
        if required not in sections:
            raise MeshFormatError(f"missing section ${required}")
    ln_no, fmt = sections["MeshFormat"][1][0]
    version = fmt.split()
    if not version or not version[0].startswith("2") or (len(version) > 1 and version[1] != "0"):
        raise MeshFormatError(f"unsupported mesh format {fmt!r}", ln_no)

    if "PhysicalNames" in sections:
        body = sections["PhysicalNames"][1]
        for ln_no, ln in body[1:]:
            parts = ln.split(maxsplit=2)
            if len(parts) != 3:
                raise MeshFormatError("malformed physical name", ln_no)
            phys_names[(int(parts[0]), int(parts[1]))] = parts[2].strip('"')

    body = sections["Nodes"][1]
    n_nodes = int(body[0][1])
    if len(body) - 1 != n_nodes:
        raise MeshFormatError(f"expected {n_nodes} nodes, found {len(body) - 1}", body[0][0])
    node_index = {}
    coords = np.empty((n_nodes, 2))
    for k, (ln_no, ln) in enumerate(body[1:]):
        parts = ln.split()
        if len(parts) != 4:
            raise MeshFormatError("malformed node line", ln_no)
        z = float(parts[3])
        if z != 0.0:
            raise MeshFormatError("node outside the z = 0 plane", ln_no)
        node_index[int(parts[0])] = k
        coords[k] = float(parts[1]), float(parts[2])

    body = sections["Elements"][1]
    n_elem = int(body[0][1])
    if len(body) - 1 != n_elem:
        raise MeshFormatError(f"expected {n_elem} elements, found {len(body) - 1}", body[0][0])
    tris, tri_tag, lines_, line_tag = [], [], [], []
    for ln_no, ln in body[1:]:
        parts = [int(v) for v in ln.split()]
        etype, ntags = parts[1], parts[2]
        phys = parts[3] if ntags > 0 else 0
        conn = parts[3 + ntags:]
        try:
            conn = [node_index[c] for c in conn]
        except KeyError:
            raise MeshFormatError("element references an unknown node", ln_no) from None
        if etype == 2 and len(conn) == 3:
            tris.append(conn)
            tri_tag.append(phys)
        elif etype == 1 and len(conn) == 2:
            lines_.append(conn)
            line_tag.append(phys)
        else:
            raise MeshFormatError(f"unsupported element type {etype}", ln_no)
    if not tris:
        raise MeshFormatError("no triangle elements")

    tris = np.asarray(tris, dtype=np.int64)
    p = coords[tris]
    area2 = (p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1]) - (p[:, 2, 0] - p[:, 0, 0]) * (p[:, 1, 1] - p[:, 0, 1])
    if np.any(area2 == 0):
        raise MeshFormatError("degenerate triangle")
    flip = area2 < 0
    tris[flip] = tris[flip][:, [0, 2, 1]]

    tags = sorted(set(tri_tag))
    names = tuple(phys_names.get((2, t), f"region{t}") for t in tags)
    tri_region = np.searchsorted(tags, tri_tag)
    mesh = Mesh(coords, tris, tri_region, names, coordinate_system)
    bt = {}
    if lines_:
        keys = {tuple(e): k for k, e in enumerate(mesh.edges.tolist())}
        for (a, b), tag in zip(lines_, line_tag):
            e = keys.get((min(a, b), max(a, b)))
            if e is None:
                raise MeshFormatError(f"line element ({a}, {b}) is not a triangle edge")
            bt.setdefault(phys_names.get((1, tag), f"boundary{tag}"), []).append(e)
    object.__setattr__(mesh, "boundary_tags", {k: np.asarray(sorted(v)) for k, v in bt.items()})
    return mesh


def write_msh(mesh: Mesh, path: str | Path) -> None:
    """Write ``mesh`` in the ASCII 2.2 subset understood by :func:`read_msh`."""
    out = ["$MeshFormat", "2.2 0 8", "$EndMeshFormat"]
    btags = list(mesh.boundary_tags)
    names = [(1, k + 1, n) for k, n in enumerate(btags)]
    names += [(2, 100 + k, n) for k, n in enumerate(mesh.region_names)]
    out += ["$PhysicalNames", str(len(names))]
    out += [f'{d} {t} "{n}"' for d, t, n in names]
    out.append("$EndPhysicalNames")
    out += ["$Nodes", str(mesh.n_nodes)]
    out += [f"{k + 1} {x:.17g} {y:.17g} 0" for k, (x, y) in enumerate(mesh.nodes)]
    out.append("$EndNodes")
    elems = []
    for k, name in enumerate(btags):
        for e in mesh.boundary_tags[name]:
            a, b = mesh.edges[e]
            elems.append(f"1 2 {k + 1} {k + 1} {a + 1} {b + 1}")
    for tri, reg in zip(mesh.triangles, mesh.tri_region):
        elems.append(f"2 2 {100 + reg} {100 + reg} {tri[0] + 1} {tri[1] + 1} {tri[2] + 1}")
    out += ["$Elements", str(len(elems))]
    out += [f"{k + 1} {e}" for k, e in enumerate(elems)]
    out.append("$EndElements")
    Path(path).write_text("\n".join(out) + "\n")


# --------------------------------------------------------------------------
# alpha coordinate


@dataclass(frozen=True)
class AlphaMap:
    """Affine map of the stacking coordinate onto alpha in [0, 1]."""

    origin: float
    thickness: float
    axis: int = 0

    def __call__(self, points) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        return np.clip((points[..., self.axis] - self.origin) / self.thickness, 0.0, 1.0)


def alpha_of(point, amap: AlphaMap) -> float | np.ndarray:
    """Alpha coordinate of points inside the bulk; raises outside it."""
    pts = np.asarray(point, dtype=float)
    a = (pts[..., amap.axis] - amap.origin) / amap.thickness
    if np.any(a < -1e-12) or np.any(a > 1 + 1e-12):
        raise ValueError("point lies outside the homogenized bulk")
    a = np.clip(a, 0.0, 1.0)
    return float(a) if a.ndim == 0 else a


def iter_strips(n: int) -> Iterable[tuple[float, float]]:
    for i in range(n):
        yield i / n, (i + 1) / n
