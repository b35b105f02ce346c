"""First-order nodal and edge elements on triangles, quadrature and assembly.

All element quantities are evaluated for every triangle at once. Integrals
use the planar measure dA or, in axisymmetric meshes, 2*pi*r dA unless an
explicit ``weight`` is given.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Union

import numpy as np
import scipy.sparse as sp

from .mesh import AXISYMMETRIC, Mesh

LOCAL_EDGES = np.array([[0, 1], [1, 2], [2, 0]])

Coefficient = Union[float, np.ndarray, Callable[[np.ndarray], np.ndarray]]


@dataclass(frozen=True)
class QuadratureRule:
    points: np.ndarray  # barycentric (nq, 3)
    weights: np.ndarray  # sum = 1/2
    order: int

    @property
    def xi(self) -> np.ndarray:
        """Reference coordinates (xi, eta) = (lambda_2, lambda_3)."""
        return self.points[:, 1:]


def _sym3(a, w):
    b = 1.0 - 2.0 * a
    return [(a, a, b), (a, b, a), (b, a, a)], [w] * 3


def quadrature(order: int) -> QuadratureRule:
    """Symmetric rule on the reference triangle, exact up to ``order``."""
    if order == 1:
        pts, wts = [(1 / 3, 1 / 3, 1 / 3)], [1.0]
    elif order == 2:
        pts, wts = _sym3(1 / 6, 1 / 3)
    elif order in (3, 4):
        # degree-4 six-point rule: the classical degree-3 rules carry a negative weight
        p1, w1 = _sym3(0.445948490915965, 0.223381589678011)
        p2, w2 = _sym3(0.091576213509771, 0.109951743655322)
        pts, wts = p1 + p2, w1 + w2
    else:
        raise ValueError(f"unsupported quadrature order {order}")
    w = np.asarray(wts)
    return QuadratureRule(np.asarray(pts), 0.5 * w / w.sum(), order)


def eval_nodal(ref_point):
    """Barycentric values and reference gradients at ``ref_point`` = (xi, eta)."""
    xi, eta = ref_point
    values = np.array([1.0 - xi - eta, xi, eta])
    grads = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])
    return values, grads


def triangle_gradients(coords: np.ndarray):
    """Areas (T,) and physical barycentric gradients (T, 3, 2) of triangles (T, 3, 2)."""
    x, y = coords[..., 0], coords[..., 1]
    area2 = (x[:, 1] - x[:, 0]) * (y[:, 2] - y[:, 0]) - (x[:, 2] - x[:, 0]) * (y[:, 1] - y[:, 0])
    grads = np.empty(coords.shape[:1] + (3, 2))
    grads[:, 0, 0] = y[:, 1] - y[:, 2]
    grads[:, 0, 1] = x[:, 2] - x[:, 1]
    grads[:, 1, 0] = y[:, 2] - y[:, 0]
    grads[:, 1, 1] = x[:, 0] - x[:, 2]
    grads[:, 2, 0] = y[:, 0] - y[:, 1]
    grads[:, 2, 1] = x[:, 1] - x[:, 0]
    grads /= area2[:, None, None]
    return 0.5 * area2, grads


def _cross(a, b):
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def edge_functions(lam: np.ndarray, grads: np.ndarray):
    """Whitney 1-forms of the three local edges.

    ``lam`` (nq, 3) barycentrics, ``grads`` (T, 3, 2). Returns vector values
    (T, nq, 3, 2) and the constant out-of-plane curls (T, 3).
    """
    a, b = LOCAL_EDGES[:, 0], LOCAL_EDGES[:, 1]
    ga, gb = grads[:, a, :], grads[:, b, :]  # (T, 3, 2)
    values = (lam[None, :, a, None] * gb[:, None] - lam[None, :, b, None] * ga[:, None])
    curls = 2.0 * _cross(ga, gb)
    return values, curls


def eval_edge(ref_point, coords=None):
    """Edge-function values (3, 2) and curls (3,) at one point of a triangle.

    Without ``coords`` the reference triangle is used.
    """
    if coords is None:
        coords = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    lam, _ = eval_nodal(ref_point)
    _, grads = triangle_gradients(np.asarray(coords, dtype=float)[None])
    values, curls = edge_functions(lam[None], grads)
    return values[0, 0], curls[0]


@dataclass(frozen=True)
class ElementData:
    """Per-triangle geometry at the quadrature points of one rule."""

    rule: QuadratureRule
    area: np.ndarray  # (T,)
    grads: np.ndarray  # (T, 3, 2)
    points: np.ndarray  # (T, nq, 2)
    dA: np.ndarray  # (T, nq) quadrature weight times 2|T|, plain measure
    measure: np.ndarray  # (T, nq) 1 or 2 pi r

    @property
    def lam(self) -> np.ndarray:
        return self.rule.points


_cache: dict = {}


def element_data(mesh: Mesh, order: int = 2) -> ElementData:
    key = (id(mesh), order)
    hit = _cache.get(key)
    if hit is not None and hit[0] is mesh:
        return hit[1]
    rule = quadrature(order)
    coords = mesh.nodes[mesh.triangles]
    area, grads = triangle_gradients(coords)
    if np.any(area <= 0):
        raise ValueError("mesh contains triangles with non-positive area")
    points = np.einsum("qk,tkd->tqd", rule.points, coords)
    dA = 2.0 * area[:, None] * rule.weights[None, :]
    if mesh.coordinate_system == AXISYMMETRIC:
        measure = 2.0 * np.pi * points[..., 0]
    else:
        measure = np.ones_like(dA)
    data = ElementData(rule, area, grads, points, dA, measure)
    if len(_cache) > 16:
        _cache.clear()
    _cache[key] = (mesh, data)
    return data


def _coefficient(coef: Coefficient, ed: ElementData, mask=None) -> np.ndarray:
    shape = ed.dA.shape
    if callable(coef):
        c = np.broadcast_to(np.asarray(coef(ed.points)), shape)
    else:
        c = np.asarray(coef)
        if c.ndim == 0:
            c = np.broadcast_to(c, shape)
        elif c.ndim == 1:
            c = np.broadcast_to(c[:, None], shape)
        elif c.shape != shape:
            raise ValueError(f"coefficient shape {c.shape} does not match {shape}")
    if mask is not None:
        c = np.where(mask[:, None], c, 0.0)
    return c


def _weight(weight, ed: ElementData) -> np.ndarray:
    if isinstance(weight, str):
        if weight == "measure":
            return ed.dA * ed.measure
        if weight == "area":
            return ed.dA
        raise ValueError(f"unknown weight {weight!r}")
    if weight is None:
        return ed.dA * ed.measure
    if callable(weight):
        return ed.dA * weight(ed.points)
    return ed.dA * np.broadcast_to(np.asarray(weight), ed.dA.shape)


NODAL_TERMS = ("mass_scalar", "gradgrad", "source")
EDGE_TERMS = ("mass_vector", "curlcurl", "mixed_grad_curl")


def assemble(term: str, mesh: Mesh, coefficient: Coefficient = 1.0, *, weight=None,
             order: int = 2, mask: np.ndarray | None = None):
    """Global matrix (bilinear terms) or vector (``source``, ``mixed_grad_curl``).

    Bilinear terms: ``mass_scalar`` (c l_i l_j), ``gradgrad`` (c grad l_i .
    grad l_j), ``mass_vector`` (c psi_a . psi_b), ``curlcurl`` (c curl psi_a
    curl psi_b). Linear terms: ``source`` (c l_i) on nodes and
    ``mixed_grad_curl`` (c curl psi_a), which pairs a prescribed
    out-of-plane field with the curl of the edge test functions.

    ``coefficient`` may be a scalar, a per-triangle array, an array at the
    quadrature points or a callable of the quadrature points. NaN values in
    the integrated region raise. ``mask`` restricts integration to a subset
    of triangles.
    """
    ed = element_data(mesh, order)
    c = _coefficient(coefficient, ed, mask)
    if np.any(np.isnan(c)):
        bad = np.flatnonzero(np.isnan(c).any(axis=1))[0]
        name = mesh.region_names[mesh.tri_region[bad]]
        raise ValueError(f"coefficient undefined on region {name!r}")
    w = c * _weight(weight, ed)  # (T, nq)
    if term in ("mass_scalar", "gradgrad", "source"):
        conn = mesh.triangles
        n = mesh.n_nodes
        if term == "mass_scalar":
            lam = ed.lam
            local = np.einsum("tq,qi,qj->tij", w, lam, lam)
        elif term == "gradgrad":
            local = np.einsum("tq,tid,tjd->tij", w, ed.grads, ed.grads)
        else:
            vec = np.einsum("tq,qi->ti", w, ed.lam)
            return _scatter_vector(conn, vec, n)
    elif term in EDGE_TERMS:
        conn = mesh.tri_edges
        n = mesh.n_edges
        sgn = mesh.tri_edge_signs
        vals, curls = edge_functions(ed.lam, ed.grads)
        vals = vals * sgn[:, None, :, None]
        curls = curls * sgn
        if term == "mass_vector":
            local = np.einsum("tq,tqid,tqjd->tij", w, vals, vals)
        elif term == "curlcurl":
            local = np.einsum("t,ti,tj->tij", w.sum(axis=1), curls, curls)
        else:
            vec = w.sum(axis=1)[:, None] * curls
            return _scatter_vector(conn, vec, n)
    else:
        raise ValueError(f"unknown term {term!r}")
    return _scatter_matrix(conn, local, n)


def _scatter_matrix(conn, local, n):
    rows = np.repeat(conn, 3, axis=1).reshape(-1)
    cols = np.tile(conn, (1, 3)).reshape(-1)
    data = local.reshape(-1)
    keep = data != 0
    mat = sp.coo_matrix((data[keep], (rows[keep], cols[keep])), shape=(n, n)).tocsr()
    mat.sum_duplicates()
    return mat


def _scatter_vector(conn, vec, n):
    out = np.zeros(n, dtype=np.result_type(vec.dtype, float))
    np.add.at(out, conn.reshape(-1), vec.reshape(-1))
    return out


def curl_matrix(mesh: Mesh) -> sp.csr_matrix:
    """Triangle-by-edge matrix of constant element curls."""
    ed = element_data(mesh, 1)
    _, curls = edge_functions(ed.lam, ed.grads)
    curls = curls * mesh.tri_edge_signs
    rows = np.repeat(np.arange(mesh.n_triangles), 3)
    return sp.csr_matrix((curls.reshape(-1), (rows, mesh.tri_edges.reshape(-1))),
                         shape=(mesh.n_triangles, mesh.n_edges))


def circulation_matrix(mesh: Mesh) -> sp.csr_matrix:
    """Triangle-by-edge incidence: signed sum of edge values around each triangle."""
    rows = np.repeat(np.arange(mesh.n_triangles), 3)
    return sp.csr_matrix((mesh.tri_edge_signs.reshape(-1).astype(float),
                          (rows, mesh.tri_edges.reshape(-1))),
                         shape=(mesh.n_triangles, mesh.n_edges))


def gradient_matrix(mesh: Mesh) -> sp.csr_matrix:
    """Edge-by-node discrete gradient: value(head) - value(tail)."""
    e = mesh.edges
    n = mesh.n_edges
    rows = np.repeat(np.arange(n), 2)
    cols = e.reshape(-1)
    data = np.tile([-1.0, 1.0], n)
    return sp.csr_matrix((data, (rows, cols)), shape=(n, mesh.n_nodes))


def edge_values_at(mesh: Mesh, edge_dofs: np.ndarray, order: int = 2) -> np.ndarray:
    """In-plane vector field (T, nq, 2) interpolated from edge circulations."""
    ed = element_data(mesh, order)
    vals, _ = edge_functions(ed.lam, ed.grads)
    coef = edge_dofs[mesh.tri_edges] * mesh.tri_edge_signs
    return np.einsum("tqid,ti->tqd", vals, coef)


def nodal_values_at(mesh: Mesh, nodal: np.ndarray, order: int = 2) -> np.ndarray:
    ed = element_data(mesh, order)
    return np.einsum("qi,ti->tq", ed.lam, nodal[mesh.triangles])
