"""Degree-of-freedom spaces of the three formulations."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from ..mesh import Mesh
from ..topology import CutCochain, build_cut

FORMULATIONS = ("av", "h", "hphi")
VARIANTS = ("resolved", "fw")


@dataclass(frozen=True, eq=False)
class DofSpace:
    """Unknown layout: field block first, then one unknown per voltage function.

    ``extension`` maps the field block to nodal values (a-v) or to edge
    circulations (h, h-phi). Fixed DoFs are prescribed per unit excitation
    by ``fixed_values``.
    """

    formulation: str
    variant: str
    entity: str
    extension: sp.csr_matrix
    n_voltage: int
    fixed: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    fixed_values: np.ndarray = field(default_factory=lambda: np.zeros(0))
    cuts: tuple[CutCochain, ...] = ()
    cut_dofs: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    free_edges: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    phi_nodes: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    gauge_nodes: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    @property
    def n_field(self) -> int:
        return self.extension.shape[1]

    @property
    def n(self) -> int:
        return self.n_field + self.n_voltage

    @property
    def n_free(self) -> int:
        return self.n - len(self.fixed)

    @property
    def voltage(self) -> slice:
        return slice(self.n_field, self.n)

    def entity_values(self, x: np.ndarray) -> np.ndarray:
        return self.extension @ x[: self.n_field]

    def counts(self) -> dict:
        out = {"total": self.n, "free": self.n_free, "voltage": self.n_voltage}
        if self.formulation == "hphi":
            out.update(h=len(self.free_edges), phi=len(self.phi_nodes) - len(self.gauge_nodes),
                       cuts=len(self.cut_dofs))
        return out


def build_dofspace(mesh: Mesh, formulation: str, variant: str, conductor_id: np.ndarray,
                   n_voltage: int) -> DofSpace:
    """DoF layout for one formulation.

    ``conductor_id`` labels each triangle with its conductor (-1 for
    insulators). Resolved turns carry their own label; the homogenized
    bulk is a single conductor.
    """
    if formulation not in FORMULATIONS:
        raise ValueError(f"unknown formulation {formulation!r}")
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    if formulation == "av":
        bnodes = mesh.boundary_nodes
        free = np.setdiff1d(np.arange(mesh.n_nodes), bnodes)
        P = sp.csr_matrix((np.ones(len(free)), (free, np.arange(len(free)))),
                          shape=(mesh.n_nodes, len(free)))
        return DofSpace("av", variant, "node", P, n_voltage)
    if formulation == "h":
        return DofSpace("h", variant, "edge", sp.identity(mesh.n_edges, format="csr"), n_voltage)
    return _hphi_space(mesh, variant, np.asarray(conductor_id), n_voltage)


def _hphi_space(mesh: Mesh, variant: str, cid: np.ndarray, n_voltage: int) -> DofSpace:
    et = mesh.edge_triangles
    interior = et[:, 1] >= 0
    c0 = cid[et[:, 0]]
    c1 = np.where(interior, cid[np.maximum(et[:, 1], 0)], -2)
    free_edges = np.flatnonzero(interior & (c0 >= 0) & (c0 == c1))
    is_free = np.zeros(mesh.n_edges, bool)
    is_free[free_edges] = True
    grad_edges = np.flatnonzero(~is_free)
    edges = mesh.edges

    phi_nodes = np.unique(edges[grad_edges].ravel())
    local = -np.ones(mesh.n_nodes, dtype=np.int64)
    local[phi_nodes] = np.arange(len(phi_nodes))
    # one gauge node per connected component of the potential graph
    g = edges[grad_edges]
    adj = sp.coo_matrix((np.ones(len(g)), (local[g[:, 0]], local[g[:, 1]])),
                        shape=(len(phi_nodes),) * 2)
    ncomp, labels = connected_components(adj, directed=False)
    gauge_local = np.array([np.flatnonzero(labels == c)[0] for c in range(ncomp)], dtype=np.int64)
    gauge = phi_nodes[gauge_local]
    keep = np.ones(len(phi_nodes), bool)
    keep[gauge_local] = False
    col_of = -np.ones(mesh.n_nodes, dtype=np.int64)
    nf = len(free_edges)
    col_of[phi_nodes[keep]] = nf + np.arange(keep.sum())
    n_phi = int(keep.sum())

    conductors = cid >= 0
    ncond = int(cid.max()) + 1 if conductors.any() else 0
    cuts = []
    for k in range(ncond):
        mask = cid == k
        cuts.append(build_cut(mesh, mask, conductors))
        if variant == "resolved":
            name = mesh.region_names[mesh.tri_region[np.flatnonzero(mask)[0]]]
            object.__setattr__(cuts[-1], "region", name)
    cut_cols = nf + n_phi + np.arange(ncond)

    rows, cols, vals = [free_edges], [np.arange(nf)], [np.ones(nf)]
    tail, head = edges[grad_edges, 0], edges[grad_edges, 1]
    for node, sign in ((head, 1.0), (tail, -1.0)):
        c = col_of[node]
        ok = c >= 0
        rows.append(grad_edges[ok])
        cols.append(c[ok])
        vals.append(np.full(ok.sum(), sign))
    for k, cut in enumerate(cuts):
        nz = np.flatnonzero(cut.coefficients)
        if np.any(is_free[nz]):
            raise RuntimeError("cut support overlaps conductor-interior edges")
        rows.append(nz)
        cols.append(np.full(len(nz), cut_cols[k]))
        vals.append(cut.coefficients[nz])
    T = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(mesh.n_edges, nf + n_phi + ncond))
    fixed = cut_cols if variant == "resolved" else np.zeros(0, dtype=np.int64)
    fixed_values = np.ones(len(fixed))
    return DofSpace("hphi", variant, "edge", T, n_voltage, fixed, fixed_values, tuple(cuts),
                    cut_cols, free_edges, phi_nodes, gauge)
