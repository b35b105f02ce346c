"""Global systems for the a-v, full-h and h-phi formulations.

Every system is stored in DAE form ``M dx/dt + K x + N(x) = b I(t)`` with
``I`` the transport current per turn. Field rows come first, then one row per
voltage function. Voltages are drops along the current direction, so the
turn resistance is positive.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from ..fem_kernel import assemble, curl_matrix, element_data
from ..mesh import AXISYMMETRIC, Mesh
from ..solvers import HtsLaw
from .dofs import DofSpace, build_dofspace
from .materials import (CapabilityError, ElementMaterials, FoilWindingSpec, MaterialField,
                        element_materials)


@dataclass(frozen=True, eq=False)
class NonlinearTerm:
    """Power-law resistivity on a triangle subset.

    ``D`` maps the unknowns to the element current density (constant per
    triangle), ``weights`` holds the weighted element measure.
    """

    D: sp.csr_matrix
    weights: np.ndarray
    law: HtsLaw
    triangles: np.ndarray

    def current_density(self, x: np.ndarray) -> np.ndarray:
        return self.D @ x

    def residual(self, x: np.ndarray) -> np.ndarray:
        j = self.D @ x
        return self.D.T @ (self.weights * self.law.field(j))

    def tangent(self, x: np.ndarray, min_slope: float = 0.0) -> sp.csr_matrix:
        j = self.D @ x
        d = self.weights * np.maximum(self.law.conductance_slope(j), min_slope)
        return (self.D.T @ sp.diags(d) @ self.D).tocsr()

    def dissipation(self, x: np.ndarray) -> float:
        j = self.D @ x
        return float(np.sum(self.weights * self.law.field(j) * j))


@dataclass(eq=False)
class AssembledSystem:
    """Assembled DAE with everything post-processing needs."""

    mesh: Mesh
    dofspace: DofSpace
    M: sp.csr_matrix
    K: sp.csr_matrix
    b: np.ndarray
    materials: ElementMaterials
    profiles: np.ndarray  # (n_voltage, T, nq) voltage test functions q_k at quadrature points
    voltage_rhs: np.ndarray  # s_k
    order: int = 2
    fw_spec: FoilWindingSpec | None = None
    nonlinear: NonlinearTerm | None = None
    symmetrize_rows: np.ndarray | None = None  # rows multiplied by j omega in harmonic form
    info: dict = field(default_factory=dict)

    @property
    def formulation(self) -> str:
        return self.dofspace.formulation

    @property
    def variant(self) -> str:
        return self.dofspace.variant

    @property
    def n(self) -> int:
        return self.dofspace.n

    @property
    def fixed(self) -> np.ndarray:
        return self.dofspace.fixed

    @property
    def fixed_values(self) -> np.ndarray:
        return self.dofspace.fixed_values

    def harmonic_matrix(self, omega: float) -> tuple[sp.csr_matrix, np.ndarray]:
        """Complex matrix jw M + K and per-unit-current load, a-v rows scaled to be symmetric."""
        if self.nonlinear is not None:
            raise CapabilityError("harmonic analysis needs a linear model")
        A = (1j * omega * self.M + self.K).tocsr()
        b = self.b.astype(complex)
        if self.symmetrize_rows is not None:
            s = np.ones(self.n, dtype=complex)
            s[self.symmetrize_rows] = 1j * omega
            A = (sp.diags(s) @ A).tocsr()
            b = s * b
        return A, b


def _profiles(mesh: Mesh, elem: ElementMaterials, variant: str, fw_spec, order: int):
    ed = element_data(mesh, order)
    if variant == "resolved":
        n = int(elem.conductor_id.max()) + 1
        q = np.zeros((n, mesh.n_triangles, ed.dA.shape[1]))
        for k in range(n):
            q[k, elem.conductor_id == k] = 1.0
        return q, np.ones(n)
    alpha = fw_spec.alpha_map(ed.points)
    q = fw_spec.basis(alpha) * (elem.conductor_id == 0)[None, :, None]
    return q, fw_spec.n_turns * fw_spec.basis.integrals()


def _prepare(mesh, materials, variant, fw_spec, order):
    materials = materials or MaterialField()
    elem = element_materials(mesh, materials, variant, fw_spec)
    if variant == "fw" and not np.any(elem.conductor_id == 0):
        raise ValueError("mesh has no winding bulk")
    q, s = _profiles(mesh, elem, variant, fw_spec, order)
    return materials, elem, q, s


def assemble_av(mesh: Mesh, materials: MaterialField | None = None, variant: str = "resolved",
                fw_spec: FoilWindingSpec | None = None, order: int = 2) -> AssembledSystem:
    """Magnetic vector potential with turn voltages.

    The nodal unknown is ``a`` in planar meshes and the flux function
    ``r a`` in axisymmetric ones; it vanishes on the whole outer boundary
    and on the axis.
    """
    materials, elem, q, s = _prepare(mesh, materials, variant, fw_spec, order)
    if elem.hts_mask.any():
        raise CapabilityError("the a-v formulation is implemented for linear conductors only")
    ed = element_data(mesh, order)
    if mesh.coordinate_system == AXISYMMETRIC:
        w_field = lambda p: 2.0 * np.pi / p[..., 0]  # noqa: E731
        w_src = lambda p: 1.0 / p[..., 0]  # noqa: E731
    else:
        w_field = w_src = "area"
    Kn = assemble("gradgrad", mesh, elem.nu, weight=w_field, order=order)
    Ms = assemble("mass_scalar", mesh, elem.sigma, weight=w_field, order=order)
    C = np.column_stack([assemble("source", mesh, elem.sigma[:, None] * qk, weight=w_src, order=order)
                         for qk in q])
    g = 1.0 / ed.measure
    G = np.einsum("tq,ktq,ltq->kl", ed.dA * g * elem.sigma[:, None], q, q)

    space = build_dofspace(mesh, "av", variant, elem.conductor_id, len(q))
    P = space.extension
    Cp = sp.csr_matrix(P.T @ C)
    K = sp.bmat([[P.T @ Kn @ P, -Cp], [None, sp.csr_matrix(G)]], format="csr")
    M = sp.bmat([[P.T @ Ms @ P, None], [-Cp.T, sp.csr_matrix((len(q), len(q)))]], format="csr")
    b = np.concatenate([np.zeros(space.n_field), s])
    return AssembledSystem(mesh, space, M, K, b, elem, q, s, order, fw_spec,
                           symmetrize_rows=np.arange(space.n_field))


def _edge_system(mesh, formulation, materials, variant, fw_spec, order):
    materials, elem, q, s = _prepare(mesh, materials, variant, fw_spec, order)
    nv = 0 if (formulation == "hphi" and variant == "resolved") else len(q)
    space = build_dofspace(mesh, formulation, variant, elem.conductor_id, nv)
    rho = elem.rho.copy()
    if formulation == "h":
        rho[~elem.conducting] = materials.spurious_resistivity
    rho[elem.hts_mask] = 0.0
    T = space.extension
    Mmu = T.T @ assemble("mass_vector", mesh, elem.mu, order=order) @ T
    Krho = T.T @ assemble("curlcurl", mesh, rho, order=order) @ T
    if nv:
        B = sp.csr_matrix(T.T @ np.column_stack(
            [assemble("mixed_grad_curl", mesh, qk, weight="area", order=order) for qk in q]))
        K = sp.bmat([[Krho, -B], [-B.T, None]], format="csr")
        M = sp.bmat([[Mmu, None], [None, sp.csr_matrix((nv, nv))]], format="csr")
        b = np.concatenate([np.zeros(space.n_field), -s])
    else:
        K, M = Krho.tocsr(), Mmu.tocsr()
        b = np.zeros(space.n_field)
    nonlinear = None
    if elem.hts_mask.any():
        ed = element_data(mesh, order)
        tris = np.flatnonzero(elem.hts_mask)
        D = curl_matrix(mesh)[tris] @ T
        D = sp.hstack([D, sp.csr_matrix((len(tris), nv))], format="csr")
        wts = (ed.dA * ed.measure)[tris].sum(axis=1)
        nonlinear = NonlinearTerm(D, wts, elem.hts_law, tris)
    return AssembledSystem(mesh, space, M.tocsr(), K.tocsr(), b, elem, q, s, order, fw_spec, nonlinear)


def assemble_fullh(mesh: Mesh, materials: MaterialField | None = None, variant: str = "resolved",
                   fw_spec: FoilWindingSpec | None = None, order: int = 2) -> AssembledSystem:
    """Magnetic field on all edges; insulators get the spurious resistivity."""
    return _edge_system(mesh, "h", materials, variant, fw_spec, order)


def assemble_hphi(mesh: Mesh, materials: MaterialField | None = None, variant: str = "resolved",
                  fw_spec: FoilWindingSpec | None = None, order: int = 2) -> AssembledSystem:
    """Edge field in conductors, scalar potential outside, one cut per conductor.

    Resolved turns impose their current through the cut DoFs; their
    voltages come out as reactions. The homogenized bulk keeps voltage
    functions and a free cut coefficient.
    """
    return _edge_system(mesh, "hphi", materials, variant, fw_spec, order)


ASSEMBLERS = {"av": assemble_av, "h": assemble_fullh, "hphi": assemble_hphi}


def assemble_system(formulation: str, mesh: Mesh, materials: MaterialField | None = None,
                    variant: str = "resolved", fw_spec: FoilWindingSpec | None = None,
                    order: int = 2) -> AssembledSystem:
    try:
        fn = ASSEMBLERS[formulation]
    except KeyError:
        raise ValueError(f"unknown formulation {formulation!r}") from None
    return fn(mesh, materials, variant, fw_spec, order)


def assemble_applied_field(mesh: Mesh, sigma: float, mu_r: float = 1.0,
                           direction=(0.0, 1.0), order: int = 2) -> AssembledSystem:
    """Full-h model of a conductor filling the mesh, driven by a tangential field on its boundary.

    The boundary edges are fixed to a uniform field of unit amplitude along
    ``direction``; the excitation amplitude scales it.
    """
    from .materials import MU0

    E = mesh.n_edges
    mu = np.full(mesh.n_triangles, MU0 * mu_r)
    sig = np.full(mesh.n_triangles, float(sigma))
    elem = ElementMaterials(mu, sig, np.ones(mesh.n_triangles, bool), np.zeros(mesh.n_triangles, bool),
                            None, np.zeros(mesh.n_triangles, dtype=np.int64))
    bedges = mesh.boundary_edges
    p = mesh.nodes[mesh.edges[bedges]]
    values = (p[:, 1] - p[:, 0]) @ np.asarray(direction, dtype=float)
    space = DofSpace("h", "resolved", "edge", sp.identity(E, format="csr"), 0, bedges, values)
    M = assemble("mass_vector", mesh, mu, order=order)
    K = assemble("curlcurl", mesh, 1.0 / sig, order=order)
    ed = element_data(mesh, order)
    return AssembledSystem(mesh, space, M, K, np.zeros(E), elem, np.zeros((0,) + ed.dA.shape),
                           np.zeros(0), order)
