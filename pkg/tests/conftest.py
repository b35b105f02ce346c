import functools

import numpy as np
import pytest

from foilfem.formulations import (FoilWindingSpec, Material, MaterialField, assemble_applied_field,
                                  assemble_system)
from foilfem.mesh import build_benchmark_geometry, generate_structured_mesh, rectangle_mesh
from foilfem.solvers import solve_harmonic
from foilfem.topology import parse_basis

SIGMA_CU = 5.9e7
COPPER = Material(sigma=SIGMA_CU)
AXI_MATERIALS = MaterialField({"turn:*": COPPER, "core": Material(mu_r=10.0)})


@functools.lru_cache(maxsize=None)
def axi_mesh(refinement=1):
    geom = build_benchmark_geometry("axi20")
    return geom, generate_structured_mesh(geom, refinement)


def fw_spec(geom, basis="poly:3", foil=COPPER):
    return FoilWindingSpec(geom.n_turns, geom.alpha_map, parse_basis(basis), foil, geom.fill_factor)


@functools.lru_cache(maxsize=None)
def axi_solution(formulation, variant, frequency=50.0, basis="poly:3", refinement=1):
    geom, mesh = axi_mesh(refinement)
    spec = fw_spec(geom, basis) if variant == "fw" else None
    system = assemble_system(formulation, mesh, AXI_MATERIALS, variant, spec)
    return solve_harmonic(system, frequency, 1.0)


def annulus_resistance(sigma, width, r_in, r_out):
    """DC resistance of a full annular turn: concentric filaments in parallel."""
    return 2.0 * np.pi / (sigma * width * np.log(r_out / r_in))


def slab_profile(delta_over_d, n_per_delta=10):
    """Tangential field across a conductor slab driven by equal fields on both faces."""
    sigma, f = 5.9e7, 50.0
    mu0 = 4e-7 * np.pi
    delta = np.sqrt(2.0 / (2 * np.pi * f * mu0 * sigma))
    d = delta / delta_over_d
    nx = max(int(np.ceil(n_per_delta * d / delta)), 8)
    mesh = rectangle_mesh(-d / 2, d / 2, 0.0, d / nx, nx, 1)
    sol = solve_harmonic(assemble_applied_field(mesh, sigma), f, 1.0)
    # the y-component of h is constant along vertical edges
    e = mesh.edges
    vert = np.isclose(mesh.nodes[e[:, 0], 0], mesh.nodes[e[:, 1], 0])
    x = mesh.nodes[e[vert, 0], 0]
    hy = sol.x[vert] / (mesh.nodes[e[vert, 1], 1] - mesh.nodes[e[vert, 0], 1])
    k = (1 + 1j) / delta
    exact = np.cosh(k * x) / np.cosh(k * d / 2)
    return x, hy, exact


@pytest.fixture(scope="session")
def axi1():
    return axi_mesh(1)
