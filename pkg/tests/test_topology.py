import numpy as np
import pytest

from foilfem.fem_kernel import curl_matrix, gradient_matrix
from foilfem.formulations import build_dofspace, element_materials
from foilfem.mesh import AXISYMMETRIC, build_benchmark_geometry, generate_structured_mesh
from foilfem.topology import (TopologyError, build_cut, build_voltage_basis, build_winding_function,
                              parse_basis)

from conftest import AXI_MATERIALS, axi_mesh, fw_spec


def single_conductor_mesh():
    geom = build_benchmark_geometry("custom", {"coordinate_system": "planar", "n_turns": 1,
                                               "core_radius": 0.0, "core_height": 0.0,
                                               "box_radius": 60e-3, "box_height": 80e-3})
    return geom, generate_structured_mesh(geom, 1)


def grid_loop(mesh, x0, x1, y0, y1):
    """Counter-clockwise node loop along grid lines of a tensor mesh."""
    xs, ys = np.unique(mesh.nodes[:, 0]), np.unique(mesh.nodes[:, 1])
    nx = len(xs)
    i0, i1 = np.searchsorted(xs, [x0, x1])
    j0, j1 = np.searchsorted(ys, [y0, y1])
    idx = lambda i, j: j * nx + i  # noqa: E731
    loop = [idx(i, j0) for i in range(i0, i1)]
    loop += [idx(i1, j) for j in range(j0, j1)]
    loop += [idx(i, j1) for i in range(i1, i0, -1)]
    loop += [idx(i0, j) for j in range(j1, j0, -1)]
    return loop


def test_cut_circulation_around_conductor():
    geom, mesh = single_conductor_mesh()
    cut = build_cut(mesh, "turn:0")
    b = geom.bulk
    around = grid_loop(mesh, b.x0 - 10e-3, b.x1 + 10e-3, b.y0 - 10e-3, b.y1 + 10e-3)
    assert cut.loop_circulation(mesh, around) == pytest.approx(1.0)
    assert cut.loop_circulation(mesh, around[::-1]) == pytest.approx(-1.0)
    beside = grid_loop(mesh, b.x1 + 5e-3, b.x1 + 20e-3, b.y0 - 10e-3, b.y1 + 10e-3)
    assert cut.loop_circulation(mesh, beside) == pytest.approx(0.0)


def test_cut_is_curl_free_outside_conductor():
    _, mesh = single_conductor_mesh()
    cut = build_cut(mesh, "turn:0")
    curl = curl_matrix(mesh) @ cut.coefficients
    outside = ~mesh.region_mask("turn:0")
    assert np.abs(curl[outside]).max() < 1e-9 * np.abs(curl).max()
    assert set(np.unique(cut.coefficients)) <= {-1.0, 0.0, 1.0}
    # the whole conductor carries unit circulation
    assert cut.circulation(mesh, mesh.region_mask("turn:0")) == pytest.approx(1.0)


def test_shifted_cut_is_equivalent():
    """Cuts differing by a discrete gradient have the same circulations and curls."""
    geom, mesh = single_conductor_mesh()
    cut = build_cut(mesh, "turn:0")
    psi = np.sin(mesh.nodes[:, 0] * 200.0) * np.cos(mesh.nodes[:, 1] * 150.0)
    psi[mesh.boundary_nodes] = 0.0
    shifted = cut.coefficients + gradient_matrix(mesh) @ psi
    C = curl_matrix(mesh)
    assert np.allclose(C @ shifted, C @ cut.coefficients, atol=1e-9)
    b = geom.bulk
    loop = grid_loop(mesh, b.x0 - 10e-3, b.x1 + 10e-3, b.y0 - 10e-3, b.y1 + 10e-3)
    total = 0.0
    index = {(int(a), int(c)): k for k, (a, c) in enumerate(mesh.edges)}
    for a, c in zip(loop, loop[1:] + loop[:1]):
        k = index[(min(a, c), max(a, c))]
        total += shifted[k] * (1.0 if a < c else -1.0)
    assert total == pytest.approx(1.0)


def test_cut_deterministic():
    _, mesh = single_conductor_mesh()
    a, b = build_cut(mesh, "turn:0"), build_cut(mesh, "turn:0")
    assert np.array_equal(a.coefficients, b.coefficients)
    assert np.array_equal(a.seam, b.seam)


def test_cut_needs_triangles():
    _, mesh = single_conductor_mesh()
    with pytest.raises((TopologyError, KeyError, ValueError)):
        build_cut(mesh, np.zeros(mesh.n_triangles, dtype=bool))


def _cut_count(variant):
    geom, mesh = axi_mesh(1)
    spec = fw_spec(geom) if variant == "fw" else None
    elem = element_materials(mesh, AXI_MATERIALS, variant, spec)
    space = build_dofspace(mesh, "hphi", variant, elem.conductor_id, 0 if variant == "resolved" else 4)
    return space.counts()["cuts"], space


def test_resolved_has_one_cut_per_turn():
    n, space = _cut_count("resolved")
    assert n == 20
    assert len(space.cuts) == 20


def test_fw_has_single_cut():
    n, space = _cut_count("fw")
    assert n == 1


def test_winding_function_planar():
    _, mesh = single_conductor_mesh()
    wf = build_winding_function(mesh, "turn:0")
    inside = mesh.centroids[mesh.region_mask("turn:0")][:3]
    assert np.allclose(wf.field(mesh, inside), [[0, 0, 1]] * 3)
    outside = mesh.centroids[~mesh.region_mask("turn:0")][:3]
    assert np.allclose(wf.field(mesh, outside), 0.0)
    assert wf.circulation(0.0) == 1.0


def test_winding_function_axisymmetric():
    _, mesh = axi_mesh(1)
    wf = build_winding_function(mesh, "turn:4")
    assert wf.coordinate_system == AXISYMMETRIC
    pts = mesh.centroids[mesh.region_mask("turn:4")]
    d = wf.density(pts)
    assert np.allclose(2 * np.pi * pts[:, 0] * d, 1.0)
    assert wf.circulation(0.0215) == pytest.approx(1.0)
    bulk = build_winding_function(mesh, "bulk")
    assert bulk.mask.sum() == mesh.bulk_mask().sum()
    with pytest.raises(KeyError):
        build_winding_function(mesh, "turn:99")


def test_constant_basis():
    p = build_voltage_basis("poly", 1)
    a = np.linspace(0, 1, 7)
    assert np.allclose(p(a), 1.0)


def test_legendre_orthogonality():
    basis = parse_basis("poly:5")
    x, w = np.polynomial.legendre.leggauss(12)
    alpha, w = 0.5 * (x + 1), 0.5 * w
    P = basis(alpha)
    gram = (P * w) @ P.T
    assert np.allclose(gram - np.diag(np.diag(gram)), 0.0, atol=1e-14)
    assert np.allclose(np.diag(gram), 1.0 / (2 * np.arange(6) + 1))


def test_basis_integrals_exact():
    basis = parse_basis("poly:3")
    assert np.allclose(basis.integrals(), [1, 0, 0, 0], atol=1e-15)
    # P_1(2a - 1) = 2a - 1 integrates to a^2 - a
    a, b = 0.2, 0.7
    assert basis.integrals(a, b)[1] == pytest.approx((b * b - b) - (a * a - a))


def test_pwl_hat():
    basis = parse_basis("pwl:3")
    assert basis(np.array([0.0, 0.5, 1.0]))[1] == pytest.approx([0.0, 1.0, 0.0])
    assert np.allclose(basis(np.linspace(0, 1, 11)).sum(axis=0), 1.0)
    assert basis.integrals() == pytest.approx([0.25, 0.5, 0.25])


@pytest.mark.parametrize("spec, n", [("poly:0", 1), ("poly:3", 4), ("pwl:1", 1), ("pwl:5", 5)])
def test_parse_basis(spec, n):
    b = parse_basis(spec)
    assert b.n == n
    assert b.label == spec


@pytest.mark.parametrize("spec", ["poly:-1", "pwl:0", "cheb:3", "poly", "poly:x"])
def test_parse_basis_rejects(spec):
    with pytest.raises(ValueError):
        parse_basis(spec)
