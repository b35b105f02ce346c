import numpy as np
import pytest

from foilfem import postproc as pp
from foilfem.formulations import MaterialField, assemble_system
from foilfem.mesh import build_benchmark_geometry, generate_structured_mesh
from foilfem.solvers import solve_harmonic
from foilfem.topology import parse_basis

from conftest import COPPER, SIGMA_CU, annulus_resistance, axi_mesh, axi_solution


def dc_resistances():
    geom, _ = axi_mesh(1)
    w = geom.bulk.y1 - geom.bulk.y0
    return np.array([annulus_resistance(SIGMA_CU, w, t.x0, t.x1) for t in geom.turns])


def test_constant_distribution():
    dist = pp.VoltageDistribution(np.array([2.5]), parse_basis("poly:0"), 20)
    assert np.allclose(dist.strip_averages(), 2.5)
    assert np.allclose(dist.center_samples(), 2.5)
    assert dist.total() == pytest.approx(50.0)


def test_synthetic_distribution_total():
    u = np.array([1.0, -0.4, 0.3, 0.2])
    dist = pp.VoltageDistribution(u, parse_basis("poly:3"), 20)
    # only the constant Legendre term has a nonzero mean
    assert dist.total() == pytest.approx(20.0)
    assert dist.strip_averages().sum() == pytest.approx(dist.total(), rel=1e-13)
    alpha = np.linspace(0, 1, 5)
    x = 2 * alpha - 1
    expected = 1.0 - 0.4 * x + 0.3 * 0.5 * (3 * x * x - 1) + 0.2 * 0.5 * (5 * x ** 3 - 3 * x)
    assert np.allclose(dist(alpha), expected)


def test_poly0_solution_has_equal_turns():
    sol = axi_solution("hphi", "fw", 50.0, "poly:0")
    tv = pp.turn_voltages(sol)
    assert np.allclose(tv.values, tv.values[0], rtol=1e-12)
    assert pp.total_voltage(sol) == pytest.approx(20 * tv.values[0], rel=1e-12)


def test_fw_turn_voltages_carry_distribution():
    sol = axi_solution("hphi", "fw", 50.0)
    tv = pp.turn_voltages(sol)
    assert tv.values.shape == tv.centers.shape == (20,)
    assert tv.values.sum() == pytest.approx(pp.total_voltage(sol), rel=1e-12)


def test_lumped_params_identity():
    sol = axi_solution("av", "fw", 50.0)
    lp = pp.lumped_params(sol)
    assert lp.V_tot == pytest.approx((lp.R_tot + 2j * np.pi * 50.0 * lp.L_tot) * sol.amplitude)
    assert lp.R_tot > 0 and lp.L_tot > 0
    assert set(lp.as_dict()) >= {"R_tot", "L_tot", "V_tot_re", "V_tot_im", "dofs"}
    with pytest.raises(pp.PostprocessingError):
        pp.lumped_params(sol, frequency=0.0)


@pytest.mark.parametrize("formulation", ["av", "hphi"])
def test_dc_total_resistance(formulation):
    sol = axi_solution(formulation, "resolved", 1e-3)
    assert pp.lumped_params(sol).R_tot == pytest.approx(dc_resistances().sum(), rel=1e-2)


def test_dc_losses():
    sol = axi_solution("av", "resolved", 1e-3)
    # mean loss of a sinusoid of amplitude 1 A
    assert pp.ac_losses(sol) == pytest.approx(0.5 * dc_resistances().sum(), rel=1e-2)


def test_zero_current_losses():
    geom, mesh = axi_mesh(1)
    s = assemble_system("hphi", mesh, MaterialField({"turn:*": COPPER}), "resolved")
    sol = solve_harmonic(s, 50.0, 0.0)
    assert pp.ac_losses(sol) == 0.0


def test_r_squared_identity_and_mean():
    rng = np.random.default_rng(1)
    v = rng.normal(size=20)
    assert pp.r_squared(v, v) == pytest.approx(1.0)
    assert pp.r_squared(v, np.full(20, v.mean())) == pytest.approx(0.0, abs=1e-12)
    d = pp.VoltageDistribution(np.array([1.0, 0.5, 0.1]), parse_basis("poly:2"), 20)
    assert pp.r_squared(d, d) == pytest.approx(1.0)
    mean = pp.VoltageDistribution(np.array([1.0]), parse_basis("poly:0"), 20)
    assert pp.r_squared(d, mean) == pytest.approx(0.0, abs=1e-12)


def test_r_squared_exact_for_legendre():
    u_ref = np.array([0.0, 1.0, 0.5])
    u = np.array([0.1, 0.9, 0.5])
    ref = pp.VoltageDistribution(u_ref, parse_basis("poly:2"), 20)
    d = pp.VoltageDistribution(u, parse_basis("poly:2"), 20)
    w = 1.0 / (2 * np.arange(3) + 1)
    expected = 1 - np.sum(w * (u_ref - u) ** 2) / np.sum(w[1:] * u_ref[1:] ** 2)
    assert pp.r_squared(ref, d) == pytest.approx(expected, rel=1e-12)


def test_r_squared_complex():
    v = np.exp(1j * np.linspace(0, 1, 20))
    assert pp.r_squared(v, v) == pytest.approx(1.0)
    assert pp.r_squared(v, v * 1.01) < 1.0


def test_r_squared_constant_reference():
    with pytest.raises(pp.PostprocessingError):
        pp.r_squared(np.ones(20), np.arange(20.0))


def test_strip_currents_sum():
    sol = axi_solution("hphi", "fw", 50.0)
    I = pp.strip_currents(sol)
    assert len(I) == 20
    assert abs(I.sum() - 20.0) < 1e-8
    with pytest.raises(pp.PostprocessingError):
        pp.strip_currents(axi_solution("hphi", "resolved", 50.0))


def test_cut_current_needs_fw_hphi():
    with pytest.raises(pp.PostprocessingError):
        pp.cut_current(axi_solution("av", "fw", 50.0))


def single_planar_turn():
    geom = build_benchmark_geometry("custom", {"coordinate_system": "planar", "n_turns": 1,
                                               "core_radius": 0.0, "core_height": 0.0})
    return geom, generate_structured_mesh(geom, 1)


@pytest.mark.parametrize("formulation", ["av", "hphi"])
def test_uniform_dc_current_density(formulation):
    geom, mesh = single_planar_turn()
    sol = solve_harmonic(assemble_system(formulation, mesh, MaterialField({"turn:*": COPPER})), 1e-3, 2.0)
    b = geom.bulk
    pts = pp.polyline_points([[b.x0 + 1e-4, 0.0], [b.x1 - 1e-4, 0.0]], 10)
    sample = pp.sample_current_density(sol, pts)
    assert np.allclose(sample.magnitude, 2.0 / b.area, rtol=1e-2)
    assert sample.phase is not None


def test_h_conforming_current_is_elementwise_constant():
    sol = axi_solution("hphi", "resolved", 50.0)
    mesh = sol.system.mesh
    t = np.flatnonzero(mesh.region_mask("turn:3"))[0]
    c = mesh.nodes[mesh.triangles[t]]
    pts = [c.mean(axis=0), 0.6 * c[0] + 0.2 * c[1] + 0.2 * c[2]]
    s = pp.sample_current_density(sol, pts)
    assert s.magnitude[0] == s.magnitude[1]
    assert s.magnitude[0] > 0


def test_zero_solution_samples_zero():
    geom, mesh = single_planar_turn()
    sol = solve_harmonic(assemble_system("av", mesh, MaterialField({"turn:*": COPPER})), 50.0, 0.0)
    pts = mesh.centroids[:5]
    assert np.all(pp.sample_current_density(sol, pts).magnitude == 0)


def test_sample_outside_mesh():
    sol = axi_solution("av", "resolved", 50.0)
    with pytest.raises(pp.PostprocessingError, match="outside"):
        pp.sample_current_density(sol, [[1.0, 0.0]])


def test_polyline():
    pts = pp.polyline_points([[0, 0], [1, 0], [1, 1]], 4)
    assert len(pts) == 9
    assert np.allclose(pts[-1], [1, 1])
    with pytest.raises(ValueError):
        pp.polyline_points([[0, 0]], 3)


def test_vtk_export(tmp_path):
    sol = axi_solution("hphi", "fw", 50.0)
    p1 = pp.export_fields(sol, tmp_path / "a.vtk")
    p2 = pp.export_fields(sol, tmp_path / "b.vtk")
    text = p1.read_text()
    assert text.startswith("# vtk DataFile Version 3.0\n")
    mesh = sol.system.mesh
    assert f"CELLS {mesh.n_triangles} {4 * mesh.n_triangles}" in text
    assert "SCALARS phi_re double 1" in text
    assert p1.read_bytes() == p2.read_bytes()


def test_csv_export(tmp_path):
    sol = axi_solution("av", "resolved", 50.0)
    p = pp.export_fields(sol, tmp_path / "cells.csv", fmt="csv")
    lines = p.read_text().splitlines()
    assert lines[0] == "x,y,region,abs_j"
    assert len(lines) == sol.system.mesh.n_triangles + 1
    with pytest.raises(ValueError):
        pp.export_fields(sol, tmp_path / "x.bin", fmt="bin")


def test_sample_csv_rows(tmp_path):
    sol = axi_solution("av", "resolved", 50.0)
    geom, _ = axi_mesh(1)
    pts = pp.polyline_points([[geom.bulk.x0, 0.0], [geom.bulk.x1, 0.0]], 25)
    s = pp.sample_current_density(sol, pts)
    pp.write_csv(tmp_path / "line.csv", ["x", "y", "abs_j"], [(p[0], p[1], m) for p, m in zip(s.points, s.magnitude)])
    assert len((tmp_path / "line.csv").read_text().splitlines()) == len(pts) + 1


def test_unwritable_export(tmp_path):
    sol = axi_solution("av", "resolved", 50.0)
    with pytest.raises(OSError):
        pp.export_fields(sol, tmp_path / "missing" / "f.vtk")
