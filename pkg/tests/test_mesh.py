import numpy as np
import pytest

from foilfem.mesh import (AXISYMMETRIC, PLANAR, AlphaMap, GeometryError, GeometrySpec, MeshFormatError,
                          MeshSizing, Rect, alpha_of, build_benchmark_geometry, generate_structured_mesh,
                          iter_strips, read_msh, rectangle_mesh, write_msh)
from foilfem.mesh_search import locate_points


def test_axi20_turns_tile_the_bulk():
    geom = build_benchmark_geometry("axi20")
    turns = geom.turns
    assert len(turns) == 20
    assert min(t.x0 for t in turns) == pytest.approx(geom.bulk.x0)
    assert max(t.x1 for t in turns) == pytest.approx(geom.bulk.x1)
    assert min(t.y0 for t in turns) == pytest.approx(geom.bulk.y0)
    assert max(t.y1 for t in turns) == pytest.approx(geom.bulk.y1)
    assert geom.foil_area() == pytest.approx(geom.bulk.area, rel=1e-12)


def test_hts20_foil_area_follows_fill_factor():
    geom = build_benchmark_geometry("hts20")
    assert geom.coordinate_system == PLANAR
    assert geom.fill_factor == 0.01
    assert geom.foil_area() == pytest.approx(0.01 * geom.bulk.area, rel=1e-12)


def test_default_dimensions():
    geom = build_benchmark_geometry("axi20")
    assert geom.coordinate_system == AXISYMMETRIC
    assert geom.bulk.x0 == pytest.approx(20e-3)
    assert geom.bulk.x1 - geom.bulk.x0 == pytest.approx(10e-3)
    assert geom.bulk.y1 - geom.bulk.y0 == pytest.approx(30e-3)
    core = [r for r in geom.regions if r.name == "core"][0]
    assert (core.x1, core.y1 - core.y0) == pytest.approx((15e-3, 60e-3))


@pytest.mark.parametrize("params", [{"bulk_width": -1.0}, {"n_turns": 0}, {"wingspan": 3.0},
                                    {"core_radius": 25e-3}])
def test_invalid_geometry_rejected(params):
    with pytest.raises(GeometryError):
        build_benchmark_geometry("axi20", params)


def test_unknown_preset():
    with pytest.raises(GeometryError):
        build_benchmark_geometry("toroid")


def test_overlapping_regions_rejected():
    box = Rect("air", 0, 1, 0, 1)
    a, b = Rect("turn:0", 0.1, 0.5, 0.1, 0.5), Rect("turn:1", 0.4, 0.6, 0.1, 0.5)
    with pytest.raises(GeometryError, match="overlap"):
        GeometrySpec(PLANAR, box, (a, b), Rect("bulk", 0.1, 0.6, 0.1, 0.5), 2, 1.0)


def test_unit_square_counts():
    m = rectangle_mesh(0, 1, 0, 1, 1, 1)
    assert (m.n_nodes, m.n_edges, m.n_triangles) == (4, 5, 2)
    assert len(m.boundary_edges) == 4


@pytest.mark.parametrize("preset", ["axi20", "hts20"])
@pytest.mark.parametrize("refinement", [1, 2])
def test_structured_mesh_invariants(preset, refinement):
    geom = build_benchmark_geometry(preset)
    m = generate_structured_mesh(geom, refinement)
    assert np.all(m.signed_areas > 0)
    assert m.euler_characteristic() == 1
    assert np.all(m.edges[:, 0] < m.edges[:, 1])
    # every turn is meshed and its meshed area matches the rectangle
    for t in geom.turns:
        mask = m.region_mask(t.name)
        assert m.signed_areas[mask].sum() == pytest.approx(t.area, rel=1e-9)
    assert m.signed_areas.sum() == pytest.approx(geom.box.area, rel=1e-12)


def test_refinement_multiplies_cells():
    geom = build_benchmark_geometry("axi20")
    m1, m2 = generate_structured_mesh(geom, 1), generate_structured_mesh(geom, 2)
    assert m2.n_triangles == 4 * m1.n_triangles


def test_refinement_must_be_positive_integer():
    geom = build_benchmark_geometry("axi20")
    for bad in (0, 1.5, -2):
        with pytest.raises(GeometryError):
            generate_structured_mesh(geom, bad)


def test_axis_boundary_tagged():
    m = generate_structured_mesh(build_benchmark_geometry("axi20"), 1)
    axis = m.boundary_tags["axis"]
    assert len(axis) > 0
    assert np.allclose(m.nodes[m.edges[axis]][..., 0], 0.0)
    assert len(axis) + len(m.boundary_tags["outer"]) == len(m.boundary_edges)


def test_width_grading_clusters_cells_at_bulk_edges():
    sizing = MeshSizing(cells_per_turn=1, cells_across_width=16, core_size=1e-3, max_size=2e-3,
                        growth=0.3, width_grading=1.0)
    geom = build_benchmark_geometry("hts20", sizing=sizing)
    m = generate_structured_mesh(geom, 1)
    ys = np.unique(m.nodes[:, 1])
    inside = ys[(ys >= geom.bulk.y0 - 1e-12) & (ys <= geom.bulk.y1 + 1e-12)]
    h = np.diff(inside)
    assert len(h) == 16
    assert h[0] < 0.2 * h[len(h) // 2]


def test_mesh_is_immutable():
    m = rectangle_mesh(0, 1, 0, 1, 2, 2)
    with pytest.raises(ValueError):
        m.nodes[0, 0] = 3.0


def test_region_prefix_mask(axi1):
    _, m = axi1
    assert m.region_mask("turn:*").sum() == sum(m.region_mask(n).sum() for n in m.turn_regions())
    assert m.turn_regions()[:3] == ["turn:0", "turn:1", "turn:2"]
    with pytest.raises(KeyError):
        m.region_id("nowhere")


# --------------------------------------------------------------------------
# file format

ONE_TRIANGLE = """$MeshFormat
2.2 0 8
$EndMeshFormat
$Nodes
3
1 0 0 0
2 1 0 0
3 0 1 0
$EndNodes
$Elements
1
1 2 2 7 7 1 2 3
$EndElements
"""


def test_read_single_triangle(tmp_path):
    p = tmp_path / "one.msh"
    p.write_text(ONE_TRIANGLE)
    m = read_msh(p)
    assert m.n_triangles == 1
    assert len(m.boundary_edges) == 3
    assert m.region_names == ("region7",)


def test_quadrangle_rejected(tmp_path):
    text = ONE_TRIANGLE.replace("3\n1 0 0 0", "4\n1 0 0 0").replace("3 0 1 0\n", "3 0 1 0\n4 1 1 0\n")
    text = text.replace("1 2 2 7 7 1 2 3", "1 3 2 7 7 1 2 4 3")
    p = tmp_path / "quad.msh"
    p.write_text(text)
    with pytest.raises(MeshFormatError, match="unsupported element type 3"):
        read_msh(p)


@pytest.mark.parametrize("mutate, message", [
    (lambda t: t.replace("$EndNodes\n", ""), "not terminated"),
    (lambda t: t.replace("2.2 0 8", "4.1 0 8"), "unsupported mesh format"),
    (lambda t: t.replace("1 2 3\n$EndElements", "1 2 9\n$EndElements"), "unknown node"),
    (lambda t: t.replace("3 0 1 0", "3 2 0 0"), "degenerate"),
])
def test_malformed_files(tmp_path, mutate, message):
    p = tmp_path / "bad.msh"
    p.write_text(mutate(ONE_TRIANGLE))
    with pytest.raises(MeshFormatError, match=message):
        read_msh(p)


def test_clockwise_triangles_reoriented(tmp_path):
    p = tmp_path / "cw.msh"
    p.write_text(ONE_TRIANGLE.replace("1 2 3\n$End", "1 3 2\n$End"))
    assert read_msh(p).signed_areas[0] > 0


def _entities(mesh):
    return (sorted(map(tuple, np.sort(mesh.triangles, axis=1).tolist())), mesh.edges.tolist())


def test_round_trip(tmp_path, axi1):
    _, m = axi1
    p = tmp_path / "axi.msh"
    write_msh(m, p)
    back = read_msh(p, AXISYMMETRIC)
    assert np.array_equal(back.nodes, m.nodes)
    assert _entities(back) == _entities(m)
    assert [back.region_names[r] for r in back.tri_region] == [m.region_names[r] for r in m.tri_region]
    assert set(back.boundary_tags) == set(m.boundary_tags)
    for k in m.boundary_tags:
        assert np.array_equal(np.sort(back.boundary_tags[k]), np.sort(m.boundary_tags[k]))


# --------------------------------------------------------------------------
# alpha coordinate

def test_alpha_of_faces_and_centroid():
    geom = build_benchmark_geometry("axi20")
    amap = geom.alpha_map
    yc = 0.5 * (geom.bulk.y0 + geom.bulk.y1)
    assert alpha_of((geom.bulk.x0, yc), amap) == 0.0
    assert alpha_of((geom.bulk.x1, yc), amap) == pytest.approx(1.0)
    assert alpha_of((0.5 * (geom.bulk.x0 + geom.bulk.x1), yc), amap) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        alpha_of((geom.bulk.x1 + 1e-3, yc), amap)


def test_alpha_map_vectorized():
    amap = AlphaMap(1.0, 2.0)
    pts = np.array([[0.0, 0.0], [2.0, 5.0], [4.0, 1.0]])
    assert np.allclose(amap(pts), [0.0, 0.5, 1.0])


def test_iter_strips():
    strips = list(iter_strips(4))
    assert strips[0] == (0.0, 0.25) and strips[-1] == (0.75, 1.0)


def test_locate_points():
    m = rectangle_mesh(0, 2, 0, 1, 4, 2)
    tri = locate_points(m, [[0.1, 0.05], [1.9, 0.95], [3.0, 0.5]])
    assert tri[2] == -1
    for t, p in zip(tri[:2], [[0.1, 0.05], [1.9, 0.95]]):
        c = m.nodes[m.triangles[t]]
        assert c[:, 0].min() <= p[0] <= c[:, 0].max()
