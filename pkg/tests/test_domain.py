import math

import numpy as np
import pytest

from cheegerkit.domain import (
    FACE_FREE,
    FACE_INTERIOR,
    FACE_RELATIVE,
    TAG_CONTAINER,
    TAG_GRAPH,
    ConeDomain,
    Container,
    CrossSection,
    GraphFunction,
    SubsetMask,
    VolumeGrid,
    build_subgraph_domain,
    dilate,
    rasterize,
    triangulate,
)
from cheegerkit.errors import (
    DilationNotClosedError,
    InvalidGraphError,
    ResolutionError,
    UnsupportedDimensionError,
    UnsupportedDomainError,
    ValidationError,
)
from cheegerkit.geometry import relative_perimeter, surface_area, volume

from helpers import strip


# ---------------------------------------------------------------------------
# cross-sections and graph functions
# ---------------------------------------------------------------------------


def test_interval_cross_section_grid_covers_with_requested_spacing():
    cs = CrossSection.from_interval(0.0, 1.0, 0.3)
    assert cs.nodes_x[0] == 0.0 and cs.nodes_x[-1] == 1.0
    assert cs.spacing <= 0.3 + 1e-15
    assert cs.convex


def test_interval_needs_positive_length():
    with pytest.raises(ValidationError):
        CrossSection.from_interval(1.0, 1.0, 0.1)


def test_polygon_must_be_counterclockwise_and_simple():
    with pytest.raises(ValidationError):
        CrossSection.from_polygon([[0, 0], [0, 1], [1, 1], [1, 0]], 0.25)  # clockwise
    with pytest.raises(ValidationError):
        CrossSection.from_polygon([[0, 0], [1, 1], [1, 0], [0, 1]], 0.25)  # bowtie


def test_polygon_convex_flag_checked_against_vertices():
    verts = [[0, 0], [2, 0], [2, 2], [1, 0.5], [0, 2]]  # dented
    cs = CrossSection.from_polygon(verts, 0.25)
    assert not cs.convex
    with pytest.raises(ValidationError):
        CrossSection.from_polygon(verts, 0.25, convex=True)


def test_cone_sector_validation():
    with pytest.raises(ValidationError):
        Container.cone(1.0, 0.5)
    assert Container.cone(0.3, 2.0).convex
    assert not Container.cone(0.3, 0.3 + math.pi + 0.2).convex


def test_graph_function_requires_positive_values():
    cs, _ = strip(spacing=0.25)
    vals = np.ones_like(cs.nodes_x)
    vals[2] = 0.0
    with pytest.raises(InvalidGraphError):
        GraphFunction.from_samples(cs, vals)


def test_family_values_match_closed_form_at_nodes():
    cs, _ = strip(spacing=1 / 32)
    phi = GraphFunction.from_family(cs, "cosine", {"a": 0.25, "b": 2.0, "k": 2})
    expect = 2.0 + 0.25 * np.cos(2 * math.pi * cs.nodes_x)
    assert np.array_equal(phi.values, expect)


# ---------------------------------------------------------------------------
# subgraph domains
# ---------------------------------------------------------------------------


def test_flat_subgraph_volume_and_top():
    cs, cont = strip()
    phi = GraphFunction.from_family(cs, "constant", {"h": 1.0})
    dom = build_subgraph_domain(cont, phi)
    assert dom.volume() == pytest.approx(1.0, abs=1e-14)
    assert dom.graph_measure() == pytest.approx(1.0, abs=1e-14)


def test_affine_subgraph_volume_is_exact_integral():
    cs, cont = strip()
    phi = GraphFunction.from_family(cs, "affine", {"a": 1.0, "b": 1.0})
    dom = build_subgraph_domain(cont, phi)
    assert dom.volume() == pytest.approx(1.5, abs=1e-13)


def test_subgraph_rejects_cone_container():
    cs, _ = strip()
    phi = GraphFunction.from_family(cs, "constant", {"h": 1.0})
    with pytest.raises(UnsupportedDomainError):
        build_subgraph_domain(Container.cone(0.4, 1.5), phi)


# ---------------------------------------------------------------------------
# rasterize
# ---------------------------------------------------------------------------


def test_rasterize_unit_square_quarter_grid_classification():
    cs, cont = strip(spacing=1 / 8)
    phi = GraphFunction.from_family(cs, "constant", {"h": 1.0})
    grid = rasterize(build_subgraph_domain(cont, phi), 0.25)
    assert grid.n_cells == 16
    centers = grid.cell_centers()
    # columns: +x, -x, +y, -y
    for i in range(grid.n_cells):
        x, y = centers[i]
        if x < 0.25:
            assert grid.face_classes[i, 1] == FACE_FREE
        if x > 0.75:
            assert grid.face_classes[i, 0] == FACE_FREE
        if y < 0.25:
            assert grid.face_classes[i, 3] == FACE_FREE
        if y > 0.75:
            assert grid.face_classes[i, 2] == FACE_RELATIVE
        else:
            assert grid.face_classes[i, 2] == FACE_INTERIOR


def test_rasterize_too_coarse_raises():
    cs, cont = strip(spacing=1 / 8)
    phi = GraphFunction.from_family(cs, "constant", {"h": 1.0})
    with pytest.raises(ResolutionError):
        rasterize(build_subgraph_domain(cont, phi), 0.5)


def test_rasterized_axis_aligned_volume_is_exact():
    cs, cont = strip()
    phi = GraphFunction.from_family(cs, "constant", {"h": 1.0})
    grid = rasterize(build_subgraph_domain(cont, phi), 1 / 64)
    assert volume(grid.full_mask()) == 1.0


def test_rasterize_volume_converges_for_non_aligned_domain():
    cs = CrossSection.from_interval(0.0, 1.0, 1 / 256)
    cont = Container.cylinder(cs)
    phi = GraphFunction.from_samples(
        cs, 0.7 + 0.3 * cs.nodes_x + 0.1 * np.sin(3 * cs.nodes_x))
    dom = build_subgraph_domain(cont, phi)
    exact = dom.volume()
    errs = [abs(volume(rasterize(dom, d).full_mask()) - exact)
            for d in (1 / 16, 1 / 64, 1 / 128)]
    assert errs[0] < 4 * (1 / 16)
    assert errs[-1] < errs[0] and errs[-1] < 1e-3


# ---------------------------------------------------------------------------
# triangulate
# ---------------------------------------------------------------------------


def test_triangulate_rectangle_tags_and_quality():
    cs, cont = strip(spacing=1 / 8)
    phi = GraphFunction.from_family(cs, "constant", {"h": 1.0})
    mesh = triangulate(build_subgraph_domain(cont, phi), 1 / 8)
    top = mesh.boundary_edges[mesh.boundary_tags == TAG_GRAPH]
    other = mesh.boundary_edges[mesh.boundary_tags == TAG_CONTAINER]
    assert len(top) == mesh.nx
    assert len(other) == mesh.nx + 2 * mesh.ny
    assert np.all(np.isclose(mesh.nodes[top.ravel()][:, 1], 1.0))
    assert mesh.min_angle_deg >= 20.0
    # boundary edges partition the boundary: each edge appears exactly once
    canon = {tuple(sorted(e)) for e in mesh.boundary_edges}
    assert len(canon) == len(mesh.boundary_edges)


def test_triangulate_trapezoid_top_follows_graph():
    cs, cont = strip(spacing=1 / 8)
    phi = GraphFunction.from_family(cs, "affine", {"a": 0.5, "b": 1.0})
    mesh = triangulate(build_subgraph_domain(cont, phi), 1 / 8)
    top_nodes = np.unique(mesh.boundary_edges[mesh.boundary_tags == TAG_GRAPH])
    pts = mesh.nodes[top_nodes]
    assert np.allclose(pts[:, 1], 1.0 + 0.5 * pts[:, 0], atol=1e-12)


def test_triangulate_rejects_three_dimensional_domains():
    cs = CrossSection.from_polygon([[0, 0], [1, 0], [1, 1], [0, 1]], 0.25)
    phi = GraphFunction.from_family(cs, "constant", {"h": 1.0})
    dom = build_subgraph_domain(Container.cylinder(cs), phi)
    with pytest.raises(UnsupportedDimensionError):
        triangulate(dom, 0.25)


def test_graph_polyline_length_converges_to_surface_area():
    cs, cont = strip()
    phi = GraphFunction.from_family(cs, "cosine", {"a": 0.25, "b": 2.0, "k": 1})
    dom = build_subgraph_domain(cont, phi)
    exact = surface_area(phi)
    errs = [abs(triangulate(dom, h).graph_boundary_length() - exact)
            for h in (1 / 8, 1 / 16, 1 / 32)]
    assert errs[2] < errs[1] < errs[0]
    assert errs[2] < 1e-3


# ---------------------------------------------------------------------------
# dilation
# ---------------------------------------------------------------------------


def _cone_grid_3cells():
    cont = Container.cone(0.4, 1.8)
    inside = np.zeros((2, 2), dtype=bool)
    inside[0, 0] = inside[0, 1] = inside[1, 0] = True
    return VolumeGrid(cont, 0.25, inside, origin=(1, 1))


def test_dilate_identity_at_factor_one():
    grid = _cone_grid_3cells()
    mask = grid.full_mask()
    out = dilate(mask, 1)
    assert out.grid is grid
    assert np.array_equal(out.cells, mask.cells)


def test_dilate_three_cells_by_two_gives_twelve_cells():
    grid = _cone_grid_3cells()
    mask = grid.full_mask()
    out = dilate(mask, 2)
    assert out.n_selected == 12
    assert volume(out) == pytest.approx(4.0 * volume(mask), rel=1e-15)
    assert relative_perimeter(out) == pytest.approx(
        2.0 * relative_perimeter(mask), rel=1e-15)


def test_dilate_rejected_in_cylinder():
    cs, cont = strip(spacing=0.25)
    inside = np.ones((2, 2), dtype=bool)
    grid = VolumeGrid(cont, 0.25, inside, origin=(0, 0))
    with pytest.raises(DilationNotClosedError):
        dilate(grid.full_mask(), 2)


def test_mask_shape_validation():
    grid = _cone_grid_3cells()
    with pytest.raises(ValidationError):
        SubsetMask(grid, np.ones(5, dtype=bool))


def test_cone_domain_rasterize_anchors_origin():
    cont = Container.cone(0.4, 1.8)
    grid = rasterize(ConeDomain(cont, 1.0), 1 / 16)
    assert grid.n_cells > 0
    centers = grid.cell_centers()
    ang = np.arctan2(centers[:, 1], centers[:, 0])
    assert np.all((ang > 0.4) & (ang < 1.8))
    assert np.all(np.hypot(centers[:, 0], centers[:, 1]) < 1.0)
