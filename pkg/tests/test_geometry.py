import math

import numpy as np
import pytest

from cheegerkit.domain import (
    PERIMETER_SCALE,
    Container,
    CrossSection,
    GraphFunction,
    SubsetMask,
    VolumeGrid,
    build_subgraph_domain,
    rasterize,
)
from cheegerkit.errors import EmptySetError, ResolutionError
from cheegerkit.geometry import (
    graph_volume,
    mean_curvature,
    minkowski_check,
    orthogonality_residual,
    relative_perimeter,
    surface_area,
    volume,
)

from helpers import strip


# ---------------------------------------------------------------------------
# mean curvature
# ---------------------------------------------------------------------------


def test_constant_graph_has_zero_curvature():
    cs, _ = strip(spacing=1 / 32)
    phi = GraphFunction.from_family(cs, "constant", {"h": 2.0})
    field = mean_curvature(phi)
    assert field.mean == 0.0 and field.std == 0.0
    assert np.all(field.values[field.defined()] == 0.0)


def test_parabola_curvature_at_center():
    cs = CrossSection.from_interval(-1.0, 1.0, 1 / 64)
    phi = GraphFunction.from_samples(cs, 2.0 + cs.nodes_x ** 2)
    field = mean_curvature(phi)
    i0 = int(np.argmin(np.abs(cs.nodes_x)))
    assert field.values[i0] == pytest.approx(-2.0, abs=1e-3)


def test_circular_arc_curvature_is_inverse_radius():
    r = 2.0
    cs = CrossSection.from_interval(-1.0, 1.0, 1 / 128)
    phi = GraphFunction.from_samples(cs, 0.5 + np.sqrt(r * r - cs.nodes_x ** 2))
    field = mean_curvature(phi)
    vals = field.values[field.defined()]
    assert np.max(np.abs(vals - 1.0 / r)) < 1e-3


def test_curvature_needs_enough_nodes():
    cs = CrossSection.from_interval(0.0, 1.0, 1.0)  # two nodes
    phi = GraphFunction.from_samples(cs, np.array([1.0, 1.0]))
    with pytest.raises(ResolutionError):
        mean_curvature(phi)


def test_curvature_convergence_second_order():
    errs = []
    for n in (32, 64, 128):
        cs = CrossSection.from_interval(-1.0, 1.0, 2.0 / n)
        phi = GraphFunction.from_samples(cs, 2.0 + cs.nodes_x ** 2)
        field = mean_curvature(phi)
        flux = 2 * cs.nodes_x / np.sqrt(1 + 4 * cs.nodes_x ** 2)
        # closed-form curvature of the parabola graph
        exact = -(2.0 * (1 + 4 * cs.nodes_x ** 2) ** -1.5)
        d = field.defined()
        errs.append(np.max(np.abs(field.values[d] - exact[d])))
    assert errs[0] / errs[1] > 3.0 and errs[1] / errs[2] > 3.0


# ---------------------------------------------------------------------------
# wall orthogonality
# ---------------------------------------------------------------------------


def test_orthogonality_zero_for_constant():
    cs, _ = strip()
    phi = GraphFunction.from_family(cs, "constant", {"h": 1.0})
    assert orthogonality_residual(phi) == 0.0


def test_orthogonality_residual_of_cosine_vanishes_second_order():
    res = []
    for n in (64, 128, 256):
        cs = CrossSection.from_interval(0.0, 1.0, 1.0 / n)
        phi = GraphFunction.from_family(cs, "cosine", {"a": 0.25, "b": 2.0, "k": 1})
        res.append(orthogonality_residual(phi))
    assert res[2] < 1e-5
    assert res[0] / res[1] > 1.8 and res[1] / res[2] > 1.8


def test_orthogonality_residual_of_affine_is_slope():
    cs, _ = strip()
    phi = GraphFunction.from_family(cs, "affine", {"a": 1.0, "b": 1.0})
    assert orthogonality_residual(phi) == pytest.approx(1.0, abs=1e-12)


# ---------------------------------------------------------------------------
# surface area and volume
# ---------------------------------------------------------------------------


def test_surface_area_flat_and_affine():
    cs, _ = strip()
    flat = GraphFunction.from_family(cs, "constant", {"h": 3.0})
    aff = GraphFunction.from_family(cs, "affine", {"a": 1.0, "b": 1.0})
    assert surface_area(flat) == pytest.approx(1.0, abs=1e-14)
    assert surface_area(aff) == pytest.approx(math.sqrt(2.0), abs=1e-12)


def test_surface_area_flat_square_cross_section():
    cs = CrossSection.from_polygon([[0, 0], [1, 0], [1, 1], [0, 1]], 1 / 16)
    phi = GraphFunction.from_family(cs, "constant", {"h": 0.7})
    assert surface_area(phi) == pytest.approx(1.0, abs=1e-12)


def test_mask_volume_examples():
    cs, cont = strip(spacing=1 / 8)
    phi = GraphFunction.from_family(cs, "constant", {"h": 1.0})
    grid = rasterize(build_subgraph_domain(cont, phi), 0.25)
    full = grid.full_mask()
    assert volume(full) == pytest.approx(1.0)
    empty = SubsetMask(grid, np.zeros(grid.n_cells, dtype=bool))
    assert volume(empty) == 0.0
    with pytest.raises(EmptySetError):
        relative_perimeter(empty)


# ---------------------------------------------------------------------------
# relative perimeter
# ---------------------------------------------------------------------------


def test_full_width_slab_perimeter_is_exactly_the_width():
    # free walls and bottom: only the top interface counts, and the weight
    # table makes a straight axis interface exact
    cs, cont = strip(spacing=1 / 8)
    phi = GraphFunction.from_family(cs, "constant", {"h": 0.75})
    grid = rasterize(build_subgraph_domain(cont, phi), 1 / 16)
    centers = grid.cell_centers()
    slab = SubsetMask(grid, centers[:, 1] < 0.5)
    assert relative_perimeter(slab) == 1.0
    assert relative_perimeter(grid.full_mask()) == 1.0


def test_single_interior_cell_frozen_weight_table_value():
    cs = CrossSection.from_interval(0.0, 1.25, 0.25)
    cont = Container.cylinder(cs)
    inside = np.zeros((5, 5), dtype=bool)
    inside[2, 2] = True
    grid = VolumeGrid(cont, 0.25, inside, origin=(0, 0))
    assert grid.perimeter_units(np.array([True])) == 17328
    assert relative_perimeter(grid.full_mask()) == pytest.approx(
        17328 / PERIMETER_SCALE * 0.25)


def test_bounded_mask_always_has_positive_perimeter():
    rng = np.random.default_rng(5)
    cs, cont = strip(spacing=1 / 8)
    phi = GraphFunction.from_family(cs, "constant", {"h": 1.0})
    grid = rasterize(build_subgraph_domain(cont, phi), 1 / 8)
    for _ in range(25):
        cells = rng.random(grid.n_cells) < 0.3
        if not cells.any():
            continue
        assert relative_perimeter(SubsetMask(grid, cells)) > 0.0


def test_reclassifying_free_faces_never_decreases_perimeter():
    rng = np.random.default_rng(11)
    cs, cont = strip(spacing=1 / 8)
    phi = GraphFunction.from_family(cs, "constant", {"h": 1.0})
    grid = rasterize(build_subgraph_domain(cont, phi), 1 / 8)
    for _ in range(40):
        cells = rng.random(grid.n_cells) < rng.uniform(0.2, 0.9)
        if not cells.any():
            continue
        mask = SubsetMask(grid, cells)
        assert (relative_perimeter(mask, count_free=True)
                >= relative_perimeter(mask) - 1e-12)


def test_metrication_error_of_straight_and_sloped_interfaces():
    # half-plane cuts through a wide strip, measured away from the walls
    cs = CrossSection.from_interval(0.0, 4.0, 1 / 8)
    cont = Container.cylinder(cs)
    delta = 1 / 32
    nx = int(round(4.0 / delta))
    ny = int(round(2.0 / delta))
    jj, ii = np.meshgrid(np.arange(ny), np.arange(nx), indexing="ij")
    cx = (ii + 0.5) * delta
    cy = (jj + 0.5) * delta
    for (a, b) in ((0.0, 1.0), (1.0, 1.0), (1.0, 2.0)):
        # interface a*x + b*y = const, restricted to 1 < x < 3
        inside = (a * cx + b * cy) < (a * 2.0 + b * 1.0)
        grid = VolumeGrid(cont, delta, inside, origin=(0, 0))
        p = relative_perimeter(grid.full_mask())
        # exact relative boundary length of the half-plane cut
        exact = math.hypot(a, b) / b * 4.0
        assert abs(p - exact) / exact < 0.03


# ---------------------------------------------------------------------------
# Minkowski identity
# ---------------------------------------------------------------------------


def test_minkowski_all_zero_for_constant_graph():
    cs, _ = strip()
    phi = GraphFunction.from_family(cs, "constant", {"h": 1.0})
    mk = minkowski_check(phi)
    assert mk.lhs == 0.0 and mk.rhs == 0.0 and mk.boundary_term == 0.0


def test_minkowski_orthogonal_family_gap_second_order():
    gaps = []
    for n in (64, 128, 256):
        cs = CrossSection.from_interval(0.0, 1.0, 1.0 / n)
        phi = GraphFunction.from_family(cs, "cosine", {"a": 0.25, "b": 2.0, "k": 1})
        mk = minkowski_check(phi)
        gaps.append(abs(mk.lhs - mk.rhs))
    assert gaps[2] < 1e-4
    assert gaps[0] / gaps[1] > 3.4 and gaps[1] / gaps[2] > 3.4


def test_minkowski_affine_three_term_identity():
    cs, _ = strip()
    phi = GraphFunction.from_family(cs, "affine", {"a": 1.0, "b": 1.0})
    mk = minkowski_check(phi)
    assert mk.lhs == pytest.approx(0.0, abs=1e-12)
    assert mk.boundary_term == pytest.approx(1.0 / math.sqrt(2.0), abs=1e-12)
    assert mk.identity_gap < 1e-12
    assert abs(mk.lhs - mk.rhs) == pytest.approx(abs(mk.boundary_term), abs=1e-12)


def test_minkowski_rhs_nonnegative_and_zero_only_for_flat():
    rng = np.random.default_rng(3)
    cs, _ = strip(spacing=1 / 64)
    for _ in range(10):
        a = float(rng.uniform(0.0, 0.5))
        phi = GraphFunction.from_family(cs, "cosine", {"a": a, "b": 1.0, "k": 1})
        mk = minkowski_check(phi)
        assert mk.rhs >= 0.0
        if a == 0.0:
            assert mk.rhs == 0.0
        else:
            assert mk.rhs > 0.0
    flat = GraphFunction.from_family(cs, "constant", {"h": 1.0})
    assert minkowski_check(flat).rhs == 0.0


def test_discrete_divergence_theorem_identity():
    # (N-1) * mean(H) * |omega| balances the boundary flux to O(spacing)
    for n, tol in ((64, 0.05), (128, 0.025)):
        cs = CrossSection.from_interval(0.0, 1.0, 1.0 / n)
        phi = GraphFunction.from_samples(cs, 1.5 + 0.3 * cs.nodes_x ** 2
                                         + 0.1 * np.sin(3 * cs.nodes_x))
        field = mean_curvature(phi)
        g = phi.grad_nodes()
        flux = g / np.sqrt(1 + g * g)
        boundary = flux[-1] - flux[0]
        interior_sum = np.nansum(field.values[field.defined()]) * cs.spacing
        assert abs(interior_sum + boundary) < tol


def test_surface_area_second_order_convergence():
    exact = None
    errs = []
    for n in (64, 128, 256, 4096):
        cs = CrossSection.from_interval(0.0, 1.0, 1.0 / n)
        phi = GraphFunction.from_family(cs, "cosine", {"a": 0.3, "b": 1.0, "k": 2})
        val = surface_area(phi)
        if n == 4096:
            exact = val
        else:
            errs.append(val)
    errs = [abs(v - exact) for v in errs]
    assert errs[0] / errs[1] > 3.5 and errs[1] / errs[2] > 3.5
