"""Geometric functionals of graph surfaces and grid masks.

Graph integrals use the midpoint rule on cross-section cells with staggered
midpoint gradients (second order).  Nodal derivative stencils are central
inside and second-order one-sided at the cross-section boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .domain import (
    PERIMETER_SCALE,
    GraphFunction,
    SubsetMask,
    staggered_grads,
    staggered_values,
)
from .errors import EmptySetError, ResolutionError


@dataclass(frozen=True)
class CurvatureField:
    """Nodal mean curvature of a graph top, defined where the flux stencil
    fits; summary statistics over the defined nodes."""

    phi: GraphFunction
    values: np.ndarray  # nodal array, NaN where undefined
    mean: float
    max: float
    std: float

    def defined(self) -> np.ndarray:
        return np.isfinite(self.values)

    def rows(self):
        """(coordinates..., H) rows for CSV emission, defined nodes only."""
        cs = self.phi.cross_section
        if cs.dim == 1:
            for i in np.nonzero(self.defined())[0]:
                yield (float(cs.nodes_x[i]), float(self.values[i]))
        else:
            jj, ii = np.nonzero(self.defined())
            for j, i in zip(jj, ii):
                yield (float(cs.nodes_x[i]), float(cs.nodes_y[j]),
                       float(self.values[j, i]))


def _flux(g):
    """Normalized graph flux g / sqrt(1 + |g|^2) (componentwise for dim 2)."""
    if g.ndim == 1 or g.shape[0] != 2:
        return g / np.sqrt(1.0 + g * g)
    norm = np.sqrt(1.0 + g[0] ** 2 + g[1] ** 2)
    return g / norm


def mean_curvature(phi: GraphFunction) -> CurvatureField:
    """Mean curvature of the graph of phi with respect to the upward normal:
    the negative divergence of the normalized gradient, divided by N-1.

    The flux is evaluated at half-nodes and differenced back to the nodes, so
    the discrete divergence theorem holds exactly against the staggered
    boundary fluxes."""
    cs = phi.cross_section
    ndim = cs.dim
    if ndim == 1:
        n = cs.nodes_x.size
        if n < 3:
            raise ResolutionError("need at least 3 nodes per direction for curvature")
        h = cs.spacing
        f = _flux(phi.mid_grads())          # at half nodes, length n-1
        vals = np.full(n, np.nan)
        vals[1:-1] = -(f[1:] - f[:-1]) / h  # N - 1 == 1
    else:
        nyn, nxn = phi.values.shape
        if nxn < 3 or nyn < 3:
            raise ResolutionError("need at least 3 nodes per direction for curvature")
        sx, sy = cs.spacing, cs.spacing_y
        vv = np.where(cs.node_inside, phi.values, np.nan)
        # fluxes at half-x nodes
        px = (vv[:, 1:] - vv[:, :-1]) / sx
        py_at_hx = np.full_like(px, np.nan)
        py_at_hx[1:-1, :] = ((vv[2:, :-1] - vv[:-2, :-1])
                             + (vv[2:, 1:] - vv[:-2, 1:])) / (4 * sy)
        fx = px / np.sqrt(1.0 + px ** 2 + py_at_hx ** 2)
        # fluxes at half-y nodes
        py = (vv[1:, :] - vv[:-1, :]) / sy
        px_at_hy = np.full_like(py, np.nan)
        px_at_hy[:, 1:-1] = ((vv[:-1, 2:] - vv[:-1, :-2])
                             + (vv[1:, 2:] - vv[1:, :-2])) / (4 * sx)
        fy = py / np.sqrt(1.0 + py ** 2 + px_at_hy ** 2)
        vals = np.full((nyn, nxn), np.nan)
        vals[1:-1, 1:-1] = -0.5 * ((fx[1:-1, 1:] - fx[1:-1, :-1]) / sx
                                   + (fy[1:, 1:-1] - fy[:-1, 1:-1]) / sy)
    finite = vals[np.isfinite(vals)]
    if finite.size == 0:
        raise ResolutionError("curvature stencil fits nowhere on this grid")
    return CurvatureField(
        phi=phi, values=vals,
        mean=float(finite.mean()), max=float(finite.max()), std=float(finite.std()),
    )


def _boundary_samples_2d(phi: GraphFunction):
    """Samples along the polygon boundary: (phi, grad . nu, |grad|^2, ds).

    Gradients are taken from the nearest inside lattice node (one-sided
    stencils there); polygon corners are skipped by sampling open segments."""
    cs = phi.cross_section
    verts = cs.polygon
    g = phi.grad_nodes()
    gx, gy = g[0], g[1]
    ok = np.isfinite(gx) & np.isfinite(gy)
    node_px, node_py = np.meshgrid(cs.nodes_x, cs.nodes_y)
    cand_x, cand_y = node_px[ok], node_py[ok]
    cand_gx, cand_gy = gx[ok], gy[ok]
    spacing = min(cs.spacing, cs.spacing_y)
    out = []
    n = len(verts)
    for k in range(n):
        a, b = verts[k], verts[(k + 1) % n]
        seg = b - a
        ell = float(np.hypot(*seg))
        nseg = max(1, int(math.ceil(ell / spacing)))
        ds = ell / nseg
        nu = np.array([seg[1], -seg[0]]) / ell
        ts = (np.arange(nseg) + 0.5) / nseg
        for t in ts:
            p = a + t * seg
            d2 = (cand_x - p[0]) ** 2 + (cand_y - p[1]) ** 2
            i = int(np.argmin(d2))
            gv = np.array([cand_gx[i], cand_gy[i]])
            pv = float(phi.evaluate(np.array([p[0]]), np.array([p[1]]))[0])
            out.append((pv, float(gv @ nu), float(gv @ gv), ds))
    return out


def orthogonality_residual(phi: GraphFunction) -> float:
    """Largest normal derivative of phi along the cross-section boundary;
    zero (to discretization error) exactly when the graph meets the container
    wall orthogonally."""
    cs = phi.cross_section
    if cs.dim == 1:
        g = phi.grad_nodes()
        return float(max(abs(g[0]), abs(g[-1])))
    return float(max(abs(gn) for (_, gn, _, _) in _boundary_samples_2d(phi)))


def surface_area(phi: GraphFunction) -> float:
    """Area of the graph top: quadrature of sqrt(1 + |grad phi|^2)."""
    vals, grads, area, valid = phi.quadrature_cells()
    if phi.cross_section.dim == 1:
        g2 = grads ** 2
    else:
        g2 = grads[0] ** 2 + grads[1] ** 2
    return float(np.sum(np.sqrt(1.0 + g2[valid])) * area)


def graph_volume(phi: GraphFunction) -> float:
    """Volume below the graph of phi (midpoint quadrature of phi)."""
    vals, _, area, valid = phi.quadrature_cells()
    return float(np.sum(vals[valid]) * area)


def relative_perimeter(mask: SubsetMask, count_free: bool = False) -> float:
    """Relative perimeter of a mask: boundary weight counted only inside the
    container.  With count_free=True, faces on the container boundary are
    reclassified as ordinary boundary (never smaller than the default)."""
    if mask.n_selected == 0:
        raise EmptySetError("relative perimeter of the empty mask is undefined")
    grid = mask.grid
    units = grid.perimeter_units(mask.cells, count_free=count_free)
    return units * grid.delta ** (grid.dim - 1) / PERIMETER_SCALE


def volume(mask: SubsetMask) -> float:
    """Lebesgue measure of a mask: cell count times cell volume."""
    return mask.n_selected * mask.grid.delta ** mask.grid.dim


@dataclass(frozen=True)
class MinkowskiResult:
    lhs: float
    rhs: float
    boundary_term: float

    @property
    def identity_gap(self) -> float:
        return abs(self.lhs - (self.rhs - self.boundary_term))


def minkowski_check(phi: GraphFunction) -> MinkowskiResult:
    """Both sides of the graph Minkowski identity.

    lhs integrates H <x_N e_N, nu> over the graph (with the graph normal and
    surface measure written out), rhs integrates |grad|^2 / sqrt(1 + |grad|^2)
    over omega scaled by 1/(N-1), and the boundary term collects
    phi (grad . nu) / sqrt(1 + |grad|^2) over the wall contact.  The contract
    is lhs = rhs - boundary_term up to quadrature error; for orthogonal
    graphs the boundary term vanishes."""
    cs = phi.cross_section
    nm1 = float(cs.dim)  # N - 1
    vals, grads, area, valid = phi.quadrature_cells()
    if cs.dim == 1:
        g2 = grads ** 2
    else:
        g2 = grads[0] ** 2 + grads[1] ** 2
    root = np.sqrt(1.0 + g2)
    # mean curvature at cell midpoints from nodal fluxes
    if cs.dim == 1:
        gn = phi.grad_nodes()
        fn = _flux(gn)
        h_mid = -(fn[1:] - fn[:-1]) / cs.spacing / nm1
    else:
        gn = phi.grad_nodes()
        fn = _flux(gn)
        fx, fy = fn[0], fn[1]
        div = ((fx[:-1, 1:] - fx[:-1, :-1]) + (fx[1:, 1:] - fx[1:, :-1])) / (2 * cs.spacing) \
            + ((fy[1:, :-1] - fy[:-1, :-1]) + (fy[1:, 1:] - fy[:-1, 1:])) / (2 * cs.spacing_y)
        h_mid = -div / nm1
    nu_vertical = 1.0 / root           # vertical component of the graph normal
    dsigma = root * area               # surface measure per cell
    integrand = h_mid * vals * nu_vertical * dsigma
    lhs = float(np.nansum(np.where(valid, integrand, np.nan)))
    rhs = float(np.sum((g2[valid] / root[valid])) * area / nm1)

    if cs.dim == 1:
        g = phi.grad_nodes()
        flux_lo = g[0] / math.sqrt(1.0 + g[0] ** 2)
        flux_hi = g[-1] / math.sqrt(1.0 + g[-1] ** 2)
        boundary = (phi.values[-1] * flux_hi - phi.values[0] * flux_lo) / nm1
    else:
        boundary = sum(pv * gnu / math.sqrt(1.0 + gg) * ds
                       for (pv, gnu, gg, ds) in _boundary_samples_2d(phi)) / nm1
    return MinkowskiResult(lhs=lhs, rhs=rhs, boundary_term=float(boundary))
