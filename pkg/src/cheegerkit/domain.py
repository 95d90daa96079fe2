"""Cross-sections, containers, graph domains, volume grids and triangulations.

All types are immutable after construction; the operations below are pure
functions of their inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

import numpy as np

from .errors import (
    DilationNotClosedError,
    InvalidGraphError,
    ResolutionError,
    UnsupportedDimensionError,
    UnsupportedDomainError,
    ValidationError,
)

# Integer perimeter weights, in units of delta^(N-1) / PERIMETER_SCALE.
#
# 2D uses a 16-neighborhood cut metric.  The integers are constrained so that
# a straight axis-aligned interface measures exactly delta per column
# (W_AXIS + 2*W_DIAG + 6*W_KNIGHT == PERIMETER_SCALE) while 45 degree and
# 1:2-slope staircases land within 0.011% of their Euclidean length.
# Wall-crossing configurations are reflected back into the container, so the
# identity also holds for interfaces that run into the free walls.
PERIMETER_SCALE = 8192
W_AXIS = 1932
W_DIAG = 940
W_KNIGHT = 730

# Signed 2D offsets with weights; the `canonical` flag marks one orientation
# per +/- family, used to enumerate inside-inside pairs exactly once.
_OFFSETS_2D = [
    ((1, 0), W_AXIS, True),
    ((-1, 0), W_AXIS, False),
    ((0, 1), W_AXIS, True),
    ((0, -1), W_AXIS, False),
    ((1, 1), W_DIAG, True),
    ((-1, -1), W_DIAG, False),
    ((1, -1), W_DIAG, True),
    ((-1, 1), W_DIAG, False),
    ((2, 1), W_KNIGHT, True),
    ((-2, -1), W_KNIGHT, False),
    ((2, -1), W_KNIGHT, True),
    ((-2, 1), W_KNIGHT, False),
    ((1, 2), W_KNIGHT, True),
    ((-1, -2), W_KNIGHT, False),
    ((1, -2), W_KNIGHT, True),
    ((-1, 2), W_KNIGHT, False),
]

FACE_INTERIOR = 0
FACE_FREE = 1
FACE_RELATIVE = 2

_MIN_TRIANGLE_ANGLE_DEG = 20.0
_MIN_CELLS_PER_EXTENT = 4


# ---------------------------------------------------------------------------
# cross-sections
# ---------------------------------------------------------------------------


def _polygon_signed_area(verts: np.ndarray) -> float:
    x, y = verts[:, 0], verts[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _polygon_is_convex(verts: np.ndarray) -> bool:
    n = len(verts)
    sign = 0.0
    for k in range(n):
        a, b, c = verts[k], verts[(k + 1) % n], verts[(k + 2) % n]
        cross = (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0])
        if abs(cross) < 1e-14:
            continue
        if sign == 0.0:
            sign = math.copysign(1.0, cross)
        elif math.copysign(1.0, cross) != sign:
            return False
    return True


def _segments_properly_intersect(p, q, r, s) -> bool:
    def orient(a, b, c):
        v = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        return 0 if abs(v) < 1e-14 else (1 if v > 0 else -1)

    o1, o2 = orient(p, q, r), orient(p, q, s)
    o3, o4 = orient(r, s, p), orient(r, s, q)
    return o1 != o2 and o3 != o4 and 0 not in (o1, o2, o3, o4)


def _polygon_is_simple(verts: np.ndarray) -> bool:
    n = len(verts)
    for a in range(n):
        for b in range(a + 1, n):
            if b == a or (b + 1) % n == a or (a + 1) % n == b:
                continue
            if _segments_properly_intersect(
                verts[a], verts[(a + 1) % n], verts[b], verts[(b + 1) % n]
            ):
                return False
    return True


def _points_in_polygon(px: np.ndarray, py: np.ndarray, verts: np.ndarray, tol: float) -> np.ndarray:
    """Even-odd rule with a boundary tolerance; points within tol of an edge
    count as inside (the closure of the cross-section)."""
    px = np.asarray(px, dtype=float)
    py = np.asarray(py, dtype=float)
    inside = np.zeros(px.shape, dtype=bool)
    on_edge = np.zeros(px.shape, dtype=bool)
    n = len(verts)
    for k in range(n):
        x1, y1 = verts[k]
        x2, y2 = verts[(k + 1) % n]
        cond = (y1 > py) != (y2 > py)
        with np.errstate(divide="ignore", invalid="ignore"):
            xin = x1 + (py - y1) * (x2 - x1) / (y2 - y1)
        inside ^= cond & (px < np.where(cond, xin, np.inf))
        ex, ey = x2 - x1, y2 - y1
        ee = ex * ex + ey * ey
        t = np.clip(((px - x1) * ex + (py - y1) * ey) / ee, 0.0, 1.0)
        d2 = (px - (x1 + t * ex)) ** 2 + (py - (y1 + t * ey)) ** 2
        on_edge |= d2 <= tol * tol
    return inside | on_edge


@dataclass(frozen=True)
class CrossSection:
    """The base omega: an interval (dim 1) or a simple polygon (dim 2), with
    a uniform node grid of spacing at most the requested one."""

    dim: int
    spacing_target: float
    interval: Optional[tuple[float, float]] = None
    polygon: Optional[np.ndarray] = None
    convex: bool = True
    # derived grid data
    nodes_x: np.ndarray = field(default=None, repr=False)
    nodes_y: Optional[np.ndarray] = field(default=None, repr=False)
    node_inside: Optional[np.ndarray] = field(default=None, repr=False)

    @staticmethod
    def from_interval(lo: float, hi: float, spacing: float,
                      convex: Optional[bool] = None) -> "CrossSection":
        if not hi > lo:
            raise ValidationError(f"interval must have positive length, got [{lo}, {hi}]")
        if not spacing > 0:
            raise ValidationError("spacing must be positive")
        if convex is not None and convex is not True:
            raise ValidationError("an interval cross-section is always convex")
        n = max(1, int(math.ceil((hi - lo) / spacing - 1e-12)))
        nodes = np.linspace(lo, hi, n + 1)
        return CrossSection(dim=1, spacing_target=spacing, interval=(float(lo), float(hi)),
                            convex=True, nodes_x=nodes)

    @staticmethod
    def from_polygon(vertices, spacing: float,
                     convex: Optional[bool] = None) -> "CrossSection":
        verts = np.asarray(vertices, dtype=float)
        if verts.ndim != 2 or verts.shape[1] != 2 or len(verts) < 3:
            raise ValidationError("polygon needs at least 3 two-dimensional vertices")
        if not spacing > 0:
            raise ValidationError("spacing must be positive")
        area = _polygon_signed_area(verts)
        if area <= 1e-14:
            raise ValidationError("polygon must be counterclockwise with positive area")
        if not _polygon_is_simple(verts):
            raise ValidationError("polygon must be simple (no self-intersections)")
        is_convex = _polygon_is_convex(verts)
        if convex is not None and bool(convex) != is_convex:
            raise ValidationError(
                f"convex flag {convex} disagrees with the vertex test ({is_convex})")
        x0, x1 = float(verts[:, 0].min()), float(verts[:, 0].max())
        y0, y1 = float(verts[:, 1].min()), float(verts[:, 1].max())
        nx = max(1, int(math.ceil((x1 - x0) / spacing - 1e-12)))
        ny = max(1, int(math.ceil((y1 - y0) / spacing - 1e-12)))
        nodes_x = np.linspace(x0, x1, nx + 1)
        nodes_y = np.linspace(y0, y1, ny + 1)
        gx, gy = np.meshgrid(nodes_x, nodes_y)
        tol = 1e-9 * max(x1 - x0, y1 - y0)
        inside = _points_in_polygon(gx, gy, verts, tol)
        return CrossSection(dim=2, spacing_target=spacing, polygon=verts,
                            convex=is_convex, nodes_x=nodes_x, nodes_y=nodes_y,
                            node_inside=inside)

    @property
    def length(self) -> float:
        if self.dim != 1:
            raise UnsupportedDimensionError("length is defined for interval cross-sections")
        return self.interval[1] - self.interval[0]

    @property
    def spacing(self) -> float:
        if self.dim == 1:
            return float(self.nodes_x[1] - self.nodes_x[0])
        return float(self.nodes_x[1] - self.nodes_x[0])

    @property
    def spacing_y(self) -> float:
        if self.dim != 2:
            raise UnsupportedDimensionError("spacing_y needs a polygon cross-section")
        return float(self.nodes_y[1] - self.nodes_y[0])

    def measure(self) -> float:
        """Length (dim 1) or area (dim 2) of omega."""
        if self.dim == 1:
            return self.length
        return _polygon_signed_area(self.polygon)

    def contains(self, px, py=None) -> np.ndarray:
        if self.dim == 1:
            px = np.asarray(px, dtype=float)
            lo, hi = self.interval
            return (px >= lo) & (px <= hi)
        tol = 1e-9 * max(np.ptp(self.polygon[:, 0]), np.ptp(self.polygon[:, 1]))
        return _points_in_polygon(np.asarray(px, float), np.asarray(py, float),
                                  self.polygon, tol)


# ---------------------------------------------------------------------------
# containers and graph functions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Container:
    """A half-cylinder over a cross-section (walls plus the closed bottom are
    the container boundary) or a planar cone with vertex at the origin."""

    kind: str  # "cylinder" | "cone"
    cross_section: Optional[CrossSection] = None
    theta1: float = 0.0
    theta2: float = 0.0

    @staticmethod
    def cylinder(cross_section: CrossSection) -> "Container":
        return Container(kind="cylinder", cross_section=cross_section)

    @staticmethod
    def cone(theta1: float, theta2: float) -> "Container":
        if not (0.0 < theta1 < theta2 < 2.0 * math.pi):
            raise ValidationError("cone sector needs 0 < theta1 < theta2 < 2*pi")
        return Container(kind="cone", theta1=float(theta1), theta2=float(theta2))

    @property
    def ambient_dim(self) -> int:
        if self.kind == "cone":
            return 2
        return self.cross_section.dim + 1

    @property
    def convex(self) -> bool:
        if self.kind == "cone":
            return (self.theta2 - self.theta1) <= math.pi + 1e-14
        return self.cross_section.convex


def staggered_values(cs: CrossSection, arr: np.ndarray) -> np.ndarray:
    """Cell-midpoint values of a nodal field, for midpoint-rule quadrature."""
    arr = np.asarray(arr, dtype=float)
    if cs.dim == 1:
        return 0.5 * (arr[1:] + arr[:-1])
    vv = np.where(cs.node_inside, arr, np.nan)
    return 0.25 * (vv[:-1, :-1] + vv[:-1, 1:] + vv[1:, :-1] + vv[1:, 1:])


def staggered_grads(cs: CrossSection, arr: np.ndarray) -> np.ndarray:
    """Cell-midpoint gradients of a nodal field by staggered differences."""
    arr = np.asarray(arr, dtype=float)
    if cs.dim == 1:
        return (arr[1:] - arr[:-1]) / cs.spacing
    vv = np.where(cs.node_inside, arr, np.nan)
    gx = 0.5 * ((vv[:-1, 1:] - vv[:-1, :-1]) + (vv[1:, 1:] - vv[1:, :-1])) / cs.spacing
    gy = 0.5 * ((vv[1:, :-1] - vv[:-1, :-1]) + (vv[1:, 1:] - vv[:-1, 1:])) / cs.spacing_y
    return np.stack([gx, gy])


_FAMILIES = ("constant", "affine", "cosine")


def _family_callable(cs: CrossSection, family: str, params: dict) -> Callable:
    if family == "constant":
        h = float(params["h"])
        if cs.dim == 1:
            return lambda x: np.full_like(np.asarray(x, float), h)
        return lambda x, y: np.full_like(np.asarray(x, float), h)
    if family == "affine":
        b = float(params["b"])
        if cs.dim == 1:
            a = float(params["a"])
            return lambda x: a * np.asarray(x, float) + b
        ax, ay = (float(v) for v in params["a"])
        return lambda x, y: ax * np.asarray(x, float) + ay * np.asarray(y, float) + b
    if family == "cosine":
        a, b, k = float(params["a"]), float(params["b"]), int(params.get("k", 1))
        if cs.dim == 1:
            lo, hi = cs.interval
            ln = hi - lo
            return lambda x: b + a * np.cos(k * math.pi * (np.asarray(x, float) - lo) / ln)
        x0 = float(cs.nodes_x[0])
        ln = float(cs.nodes_x[-1] - cs.nodes_x[0])
        return lambda x, y: b + a * np.cos(k * math.pi * (np.asarray(x, float) - x0) / ln)
    raise ValidationError(f"unknown graph family {family!r}")


@dataclass(frozen=True)
class GraphFunction:
    """Nodal samples of a positive function phi on the cross-section grid.

    When an analytic family tag is present, nodal values are the family
    evaluated at the nodes, and pointwise evaluation uses the closed form;
    otherwise evaluation interpolates the samples."""

    cross_section: CrossSection
    values: np.ndarray
    family: Optional[str] = None
    params: Optional[dict] = None

    def __post_init__(self):
        cs = self.cross_section
        vals = np.asarray(self.values, dtype=float)
        if cs.dim == 1:
            if vals.shape != cs.nodes_x.shape:
                raise ValidationError(
                    f"expected {cs.nodes_x.shape[0]} nodal values, got {vals.shape}")
            defined = vals
        else:
            want = (cs.nodes_y.size, cs.nodes_x.size)
            if vals.shape != want:
                raise ValidationError(f"expected nodal array of shape {want}, got {vals.shape}")
            defined = vals[cs.node_inside]
        if defined.size and not np.all(defined > 0.0):
            raise InvalidGraphError("graph function must be strictly positive on the grid")
        object.__setattr__(self, "values", vals)

    @staticmethod
    def from_family(cs: CrossSection, family: str, params: dict) -> "GraphFunction":
        if family not in _FAMILIES:
            raise ValidationError(f"unknown graph family {family!r}")
        f = _family_callable(cs, family, params)
        if cs.dim == 1:
            vals = f(cs.nodes_x)
        else:
            gx, gy = np.meshgrid(cs.nodes_x, cs.nodes_y)
            vals = f(gx, gy)
        return GraphFunction(cs, vals, family=family, params=dict(params))

    @staticmethod
    def from_samples(cs: CrossSection, samples) -> "GraphFunction":
        return GraphFunction(cs, np.asarray(samples, dtype=float))

    # -- evaluation -------------------------------------------------------

    def evaluate(self, x, y=None) -> np.ndarray:
        cs = self.cross_section
        if self.family is not None:
            f = _family_callable(cs, self.family, self.params)
            return f(x) if cs.dim == 1 else f(x, y)
        if cs.dim == 1:
            return np.interp(np.asarray(x, float), cs.nodes_x, self.values)
        return self._bilinear(np.asarray(x, float), np.asarray(y, float))

    def _bilinear(self, x, y):
        cs = self.cross_section
        sx, sy = cs.spacing, cs.spacing_y
        ix = np.clip(((x - cs.nodes_x[0]) / sx).astype(int), 0, cs.nodes_x.size - 2)
        iy = np.clip(((y - cs.nodes_y[0]) / sy).astype(int), 0, cs.nodes_y.size - 2)
        tx = (x - cs.nodes_x[ix]) / sx
        ty = (y - cs.nodes_y[iy]) / sy
        v = self.values
        corners = np.stack([v[iy, ix], v[iy, ix + 1], v[iy + 1, ix], v[iy + 1, ix + 1]])
        # fall back to the nearest defined corner outside omega
        finite = np.isfinite(corners)
        fallback = np.where(finite.any(axis=0),
                            np.nanmax(np.where(finite, corners, -np.inf), axis=0), np.nan)
        corners = np.where(finite, corners, fallback)
        return ((1 - tx) * (1 - ty) * corners[0] + tx * (1 - ty) * corners[1]
                + (1 - tx) * ty * corners[2] + tx * ty * corners[3])

    # -- derivatives and quadrature samples --------------------------------

    def grad_nodes(self) -> np.ndarray:
        """Nodal gradient: central differences inside, second-order one-sided
        at the boundary of omega.  dim 1 -> (n+1,), dim 2 -> (2, ny, nx)."""
        cs = self.cross_section
        if cs.dim == 1:
            h = cs.spacing
            v = self.values
            g = np.empty_like(v)
            g[1:-1] = (v[2:] - v[:-2]) / (2 * h)
            g[0] = (-3 * v[0] + 4 * v[1] - v[2]) / (2 * h)
            g[-1] = (3 * v[-1] - 4 * v[-2] + v[-3]) / (2 * h)
            return g
        return np.stack([self._grad_axis_2d(1), self._grad_axis_2d(0)])

    def _grad_axis_2d(self, axis: int) -> np.ndarray:
        cs = self.cross_section
        h = cs.spacing if axis == 1 else cs.spacing_y
        v = np.where(cs.node_inside, self.values, np.nan)
        g = np.full_like(v, np.nan)
        n = v.shape[axis]

        def sl(i):
            return (slice(None), i) if axis == 1 else (i, slice(None))

        for i in range(n):
            c = v[sl(i)]
            out = np.full_like(c, np.nan)
            if 0 < i < n - 1:
                out = (v[sl(i + 1)] - v[sl(i - 1)]) / (2 * h)
            fwd_ok = i + 2 < n
            bwd_ok = i - 2 >= 0
            if fwd_ok:
                f2 = (-3 * c + 4 * v[sl(i + 1)] - v[sl(i + 2)]) / (2 * h)
                out = np.where(np.isnan(out), f2, out)
            if bwd_ok:
                b2 = (3 * c - 4 * v[sl(i - 1)] + v[sl(i - 2)]) / (2 * h)
                out = np.where(np.isnan(out), b2, out)
            g[sl(i)] = out
        return g

    def mid_values(self) -> np.ndarray:
        """Cell-midpoint values for midpoint-rule quadrature over omega."""
        return staggered_values(self.cross_section, self.values)

    def mid_grads(self) -> np.ndarray:
        """Cell-midpoint gradients by staggered differences of nodal values."""
        return staggered_grads(self.cross_section, self.values)

    def quadrature_cells(self):
        """(values, grad, cell_area, valid_mask) for midpoint quadrature."""
        cs = self.cross_section
        vals = self.mid_values()
        grads = self.mid_grads()
        if cs.dim == 1:
            area = cs.spacing
            valid = np.isfinite(vals)
        else:
            area = cs.spacing * cs.spacing_y
            valid = np.isfinite(vals) & np.all(np.isfinite(grads), axis=0)
        return vals, grads, area, valid

    @property
    def phi_min(self) -> float:
        cs = self.cross_section
        v = self.values if cs.dim == 1 else self.values[cs.node_inside]
        return float(np.min(v))

    @property
    def phi_max(self) -> float:
        cs = self.cross_section
        v = self.values if cs.dim == 1 else self.values[cs.node_inside]
        return float(np.max(v))

    def perturbed(self, delta_values: np.ndarray) -> "GraphFunction":
        """phi + dv as a plain sampled graph function (family tag dropped)."""
        return GraphFunction(self.cross_section, self.values + delta_values)


# ---------------------------------------------------------------------------
# domain descriptors
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SubgraphDomain:
    """The bounded region below the graph of phi inside a half-cylinder."""

    container: Container
    phi: GraphFunction

    @property
    def ambient_dim(self) -> int:
        return self.container.ambient_dim

    def volume(self) -> float:
        vals, _, area, valid = self.phi.quadrature_cells()
        return float(np.sum(vals[valid]) * area)

    def graph_measure(self) -> float:
        """Area of the graph top (the relative boundary of the domain)."""
        vals, grads, area, valid = self.phi.quadrature_cells()
        if self.phi.cross_section.dim == 1:
            g2 = grads ** 2
        else:
            g2 = grads[0] ** 2 + grads[1] ** 2
        return float(np.sum(np.sqrt(1.0 + g2[valid])) * area)


@dataclass(frozen=True)
class ConeDomain:
    """A planar cone sector truncated at a finite radius."""

    container: Container
    radius: float

    def __post_init__(self):
        if self.container.kind != "cone":
            raise UnsupportedDomainError("cone domain needs a cone container")
        if not self.radius > 0:
            raise ValidationError("truncation radius must be positive")

    @property
    def ambient_dim(self) -> int:
        return 2


def build_subgraph_domain(container: Container, phi: GraphFunction) -> SubgraphDomain:
    """Descriptor for the subgraph region of phi in a half-cylinder."""
    if container.kind != "cylinder":
        raise UnsupportedDomainError(
            "subgraph domains are defined over cylinder containers only")
    if phi.cross_section is not container.cross_section:
        if phi.cross_section.dim != container.cross_section.dim:
            raise ValidationError("graph function and container cross-section disagree")
    # positivity is validated by GraphFunction; re-check to fail loudly here
    if phi.phi_min <= 0.0:
        raise InvalidGraphError("graph function must be strictly positive")
    return SubgraphDomain(container=container, phi=phi)


# ---------------------------------------------------------------------------
# volume grids
# ---------------------------------------------------------------------------


def _aggregate_pairs(ii, jj, ww, m):
    """Merge duplicate unordered pairs, summing weights."""
    if len(ii) == 0:
        return (np.zeros(0, np.int64), np.zeros(0, np.int64), np.zeros(0, np.int64))
    a = np.minimum(ii, jj).astype(np.int64)
    b = np.maximum(ii, jj).astype(np.int64)
    key = a * np.int64(m) + b
    order = np.argsort(key, kind="stable")
    key, a, b, ww = key[order], a[order], b[order], np.asarray(ww, np.int64)[order]
    uniq, start = np.unique(key, return_index=True)
    wsum = np.add.reduceat(ww, start)
    return a[start], b[start], wsum


class VolumeGrid:
    """Uniform Cartesian cell discretization of a bounded domain, with
    container-aware boundary-face weights.

    The discrete relative perimeter of a mask E is an integer number of
    weight units: interior cut pairs carry the neighborhood weights, faces on
    the container boundary carry nothing (their weight is reflected back
    inside for 2D cylinders), and faces against the rest of the domain's
    complement inside the container count in full.
    """

    def __init__(self, container: Container, delta: float, inside: np.ndarray,
                 origin: tuple[int, ...]):
        if not delta > 0:
            raise ValidationError("grid step must be positive")
        self.container = container
        self.delta = float(delta)
        self.inside = np.ascontiguousarray(inside, dtype=bool)
        self.origin = tuple(int(v) for v in origin)
        self.dim = self.inside.ndim
        if self.dim not in (2, 3):
            raise UnsupportedDimensionError("volume grids support 2 or 3 dimensions")
        self.cell_ids = np.full(self.inside.shape, -1, dtype=np.int64)
        self.n_cells = int(self.inside.sum())
        self.cell_ids[self.inside] = np.arange(self.n_cells, dtype=np.int64)
        idx = np.nonzero(self.inside)
        # per-cell integer lattice coordinates, x fastest axis last
        self._cell_idx = np.stack(idx, axis=1).astype(np.int64)  # (m, dim) in array axes
        self._build_weights()

    # -- construction of the weight structure ------------------------------

    def _build_weights(self):
        if self.container.kind == "cone":
            self._build_cone()
        elif self.dim == 2:
            self._build_cylinder_2d()
        else:
            self._build_cylinder_3d()
        ax_classes = self.face_classes
        self.boundary_adjacent = np.any(ax_classes == FACE_RELATIVE, axis=1)

    def _lookup(self, ax_idx):
        """Cell id for array indices given as a tuple of arrays; -1 outside."""
        ok = np.ones(ax_idx[0].shape, dtype=bool)
        for axis, arr in enumerate(ax_idx):
            ok &= (arr >= 0) & (arr < self.inside.shape[axis])
        j = np.full(ax_idx[0].shape, -1, dtype=np.int64)
        clipped = tuple(np.clip(arr, 0, self.inside.shape[a] - 1)
                        for a, arr in enumerate(ax_idx))
        j[ok] = self.cell_ids[tuple(c[ok] for c in clipped)]
        return j

    def _build_cylinder_2d(self):
        cs = self.container.cross_section
        if cs.dim != 1:
            raise UnsupportedDimensionError("2D grids need an interval cross-section")
        w_cols = max(1, int(round(cs.length / self.delta)))
        self._omega_cols = w_cols
        m = self.n_cells
        iy = self._cell_idx[:, 0]
        ix = self._cell_idx[:, 1]
        gx = ix + self.origin[0]
        gy = iy + self.origin[1]
        out_w = np.zeros(m, np.int64)
        altout_w = np.zeros(m, np.int64)
        face_cls = np.full((m, 4), FACE_INTERIOR, np.int8)
        pi, pj, pw = [], [], []
        dpi, dpj, dpw = [], [], []
        cells = np.arange(m, dtype=np.int64)
        for (dx, dy), w, canonical in _OFFSETS_2D:
            tx, ty = gx + dx, gy + dy
            direct_j = self._lookup((ty - self.origin[1], tx - self.origin[0]))
            direct_inside = direct_j >= 0
            altout_w[~direct_inside] += w
            # reflect across the walls (x = 0 and x = w_cols planes) and the
            # bottom; offsets reach at most two cells out, one pass suffices
            mx = np.where(tx < 0, -1 - tx, tx)
            mx = np.where(mx >= w_cols, 2 * w_cols - 1 - mx, mx)
            my = np.where(ty < 0, -1 - ty, ty)
            mirrored = (mx != tx) | (my != ty)
            in_container = (mx >= 0) & (mx < w_cols) & (my >= 0)
            tj = self._lookup((my - self.origin[1], mx - self.origin[0]))
            tgt_inside = (tj >= 0) & in_container
            self_pair = mirrored & tgt_inside & (tj == cells)
            # direct inside-inside pairs, one orientation per family
            if canonical:
                sel = ~mirrored & direct_inside
                pi.append(cells[sel]); pj.append(direct_j[sel])
                pw.append(np.full(int(sel.sum()), w, np.int64))
                dpi.append(cells[sel]); dpj.append(direct_j[sel])
                dpw.append(np.full(int(sel.sum()), w, np.int64))
            # mirrored pairs are discovered from both endpoints: half weight
            sel = mirrored & tgt_inside & ~self_pair
            pi.append(cells[sel]); pj.append(tj[sel])
            pw.append(np.full(int(sel.sum()), w // 2, np.int64))
            # anything not inside after reflection is a relative-boundary face
            sel = ~tgt_inside & ~self_pair & in_container
            np.add.at(out_w, cells[sel], w)
            if (dx, dy) in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                col = {(1, 0): 0, (-1, 0): 1, (0, 1): 2, (0, -1): 3}[(dx, dy)]
                cls = np.full(m, FACE_INTERIOR, np.int8)
                direct_in_c = (tx >= 0) & (tx < w_cols) & (ty >= 0)
                cls[direct_in_c & ~direct_inside] = FACE_RELATIVE
                cls[~direct_in_c] = FACE_FREE
                face_cls[:, col] = cls
        self.pairs_i, self.pairs_j, self.pairs_w = _aggregate_pairs(
            np.concatenate(pi) if pi else [], np.concatenate(pj) if pj else [],
            np.concatenate(pw) if pw else [], m)
        self.dpairs_i, self.dpairs_j, self.dpairs_w = _aggregate_pairs(
            np.concatenate(dpi) if dpi else [], np.concatenate(dpj) if dpj else [],
            np.concatenate(dpw) if dpw else [], m)
        self.out_w = out_w
        self.altout_w = altout_w
        self.face_classes = face_cls
        self.out_dir_w = None
        self.free_dir_w = None

    def _axis_offsets(self):
        if self.dim == 2:
            return [(1, 0), (-1, 0), (0, 1), (0, -1)]
        return [(1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1)]

    def _build_cylinder_3d(self):
        cs = self.container.cross_section
        if cs.dim != 2:
            raise UnsupportedDimensionError("3D grids need a polygon cross-section")
        m = self.n_cells
        iz, iy, ix = self._cell_idx[:, 0], self._cell_idx[:, 1], self._cell_idx[:, 2]
        d = self.delta
        out_w = np.zeros(m, np.int64)
        altout_w = np.zeros(m, np.int64)
        face_cls = np.full((m, 6), FACE_INTERIOR, np.int8)
        pi, pj, pw = [], [], []
        cells = np.arange(m, dtype=np.int64)
        offs = self._axis_offsets()
        for col, (dx, dy, dz) in enumerate(offs):
            tix, tiy, tiz = ix + dx, iy + dy, iz + dz
            tj = self._lookup((tiz, tiy, tix))
            tin = tj >= 0
            altout_w[~tin] += PERIMETER_SCALE
            if (dx, dy, dz) in ((1, 0, 0), (0, 1, 0), (0, 0, 1)):
                sel = tin
                pi.append(cells[sel]); pj.append(tj[sel])
                pw.append(np.full(int(sel.sum()), PERIMETER_SCALE, np.int64))
            # container test on the neighbor cell center
            cx = (tix + self.origin[0] + 0.5) * d
            cy = (tiy + self.origin[1] + 0.5) * d
            cz = (tiz + self.origin[2] + 0.5) * d
            in_c = cs.contains(cx, cy) & (cz > 0)
            rel = ~tin & in_c
            np.add.at(out_w, cells[rel], PERIMETER_SCALE)
            cls = np.full(m, FACE_INTERIOR, np.int8)
            cls[rel] = FACE_RELATIVE
            cls[~tin & ~in_c] = FACE_FREE
            face_cls[:, col] = cls
        self.pairs_i, self.pairs_j, self.pairs_w = _aggregate_pairs(
            np.concatenate(pi) if pi else [], np.concatenate(pj) if pj else [],
            np.concatenate(pw) if pw else [], m)
        self.dpairs_i, self.dpairs_j, self.dpairs_w = (
            self.pairs_i, self.pairs_j, self.pairs_w)
        self.out_w = out_w
        self.altout_w = altout_w
        self.face_classes = face_cls
        self.out_dir_w = None
        self.free_dir_w = None

    def _cone_ray_dirs(self):
        c = self.container
        return (Fraction(math.cos(c.theta1)), Fraction(math.sin(c.theta1)),
                Fraction(math.cos(c.theta2)), Fraction(math.sin(c.theta2)))

    def _face_on_ray(self, p1, p2, dx, dy) -> bool:
        """Whether the lattice segment p1-p2 lies on the ray from the origin
        with direction (dx, dy); exact rational arithmetic so the test
        commutes with integer dilation."""
        for (ax, ay) in (p1, p2):
            if ax * dy != ay * dx:
                return False
            if ax * dx + ay * dy < 0:
                return False
        return True

    def _build_cone(self, inherited=None):
        """Axis-face counting: every boundary face counts unless it lies
        exactly on a container ray.  Keeps the dilation identities exact."""
        m = self.n_cells
        iy = self._cell_idx[:, 0]
        ix = self._cell_idx[:, 1]
        gx = ix + self.origin[0]
        gy = iy + self.origin[1]
        offs = [(1, 0), (-1, 0), (0, 1), (0, -1)]
        out_dir = np.zeros((m, 4), np.int64)
        free_dir = np.zeros((m, 4), np.int64)
        altout_w = np.zeros(m, np.int64)
        face_cls = np.full((m, 4), FACE_INTERIOR, np.int8)
        pi, pj, pw = [], [], []
        cells = np.arange(m, dtype=np.int64)
        d1x, d1y, d2x, d2y = self._cone_ray_dirs()
        for col, (dx, dy) in enumerate(offs):
            tx, ty = gx + dx, gy + dy
            tj = self._lookup((ty - self.origin[1], tx - self.origin[0]))
            tin = tj >= 0
            altout_w[~tin] += PERIMETER_SCALE
            if (dx, dy) in ((1, 0), (0, 1)):
                sel = tin
                pi.append(cells[sel]); pj.append(tj[sel])
                pw.append(np.full(int(sel.sum()), PERIMETER_SCALE, np.int64))
            bidx = np.nonzero(~tin)[0]
            for i in bidx:
                if inherited is not None:
                    out_dir[i, col] = inherited[0][i, col]
                    free_dir[i, col] = inherited[1][i, col]
                else:
                    p1, p2 = self._axis_face_endpoints(int(gx[i]), int(gy[i]), dx, dy)
                    free = (self._face_on_ray(p1, p2, d1x, d1y)
                            or self._face_on_ray(p1, p2, d2x, d2y))
                    if free:
                        free_dir[i, col] = PERIMETER_SCALE
                    else:
                        out_dir[i, col] = PERIMETER_SCALE
                face_cls[i, col] = FACE_FREE if free_dir[i, col] else FACE_RELATIVE
        self.pairs_i, self.pairs_j, self.pairs_w = _aggregate_pairs(
            np.concatenate(pi) if pi else [], np.concatenate(pj) if pj else [],
            np.concatenate(pw) if pw else [], m)
        self.dpairs_i, self.dpairs_j, self.dpairs_w = (
            self.pairs_i, self.pairs_j, self.pairs_w)
        self.out_dir_w = out_dir
        self.free_dir_w = free_dir
        self.out_w = out_dir.sum(axis=1)
        self.altout_w = altout_w
        self.face_classes = face_cls

    @staticmethod
    def _axis_face_endpoints(gx, gy, dx, dy):
        if dx == 1:
            return (gx + 1, gy), (gx + 1, gy + 1)
        if dx == -1:
            return (gx, gy), (gx, gy + 1)
        if dy == 1:
            return (gx, gy + 1), (gx + 1, gy + 1)
        return (gx, gy), (gx + 1, gy)

    # -- discrete functionals ----------------------------------------------

    def full_mask(self) -> "SubsetMask":
        return SubsetMask(self, np.ones(self.n_cells, dtype=bool))

    def perimeter_units(self, cells: np.ndarray, count_free: bool = False) -> int:
        """Relative perimeter of a cell set in integer weight units."""
        cells = np.asarray(cells, dtype=bool)
        if count_free:
            fixed = int(self.altout_w[cells].sum())
            cut = cells[self.dpairs_i] ^ cells[self.dpairs_j]
            return fixed + int(self.dpairs_w[cut].sum())
        fixed = int(self.out_w[cells].sum())
        cut = cells[self.pairs_i] ^ cells[self.pairs_j]
        return fixed + int(self.pairs_w[cut].sum())

    def exact_ratio(self, cells: np.ndarray) -> Fraction:
        """Exact rational perimeter-to-volume ratio of a cell set."""
        n = int(np.asarray(cells, bool).sum())
        if n == 0:
            raise ValidationError("ratio of an empty cell set is undefined")
        p = self.perimeter_units(cells)
        return Fraction(p, PERIMETER_SCALE * n) / Fraction(self.delta)

    def cell_centers(self) -> np.ndarray:
        """(m, dim) physical centers of the inside cells, x first."""
        d = self.delta
        idx = self._cell_idx
        if self.dim == 2:
            x = (idx[:, 1] + self.origin[0] + 0.5) * d + self._x_shift()
            y = (idx[:, 0] + self.origin[1] + 0.5) * d
            return np.stack([x, y], axis=1)
        x = (idx[:, 2] + self.origin[0] + 0.5) * d + self._x_shift()
        y = (idx[:, 1] + self.origin[1] + 0.5) * d + self._y_shift()
        z = (idx[:, 0] + self.origin[2] + 0.5) * d
        return np.stack([x, y, z], axis=1)

    def _x_shift(self) -> float:
        if self.container.kind == "cone":
            return 0.0
        cs = self.container.cross_section
        return cs.interval[0] if cs.dim == 1 else float(cs.nodes_x[0])

    def _y_shift(self) -> float:
        cs = self.container.cross_section
        return float(cs.nodes_y[0]) if cs is not None and cs.dim == 2 else 0.0

    # -- dilation ------------------------------------------------------------

    def refine(self, t: int) -> "VolumeGrid":
        """Block refinement: each cell maps to a t x ... x t block on the same
        lattice spacing, with boundary-face classification inherited so that
        perimeter units scale exactly by t^(dim-1)."""
        if self.container.kind != "cone":
            raise DilationNotClosedError(
                "dilation is only closed in cone containers")
        t = int(t)
        if t < 1:
            raise ValidationError("dilation factor must be a positive integer")
        if t == 1:
            return self
        inside = np.kron(self.inside, np.ones((t,) * self.dim, dtype=bool))
        new = VolumeGrid.__new__(VolumeGrid)
        new.container = self.container
        new.delta = self.delta
        new.inside = inside
        new.origin = tuple(v * t for v in self.origin)
        new.dim = self.dim
        new.cell_ids = np.full(inside.shape, -1, dtype=np.int64)
        new.n_cells = int(inside.sum())
        new.cell_ids[inside] = np.arange(new.n_cells, dtype=np.int64)
        idx = np.nonzero(inside)
        new._cell_idx = np.stack(idx, axis=1).astype(np.int64)
        # map each refined cell to its parent and inherit face classification
        parent_ids = self.cell_ids[tuple(new._cell_idx[:, a] // t
                                         for a in range(self.dim))]
        inh_out = np.zeros((new.n_cells, 4), np.int64)
        inh_free = np.zeros((new.n_cells, 4), np.int64)
        offs = [(1, 0), (-1, 0), (0, 1), (0, -1)]
        sub = new._cell_idx % t
        for col, (dx, dy) in enumerate(offs):
            on_face = np.ones(new.n_cells, dtype=bool)
            if dx == 1:
                on_face &= sub[:, 1] == t - 1
            elif dx == -1:
                on_face &= sub[:, 1] == 0
            elif dy == 1:
                on_face &= sub[:, 0] == t - 1
            else:
                on_face &= sub[:, 0] == 0
            inh_out[on_face, col] = self.out_dir_w[parent_ids[on_face], col]
            inh_free[on_face, col] = self.free_dir_w[parent_ids[on_face], col]
        new._build_cone(inherited=(inh_out, inh_free))
        ax_classes = new.face_classes
        new.boundary_adjacent = np.any(ax_classes == FACE_RELATIVE, axis=1)
        return new


@dataclass(frozen=True)
class SubsetMask:
    """Boolean selection of inside cells of a parent grid."""

    grid: VolumeGrid
    cells: np.ndarray

    def __post_init__(self):
        cells = np.asarray(self.cells, dtype=bool)
        if cells.shape != (self.grid.n_cells,):
            raise ValidationError(
                f"mask needs one flag per inside cell ({self.grid.n_cells})")
        object.__setattr__(self, "cells", cells)

    @property
    def n_selected(self) -> int:
        return int(self.cells.sum())

    def to_raster(self) -> np.ndarray:
        """Per-grid-cell codes: 0 outside, 128 domain, 255 selected."""
        img = np.zeros(self.grid.inside.shape, dtype=np.uint8)
        img[self.grid.inside] = np.where(self.cells, 255, 128)
        return img


# ---------------------------------------------------------------------------
# rasterize / dilate
# ---------------------------------------------------------------------------


def rasterize(domain, delta: float) -> VolumeGrid:
    """Cartesian cell discretization of a bounded domain descriptor."""
    if not delta > 0:
        raise ValidationError("grid step must be positive")
    if isinstance(domain, SubgraphDomain):
        if domain.ambient_dim == 2:
            return _rasterize_subgraph_2d(domain, delta)
        return _rasterize_subgraph_3d(domain, delta)
    if isinstance(domain, ConeDomain):
        return _rasterize_cone(domain, delta)
    raise UnsupportedDomainError(f"cannot rasterize {type(domain).__name__}")


def _check_resolution(*counts):
    for c in counts:
        if c < _MIN_CELLS_PER_EXTENT:
            raise ResolutionError(
                f"grid step too coarse: {c} cells across one extent "
                f"(need at least {_MIN_CELLS_PER_EXTENT})")


def _rasterize_subgraph_2d(domain: SubgraphDomain, delta: float) -> VolumeGrid:
    cs = domain.container.cross_section
    phi = domain.phi
    lo, _ = cs.interval
    w_cols = max(1, int(round(cs.length / delta)))
    ny = max(1, int(math.ceil(phi.phi_max / delta - 1e-12)))
    _check_resolution(w_cols, ny)
    jj, ii = np.meshgrid(np.arange(ny), np.arange(w_cols), indexing="ij")
    cx = lo + (ii + 0.5) * delta
    cy = (jj + 0.5) * delta
    inside = cy < phi.evaluate(cx)
    return VolumeGrid(domain.container, delta, inside, origin=(0, 0))


def _rasterize_subgraph_3d(domain: SubgraphDomain, delta: float) -> VolumeGrid:
    cs = domain.container.cross_section
    phi = domain.phi
    x0 = float(cs.nodes_x[0]); y0 = float(cs.nodes_y[0])
    nx = max(1, int(math.ceil((cs.nodes_x[-1] - x0) / delta - 1e-12)))
    ny = max(1, int(math.ceil((cs.nodes_y[-1] - y0) / delta - 1e-12)))
    nz = max(1, int(math.ceil(phi.phi_max / delta - 1e-12)))
    _check_resolution(nx, ny, nz)
    kk, jj, ii = np.meshgrid(np.arange(nz), np.arange(ny), np.arange(nx),
                             indexing="ij")
    cx = x0 + (ii + 0.5) * delta
    cy = y0 + (jj + 0.5) * delta
    cz = (kk + 0.5) * delta
    in_omega = cs.contains(cx.ravel(), cy.ravel()).reshape(cx.shape)
    vals = phi.evaluate(cx.ravel(), cy.ravel()).reshape(cx.shape)
    inside = in_omega & (cz < vals)
    return VolumeGrid(domain.container, delta, inside, origin=(0, 0, 0))


def _rasterize_cone(domain: ConeDomain, delta: float) -> VolumeGrid:
    c = domain.container
    r = domain.radius
    th = np.linspace(c.theta1, c.theta2, 64)
    xs = np.concatenate([[0.0], r * np.cos(th)])
    ys = np.concatenate([[0.0], r * np.sin(th)])
    ix0 = int(math.floor(xs.min() / delta)) - 1
    ix1 = int(math.ceil(xs.max() / delta)) + 1
    iy0 = int(math.floor(ys.min() / delta)) - 1
    iy1 = int(math.ceil(ys.max() / delta)) + 1
    nx, ny = ix1 - ix0, iy1 - iy0
    _check_resolution(max(nx - 2, 1), max(ny - 2, 1))
    jj, ii = np.meshgrid(np.arange(ny), np.arange(nx), indexing="ij")
    cx = (ii + ix0 + 0.5) * delta
    cy = (jj + iy0 + 0.5) * delta
    ang = np.arctan2(cy, cx)
    ang = np.where(ang < 0, ang + 2 * math.pi, ang)
    inside = ((ang > c.theta1) & (ang < c.theta2)
              & (cx * cx + cy * cy < r * r))
    if not inside.any():
        raise ResolutionError("no cell center falls inside the truncated sector")
    return VolumeGrid(c, delta, inside, origin=(ix0, iy0))


def dilate(mask: SubsetMask, t: int) -> SubsetMask:
    """Image of a mask under x -> t*x on a t-times refined grid.

    Volumes scale exactly by t^N and relative perimeter by t^(N-1): the block
    refinement inherits the boundary-face classification combinatorially."""
    grid = mask.grid
    if grid.container.kind != "cone":
        raise DilationNotClosedError(
            "dilation leaves a cylinder container; only cones are dilation invariant")
    t = int(t)
    if t < 1:
        raise ValidationError("dilation factor must be a positive integer")
    if t == 1:
        return SubsetMask(grid, mask.cells.copy())
    refined = grid.refine(t)
    sel2d = np.zeros(grid.inside.shape, dtype=bool)
    sel2d[grid.inside] = mask.cells
    sel_ref = np.kron(sel2d, np.ones((t,) * grid.dim, dtype=bool))
    return SubsetMask(refined, sel_ref[refined.inside])


# ---------------------------------------------------------------------------
# triangulation
# ---------------------------------------------------------------------------

TAG_GRAPH = 0       # relative boundary: the graph top
TAG_CONTAINER = 1   # container contact: walls and bottom


@dataclass(frozen=True)
class TriangleMesh:
    """Conforming triangulation of a planar subgraph domain.

    Built structurally by mapping a reference grid under
    (x, s) -> (x, s * phi(x)) and splitting each quad; the node index grid and
    the per-column graph data stay attached for boundary-flux recovery."""

    nodes: np.ndarray           # (M, 2)
    triangles: np.ndarray       # (T, 3)
    boundary_edges: np.ndarray  # (B, 2) node pairs
    boundary_tags: np.ndarray   # (B,) TAG_GRAPH | TAG_CONTAINER
    node_grid: np.ndarray       # (ny+1, nx+1) node ids
    col_x: np.ndarray           # (nx+1,) column abscissae
    col_phi: np.ndarray         # (nx+1,) graph height per column
    col_dphi: np.ndarray        # (nx+1,) graph slope per column
    min_angle_deg: float

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def nx(self) -> int:
        return self.node_grid.shape[1] - 1

    @property
    def ny(self) -> int:
        return self.node_grid.shape[0] - 1

    def dirichlet_nodes(self) -> np.ndarray:
        return np.unique(self.boundary_edges[self.boundary_tags == TAG_GRAPH])

    def triangle_areas(self) -> np.ndarray:
        p = self.nodes[self.triangles]
        return 0.5 * np.abs(
            (p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
            - (p[:, 2, 0] - p[:, 0, 0]) * (p[:, 1, 1] - p[:, 0, 1]))

    def domain_area(self) -> float:
        return float(self.triangle_areas().sum())

    def graph_boundary_length(self) -> float:
        e = self.boundary_edges[self.boundary_tags == TAG_GRAPH]
        seg = self.nodes[e[:, 1]] - self.nodes[e[:, 0]]
        return float(np.hypot(seg[:, 0], seg[:, 1]).sum())


def _triangle_min_angle(p0, p1, p2) -> float:
    a = np.linalg.norm(p2 - p1)
    b = np.linalg.norm(p2 - p0)
    c = np.linalg.norm(p1 - p0)
    angles = []
    for (x, y, z) in ((a, b, c), (b, c, a), (c, a, b)):
        cosv = np.clip((y * y + z * z - x * x) / (2 * y * z), -1.0, 1.0)
        angles.append(math.degrees(math.acos(cosv)))
    return min(angles)


def triangulate(domain: SubgraphDomain, target_h: float) -> TriangleMesh:
    """Structured triangulation of a planar subgraph domain with boundary
    edges tagged graph-top versus container-contact."""
    if domain.ambient_dim != 2:
        raise UnsupportedDimensionError("triangulation is available for N = 2 only")
    if not target_h > 0:
        raise ValidationError("mesh size must be positive")
    cs = domain.container.cross_section
    phi = domain.phi
    lo, hi = cs.interval
    if phi.phi_min <= 0:
        raise InvalidGraphError("graph function must be strictly positive")
    nx = max(2, int(math.ceil((hi - lo) / target_h - 1e-12)))
    ny = max(2, int(math.ceil(phi.phi_max / target_h - 1e-12)))
    xs = np.linspace(lo, hi, nx + 1)
    col_phi = np.asarray(phi.evaluate(xs), dtype=float)
    if np.any(col_phi <= 0):
        raise InvalidGraphError("graph height vanishes; zero-area domain")
    # graph slope per column for normal-direction recovery on the top
    gcol = np.empty_like(col_phi)
    dx = xs[1] - xs[0]
    gcol[1:-1] = (col_phi[2:] - col_phi[:-2]) / (2 * dx)
    gcol[0] = (-3 * col_phi[0] + 4 * col_phi[1] - col_phi[2]) / (2 * dx)
    gcol[-1] = (3 * col_phi[-1] - 4 * col_phi[-2] + col_phi[-3]) / (2 * dx)

    s = np.linspace(0.0, 1.0, ny + 1)
    node_grid = np.arange((nx + 1) * (ny + 1)).reshape(ny + 1, nx + 1)
    gx = np.broadcast_to(xs, (ny + 1, nx + 1))
    gy = s[:, None] * col_phi[None, :]
    nodes = np.stack([gx.ravel(), gy.ravel()], axis=1)

    triangles = []
    min_angle = 180.0
    for j in range(ny):
        for i in range(nx):
            n00 = node_grid[j, i]; n10 = node_grid[j, i + 1]
            n01 = node_grid[j + 1, i]; n11 = node_grid[j + 1, i + 1]
            split_a = [(n00, n10, n11), (n00, n11, n01)]   # main diagonal
            split_b = [(n00, n10, n01), (n10, n11, n01)]
            qa = min(_triangle_min_angle(nodes[a], nodes[b], nodes[c])
                     for a, b, c in split_a)
            qb = min(_triangle_min_angle(nodes[a], nodes[b], nodes[c])
                     for a, b, c in split_b)
            chosen = split_a if qa >= qb - 1e-12 else split_b
            min_angle = min(min_angle, max(qa, qb))
            triangles.extend(chosen)
    if min_angle < _MIN_TRIANGLE_ANGLE_DEG:
        raise ResolutionError(
            f"mesh quality too low: minimum angle {min_angle:.1f} deg < "
            f"{_MIN_TRIANGLE_ANGLE_DEG} deg; refine the mesh or flatten the graph")

    edges, tags = [], []
    for i in range(nx):
        edges.append((node_grid[0, i], node_grid[0, i + 1])); tags.append(TAG_CONTAINER)
        edges.append((node_grid[ny, i], node_grid[ny, i + 1])); tags.append(TAG_GRAPH)
    for j in range(ny):
        edges.append((node_grid[j, 0], node_grid[j + 1, 0])); tags.append(TAG_CONTAINER)
        edges.append((node_grid[j, nx], node_grid[j + 1, nx])); tags.append(TAG_CONTAINER)

    return TriangleMesh(
        nodes=nodes,
        triangles=np.asarray(triangles, dtype=np.int64),
        boundary_edges=np.asarray(edges, dtype=np.int64),
        boundary_tags=np.asarray(tags, dtype=np.int8),
        node_grid=node_grid,
        col_x=xs,
        col_phi=col_phi,
        col_dphi=gcol,
        min_angle_deg=float(min_angle),
    )
