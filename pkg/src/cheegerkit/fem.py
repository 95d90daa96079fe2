"""Linear finite elements for the mixed torsion and eigenvalue problems.

P1 triangles; homogeneous Dirichlet data on the graph top, natural
(do-nothing) condition on the container contact.  Systems are SPD and solved
by conjugate gradients with diagonal preconditioning to 1e-10 relative
residual; the smallest eigenvalue by inverse power iteration with shift 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .domain import GraphFunction, TriangleMesh, TAG_GRAPH
from .errors import IllPosedError, LinearSolveError, NonConvergenceError
from .geometry import graph_volume, mean_curvature, orthogonality_residual, surface_area

_CG_TOL = 1e-12
_EIGEN_TOL = 1e-8
_EIGEN_MAX_ITER = 500
_EIGEN_BOUND_SLACK = 0.02


@dataclass(frozen=True)
class ScalarField:
    """Nodal values on a triangle mesh with per-triangle constant gradient."""

    mesh: TriangleMesh
    values: np.ndarray

    def triangle_gradients(self) -> np.ndarray:
        mesh = self.mesh
        tri = mesh.triangles
        p = mesh.nodes[tri]
        x, y = p[:, :, 0], p[:, :, 1]
        two_a = ((x[:, 1] - x[:, 0]) * (y[:, 2] - y[:, 0])
                 - (x[:, 2] - x[:, 0]) * (y[:, 1] - y[:, 0]))
        b = np.stack([y[:, 1] - y[:, 2], y[:, 2] - y[:, 0], y[:, 0] - y[:, 1]], axis=1)
        c = np.stack([x[:, 2] - x[:, 1], x[:, 0] - x[:, 2], x[:, 1] - x[:, 0]], axis=1)
        u = self.values[tri]
        gx = np.sum(u * b, axis=1) / two_a
        gy = np.sum(u * c, axis=1) / two_a
        return np.stack([gx, gy], axis=1)

    def triangle_means(self) -> np.ndarray:
        return self.values[self.mesh.triangles].mean(axis=1)

    def interior_minimum(self) -> float:
        boundary = np.unique(self.mesh.boundary_edges)
        interior = np.setdiff1d(np.arange(self.mesh.n_nodes), boundary)
        return float(self.values[interior].min())


@dataclass(frozen=True)
class TorsionCertificate:
    u: ScalarField
    c_est: float
    overdet_residual: float
    p_values: np.ndarray            # per-triangle P = |Du|^2 + (2/N) u
    grad_bound_margin: float        # c_est - max |Du|
    volume_identity_gap: float      # | |Omega| - c_est * len(graph top) |
    edge_flux: np.ndarray           # per top-edge normal derivative of u


@dataclass(frozen=True)
class EigenCertificate:
    lambda1: float
    eigenfunction: ScalarField
    cheeger_bound: Optional[float] = None
    bound_satisfied: Optional[bool] = None


@dataclass(frozen=True)
class EigenBoundResult:
    bound: float
    satisfied: bool


@dataclass(frozen=True)
class CurvatureUpperBound:
    max_H: float
    bound: float
    strict: bool
    equality_branch: bool


@dataclass(frozen=True)
class GradientFilterResult:
    lhs: float
    rhs: float
    satisfied: bool
    orthogonality_residual: float
    hypothesis_ok: bool


# ---------------------------------------------------------------------------
# assembly and linear algebra
# ---------------------------------------------------------------------------


def assemble(mesh: TriangleMesh):
    """Stiffness K, consistent mass M and unit load F for P1 elements."""
    tri = mesh.triangles
    p = mesh.nodes[tri]
    x, y = p[:, :, 0], p[:, :, 1]
    two_a = ((x[:, 1] - x[:, 0]) * (y[:, 2] - y[:, 0])
             - (x[:, 2] - x[:, 0]) * (y[:, 1] - y[:, 0]))
    area = 0.5 * np.abs(two_a)
    b = np.stack([y[:, 1] - y[:, 2], y[:, 2] - y[:, 0], y[:, 0] - y[:, 1]], axis=1)
    c = np.stack([x[:, 2] - x[:, 1], x[:, 0] - x[:, 2], x[:, 1] - x[:, 0]], axis=1)
    ke = (b[:, :, None] * b[:, None, :] + c[:, :, None] * c[:, None, :]) \
        / (4.0 * area[:, None, None])
    me = (area[:, None, None] / 12.0) * (np.ones((3, 3)) + np.eye(3))[None, :, :]
    rows = np.repeat(tri, 3, axis=1).ravel()
    cols = np.tile(tri, (1, 3)).ravel()
    n = mesh.n_nodes
    K = sp.coo_matrix((ke.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    M = sp.coo_matrix((me.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    F = np.zeros(n)
    np.add.at(F, tri.ravel(), np.repeat(area / 3.0, 3))
    return K, M, F


def pcg(A, rhs, tol: float = _CG_TOL, maxiter: Optional[int] = None) -> np.ndarray:
    """Conjugate gradients with Jacobi preconditioning on an SPD system."""
    n = len(rhs)
    if maxiter is None:
        maxiter = 20 * n + 2000
    inv_d = 1.0 / A.diagonal()
    x = np.zeros(n)
    r = rhs.copy()
    norm_b = float(np.linalg.norm(rhs))
    if norm_b == 0.0:
        return x
    z = inv_d * r
    p = z.copy()
    rz = float(r @ z)
    for _ in range(maxiter):
        if np.linalg.norm(r) <= tol * norm_b:
            return x
        ap = A @ p
        alpha = rz / float(p @ ap)
        x += alpha * p
        r -= alpha * ap
        z = inv_d * r
        rz_new = float(r @ z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    if np.linalg.norm(r) <= tol * norm_b:
        return x
    raise LinearSolveError(
        f"conjugate gradients stalled at relative residual "
        f"{np.linalg.norm(r) / norm_b:.3e}")


def _free_split(mesh: TriangleMesh):
    dirichlet = mesh.dirichlet_nodes()
    if dirichlet.size == 0:
        raise IllPosedError(
            "no graph-top boundary edges: the mixed problem needs a nonempty "
            "Dirichlet part")
    free = np.setdiff1d(np.arange(mesh.n_nodes), dirichlet)
    return free, dirichlet


# ---------------------------------------------------------------------------
# solvers
# ---------------------------------------------------------------------------


def solve_torsion(mesh: TriangleMesh) -> ScalarField:
    """Weak solution of -Laplace u = 1 with u = 0 on the graph top and zero
    flux on the container contact."""
    K, _, F = assemble(mesh)
    free, _ = _free_split(mesh)
    K_ff = K[free][:, free]
    u_f = pcg(K_ff, F[free])
    u = np.zeros(mesh.n_nodes)
    u[free] = u_f
    return ScalarField(mesh, u)


def solve_eigen(mesh: TriangleMesh) -> EigenCertificate:
    """Smallest eigenpair of the mixed problem by inverse power iteration,
    eigenfunction sign-normalized positive and scaled to unit mass norm."""
    K, M, _ = assemble(mesh)
    free, _ = _free_split(mesh)
    K_ff = K[free][:, free].tocsr()
    M_ff = M[free][:, free].tocsr()
    x = np.ones(len(free))
    x /= math.sqrt(float(x @ (M_ff @ x)))
    lam_old = math.inf
    for _ in range(_EIGEN_MAX_ITER):
        y = pcg(K_ff, M_ff @ x)
        norm = math.sqrt(float(y @ (M_ff @ y)))
        x = y / norm
        lam = float(x @ (K_ff @ x))  # Rayleigh quotient, x has unit M-norm
        if abs(lam - lam_old) <= _EIGEN_TOL * abs(lam):
            break
        lam_old = lam
    else:
        raise NonConvergenceError("inverse power iteration cap reached",
                                  last_iterate=lam)
    if x.sum() < 0:
        x = -x
    u = np.zeros(mesh.n_nodes)
    u[free] = x
    return EigenCertificate(lambda1=lam, eigenfunction=ScalarField(mesh, u))


def rayleigh_quotient(mesh: TriangleMesh, values: np.ndarray) -> float:
    """Dirichlet energy over mass of a nodal field (must vanish on the graph
    top to be admissible)."""
    K, M, _ = assemble(mesh)
    v = np.asarray(values, dtype=float)
    return float((v @ (K @ v)) / (v @ (M @ v)))


# ---------------------------------------------------------------------------
# certificates
# ---------------------------------------------------------------------------


def _top_normal_derivative(mesh: TriangleMesh, u: ScalarField) -> np.ndarray:
    """Normal derivative of u along the graph top, one value per column.

    u vanishes on the top, so its gradient there is normal: du/dnu equals
    the vertical derivative times sqrt(1 + phi'^2).  The vertical derivative
    uses the three top nodes of each column (second-order one-sided), which
    keeps the recovery independent of the volume identity it certifies."""
    ny = mesh.ny
    vals = u.values[mesh.node_grid]
    dz = mesh.col_phi / ny
    if ny >= 2:
        du = (3.0 * vals[ny] - 4.0 * vals[ny - 1] + vals[ny - 2]) / (2.0 * dz)
    else:
        du = (vals[ny] - vals[ny - 1]) / dz
    return du * np.sqrt(1.0 + mesh.col_dphi ** 2)


def torsion_certificate(mesh: TriangleMesh, u: ScalarField) -> TorsionCertificate:
    """Overdetermination certificate for a torsion solution.

    c_est is the length-weighted mean of -du/dnu over the graph top; the
    residual is the largest deviation of a top edge from that mean.  The
    P certificate |Du|^2 + (2/N) u is evaluated per triangle with the raw
    element gradient."""
    u_nu_cols = _top_normal_derivative(mesh, u)
    top_ids = mesh.node_grid[mesh.ny]
    pts = mesh.nodes[top_ids]
    seg = pts[1:] - pts[:-1]
    lengths = np.hypot(seg[:, 0], seg[:, 1])
    edge_flux = 0.5 * (u_nu_cols[1:] + u_nu_cols[:-1])
    c_est = float(-(lengths @ edge_flux) / lengths.sum())
    overdet_residual = float(np.max(np.abs(edge_flux + c_est)))
    grads = u.triangle_gradients()
    grad_norm2 = grads[:, 0] ** 2 + grads[:, 1] ** 2
    p_values = grad_norm2 + u.triangle_means()  # (2/N) u with N = 2
    max_grad = float(np.sqrt(grad_norm2.max()))
    area = mesh.domain_area()
    top_len = mesh.graph_boundary_length()
    return TorsionCertificate(
        u=u,
        c_est=c_est,
        overdet_residual=overdet_residual,
        p_values=p_values,
        grad_bound_margin=c_est - max_grad,
        volume_identity_gap=abs(area - c_est * top_len),
        edge_flux=edge_flux,
    )


def graph_adjacent_triangles(mesh: TriangleMesh) -> np.ndarray:
    """Boolean flag per triangle: touches the graph top."""
    top = set(int(n) for n in mesh.node_grid[mesh.ny])
    return np.array([any(int(v) in top for v in t) for t in mesh.triangles])


def cheeger_eigen_bound(lambda1: float, h: float) -> EigenBoundResult:
    """Coarea lower bound: the first eigenvalue dominates a quarter of the
    squared Cheeger constant (2% discretization slack)."""
    bound = h * h / 4.0
    return EigenBoundResult(bound=bound,
                            satisfied=lambda1 >= bound * (1.0 - _EIGEN_BOUND_SLACK))


def curvature_upper_bound_check(phi: GraphFunction, c_est: float) -> CurvatureUpperBound:
    """Strict curvature bound max H < 1/(N c) for solvable domains in convex
    containers; the constant-curvature equality branch is detected by a
    tolerance band and flagged instead of passed."""
    n = phi.cross_section.dim + 1
    bound = 1.0 / (n * c_est)
    field = mean_curvature(phi)
    finite = field.values[np.isfinite(field.values)]
    band = 1e-3 * (1.0 + abs(bound))
    equality = bool(np.all(np.abs(finite - bound) <= band))
    return CurvatureUpperBound(max_H=field.max, bound=bound,
                               strict=bool(field.max < bound), equality_branch=equality)


def gradient_necessary_condition(phi: GraphFunction,
                                 orth_tol: float = 1e-3) -> GradientFilterResult:
    """Necessary condition for overdetermined solvability on an orthogonal
    subgraph: graph area over N stays below the integral of
    1 / sqrt(1 + |grad phi|^2)."""
    n = phi.cross_section.dim + 1
    res = orthogonality_residual(phi)
    lhs = surface_area(phi) / n
    _, grads, area, valid = phi.quadrature_cells()
    if phi.cross_section.dim == 1:
        g2 = grads ** 2
    else:
        g2 = grads[0] ** 2 + grads[1] ** 2
    rhs = float(np.sum(1.0 / np.sqrt(1.0 + g2[valid])) * area)
    return GradientFilterResult(lhs=lhs, rhs=rhs, satisfied=bool(lhs < rhs),
                                orthogonality_residual=res,
                                hypothesis_ok=bool(res <= orth_tol))
