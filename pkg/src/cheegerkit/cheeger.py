"""Relative Cheeger constants and sets by exact fractional programming.

The discrete functional is exact rational arithmetic throughout: perimeter is
an integer number of weight units, volume an integer cell count, and the
Dinkelbach iteration updates an exact rational level.  The parametric
subproblem min P - lambda*|E| is submodular, solved as an integer min-cut, so
the exhaustive oracle and the iterative solver minimize the identical
functional and return bit-identical constants.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from .domain import (
    PERIMETER_SCALE,
    GraphFunction,
    SubsetMask,
    VolumeGrid,
    staggered_grads,
    staggered_values,
)
from .errors import (
    EmptyDomainError,
    EmptySetError,
    GridSizeError,
    HypothesisViolatedError,
    NonConvergenceError,
    SignError,
    ValidationError,
    WitnessSearchError,
)
from .geometry import graph_volume, mean_curvature, surface_area
from .maxflow import max_flow_min_cut, njit

_BRUTEFORCE_LIMIT = 22
_DINKELBACH_MAX_ITER = 100
_SELF_CHEEGER_REL_TOL = 1e-6
_MAX_LAMBDA_DENOMINATOR = 10 ** 6


@dataclass(frozen=True)
class CheegerResult:
    h: float
    minimizer: SubsetMask
    iterations: int
    method: str
    touched_relative_boundary: bool


@dataclass(frozen=True)
class PerturbationReport:
    """First variation data of the perimeter-to-volume ratio of a subgraph
    domain under a downward nodal perturbation."""

    p0: float
    V0: float
    dp: float
    dV: float
    criterion: float


@dataclass(frozen=True)
class SelfCheegerResult:
    is_self_cheeger: bool
    h: float
    ratio_omega: float
    witness: SubsetMask


@dataclass(frozen=True)
class CurvatureBoundResult:
    max_H: float
    bound: float
    satisfied: bool


@dataclass(frozen=True)
class WitnessResult:
    delta: float
    alpha: float
    v: np.ndarray
    t: float
    old_ratio: float
    new_ratio: float


# ---------------------------------------------------------------------------
# parametric min-cut subproblem
# ---------------------------------------------------------------------------


def _parametric_cut(grid: VolumeGrid, num: int, den: int):
    """Global minimizer of den*P(E) - num*|E| over all masks (empty allowed),
    in integer perimeter/volume units.  Returns (cells, energy_units) where
    energy_units = den*P - num*V of the minimizer."""
    m = grid.n_cells
    s, t = m, m + 1
    theta = den * grid.out_w - num  # unary cost of membership
    eu, ev, ec = [], [], []
    pos = theta > 0
    neg = ~pos
    idx = np.arange(m, dtype=np.int64)
    eu.append(idx[pos]); ev.append(np.full(int(pos.sum()), t, np.int64))
    ec.append(theta[pos])
    eu.append(np.full(int(neg.sum()), s, np.int64)); ev.append(idx[neg])
    ec.append(-theta[neg])
    if len(grid.pairs_i):
        w = den * grid.pairs_w
        eu.append(grid.pairs_i); ev.append(grid.pairs_j); ec.append(w)
        eu.append(grid.pairs_j); ev.append(grid.pairs_i); ec.append(w)
    flow, side = max_flow_min_cut(
        m + 2,
        np.concatenate(eu), np.concatenate(ev), np.concatenate(ec), s, t)
    cells = side[:m].copy()
    const = int(theta[neg].sum())
    energy_units = flow + const
    return cells, energy_units


def mincut_subproblem(grid: VolumeGrid, lam: float):
    """Minimize the parametric energy P(E) - lambda*|E| over all masks.

    Returns (mask, energy); the empty mask has energy 0, so the minimum is
    never positive.  lambda is interpreted exactly as a rational (capped at
    denominator 10^6 for arbitrary floats; the Dinkelbach driver always
    passes exactly representable grid ratios)."""
    lam_f = Fraction(lam)
    if lam_f <= 0:
        raise ValidationError("lambda must be positive")
    mu = lam_f * PERIMETER_SCALE * Fraction(grid.delta)
    if mu.denominator > _MAX_LAMBDA_DENOMINATOR:
        mu = mu.limit_denominator(_MAX_LAMBDA_DENOMINATOR)
    cells, energy_units = _parametric_cut(grid, mu.numerator, mu.denominator)
    energy = (Fraction(energy_units, mu.denominator)
              * Fraction(grid.delta) ** (grid.dim - 1) / PERIMETER_SCALE)
    return SubsetMask(grid, cells), float(energy)


# ---------------------------------------------------------------------------
# solvers
# ---------------------------------------------------------------------------


def cheeger_dinkelbach(grid: VolumeGrid) -> CheegerResult:
    """Relative Cheeger constant by Dinkelbach iteration on exact rationals.

    Starts from the ratio of the full domain; each step solves the parametric
    min-cut at the current level and replaces the level with the minimizer's
    exact ratio.  The level sequence is strictly decreasing over a finite
    lattice, so termination at the exact discrete optimum is guaranteed; the
    iteration stops when no mask has negative energy (level change zero,
    within any tolerance)."""
    m = grid.n_cells
    if m == 0:
        raise EmptyDomainError("grid has no inside cells")
    cells = np.ones(m, dtype=bool)
    p = grid.perimeter_units(cells)
    v = m
    mu = Fraction(p, v)
    iterations = 0
    while iterations < _DINKELBACH_MAX_ITER:
        iterations += 1
        cand, energy_units = _parametric_cut(grid, mu.numerator, mu.denominator)
        if energy_units >= 0 or not cand.any():
            # no mask beats the current level: mu is the exact optimum
            h = float(grid.exact_ratio(cells))
            mask = SubsetMask(grid, cells)
            return CheegerResult(
                h=h, minimizer=mask, iterations=iterations, method="dinkelbach",
                touched_relative_boundary=touches_boundary_check_cells(grid, cells))
        p = grid.perimeter_units(cand)
        v = int(cand.sum())
        mu_new = Fraction(p, v)
        if not mu_new < mu:
            raise NonConvergenceError(
                "Dinkelbach level failed to decrease", last_iterate=float(mu))
        cells = cand
        mu = mu_new
    raise NonConvergenceError("Dinkelbach iteration cap reached",
                              last_iterate=float(mu / PERIMETER_SCALE / Fraction(grid.delta)))


@njit(cache=True)
def _popcount(x):  # pragma: no cover - jitted
    c = 0
    while x:
        x &= x - 1
        c += 1
    return c


@njit(cache=True)
def _lex_smaller(a, b):  # pragma: no cover - jitted
    """Whether bitmask a, read as a sorted index tuple, precedes b."""
    x = a ^ b
    p = 0
    while ((x >> p) & 1) == 0:
        p += 1
    if (a >> p) & 1:
        return (b >> p) != 0
    return (a >> p) == 0


@njit(cache=True)
def _bruteforce_kernel(m, base, wtot, nbr_start, nbr_idx, nbr_w):  # pragma: no cover
    total = 1 << m
    per = np.zeros(total, np.int64)
    best_mask = np.int64(0)
    best_p = np.int64(0)
    best_v = np.int64(0)
    for mask in range(1, total):
        low = mask & (-mask)
        i = 0
        mm = low
        while mm > 1:
            mm >>= 1
            i += 1
        rest = mask ^ low
        cross = np.int64(0)
        for k in range(nbr_start[i], nbr_start[i + 1]):
            j = nbr_idx[k]
            if (rest >> j) & 1:
                cross += nbr_w[k]
        p = per[rest] + base[i] + wtot[i] - 2 * cross
        per[mask] = p
        v = _popcount(mask)
        if best_v == 0:
            best_mask, best_p, best_v = mask, p, v
        else:
            lhs = p * best_v
            rhs = best_p * v
            if lhs < rhs or (lhs == rhs and _lex_smaller(mask, best_mask)):
                best_mask, best_p, best_v = mask, p, v
    return best_mask, best_p, best_v


def cheeger_bruteforce(grid: VolumeGrid) -> CheegerResult:
    """Exact minimizer of the discrete ratio over all nonempty masks, with
    lexicographic tie-break on the sorted cell-index tuple."""
    m = grid.n_cells
    if m == 0:
        raise EmptyDomainError("grid has no inside cells")
    if m > _BRUTEFORCE_LIMIT:
        raise GridSizeError(
            f"{m} cells exceed the exhaustive limit of {_BRUTEFORCE_LIMIT}")
    # neighbor lists from the pair structure
    deg = np.zeros(m, np.int64)
    np.add.at(deg, grid.pairs_i, 1)
    np.add.at(deg, grid.pairs_j, 1)
    nbr_start = np.zeros(m + 1, np.int64)
    np.cumsum(deg, out=nbr_start[1:])
    nbr_idx = np.zeros(int(deg.sum()), np.int64)
    nbr_w = np.zeros(int(deg.sum()), np.int64)
    fill = nbr_start[:-1].copy()
    for a, b, w in zip(grid.pairs_i, grid.pairs_j, grid.pairs_w):
        nbr_idx[fill[a]] = b; nbr_w[fill[a]] = w; fill[a] += 1
        nbr_idx[fill[b]] = a; nbr_w[fill[b]] = w; fill[b] += 1
    wtot = np.zeros(m, np.int64)
    np.add.at(wtot, grid.pairs_i, grid.pairs_w)
    np.add.at(wtot, grid.pairs_j, grid.pairs_w)
    best_mask, best_p, best_v = _bruteforce_kernel(
        m, grid.out_w.astype(np.int64), wtot, nbr_start, nbr_idx, nbr_w)
    cells = np.array([(best_mask >> i) & 1 for i in range(m)], dtype=bool)
    h = float(grid.exact_ratio(cells))
    return CheegerResult(
        h=h, minimizer=SubsetMask(grid, cells), iterations=(1 << m) - 1,
        method="bruteforce",
        touched_relative_boundary=touches_boundary_check_cells(grid, cells))


def self_cheeger_test(grid: VolumeGrid) -> SelfCheegerResult:
    """Whether the full domain attains its own Cheeger infimum (within a
    relative tolerance guarding exact ties)."""
    result = cheeger_dinkelbach(grid)
    full = np.ones(grid.n_cells, dtype=bool)
    ratio_omega = float(grid.exact_ratio(full))
    is_self = ratio_omega <= result.h * (1.0 + _SELF_CHEEGER_REL_TOL)
    witness = SubsetMask(grid, full) if is_self else result.minimizer
    return SelfCheegerResult(is_self_cheeger=is_self, h=result.h,
                             ratio_omega=ratio_omega, witness=witness)


# ---------------------------------------------------------------------------
# perturbation calculus on subgraph domains
# ---------------------------------------------------------------------------


def perturbation_derivative(phi: GraphFunction, v: np.ndarray) -> PerturbationReport:
    """First variation of (perimeter, volume) of the subgraph of phi under
    phi + t*v at t = 0, for a nonpositive nodal field v, and the sign
    criterion dp*V0 - p0*dV whose nonnegativity for all such v characterizes
    a self-Cheeger subgraph."""
    cs = phi.cross_section
    v = np.asarray(v, dtype=float)
    if v.shape != phi.values.shape:
        raise ValidationError("perturbation field must match the nodal grid")
    check = v if cs.dim == 1 else v[cs.node_inside]
    if np.any(check > 0):
        raise SignError("perturbation field must be nonpositive at every node")
    p0 = surface_area(phi)
    v0 = graph_volume(phi)
    g = phi.mid_grads()
    gv = staggered_grads(cs, v)
    vm = staggered_values(cs, v)
    _, _, area, valid = phi.quadrature_cells()
    if cs.dim == 1:
        dot = g * gv
        g2 = g ** 2
    else:
        dot = g[0] * gv[0] + g[1] * gv[1]
        g2 = g[0] ** 2 + g[1] ** 2
        valid = valid & np.isfinite(vm) & np.all(np.isfinite(gv), axis=0)
    dp = float(np.sum(dot[valid] / np.sqrt(1.0 + g2[valid])) * area)
    dv = float(np.sum(vm[valid]) * area)
    return PerturbationReport(p0=p0, V0=v0, dp=dp, dV=dv,
                              criterion=dp * v0 - p0 * dv)


def curvature_bound_check(phi: GraphFunction):
    """Upper bound on the graph curvature implied by a self-Cheeger subgraph:
    max H against perimeter / ((N-1) volume)."""
    field = mean_curvature(phi)
    nm1 = float(phi.cross_section.dim)
    bound = surface_area(phi) / (nm1 * graph_volume(phi))
    tol = 1e-9 * (1.0 + abs(bound))
    return CurvatureBoundResult(max_H=field.max, bound=bound,
                                satisfied=field.max <= bound + tol)


def non_self_cheeger_witness(phi: GraphFunction) -> WitnessResult:
    """Constructive witness that a subgraph with nowhere-vanishing graph
    gradient is not self-Cheeger: perturb by v = -exp(alpha*phi) with alpha
    sized from the gradient floor (doubled for margin), then halve t from
    min(phi) / (2 max|v|) until the exact ratio strictly decreases."""
    cs = phi.cross_section
    g = phi.grad_nodes()
    if cs.dim == 1:
        gabs = np.abs(g)
    else:
        gabs = np.sqrt(g[0] ** 2 + g[1] ** 2)[cs.node_inside]
        gabs = gabs[np.isfinite(gabs)]
    delta = float(np.min(gabs))
    if delta <= 1e-14:
        raise HypothesisViolatedError(
            "graph gradient vanishes at a node; the witness construction needs "
            "|grad phi| bounded away from zero")
    gmax = float(np.max(gabs))
    p0 = surface_area(phi)
    v0 = graph_volume(phi)
    alpha = 2.0 * p0 * math.sqrt(1.0 + gmax ** 2) / (v0 * delta ** 2)
    if alpha * phi.phi_max > 700.0:
        raise WitnessSearchError("witness exponent overflows double precision")
    v = -np.exp(alpha * phi.values)
    if cs.dim == 2:
        v = np.where(cs.node_inside, v, 0.0)
    old_ratio = p0 / v0
    vmax = float(np.max(np.abs(v)))
    t = phi.phi_min / (2.0 * vmax)
    while t >= 1e-12:
        trial = phi.values + t * v
        tmin = trial if cs.dim == 1 else trial[cs.node_inside]
        if np.min(tmin) > 0:
            phit = phi.perturbed(t * v)
            new_ratio = surface_area(phit) / graph_volume(phit)
            if new_ratio < old_ratio:
                return WitnessResult(delta=delta, alpha=alpha, v=v, t=t,
                                     old_ratio=old_ratio, new_ratio=new_ratio)
        t *= 0.5
    raise WitnessSearchError(
        "perturbation step underflowed below 1e-12 without improving the ratio")


# ---------------------------------------------------------------------------
# boundary contact
# ---------------------------------------------------------------------------


def touches_boundary_check_cells(grid: VolumeGrid, cells: np.ndarray) -> bool:
    """Whether some selected cell lies within one cell (Chebyshev) of a cell
    carrying a relative-boundary face."""
    if not cells.any():
        return False
    sel = np.zeros(grid.inside.shape, dtype=bool)
    sel[grid.inside] = cells
    near = np.zeros(grid.inside.shape, dtype=bool)
    near[grid.inside] = grid.boundary_adjacent
    # dilate the boundary-adjacent set by one cell in every direction
    grown = near.copy()
    for axis in range(near.ndim):
        for shift in (-1, 1):
            grown |= np.roll(near, shift, axis=axis) & _roll_valid(near.shape, axis, shift)
    if near.ndim == 2:
        for sx in (-1, 1):
            for sy in (-1, 1):
                grown |= (np.roll(np.roll(near, sx, axis=0), sy, axis=1)
                          & _roll_valid(near.shape, 0, sx)
                          & _roll_valid(near.shape, 1, sy))
    else:
        for sx in (-1, 0, 1):
            for sy in (-1, 0, 1):
                for sz in (-1, 0, 1):
                    if sx == sy == sz == 0:
                        continue
                    r = np.roll(np.roll(np.roll(near, sx, 0), sy, 1), sz, 2)
                    grown |= (r & _roll_valid(near.shape, 0, sx)
                              & _roll_valid(near.shape, 1, sy)
                              & _roll_valid(near.shape, 2, sz))
    return bool(np.any(sel & grown))


def _roll_valid(shape, axis, shift):
    """Mask that invalidates entries wrapped around by np.roll."""
    valid = np.ones(shape, dtype=bool)
    if shift == 0:
        return valid
    sl = [slice(None)] * len(shape)
    sl[axis] = slice(0, 1) if shift == 1 else slice(-1, None)
    valid[tuple(sl)] = False
    return valid


def touches_boundary_check(result: CheegerResult, grid: VolumeGrid) -> bool:
    """Whether the minimizer reaches the relative boundary of the domain."""
    if result.minimizer.n_selected == 0:
        raise EmptySetError("minimizer mask is empty")
    return touches_boundary_check_cells(grid, result.minimizer.cells)
