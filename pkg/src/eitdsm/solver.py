"""Finite volume discretization and CG solves for the Neumann problems.

The operator discretizes -div(sigma grad u) with node-centered control
volumes (half cells along edges, quarter cells at corners) and harmonic
averaging of sigma onto faces, so flux continuity holds across conductivity
jumps.  The resulting matrix is symmetric positive semidefinite with the
constants as its null space; solves project the load onto mean zero, run
Jacobi-preconditioned CG, and re-center the iterate (mean-zero gauge).

A circular subdomain is supported through a cut-cell mask that scales face
conductances by their in-disk fraction; the zero-flux condition on the curved
boundary is then natural.  This backs the probing-function checks against the
closed-form disk trace.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import backend
from .boundary import BoundaryLoop, BoundaryTrace, circle_loop, frac_laplacian, grid_loop, l2_norm, recenter
from .grid import CartesianGrid, ScalarField, VectorField

COMPATIBILITY_RTOL = 1e-8


class SolverError(RuntimeError):
    """A solve failed: incompatible data or iteration budget exhausted."""


@dataclass(frozen=True)
class SolverConfig:
    tolerance: float = 1e-10
    max_iterations: int | None = None  # defaults to 10*n1*n2 at solve time
    gauge: str = "mean-zero"

    def __post_init__(self):
        if not 0.0 < self.tolerance < 1.0:
            raise ValueError("tolerance must lie in (0,1)")
        if self.max_iterations is not None and self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if self.gauge != "mean-zero":
            raise ValueError("only the mean-zero gauge is supported")

    def iteration_budget(self, grid: CartesianGrid) -> int:
        if self.max_iterations is not None:
            return self.max_iterations
        return 10 * grid.n_nodes


@dataclass(frozen=True)
class DiskMask:
    """Restrict the operator to the disk |x| <= radius (cut cells)."""

    radius: float = 1.0


@dataclass
class DiscreteOperator:
    """Assembled five-point operator plus the quadrature/trace geometry."""

    grid: CartesianGrid
    cx: np.ndarray  # (n2, n1-1) horizontal-face conductances
    cy: np.ndarray  # (n2-1, n1) vertical-face conductances
    inv_diag: np.ndarray  # Jacobi preconditioner, 0 at inactive nodes
    active: np.ndarray  # float {0,1} per node
    loop: BoundaryLoop  # trace sampling loop
    trace_idx: np.ndarray  # flat node indices backing the trace
    mask: DiskMask | None = None

    @property
    def n_active(self) -> float:
        return float(self.active.sum())

    def apply(self, u: np.ndarray) -> np.ndarray:
        return backend.fv_matvec(self.cx, self.cy, u)


def _quadrature_1d(n: int, h: float) -> np.ndarray:
    w = np.full(n, h)
    w[0] = w[-1] = 0.5 * h
    return w


def _harmonic(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return 2.0 * a * b / (a + b)


def _segment_inside_fraction(mid_sq: np.ndarray, lo: np.ndarray, hi: np.ndarray, radius: float):
    """Fraction of the segment [lo, hi] (transverse coordinate) with
    mid_sq + t^2 <= radius^2."""
    lim_sq = radius * radius - mid_sq
    lim = np.sqrt(np.maximum(lim_sq, 0.0))
    cover_lo = np.maximum(lo, -lim)
    cover_hi = np.minimum(hi, lim)
    frac = np.maximum(cover_hi - cover_lo, 0.0) / (hi - lo)
    return np.where(lim_sq > 0.0, frac, 0.0)


def assemble_operator(
    sigma: ScalarField, mask: DiskMask | None = None, config: SolverConfig | None = None
) -> DiscreteOperator:
    """Build the finite volume operator for -div(sigma grad .)."""
    grid = sigma.grid
    sv = sigma.values
    if not np.all(sv > 0.0):
        raise ValueError("sigma must be strictly positive at every node")
    n1, n2 = grid.n1, grid.n2
    h1, h2 = grid.h1, grid.h2
    wx = _quadrature_1d(n1, h1)
    wy = _quadrature_1d(n2, h2)
    cx = _harmonic(sv[:, :-1], sv[:, 1:]) * (wy[:, None] / h1)
    cy = _harmonic(sv[:-1, :], sv[1:, :]) * (wx[None, :] / h2)

    if mask is None:
        loop = grid_loop(grid)
        trace_idx = loop.node_idx
        active = np.ones(grid.shape)
    else:
        x1a = grid.x1_axis()
        x2a = grid.x2_axis()
        r = mask.radius
        # horizontal faces: vertical dual segments at x = x1[i] + h1/2
        mid_x = 0.5 * (x1a[:-1] + x1a[1:])
        lo_y = np.where(np.arange(n2) == 0, 0.0, -0.5 * h2)[:, None] + x2a[:, None]
        hi_y = np.where(np.arange(n2) == n2 - 1, 0.0, 0.5 * h2)[:, None] + x2a[:, None]
        frac_x = _segment_inside_fraction(
            np.broadcast_to(mid_x[None, :] ** 2, (n2, n1 - 1)),
            np.broadcast_to(lo_y, (n2, n1 - 1)),
            np.broadcast_to(hi_y, (n2, n1 - 1)),
            r,
        )
        cx = cx * frac_x
        # vertical faces: horizontal dual segments at y = x2[j] + h2/2
        mid_y = 0.5 * (x2a[:-1] + x2a[1:])
        lo_x = np.where(np.arange(n1) == 0, 0.0, -0.5 * h1)[None, :] + x1a[None, :]
        hi_x = np.where(np.arange(n1) == n1 - 1, 0.0, 0.5 * h1)[None, :] + x1a[None, :]
        frac_y = _segment_inside_fraction(
            np.broadcast_to(mid_y[:, None] ** 2, (n2 - 1, n1)),
            np.broadcast_to(lo_x, (n2 - 1, n1)),
            np.broadcast_to(hi_x, (n2 - 1, n1)),
            r,
        )
        cy = cy * frac_y
        loop, trace_idx, active = _disk_trace_geometry(grid, r)

    diag = np.zeros(grid.shape)
    diag[:, :-1] += cx
    diag[:, 1:] += cx
    diag[:-1, :] += cy
    diag[1:, :] += cy
    if mask is None and not np.all(diag > 0.0):
        raise ValueError("operator has an isolated node")
    connected = diag > 0.0
    active = active * connected
    inv_diag = np.where(active > 0.0, 1.0 / np.where(connected, diag, 1.0), 0.0)
    return DiscreteOperator(
        grid=grid,
        cx=np.ascontiguousarray(cx),
        cy=np.ascontiguousarray(cy),
        inv_diag=inv_diag,
        active=active.astype(np.float64),
        loop=loop,
        trace_idx=trace_idx,
        mask=mask,
    )


def _disk_active_cells(grid: CartesianGrid, radius: float) -> np.ndarray:
    """Nodes whose dual cell intersects the open disk.

    These are the degrees of freedom of the masked operator; a node slightly
    outside the circle still carries a cut cell and must stay in the system,
    otherwise its positive-fraction faces would act as spurious grounds.
    """
    h1, h2 = grid.h1, grid.h2
    lo1 = np.maximum(grid.x1_axis() - 0.5 * h1, -1.0)
    hi1 = np.minimum(grid.x1_axis() + 0.5 * h1, 1.0)
    lo2 = np.maximum(grid.x2_axis() - 0.5 * h2, -1.0)
    hi2 = np.minimum(grid.x2_axis() + 0.5 * h2, 1.0)
    px = np.clip(0.0, lo1, hi1)
    py = np.clip(0.0, lo2, hi2)
    rmin_sq = px[None, :] ** 2 + py[:, None] ** 2
    return rmin_sq < radius * radius


def _disk_trace_geometry(grid: CartesianGrid, radius: float):
    """Active cut-cell mask for the disk plus the ring of last inside nodes,
    ordered by polar angle, used as the trace of a masked solve."""
    x1, x2 = grid.coords()
    rr = np.hypot(x1, x2)
    inside = rr <= radius
    nb = np.zeros(grid.shape, dtype=bool)
    nb[:, :-1] |= ~inside[:, 1:]
    nb[:, 1:] |= ~inside[:, :-1]
    nb[:-1, :] |= ~inside[1:, :]
    nb[1:, :] |= ~inside[:-1, :]
    # grid-edge nodes count as having an exterior neighbour
    nb[0, :] = nb[-1, :] = nb[:, 0] = nb[:, -1] = True
    ring = inside & nb
    jj, ii = np.nonzero(ring)
    theta = np.arctan2(x2[ring], x1[ring])
    order = np.argsort(theta, kind="stable")
    trace_idx = (jj * grid.n1 + ii)[order]
    loop = circle_loop(theta[order], radius)
    return loop, trace_idx, _disk_active_cells(grid, radius).astype(np.float64)


def _project_mean_zero(b: np.ndarray, active: np.ndarray, n_active: float) -> np.ndarray:
    return b - active * (float((b * active).sum()) / n_active)


def _run_cg(op: DiscreteOperator, b: np.ndarray, config: SolverConfig) -> ScalarField:
    budget = config.iteration_budget(op.grid)
    b = _project_mean_zero(b, op.active, op.n_active)
    x, iters, rel = backend.cg_solve(
        op.cx, op.cy, np.ascontiguousarray(b), op.inv_diag, op.active, config.tolerance, budget
    )
    if rel > config.tolerance:
        raise SolverError(
            f"CG did not converge in {iters} iterations "
            f"(relative residual {rel:.3e}, tolerance {config.tolerance:.1e})"
        )
    x = _project_mean_zero(x, op.active, op.n_active)
    return ScalarField(op.grid, x)


def flux_load(op: DiscreteOperator, g: BoundaryTrace) -> np.ndarray:
    """Load vector for Neumann data g: each boundary node gets g*owned length."""
    b = np.zeros(op.grid.shape)
    b.flat[op.trace_idx] = g.values * op.loop.weights
    return b


def solve_neumann(op: DiscreteOperator, g: BoundaryTrace, config: SolverConfig) -> ScalarField:
    """Solve -div(sigma grad u) = 0 with sigma du/dn = g, mean-zero gauge."""
    total = float((g.values * g.loop.weights).sum())
    norm = l2_norm(g)
    if norm > 0.0 and abs(total) > COMPATIBILITY_RTOL * norm:
        raise SolverError(
            f"incompatible Neumann data: boundary integral {total:.3e} "
            f"exceeds {COMPATIBILITY_RTOL:.0e} * ||g||"
        )
    return _run_cg(op, flux_load(op, g), config)


def extract_trace(op: DiscreteOperator, field: ScalarField) -> BoundaryTrace:
    """Boundary restriction of a field, re-centered to quadrature mean zero."""
    return recenter(BoundaryTrace(op.loop, field.values.flat[op.trace_idx].copy()))


def ntd_apply(op: DiscreteOperator, g: BoundaryTrace, config: SolverConfig) -> BoundaryTrace:
    """Current-to-voltage map: boundary trace of the Neumann solution."""
    return extract_trace(op, solve_neumann(op, g, config))


@lru_cache(maxsize=8)
def background_operator(grid: CartesianGrid) -> DiscreteOperator:
    """Unit-conductivity operator on the full square, shared by phi solves."""
    return assemble_operator(ScalarField(grid, np.ones(grid.shape)))


def solve_phi(
    grid: CartesianGrid,
    boundary_data: BoundaryTrace,
    config: SolverConfig,
    gamma: float = 0.0,
) -> ScalarField:
    """Harmonic field whose Neumann data is (-Lap_boundary)^gamma applied to
    the given trace (gamma = 0 uses the trace as-is), mean-zero gauge."""
    data = recenter(boundary_data)
    if gamma != 0.0:
        data = frac_laplacian(data, gamma)
    op = background_operator(grid)
    return _run_cg(op, flux_load(op, data), config)


def _dipole_clearance(op: DiscreteOperator, x: tuple[float, float]) -> float:
    if op.mask is None:
        return min(1.0 - abs(x[0]), 1.0 - abs(x[1]))
    return op.mask.radius - float(np.hypot(x[0], x[1]))


def _splat_bilinear(grid: CartesianGrid, px: float, py: float, charge: float):
    """Spread a point charge onto the four surrounding nodes."""
    fi = (px + 1.0) / grid.h1
    fj = (py + 1.0) / grid.h2
    i0 = int(np.clip(np.floor(fi), 0, grid.n1 - 2))
    j0 = int(np.clip(np.floor(fj), 0, grid.n2 - 2))
    a = fi - i0
    b = fj - j0
    w = np.array([(1 - a) * (1 - b), a * (1 - b), (1 - a) * b, a * b])
    nodes = np.array(
        [
            j0 * grid.n1 + i0,
            j0 * grid.n1 + i0 + 1,
            (j0 + 1) * grid.n1 + i0,
            (j0 + 1) * grid.n1 + i0 + 1,
        ]
    )
    return nodes, charge * w


def dipole_load(op: DiscreteOperator, x: tuple[float, float], d: tuple[float, float]):
    """Point charges realizing the derivative-of-delta source -(d . grad) delta_x.

    The direction is decomposed along the axes: each axis a with weight d_a
    contributes charges +-d_a/h at x +- (h/2) e_a (h the mean spacing), splat
    bilinearly.  The load is therefore exactly linear in d, matching the
    continuum source, and weights sum to zero.  Returns (flat indices, values).
    """
    grid = op.grid
    d = np.asarray(d, dtype=np.float64)
    nrm = float(np.hypot(d[0], d[1]))
    if nrm == 0.0:
        raise ValueError("dipole direction must be nonzero")
    h = 0.5 * (grid.h1 + grid.h2)
    idx_all = []
    val_all = []
    for axis, weight in enumerate(d):
        if weight == 0.0:
            continue
        step = (0.5 * h, 0.0) if axis == 0 else (0.0, 0.5 * h)
        for sign in (+1.0, -1.0):
            nodes, vals = _splat_bilinear(
                grid, x[0] + sign * step[0], x[1] + sign * step[1], sign * weight / h
            )
            idx_all.append(nodes)
            val_all.append(vals)
    return np.concatenate(idx_all), np.concatenate(val_all)


def solve_dipole(
    op: DiscreteOperator,
    x: tuple[float, float],
    d: tuple[float, float],
    config: SolverConfig,
) -> BoundaryTrace:
    """Boundary trace of the dipole potential at x with direction d.

    Solves -Lap w = -(d . grad) delta_x with zero Neumann data on the
    operator's domain; the returned trace is mean-zero over the loop.
    """
    grid = op.grid
    clearance = _dipole_clearance(op, x)
    if clearance < 2.0 * max(grid.h1, grid.h2):
        raise SolverError(f"dipole point {x} is too close to the boundary")
    idx, vals = dipole_load(op, x, d)
    if np.any(op.active.flat[idx] == 0.0):
        raise SolverError(f"dipole point {x} touches inactive nodes")
    b = np.zeros(grid.shape)
    np.add.at(b.ravel(), idx, vals)
    field = _run_cg(op, b, config)
    return extract_trace(op, field)


def boundary_influence(op: DiscreteOperator, config: SolverConfig) -> np.ndarray:
    """Influence matrix Z (trace node x interior node).

    Row b solves A z = e_b - mean, so that for any compatible load q the
    gauged trace value at boundary node b is Z[b] . q (operator symmetry).
    One solve per boundary node replaces two solves per sampling point when
    building probing traces for a whole grid.
    """
    n_b = len(op.trace_idx)
    z = np.empty((n_b, op.grid.n_nodes))
    uniform = op.active / op.n_active
    for row, node in enumerate(op.trace_idx):
        b = -uniform.copy()
        b.flat[node] += 1.0
        z[row] = _run_cg(op, b, config).values.ravel()
    return z


def gradient_field(phi: ScalarField) -> VectorField:
    """Central differences inside, one-sided second order along the edges."""
    dy, dx = np.gradient(phi.values, phi.grid.h2, phi.grid.h1, edge_order=2)
    return VectorField(phi.grid, dx, dy)
