"""Masked Schroedinger-type solves on a grid.

The canonical problem is (-lap_h + c0 + penalty) u = f on unmasked nodes
with u = 0 on masked ones, c0 = 1 for the resolvent (the L2 operator has
a unit zeroth-order term), c0 = 0 for the pure rigidity equation.  The
solver is matrix-free Jacobi-preconditioned CG.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import expr, kernels
from .geometry import DiscreteField, Grid, constant_field
from .measure import MeasureSpec, RasterMeasure, rasterize, restrict_to_ball

DEFAULT_TOL = 1e-10


def _as_raster(measure, grid: Grid) -> RasterMeasure:
    if isinstance(measure, RasterMeasure):
        if not measure.grid.same_grid(grid):
            raise ValueError("raster measure lives on a different grid")
        return measure
    if isinstance(measure, MeasureSpec):
        return rasterize(measure, grid)
    raise TypeError(f"expected MeasureSpec or RasterMeasure, got {type(measure)!r}")


def _as_rhs(f, grid: Grid) -> np.ndarray:
    """Loads arrive as numbers, expression strings, callables of the
    coordinate mesh, discrete fields, or plain arrays."""
    if isinstance(f, DiscreteField):
        if not f.grid.same_grid(grid):
            raise ValueError("rhs lives on a different grid")
        return np.asarray(f.values, dtype=float)
    if isinstance(f, str):
        vals = expr.parse(f).evaluate(grid.center_mesh())
        return np.broadcast_to(np.asarray(vals, dtype=float), grid.shape).copy()
    if callable(f):
        vals = f(*grid.center_mesh())
        return np.broadcast_to(np.asarray(vals, dtype=float), grid.shape).copy()
    if np.isscalar(f):
        return np.full(grid.shape, float(f))
    arr = np.asarray(f, dtype=float)
    if arr.shape != grid.shape:
        raise ValueError(f"rhs shape {arr.shape} != grid {grid.shape}")
    return arr


@dataclass
class SolveResult:
    u: DiscreteField
    iterations: int
    residual: float
    converged: bool
    energy: float
    equation: str
    grid: Grid = field(repr=False, default=None)

    def to_dict(self):
        return {
            "iterations": self.iterations,
            "residual": self.residual,
            "converged": self.converged,
            "energy": self.energy,
            "equation": self.equation,
            "u_max": self.u.max(),
            "u_min": self.u.min(),
            "u_integral": self.u.integral(),
        }


def solve(
    measure,
    f,
    grid: Grid,
    *,
    include_mass: bool = True,
    tol: float = DEFAULT_TOL,
    max_iter: int | None = None,
    x0: np.ndarray | None = None,
) -> SolveResult:
    """Solve (-lap_h + include_mass + penalty) u = f with Dirichlet masks.

    Returns the best iterate with a convergence flag; callers decide
    whether non-convergence is fatal.  Masked nodes carry u = 0.
    """
    if not 0.0 < tol <= 1e-3:
        raise ValueError(f"tol must lie in (0, 1e-3], got {tol}")
    raster = _as_raster(measure, grid)
    rhs = _as_rhs(f, grid)
    mask = raster.mask
    if not np.isfinite(rhs[~mask]).all():
        raise ValueError("rhs must be finite on unmasked nodes")
    c0 = 1.0 if include_mass else 0.0
    if max_iter is None:
        max_iter = max(2000, 40 * max(grid.shape))

    pen3 = kernels.as3d(raster.finite_penalty)
    mask3 = kernels.mask3d(mask)
    b3 = kernels.as3d(np.where(mask, 0.0, rhs))
    x3 = np.zeros_like(b3) if x0 is None else kernels.as3d(x0).copy()
    h2 = grid.h * grid.h

    iters, res = kernels.pcg(pen3, mask3, b3, h2, c0, grid.dim, x3, tol, max_iter)
    u_vals = x3.reshape(grid.shape)

    grad2, mass, pen_mass = kernels.energy_parts(x3, pen3, mask3, h2, grid.dim)
    energy = (grad2 + c0 * mass + pen_mass) * grid.cell_volume
    eq = "-lap u + u + mu u = f" if include_mass else "-lap u + mu u = f"
    return SolveResult(
        u=DiscreteField(grid, u_vals),
        iterations=int(iters),
        residual=float(res),
        converged=bool(res <= tol),
        energy=float(energy),
        equation=eq,
        grid=grid,
    )


def resolvent(measure, f, grid: Grid, **kw) -> SolveResult:
    """R_mu f: the solution map of the unit-mass Schroedinger problem."""
    return solve(measure, f, grid, include_mass=True, **kw)


def gamma_distance_estimate(
    mu, nu, radius: float, grid: Grid, *, tol: float = DEFAULT_TOL
) -> float:
    """L2 distance of resolvents of the two measures restricted to B_radius.

    A grid proxy for resolvent (gamma-type) distance: both measures are
    hard-restricted to the ball, R(1) is computed for each, and the
    weighted L2 norm of the difference is returned.
    """
    dim = grid.dim
    ra = solve(restrict_to_ball(mu, radius, dim), 1.0, grid, tol=tol)
    rb = solve(restrict_to_ball(nu, radius, dim), 1.0, grid, tol=tol)
    return (ra.u - rb.u).norm_l2()


def operator_apply(raster: RasterMeasure, values: np.ndarray, include_mass: bool = True) -> np.ndarray:
    """(-lap_h + c0 + penalty) applied to raw values (helper for spectral code)."""
    grid = raster.grid
    pen3 = kernels.as3d(raster.finite_penalty)
    mask3 = kernels.mask3d(raster.mask)
    v3 = kernels.as3d(values)
    out = np.zeros_like(v3)
    c0 = 1.0 if include_mass else 0.0
    kernels.apply_operator(v3, pen3, mask3, grid.h * grid.h, c0, grid.dim, out)
    return out.reshape(grid.shape)
