"""Eigenvalue routines and localized spectral probes.

Two routes to the bottom of the spectrum: a matrix-free deflated inverse
power iteration driven by the same stencil kernels the solvers use, and
an assembled sparse path (scipy shift-invert) that must agree with it to
rounding.  The assembled path is what the optimization loop uses; the
matrix-free one is the reference and scales to grids the assembler
should not touch.

Probes: tail abscissa over ball complements, ring probes over small
balls at growing distance, and the Neumann-in-a-cube quotient.  All
three report +inf when the admissible set is empty, which is the honest
discrete reading of "no function to test with".
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sparse
import scipy.sparse.linalg as spla

from . import kernels
from .elliptic import _as_raster
from .geometry import Ball, Grid
from .measure import (
    DirichletRestriction,
    MeasureSpec,
    RasterMeasure,
    rasterize,
    restrict_outside_ball,
)

INF = float("inf")

DEFAULT_EIG_TOL = 1e-8

# cap below which the cube quotient and assembled solvers go dense
_DENSE_CUTOFF = 600


def box_mode_floor(grid: Grid) -> float:
    """First Dirichlet eigenvalue of the empty grid box, sum (pi/edge)^2.

    Every discrete eigenvalue on the grid sits above (a second order
    perturbation of) this, so it is the natural scale against which
    "the profile diverged" has to be judged.
    """
    return sum((math.pi / (b - a)) ** 2 for a, b in zip(grid.lo, grid.hi))


@dataclass
class EigenResult:
    """Bottom eigenvalues, smallest first, with per-value residuals."""

    values: list
    residuals: list
    per_value_converged: list
    iterations: int
    method: str
    num_active: int
    grid: Grid = field(repr=False, default=None)

    @property
    def converged(self) -> bool:
        return all(self.per_value_converged)

    @property
    def value(self) -> float:
        return self.values[0]

    def to_dict(self):
        return {
            "values": [v if math.isfinite(v) else "inf" for v in self.values],
            "residuals": list(self.residuals),
            "converged": self.converged,
            "per_value_converged": list(self.per_value_converged),
            "iterations": self.iterations,
            "method": self.method,
            "num_active": self.num_active,
        }


def _dot(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.dot(a.ravel(), b.ravel()))


def _power_eigs(
    raster: RasterMeasure,
    k: int,
    *,
    include_mass: bool,
    tol: float,
    max_outer: int = 120,
    v0: np.ndarray | None = None,
):
    """Deflated inverse power iteration on the stencil operator.

    Solves are warm-started PCG; without the mass term a 1e-8 shift keeps
    the inner operator safely definite on very large boxes.  Returns
    (values, residuals, flags, total outer iterations, vectors).
    """
    grid = raster.grid
    mask3 = kernels.mask3d(raster.mask)
    pen3 = kernels.as3d(raster.finite_penalty)
    active3 = ~mask3
    h2 = grid.h * grid.h
    c0 = 1.0 if include_mass else 0.0
    shift = 0.0 if include_mass else 1e-8
    inner_tol = max(1e-13, 0.01 * tol)
    inner_max = max(5000, 60 * max(grid.shape))
    au = np.zeros(mask3.shape)

    def rayleigh(v):
        kernels.apply_operator(v, pen3, mask3, h2, c0, grid.dim, au)
        lam = _dot(au, v)  # v is normalized
        res = float(np.sqrt(((au - lam * v) ** 2).sum()))
        return lam, res

    def orthogonalize(v, basis):
        for q in basis:
            v -= _dot(v, q) * q
        for q in basis:
            v -= _dot(v, q) * q
        return v

    values, residuals, flags, vectors = [], [], [], []
    total_outer = 0
    for j in range(k):
        if j == 0 and v0 is not None:
            v = kernels.as3d(v0).copy() * active3
        elif j == 0:
            v = np.ones(mask3.shape) * active3
        else:
            # the ground-state start is symmetric; higher modes need a
            # start with no preferred parity or the iteration skips them
            rng = np.random.default_rng(1234 + j)
            v = rng.standard_normal(mask3.shape) * active3
        v = orthogonalize(v, vectors)
        nrm = math.sqrt(_dot(v, v))
        if nrm < 1e-8:
            v = np.sin(1.0 + np.arange(v.size)).reshape(v.shape) * active3
            v = orthogonalize(v, vectors)
            nrm = math.sqrt(_dot(v, v))
        v /= nrm
        x = np.zeros(mask3.shape)
        best_lam, best_res, best_v = INF, INF, v
        for _ in range(max_outer):
            total_outer += 1
            lam, res = rayleigh(v)
            if res < best_res:
                best_lam, best_res, best_v = lam, res, v.copy()
            if res <= tol * max(abs(lam), 1e-300):
                break
            kernels.pcg(pen3, mask3, v, h2, c0 + shift, grid.dim, x, inner_tol, inner_max)
            y = orthogonalize(x.copy(), vectors)
            nrm = math.sqrt(_dot(y, y))
            if nrm == 0.0:
                break
            v = y / nrm
        values.append(best_lam)
        residuals.append(best_res)
        flags.append(best_res <= tol * max(abs(best_lam), 1e-300))
        vectors.append(best_v)
    order = sorted(range(len(values)), key=lambda i: values[i])
    values = [values[i] for i in order]
    residuals = [residuals[i] for i in order]
    flags = [flags[i] for i in order]
    vectors = [vectors[i] for i in order]
    return values, residuals, flags, total_outer, vectors


def spectral_abscissa(
    measure, grid: Grid, *, tol: float = DEFAULT_EIG_TOL, v0: np.ndarray | None = None
) -> EigenResult:
    """Bottom of the spectrum of (-lap + 1 + mu): the coercive quotient
    (grad + mass + measure mass) / mass, always >= 1.

    An empty admissible set (every node masked) gives +inf, which is the
    value the divergence criteria want in that case.
    """
    raster = _as_raster(measure, grid)
    if raster.num_active == 0:
        return EigenResult([INF], [0.0], [True], 0, "inverse_power", 0, grid)
    values, residuals, flags, outer, _ = _power_eigs(
        raster, 1, include_mass=True, tol=tol, v0=v0
    )
    return EigenResult(values, residuals, flags, outer, "inverse_power", raster.num_active, grid)


def dirichlet_eigenvalues(
    measure, grid: Grid, k: int = 1, *, tol: float = DEFAULT_EIG_TOL
) -> EigenResult:
    """Bottom k eigenvalues of (-lap + mu), matrix-free."""
    if k < 1:
        raise ValueError("k must be >= 1")
    raster = _as_raster(measure, grid)
    if raster.num_active < k:
        raise ValueError(f"asked for {k} eigenvalues, only {raster.num_active} active nodes")
    values, residuals, flags, outer, _ = _power_eigs(raster, k, include_mass=False, tol=tol)
    return EigenResult(values, residuals, flags, outer, "inverse_power", raster.num_active, grid)


# ---------------------------------------------------------------------------
# assembled path


def assemble_sparse(raster: RasterMeasure, include_mass: bool = False):
    """CSR matrix of the operator on the active nodes, C order.

    Reproduces the stencil kernel exactly: open sides couple with -1/h^2
    and add 1/h^2 to the diagonal, wall sides (box face or masked
    neighbor) add 2/h^2.  Returns (matrix, active boolean array).
    """
    grid = raster.grid
    mask = raster.mask
    active = ~mask
    m = int(active.sum())
    idx = np.full(grid.shape, -1, dtype=np.int64)
    idx[active] = np.arange(m)
    h2 = grid.h * grid.h
    c0 = 1.0 if include_mass else 0.0
    diag = np.full(m, c0) + raster.finite_penalty[active]
    rows, cols, vals = [], [], []
    for a in range(grid.dim):
        n_a = grid.shape[a]
        lo = [slice(None)] * grid.dim
        hi = [slice(None)] * grid.dim
        lo[a] = slice(0, n_a - 1)
        hi[a] = slice(1, n_a)
        lo, hi = tuple(lo), tuple(hi)
        pair_open = active[lo] & active[hi]
        i_lo = idx[lo][pair_open]
        i_hi = idx[hi][pair_open]
        rows.append(i_lo)
        cols.append(i_hi)
        rows.append(i_hi)
        cols.append(i_lo)
        vals.append(np.full(i_lo.size, -1.0 / h2))
        vals.append(np.full(i_lo.size, -1.0 / h2))
        open_minus = np.zeros(grid.shape, dtype=bool)
        open_minus[hi] = pair_open
        open_plus = np.zeros(grid.shape, dtype=bool)
        open_plus[lo] = pair_open
        side = np.where(open_minus, 1.0, 2.0) + np.where(open_plus, 1.0, 2.0)
        diag += side[active] / h2
    rows.append(np.arange(m))
    cols.append(np.arange(m))
    vals.append(diag)
    mat = sparse.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(m, m)
    ).tocsr()
    return mat, active


def eigenvalues_assembled(
    measure, grid: Grid, k: int = 1, *, include_mass: bool = False
) -> EigenResult:
    """Bottom k eigenvalues via scipy shift-invert; the fast path.

    Deterministic: the Lanczos start is drawn from a fixed seed.  An
    all-ones start would be cheaper but sits in the symmetric subspace,
    and for symmetric geometries (two equal balls) single-vector Lanczos
    then skips the antisymmetric twin of a degenerate ground state.
    Falls back to dense for small systems (shift-invert needs k well
    below the dimension).
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    raster = _as_raster(measure, grid)
    m = raster.num_active
    if m < k:
        raise ValueError(f"asked for {k} eigenvalues, only {m} active nodes")
    mat, _ = assemble_sparse(raster, include_mass)
    if m <= max(_DENSE_CUTOFF, k + 2):
        vals = scipy.linalg.eigh(mat.toarray(), eigvals_only=True)[:k]
        method = "dense"
    else:
        v0 = np.random.default_rng(1234).standard_normal(m)
        vals = spla.eigsh(mat, k=k, sigma=0.0, which="LM", v0=v0, return_eigenvectors=False)
        vals = np.sort(vals)
        method = "shift_invert"
    vals = [float(v) for v in vals]
    return EigenResult(vals, [0.0] * k, [True] * k, 0, method, m, grid)


# ---------------------------------------------------------------------------
# profiles


@dataclass
class Profile:
    """A quantity evaluated along an increasing radius schedule."""

    radii: list
    values: list
    label: str
    detail: dict = field(default_factory=dict)

    def to_dict(self):
        enc = lambda v: v if math.isfinite(v) else "inf"
        d = {
            "radii": list(self.radii),
            "values": [enc(v) for v in self.values],
            "label": self.label,
        }
        if self.detail:
            d["detail"] = {
                key: [[enc(v) for v in row] for row in val] if key == "per_center" else val
                for key, val in self.detail.items()
            }
        return d


def tail_abscissa_profile(
    measure: MeasureSpec, grid: Grid, radii, *, tol: float = DEFAULT_EIG_TOL
) -> Profile:
    """lambda_1 of the measure confined to the complement of B_R, per R.

    Divergence of this profile is the complement-localization reading of
    compactness; for bounded domains the tails empty out and the values
    reach +inf exactly.
    """
    dim = grid.dim
    values = []
    for r in radii:
        res = spectral_abscissa(restrict_outside_ball(measure, r, dim), grid, tol=tol)
        values.append(res.value)
    return Profile(list(radii), values, "tail_abscissa")


def ring_centers(dim: int, radius: float) -> list:
    """Deterministic probe centers on the sphere |x| = radius.

    1d: both ends; 2d: 8 points at 45 degree spacing; 3d: 6 axis points
    plus the 8 body diagonals.
    """
    r = float(radius)
    if dim == 1:
        return [(r,), (-r,)]
    if dim == 2:
        s = r / math.sqrt(2.0)
        return [
            (r, 0.0), (s, s), (0.0, r), (-s, s),
            (-r, 0.0), (-s, -s), (0.0, -r), (s, -s),
        ]
    if dim == 3:
        t = r / math.sqrt(3.0)
        out = []
        for a in range(3):
            for sgn in (1.0, -1.0):
                c = [0.0, 0.0, 0.0]
                c[a] = sgn * r
                out.append(tuple(c))
        for sx in (1.0, -1.0):
            for sy in (1.0, -1.0):
                for sz in (1.0, -1.0):
                    out.append((sx * t, sy * t, sz * t))
        return out
    raise ValueError(f"unsupported dimension {dim}")


def _ball_window(grid: Grid, center, radius: float) -> Grid | None:
    """Aligned subgrid covering the closed ball plus a one cell margin."""
    lo_idx, hi_idx = [], []
    for a in range(grid.dim):
        ia = math.floor((center[a] - radius - grid.lo[a]) / grid.h) - 1
        ib = math.ceil((center[a] + radius - grid.lo[a]) / grid.h) + 1
        ia = max(ia, 0)
        ib = min(ib, grid.shape[a])
        if ib <= ia:
            return None
        lo_idx.append(ia)
        hi_idx.append(ib)
    return grid.window(lo_idx, hi_idx)


def ball_probe_profile(
    measure: MeasureSpec,
    grid: Grid,
    radii,
    ball_radius: float,
    *,
    tol: float = DEFAULT_EIG_TOL,
) -> Profile:
    """Worst lambda_1 of the measure confined to B_ball_radius(x), x on
    the ring |x| = R, for each R.

    The minimum over the ring is what has to diverge: one stubborn ball
    direction is enough to carry a non-compact sequence.  Each ball is
    solved on a window subgrid; the hard restriction to the ball makes
    the window walls invisible.
    """
    if ball_radius <= 0:
        raise ValueError("ball_radius must be positive")
    dim = grid.dim
    values = []
    per_center = []
    centers_used = []
    for r in radii:
        centers = ring_centers(dim, r)
        ring_vals = []
        for c in centers:
            win = _ball_window(grid, c, ball_radius)
            if win is None:
                ring_vals.append(INF)
                continue
            spec = DirichletRestriction(measure, Ball(c, ball_radius))
            ring_vals.append(spectral_abscissa(spec, win, tol=tol).value)
        values.append(min(ring_vals))
        per_center.append(ring_vals)
        centers_used.append([list(c) for c in centers])
    return Profile(
        list(radii),
        values,
        "ball_probe",
        detail={"ball_radius": ball_radius, "per_center": per_center, "centers": centers_used},
    )


# ---------------------------------------------------------------------------
# cube quotient


def cube_quotient(
    measure, grid: Grid, corner, edge: float = 1.0
) -> float:
    """Smallest value of (grad energy + measure mass) / mass over the
    cube [corner, corner + edge)^d, natural (Neumann) on the cube faces.

    The numerator carries no unit mass term.  Nodes the measure masks
    drop out as unknowns and act as interior Dirichlet walls; neighbors
    beyond the cube are simply not coupled.  Empty or fully masked cubes
    give +inf.
    """
    raster = _as_raster(measure, grid) if not isinstance(measure, RasterMeasure) else measure
    corner = tuple(float(c) for c in corner)
    if len(corner) != grid.dim:
        raise ValueError("corner dimension mismatch")
    if edge <= 0:
        raise ValueError("edge must be positive")
    sel = []
    for a in range(grid.dim):
        c = grid.axis_centers(a)
        sel.append(np.nonzero((c >= corner[a]) & (c < corner[a] + edge))[0])
    if any(s.size == 0 for s in sel):
        return INF
    sub_mask = raster.mask[np.ix_(*sel)]
    sub_pen = raster.finite_penalty[np.ix_(*sel)]
    active = ~sub_mask
    m = int(active.sum())
    if m == 0:
        return INF
    shape = sub_mask.shape
    idx = np.full(shape, -1, dtype=np.int64)
    idx[active] = np.arange(m)
    h2 = grid.h * grid.h
    diag = sub_pen[active].astype(float).copy()
    rows, cols, vals = [], [], []
    for a in range(grid.dim):
        n_a = shape[a]
        if n_a < 2:
            continue
        lo = [slice(None)] * grid.dim
        hi = [slice(None)] * grid.dim
        lo[a] = slice(0, n_a - 1)
        hi[a] = slice(1, n_a)
        lo, hi = tuple(lo), tuple(hi)
        pair_open = active[lo] & active[hi]
        i_lo = idx[lo][pair_open]
        i_hi = idx[hi][pair_open]
        rows.append(i_lo)
        cols.append(i_hi)
        rows.append(i_hi)
        cols.append(i_lo)
        vals.append(np.full(i_lo.size, -1.0 / h2))
        vals.append(np.full(i_lo.size, -1.0 / h2))
        contrib = np.zeros(shape)
        contrib[lo] += np.where(pair_open, 1.0, 0.0)
        contrib[hi] += np.where(pair_open, 1.0, 0.0)
        # interior Dirichlet: a masked neighbor inside the cube is a wall
        wall_lo = active[lo] & sub_mask[hi]
        wall_hi = active[hi] & sub_mask[lo]
        contrib[lo] += np.where(wall_lo, 2.0, 0.0)
        contrib[hi] += np.where(wall_hi, 2.0, 0.0)
        diag += contrib[active] / h2
    rows.append(np.arange(m))
    cols.append(np.arange(m))
    vals.append(diag)
    mat = sparse.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(m, m)
    ).tocsr()
    if m <= _DENSE_CUTOFF:
        return float(scipy.linalg.eigh(mat.toarray(), eigvals_only=True)[0])
    v0 = np.ones(m)
    val = spla.eigsh(mat, k=1, sigma=-1e-6, which="LM", v0=v0, return_eigenvectors=False)
    return float(val[0])


def cube_quotient_profile(
    measure: MeasureSpec, grid: Grid, radii, edge: float = 1.0
) -> Profile:
    """Worst cube quotient over cubes centered on the ring |x| = R, per R."""
    raster = _as_raster(measure, grid)
    dim = grid.dim
    values = []
    per_center = []
    for r in radii:
        centers = ring_centers(dim, r)
        ring_vals = []
        for c in centers:
            corner = tuple(ci - 0.5 * edge for ci in c)
            ring_vals.append(cube_quotient(raster, grid, corner, edge))
        values.append(min(ring_vals))
        per_center.append(ring_vals)
    return Profile(
        list(radii), values, "cube_quotient", detail={"edge": edge, "per_center": per_center}
    )
