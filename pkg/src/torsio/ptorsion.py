"""Nonlinear (p-Laplacian) torsion and the p spectral quotient.

Everything is variational: the p-torsion iterates minimize the smoothed
p-Dirichlet energy over exhaustion balls, the p quotient runs normalized
descent on the Rayleigh ratio.  At p = 2 the energy gradient coincides
with h^d times the linear residual, so the linear and nonlinear routes
must agree to solver tolerance; the tests lean on that hard.

The torsion minimizer is damped Newton: an inner Jacobi-CG solve of the
linearized operator, Armijo backtracking outside.  First-order descent
(BB, L-BFGS) stalls around relative gradients of 1e-6 here because near
the minimum energy differences hit rounding scale while the gradient is
still orders above target; Newton takes unit steps there and does not
care.  At p = 2 the Hessian is the linear operator itself, so the whole
route collapses to a few linear solves.  The quotient keeps a lighter
normalized BB descent since it only needs quotient-level accuracy.

For p < 2 the kernel smooths |t|^p to (t^2 + eps^2)^(p/2) with
eps = 1e-12; the bias is far below the tolerances used anywhere here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .diagnostics import (
    DiagnoseConfig,
    Diagnosis,
    Profile,
    Thresholds,
    _decide,
    _report,
    classify_decay,
    classify_l1,
)
from .elliptic import _as_raster, _as_rhs
from .geometry import DiscreteField, Grid
from .measure import MeasureSpec, restrict_to_ball
from .torsion import TorsionResult, _check_radii, default_radii

_SMOOTH_EPS = 1e-12
_ARMIJO_C = 1e-4


def _validate_p(p: float) -> float:
    p = float(p)
    if not p > 1.0:
        raise ValueError(f"p must be > 1, got {p} (p = 1 has no unique minimizer here)")
    return p


def _validate_tol(tol: float) -> float:
    tol = float(tol)
    if not (0.0 < tol <= 1e-4):
        raise ValueError(f"tol must lie in (0, 1e-4], got {tol}")
    return tol


@dataclass
class _Functional:
    """Smoothed p-energy bound to one raster measure and load."""

    raster: object
    f3: np.ndarray
    p: float
    c0: float

    def __post_init__(self):
        grid = self.raster.grid
        self.mask3 = kernels.mask3d(self.raster.mask)
        self.pen3 = kernels.as3d(self.raster.finite_penalty)
        self.active3 = ~self.mask3
        d, h, p = grid.dim, grid.h, self.p
        self.a_link = h ** (d - p)
        self.a_mass = h**d
        self.eps2 = _SMOOTH_EPS**2 if p < 2.0 else 0.0
        self.dim = grid.dim
        act = self.active3
        wall_count = np.zeros(self.mask3.shape)
        for ax in range(self.dim):
            lo = tuple(slice(0, -1) if a == ax else slice(None) for a in range(3))
            hi = tuple(slice(1, None) if a == ax else slice(None) for a in range(3))
            wall_m = act.astype(float)
            wall_m[hi] = act[hi] & ~act[lo]
            wall_p = act.astype(float)
            wall_p[lo] = act[lo] & ~act[hi]
            wall_count += wall_m + wall_p
        self.wall_count = wall_count
        self.precond = np.ones(self.mask3.shape)
        self.update_precond(np.zeros(self.mask3.shape))

    def __call__(self, u3: np.ndarray, grad: np.ndarray) -> float:
        return kernels.p_energy_gradient(
            u3, self.pen3, self.mask3, self.f3, self.dim, self.p,
            self.eps2, self.a_link, self.a_mass, self.c0, grad,
        )

    def energy(self, u3: np.ndarray) -> float:
        return self(u3, np.empty_like(u3))

    def _curv(self, t: np.ndarray) -> np.ndarray:
        # d/dt of t*(t^2+eps^2)^(p/2-1): the linearized stiffness; for
        # p < 2 flat links are orders stiffer than the p=2 guess
        s = t * t + self.eps2
        if self.p == 2.0 and self.eps2 == 0.0:
            return np.ones_like(t)
        with np.errstate(divide="ignore"):
            base = np.where(s > 0.0, s ** (0.5 * self.p - 1.0), 0.0)
        return base * (1.0 + (self.p - 2.0) * t * t / np.maximum(s, 1e-300))

    def linearize(self, u3: np.ndarray):
        """Hessian pieces at u3: per-axis link weights, diagonal, Jacobi.

        Returns (wx, wy, wz, wdiag, jdiag).  w_ax[i] weighs the link from
        node i to i + 1 along that axis (zero off the grid or through a
        masked node); wdiag holds mass rows and wall sides plus a strictly
        positive floor, 1e-12 relative, so the Hessian never has an empty
        row even where the p > 2 curvature vanishes.  jdiag is wdiag plus
        the link contributions: the Jacobi diagonal of the full operator.
        """
        act = self.active3
        shape = self.mask3.shape
        weights = [np.zeros(shape) for _ in range(3)]
        wdiag = self.a_mass * (self.c0 + self.pen3) * self._curv(u3) * act
        wdiag += 2.0 * self.a_link * self._curv(2.0 * u3) * self.wall_count
        wdiag += 1e-12 * self.a_mass * (self.c0 + self.pen3 + 1.0) * act
        jdiag = wdiag.copy()
        for ax in range(self.dim):
            lo = tuple(slice(0, -1) if a == ax else slice(None) for a in range(3))
            hi = tuple(slice(1, None) if a == ax else slice(None) for a in range(3))
            open_link = act[lo] & act[hi]
            t = (u3[hi] - u3[lo]) * open_link
            c = self._curv(t) * open_link
            weights[ax][lo] = c
            jdiag[lo] += self.a_link * c
            jdiag[hi] += self.a_link * c
        wx, wy, wz = weights
        return wx, wy, wz, wdiag, jdiag

    def hessian_apply(self, wx, wy, wz, wdiag, v3, out):
        kernels.weighted_apply(
            v3, wx, wy, wz, wdiag, self.mask3, self.a_link, self.dim, out
        )

    def update_precond(self, u3: np.ndarray) -> None:
        """Jacobi of the energy Hessian at u3 (exact at p = 2)."""
        jdiag = self.linearize(u3)[-1]
        self.precond = np.where(
            self.active3, 1.0 / np.maximum(jdiag, 1e-300), 0.0
        )


def _norm(a: np.ndarray) -> float:
    return float(np.sqrt(np.dot(a.ravel(), a.ravel())))


def _inner_cg(fn: _Functional, wx, wy, wz, wdiag, jinv, b, tol_abs: float, cap: int):
    """Jacobi-CG on the linearized operator; returns (direction, iters)."""
    x = np.zeros_like(b)
    r = b.copy()
    z = r * jinv
    rz = float(np.dot(r.ravel(), z.ravel()))
    pvec = z.copy()
    bp = np.empty_like(b)
    iters = 0
    while iters < cap:
        fn.hessian_apply(wx, wy, wz, wdiag, pvec, bp)
        pbp = float(np.dot(pvec.ravel(), bp.ravel()))
        if pbp <= 0.0:
            break
        alpha = rz / pbp
        x += alpha * pvec
        r -= alpha * bp
        iters += 1
        if _norm(r) <= tol_abs:
            break
        z = r * jinv
        rz_new = float(np.dot(r.ravel(), z.ravel()))
        pvec = z + (rz_new / rz) * pvec
        rz = rz_new
    return x, iters


def _newton(fn: _Functional, x0: np.ndarray, tol: float, max_iter: int, trace=None):
    """Damped Newton; stops on the relative gradient norm.

    The reference scale is ||a_mass f||, which for p = 2 turns the stop
    rule into exactly the linear solver's relative residual.  max_iter
    budgets the total inner CG iterations.  When backtracking fails at
    rounding scale the full Newton step is still taken if it shrinks the
    gradient: close to the minimum the energy model is flat to machine
    precision long before the gradient meets the tolerance.  trace, if
    given, collects the energy of every accepted iterate.
    """
    u = x0 * fn.active3
    g = np.zeros_like(u)
    energy = fn(u, g)
    if trace is not None:
        trace.append(float(energy))
    gref = fn.a_mass * _norm(fn.f3 * fn.active3)
    if gref == 0.0:
        gref = 1.0
    total = 0
    converged = False
    for _ in range(200):
        gnorm = _norm(g)
        if gnorm / gref <= tol:
            converged = True
            break
        if total >= max_iter:
            break
        wx, wy, wz, wdiag, jdiag = fn.linearize(u)
        jinv = np.where(fn.active3, 1.0 / np.maximum(jdiag, 1e-300), 0.0)
        relg = gnorm / gref
        eta = min(0.1, math.sqrt(relg))
        target = max(eta * gnorm, 0.05 * tol * gref)
        d, inner = _inner_cg(
            fn, wx, wy, wz, wdiag, jinv, g, target, min(2000, max_iter - total)
        )
        total += max(inner, 1)
        slope = float(np.dot(g.ravel(), d.ravel()))
        if slope <= 0.0:
            d = g * jinv
            slope = float(np.dot(g.ravel(), d.ravel()))
        g_new = np.zeros_like(u)
        noise = 32.0 * np.finfo(float).eps * abs(energy)
        step = 1.0
        accepted = False
        for _ in range(40):
            if _ARMIJO_C * step * slope <= noise:
                # the test could no longer tell descent from rounding
                break
            trial = u - step * d
            e_new = fn(trial, g_new)
            if e_new <= energy - _ARMIJO_C * step * slope:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            trial = u - d
            e_new = fn(trial, g_new)
            if _norm(g_new) < gnorm:
                accepted = True
        if not accepted:
            break
        u, g, energy = trial, g_new, e_new
        if trace is not None:
            trace.append(float(energy))
    return u, energy, total, converged


def _minimize(fn: _Functional, x0: np.ndarray, tol: float, max_iter: int, trace=None):
    """Newton with smoothing continuation for p < 2.

    At eps = 1e-12 the singular p < 2 curvature leaves Newton a tiny
    basin; a ladder of looser smoothings walks the iterate in, each
    stage warm-starting the next.  The ladder changes the path only:
    the returned energy is always the target one at eps = 1e-12, and
    trace records that final stage (energies across smoothings are not
    comparable).
    """
    u = x0
    total = 0
    if fn.p < 2.0:
        for eps in (1e-3, 1e-5, 1e-7, 1e-9):
            fn.eps2 = eps * eps
            u, _, it, _ = _newton(fn, u, max(tol, 1e-6), max(max_iter - total, 100))
            total += it
        fn.eps2 = _SMOOTH_EPS**2
    u, energy, it, converged = _newton(fn, u, tol, max(max_iter - total, 100), trace)
    return u, energy, total + it, converged


def p_solve(
    measure,
    f,
    grid: Grid,
    p: float,
    *,
    include_mass: bool = True,
    tol: float = 1e-8,
    max_iter: int = 30000,
    x0: np.ndarray | None = None,
    trace: list | None = None,
):
    """Minimize the p-energy for one load; the p analogue of solve().

    Returns (field, energy, iterations, converged).  trace, if given,
    collects the accepted energies of the final descent stage.
    """
    p = _validate_p(p)
    tol = _validate_tol(tol)
    raster = _as_raster(measure, grid)
    f3 = kernels.as3d(_as_rhs(f, grid))
    fn = _Functional(raster, f3, p, 1.0 if include_mass else 0.0)
    start = np.zeros(fn.mask3.shape)
    if p != 2.0:
        # warm start from the p = 2 solution; the energy is convex, so
        # this only saves steps.  For p > 2 it also keeps the Hessian
        # away from its degeneracy at 0, where Newton directions blow
        # up; a caller-provided x0 may be 0 on freshly unmasked nodes,
        # so it is blended in rather than trusted alone.
        kernels.pcg(
            fn.pen3, fn.mask3, f3 * fn.active3, grid.h**2, fn.c0,
            fn.dim, start, 1e-10, max_iter,
        )
    if x0 is not None:
        given = kernels.as3d(x0)
        if p > 2.0:
            start = np.where(np.abs(given) > np.abs(start), given, start)
        else:
            start = given.copy()
    u3, energy, iterations, converged = _minimize(fn, start, tol, max_iter, trace)
    field = DiscreteField(grid, u3.reshape(grid.shape))
    return field, float(energy), iterations, converged


def p_torsion(
    measure: MeasureSpec,
    grid: Grid,
    p: float,
    radii=None,
    *,
    tol: float = 1e-8,
    increment_tol: float = 1e-6,
    max_iter: int = 30000,
) -> TorsionResult:
    """p-torsion function by ball exhaustion, mirroring the linear case."""
    p = _validate_p(p)
    radii = _check_radii(default_radii(grid) if radii is None else radii)
    node_r = grid.node_radii()
    prev = None
    l1_norms = []
    increments = []
    min_increment = 0.0
    all_converged = True
    for r in radii:
        field, _, _, ok = p_solve(
            restrict_to_ball(measure, r, grid.dim),
            1.0,
            grid,
            p,
            tol=tol,
            max_iter=max_iter,
            x0=None if prev is None else prev.values,
        )
        all_converged &= ok
        l1_norms.append(field.integral())
        if prev is not None:
            diff = field.values - prev.values
            increments.append(float(np.max(np.abs(diff))))
            min_increment = min(min_increment, float(diff.min()))
        prev = field
    # release the ball so the tail sup reads the limit, not the truncation
    field, _, _, ok = p_solve(
        measure, 1.0, grid, p, tol=tol, max_iter=max_iter, x0=prev.values
    )
    all_converged &= ok
    min_increment = min(min_increment, float((field.values - prev.values).min()))
    prev = field
    sup_tail = []
    for r in radii:
        tail = node_r >= r
        sup_tail.append(float(prev.values[tail].max()) if tail.any() else 0.0)
    converged = bool(increments and increments[-1] < increment_tol)
    return TorsionResult(
        w=prev,
        radii=radii,
        sup_tail=sup_tail,
        l1_norms=l1_norms,
        increments=increments,
        converged=converged,
        min_increment=min_increment,
        solver_converged=all_converged,
        p=p,
        grid=grid,
    )


@dataclass
class PRayleighResult:
    value: float
    per_restart: list
    iterations: int
    converged: bool
    p: float

    def to_dict(self):
        return {
            "value": self.value,
            "per_restart": list(self.per_restart),
            "iterations": self.iterations,
            "converged": self.converged,
            "p": self.p,
        }


def p_rayleigh(
    measure,
    grid: Grid,
    p: float,
    *,
    tol: float = 1e-8,
    restarts: int = 5,
    seed: int = 0,
    max_iter: int = 5000,
) -> PRayleighResult:
    """Bottom of (grad^p + mass^p + measure mass^p) / mass^p.

    Normalized descent on the ratio from a few seeded random starts; the
    quotient is scale invariant, so iterates are renormalized in L^p for
    conditioning only.  Always >= 1 by construction, and equals the
    linear abscissa at p = 2.
    """
    p = _validate_p(p)
    tol = _validate_tol(tol)
    raster = _as_raster(measure, grid)
    if raster.num_active == 0:
        return PRayleighResult(float("inf"), [], 0, True, p)
    zeros = np.zeros(kernels.as3d(np.zeros(grid.shape)).shape)
    numer = _Functional(raster, zeros, p, 1.0)
    denom_raster = type(raster)(grid, np.zeros(grid.shape))
    denom = _Functional(denom_raster, zeros, p, 1.0)
    denom.a_link = 0.0  # mass only
    denom.mask3 = numer.mask3
    denom.active3 = numer.active3

    def quotient(u3, want_grad: bool):
        gn = np.zeros_like(u3)
        gd = np.zeros_like(u3)
        n = numer(u3, gn)
        d = denom(u3, gd)
        r = n / d
        if not want_grad:
            return r, None
        return r, (gn - r * gd) / d

    best = math.inf
    per_restart = []
    total_iter = 0
    any_converged = False
    for restart in range(restarts):
        rng = np.random.default_rng([seed, restart])
        u = rng.standard_normal(numer.mask3.shape) * numer.active3
        if restart == 0:
            u = np.ones(numer.mask3.shape) * numer.active3
        nrm = np.abs(u).max()
        if nrm == 0.0:
            continue
        u = u / nrm
        r, g = quotient(u, True)
        alpha = 1.0
        prev_u = prev_d = None
        converged = False
        small = 0
        for it in range(max_iter):
            total_iter += 1
            if it % 100 == 0 and p != 2.0:
                # flat starts crush the p != 2 metric; track the iterate
                numer.update_precond(u)
                prev_u = prev_d = None
            d = g * numer.precond
            if prev_u is not None:
                s = u - prev_u
                yd = d - prev_d
                num = float(np.dot(s.ravel(), yd.ravel()))
                alpha = (
                    min(max(float(np.dot(s.ravel(), s.ravel())) / num, 1e-12), 1e8)
                    if num > 0.0
                    else 1.0
                )
            slope = float(np.dot(g.ravel(), d.ravel()))
            prev_u, prev_d = u, d
            step = alpha
            improved = False
            for _ in range(50):
                trial = u - step * d
                nrm = np.abs(trial).max()
                if nrm > 0:
                    trial = trial / nrm
                    r_new, _ = quotient(trial, False)
                    if r_new <= r - _ARMIJO_C * step * slope:
                        improved = True
                        break
                step *= 0.5
            if not improved:
                converged = True
                break
            drop = r - r_new
            u = trial
            r, g = quotient(u, True)
            # one small drop can be a fluke of a bad step; ask for three
            small = small + 1 if drop <= tol * max(abs(r), 1.0) else 0
            if small >= 3:
                converged = True
                break
        per_restart.append(float(r))
        any_converged |= converged
        best = min(best, float(r))
    return PRayleighResult(best, per_restart, total_iter, any_converged, p)


def p_diagnose(
    measure: MeasureSpec,
    grid: Grid,
    p: float,
    config: DiagnoseConfig | None = None,
) -> Diagnosis:
    """Compactness verdict from the p-torsion profiles.

    Uses the relaxed thresholds by default: the nonlinear profiles move
    slower than their linear counterparts, and the solver floor is
    higher, so the linear knobs would refuse to classify runs that are
    actually clear.
    """
    p = _validate_p(p)
    cfg = config or DiagnoseConfig(thresholds=Thresholds().relaxed())
    radii = list(cfg.radii) if cfg.radii is not None else default_radii(grid, count=5)
    tol = min(cfg.solver_tol, 1e-8)
    if not (0.0 < tol <= 1e-4):
        tol = 1e-8
    tors = p_torsion(measure, grid, p, radii, tol=tol)
    reports = []
    cls, note = classify_decay(tors.sup_tail, cfg.thresholds)
    reports.append(_report("tail_sup_decay", Profile(radii, tors.sup_tail, "tail_sup"), cls, note))
    cls, note = classify_l1(tors.l1_norms, cfg.thresholds)
    reports.append(
        _report("torsion_l1_stabilization", Profile(radii, tors.l1_norms, "l1_norms"), cls, note)
    )
    decision, warnings = _decide(reports)
    if not tors.solver_converged:
        warnings.append("descent hit its iteration cap on at least one radius")
    return Diagnosis(f"p={p:g}", decision, reports, warnings, grid)
