"""Measure specifications and their rasterization.

A measure spec is a symbolic description of a nonnegative absorption
measure: a density (potential), a hard constraint (+inf outside or on a
region), or sums and restrictions of those.  Rasterization turns a spec
into per-node penalties on a grid; +inf penalties are Dirichlet masks.

Conventions:
  - Potentials are sampled at cell midpoints.
  - InfinityOutside masks nodes whose centers fall outside the region.
  - InfinityOn masks nodes whose cells intersect the region, so thin sets
    (slits, spheres) are never lost to center sampling.
  - Sums are pointwise with inf absorbing.
  - The hard restriction onto a window W keeps penalties inside W and
    masks everything else; the soft (mass-only) restriction zeroes
    penalties outside W without masking, which is what the cube quotient
    probes need.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import expr as expr_mod
from .geometry import (
    Ball,
    Complement,
    DiscreteField,
    Grid,
    HalfOpenCube,
    Region,
    region_from_dict,
)

INF = float("inf")


class InvalidMeasure(ValueError):
    pass


class MeasureSpec:
    def to_dict(self) -> dict:
        raise NotImplementedError

    def _penalty(self, grid: Grid) -> np.ndarray:
        raise NotImplementedError


@dataclass(frozen=True)
class Zero(MeasureSpec):
    def to_dict(self):
        return {"type": "zero"}

    def _penalty(self, grid):
        return np.zeros(grid.shape)


@dataclass(frozen=True)
class Potential(MeasureSpec):
    """Absolutely continuous part, V >= 0 given as an expression string,
    a python callable of the coordinate arrays, or a precomputed field."""

    density: object

    def to_dict(self):
        if isinstance(self.density, str):
            return {"type": "potential", "expr": self.density}
        raise InvalidMeasure("only expression potentials serialize")

    def _penalty(self, grid):
        if isinstance(self.density, DiscreteField):
            if not self.density.grid.same_grid(grid):
                raise InvalidMeasure("potential field lives on a different grid")
            vals = np.array(self.density.values, dtype=float)
        else:
            mesh = grid.center_mesh()
            if isinstance(self.density, str):
                vals = expr_mod.parse(self.density).evaluate(mesh)
            elif callable(self.density):
                vals = self.density(*mesh)
            else:
                raise InvalidMeasure(f"cannot evaluate potential {self.density!r}")
            vals = np.broadcast_to(np.asarray(vals, dtype=float), grid.shape).copy()
        if np.isnan(vals).any():
            raise InvalidMeasure("potential evaluates to NaN")
        if (vals < 0).any():
            raise InvalidMeasure("potential must be nonnegative")
        return vals


@dataclass(frozen=True)
class InfinityOutside(MeasureSpec):
    """Hard Dirichlet constraint outside an open set (the domain case)."""

    region: Region

    def to_dict(self):
        return {"type": "infinity_outside", "region": self.region.to_dict()}

    def _penalty(self, grid):
        inside = self.region.contains_points(grid.centers()).reshape(grid.shape)
        pen = np.zeros(grid.shape)
        pen[~inside] = INF
        return pen


@dataclass(frozen=True)
class InfinityOn(MeasureSpec):
    """Hard Dirichlet constraint on a (possibly thin) set."""

    region: Region

    def to_dict(self):
        return {"type": "infinity_on", "region": self.region.to_dict()}

    def _penalty(self, grid):
        centers = grid.centers()
        half = 0.5 * grid.h
        hit = self.region.cell_intersects(centers - half, centers + half)
        pen = np.zeros(grid.shape)
        pen[hit.reshape(grid.shape)] = INF
        return pen


@dataclass(frozen=True)
class Sum(MeasureSpec):
    terms: tuple

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))

    def to_dict(self):
        return {"type": "sum", "terms": [t.to_dict() for t in self.terms]}

    def _penalty(self, grid):
        pen = np.zeros(grid.shape)
        for t in self.terms:
            pen = pen + t._penalty(grid)
        return pen


@dataclass(frozen=True)
class DirichletRestriction(MeasureSpec):
    """base + infinity outside the window; the exhaustion building block."""

    base: MeasureSpec
    region: Region

    def to_dict(self):
        return {
            "type": "dirichlet_restriction",
            "base": self.base.to_dict(),
            "region": self.region.to_dict(),
        }

    def _penalty(self, grid):
        return self.base._penalty(grid) + InfinityOutside(self.region)._penalty(grid)


@dataclass(frozen=True)
class ClassicalRestriction(MeasureSpec):
    """Keep the measure's mass inside the window, drop it outside, no mask."""

    base: MeasureSpec
    region: Region

    def to_dict(self):
        return {
            "type": "classical_restriction",
            "base": self.base.to_dict(),
            "region": self.region.to_dict(),
        }

    def _penalty(self, grid):
        pen = self.base._penalty(grid)
        inside = self.region.contains_points(grid.centers()).reshape(grid.shape)
        out = np.where(inside, pen, 0.0)
        return out


def measure_from_dict(d: dict) -> MeasureSpec:
    t = d["type"]
    if t == "zero":
        return Zero()
    if t == "potential":
        return Potential(d["expr"])
    if t == "infinity_outside":
        return InfinityOutside(region_from_dict(d["region"]))
    if t == "infinity_on":
        return InfinityOn(region_from_dict(d["region"]))
    if t == "sum":
        return Sum(tuple(measure_from_dict(x) for x in d["terms"]))
    if t == "dirichlet_restriction":
        return DirichletRestriction(measure_from_dict(d["base"]), region_from_dict(d["region"]))
    if t == "classical_restriction":
        return ClassicalRestriction(measure_from_dict(d["base"]), region_from_dict(d["region"]))
    raise InvalidMeasure(f"unknown measure type {t!r}")


# ---------------------------------------------------------------------------
# rasterization


@dataclass
class RasterMeasure:
    """Per-node penalties; +inf entries are the Dirichlet mask."""

    grid: Grid
    penalty: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.penalty, dtype=np.float64)
        if p.shape != self.grid.shape:
            raise InvalidMeasure(f"penalty shape {p.shape} != grid {self.grid.shape}")
        if np.isnan(p).any():
            raise InvalidMeasure("penalty contains NaN")
        if (p < 0).any():
            raise InvalidMeasure("penalty must be nonnegative")
        self.penalty = p

    @property
    def mask(self) -> np.ndarray:
        return np.isinf(self.penalty)

    @property
    def finite_penalty(self) -> np.ndarray:
        """Penalties with masked entries zeroed, for arithmetic kernels."""
        return np.where(self.mask, 0.0, self.penalty)

    @property
    def num_active(self) -> int:
        return int((~self.mask).sum())


def rasterize(spec: MeasureSpec, grid: Grid) -> RasterMeasure:
    # adding 0.0 normalizes -0.0 so equivalent specs rasterize bit-identically
    return RasterMeasure(grid, spec._penalty(grid) + 0.0)


# ---------------------------------------------------------------------------
# restriction helpers


def restrict_to_ball(spec: MeasureSpec, radius: float, dim: int) -> MeasureSpec:
    return DirichletRestriction(spec, Ball((0.0,) * dim, radius))


def restrict_outside_ball(spec: MeasureSpec, radius: float, dim: int) -> MeasureSpec:
    return DirichletRestriction(spec, Complement(Ball((0.0,) * dim, radius)))


def restrict_to_cube(spec: MeasureSpec, corner, edge: float) -> MeasureSpec:
    return DirichletRestriction(spec, HalfOpenCube(tuple(corner), edge))


def restrict_mass_to_cube(spec: MeasureSpec, corner, edge: float) -> MeasureSpec:
    return ClassicalRestriction(spec, HalfOpenCube(tuple(corner), edge))
