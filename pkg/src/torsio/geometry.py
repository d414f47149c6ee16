"""Regions, tensor grids, and grid fields.

Regions are immutable set descriptions used two ways: point membership
(`contains`, vectorized `contains_points`) and approximate cell overlap
(`cell_intersects`), the latter for thin sets that point sampling would
miss.  Grids are uniform cell-centered tensor grids; node i sits at
lo + (i + 1/2) h, so no node ever lies on the box boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import kernels

INF = float("inf")


def _astuple(x) -> tuple:
    if np.isscalar(x):
        return (float(x),)
    return tuple(float(v) for v in x)


# ---------------------------------------------------------------------------
# regions


class Region:
    """Base class; subclasses implement vectorized membership and cell overlap."""

    dim: int

    def contains(self, point) -> bool:
        pts = np.atleast_2d(np.asarray(point, dtype=float))
        return bool(self.contains_points(pts)[0])

    def contains_points(self, pts: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def cell_intersects(self, cell_lo: np.ndarray, cell_hi: np.ndarray) -> np.ndarray:
        """Approximate overlap test for axis-aligned cells [cell_lo, cell_hi).

        Exact for balls, boxes and cubes; conservative for composites
        (may report an intersection for cells that only nearly touch).
        """
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError


def _enc(v: float):
    if v == INF:
        return "inf"
    if v == -INF:
        return "-inf"
    return v


def _dec(v) -> float:
    if v == "inf":
        return INF
    if v == "-inf":
        return -INF
    return float(v)


@dataclass(frozen=True)
class Ball(Region):
    center: tuple
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", _astuple(self.center))
        object.__setattr__(self, "radius", float(self.radius))
        if self.radius <= 0:
            raise ValueError(f"ball radius must be positive, got {self.radius}")

    @property
    def dim(self):
        return len(self.center)

    def contains_points(self, pts):
        c = np.asarray(self.center)
        return ((pts - c) ** 2).sum(axis=1) < self.radius**2

    def cell_intersects(self, cell_lo, cell_hi):
        c = np.asarray(self.center)
        nearest = np.clip(c, cell_lo, cell_hi)
        return ((nearest - c) ** 2).sum(axis=1) < self.radius**2

    def to_dict(self):
        return {"type": "ball", "center": list(self.center), "radius": self.radius}


@dataclass(frozen=True)
class Box(Region):
    """Open axis-aligned box (lo_i, hi_i); bounds may be +-inf."""

    lo: tuple
    hi: tuple

    def __post_init__(self):
        object.__setattr__(self, "lo", _astuple(self.lo))
        object.__setattr__(self, "hi", _astuple(self.hi))
        if len(self.lo) != len(self.hi):
            raise ValueError("box lo/hi dimension mismatch")
        for a, b in zip(self.lo, self.hi):
            if not a < b:
                raise ValueError(f"box needs lo < hi per axis, got {a} >= {b}")

    @property
    def dim(self):
        return len(self.lo)

    def contains_points(self, pts):
        lo = np.asarray(self.lo)
        hi = np.asarray(self.hi)
        return np.logical_and(pts > lo, pts < hi).all(axis=1)

    def cell_intersects(self, cell_lo, cell_hi):
        lo = np.asarray(self.lo)
        hi = np.asarray(self.hi)
        return np.logical_and(cell_hi > lo, cell_lo < hi).all(axis=1)

    def to_dict(self):
        return {
            "type": "box",
            "lo": [_enc(v) for v in self.lo],
            "hi": [_enc(v) for v in self.hi],
        }


@dataclass(frozen=True)
class HalfOpenCube(Region):
    """Product of [corner_i, corner_i + edge)."""

    corner: tuple
    edge: float

    def __post_init__(self):
        object.__setattr__(self, "corner", _astuple(self.corner))
        object.__setattr__(self, "edge", float(self.edge))
        if self.edge <= 0:
            raise ValueError("cube edge must be positive")

    @property
    def dim(self):
        return len(self.corner)

    def contains_points(self, pts):
        c = np.asarray(self.corner)
        return np.logical_and(pts >= c, pts < c + self.edge).all(axis=1)

    def cell_intersects(self, cell_lo, cell_hi):
        c = np.asarray(self.corner)
        return np.logical_and(cell_hi > c, cell_lo < c + self.edge).all(axis=1)

    def to_dict(self):
        return {"type": "half_open_cube", "corner": list(self.corner), "edge": self.edge}


@dataclass(frozen=True)
class Union(Region):
    regions: tuple

    def __post_init__(self):
        object.__setattr__(self, "regions", tuple(self.regions))
        if not self.regions:
            raise ValueError("empty union")

    @property
    def dim(self):
        return self.regions[0].dim

    def contains_points(self, pts):
        out = self.regions[0].contains_points(pts)
        for r in self.regions[1:]:
            out = out | r.contains_points(pts)
        return out

    def cell_intersects(self, cell_lo, cell_hi):
        out = self.regions[0].cell_intersects(cell_lo, cell_hi)
        for r in self.regions[1:]:
            out = out | r.cell_intersects(cell_lo, cell_hi)
        return out

    def to_dict(self):
        return {"type": "union", "regions": [r.to_dict() for r in self.regions]}


@dataclass(frozen=True)
class Intersection(Region):
    regions: tuple

    def __post_init__(self):
        object.__setattr__(self, "regions", tuple(self.regions))
        if not self.regions:
            raise ValueError("empty intersection")

    @property
    def dim(self):
        return self.regions[0].dim

    def contains_points(self, pts):
        out = self.regions[0].contains_points(pts)
        for r in self.regions[1:]:
            out = out & r.contains_points(pts)
        return out

    def cell_intersects(self, cell_lo, cell_hi):
        # conservative: a cell meeting every member may still miss the
        # intersection; acceptable for the thin sets this is used on
        out = self.regions[0].cell_intersects(cell_lo, cell_hi)
        for r in self.regions[1:]:
            out = out & r.cell_intersects(cell_lo, cell_hi)
        return out

    def to_dict(self):
        return {"type": "intersection", "regions": [r.to_dict() for r in self.regions]}


@dataclass(frozen=True)
class Complement(Region):
    region: Region

    @property
    def dim(self):
        return self.region.dim

    def contains_points(self, pts):
        return ~self.region.contains_points(pts)

    def cell_intersects(self, cell_lo, cell_hi):
        # a cell meets the complement unless it sits entirely inside the
        # region; tested on corners plus center (approximate)
        m = cell_lo.shape[0]
        d = cell_lo.shape[1]
        all_in = np.ones(m, dtype=bool)
        for bits in range(2**d):
            corner = np.where(
                [(bits >> a) & 1 for a in range(d)], cell_hi, cell_lo
            )
            all_in &= self.region.contains_points(corner)
        all_in &= self.region.contains_points(0.5 * (cell_lo + cell_hi))
        return ~all_in

    def to_dict(self):
        return {"type": "complement", "region": self.region.to_dict()}


@dataclass(frozen=True)
class SlitStrip(Region):
    """A half-infinite strip with full-height slits removed.

    The strip is (x_lo, x_hi) x (cross_lo, cross_hi); points whose first
    coordinate lies within slit_width/2 of any slit abscissa are excluded.
    slit_width is a physical width: grids coarser than it will miss slits,
    which is exactly the failure mode the cross checks look for.
    """

    x_lo: float
    x_hi: float
    cross_lo: tuple
    cross_hi: tuple
    slits: tuple
    slit_width: float

    def __post_init__(self):
        object.__setattr__(self, "cross_lo", _astuple(self.cross_lo))
        object.__setattr__(self, "cross_hi", _astuple(self.cross_hi))
        object.__setattr__(self, "slits", tuple(sorted(float(s) for s in self.slits)))
        object.__setattr__(self, "x_lo", float(self.x_lo))
        object.__setattr__(self, "x_hi", float(self.x_hi))
        object.__setattr__(self, "slit_width", float(self.slit_width))
        if self.slit_width < 0:
            raise ValueError("slit_width must be >= 0")

    @property
    def dim(self):
        return 1 + len(self.cross_lo)

    def _near_slit(self, x: np.ndarray) -> np.ndarray:
        if not self.slits or self.slit_width == 0.0:
            return np.zeros(x.shape, dtype=bool)
        s = np.asarray(self.slits)
        pos = np.searchsorted(s, x)
        half = 0.5 * self.slit_width
        near = np.zeros(x.shape, dtype=bool)
        left = np.clip(pos - 1, 0, len(s) - 1)
        right = np.clip(pos, 0, len(s) - 1)
        near |= np.abs(x - s[left]) < half
        near |= np.abs(x - s[right]) < half
        return near

    def contains_points(self, pts):
        x = pts[:, 0]
        ok = (x > self.x_lo) & (x < self.x_hi)
        lo = np.asarray(self.cross_lo)
        hi = np.asarray(self.cross_hi)
        ok &= np.logical_and(pts[:, 1:] > lo, pts[:, 1:] < hi).all(axis=1)
        return ok & ~self._near_slit(x)

    def cell_intersects(self, cell_lo, cell_hi):
        ok = (cell_hi[:, 0] > self.x_lo) & (cell_lo[:, 0] < self.x_hi)
        lo = np.asarray(self.cross_lo)
        hi = np.asarray(self.cross_hi)
        ok &= np.logical_and(cell_hi[:, 1:] > lo, cell_lo[:, 1:] < hi).all(axis=1)
        # excluded only when the whole x-extent of the cell sits inside one slit band
        if self.slits and self.slit_width > 0:
            swallowed = self._near_slit(cell_lo[:, 0]) & self._near_slit(cell_hi[:, 0])
            s = np.asarray(self.slits)
            same = s[np.clip(np.searchsorted(s, cell_lo[:, 0]) - 1, 0, len(s) - 1)] == s[
                np.clip(np.searchsorted(s, cell_hi[:, 0]) - 1, 0, len(s) - 1)
            ]
            ok &= ~(swallowed & same)
        return ok

    def to_dict(self):
        return {
            "type": "slit_strip",
            "x_lo": _enc(self.x_lo),
            "x_hi": _enc(self.x_hi),
            "cross_lo": list(self.cross_lo),
            "cross_hi": list(self.cross_hi),
            "slits": list(self.slits),
            "slit_width": self.slit_width,
        }


def region_from_dict(d: dict) -> Region:
    t = d["type"]
    if t == "ball":
        return Ball(tuple(d["center"]), d["radius"])
    if t == "box":
        return Box(tuple(_dec(v) for v in d["lo"]), tuple(_dec(v) for v in d["hi"]))
    if t == "half_open_cube":
        return HalfOpenCube(tuple(d["corner"]), d["edge"])
    if t == "union":
        return Union(tuple(region_from_dict(r) for r in d["regions"]))
    if t == "intersection":
        return Intersection(tuple(region_from_dict(r) for r in d["regions"]))
    if t == "complement":
        return Complement(region_from_dict(d["region"]))
    if t == "slit_strip":
        return SlitStrip(
            _dec(d["x_lo"]),
            _dec(d["x_hi"]),
            tuple(d["cross_lo"]),
            tuple(d["cross_hi"]),
            tuple(d["slits"]),
            d["slit_width"],
        )
    raise ValueError(f"unknown region type {t!r}")


def everything(dim: int) -> Region:
    return Box((-INF,) * dim, (INF,) * dim)


# ---------------------------------------------------------------------------
# grids


class GridMismatch(ValueError):
    pass


@dataclass(frozen=True)
class Grid:
    """Uniform cell-centered tensor grid on an axis-aligned box."""

    lo: tuple
    hi: tuple
    h: float
    shape: tuple
    adjusted: bool = False

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def cell_volume(self) -> float:
        return self.h**self.dim

    @property
    def num_nodes(self) -> int:
        return int(np.prod(self.shape))

    def axis_centers(self, axis: int) -> np.ndarray:
        return self.lo[axis] + (np.arange(self.shape[axis]) + 0.5) * self.h

    def center_mesh(self) -> list[np.ndarray]:
        """Per-axis coordinate arrays broadcast to the grid shape."""
        axes = [self.axis_centers(a) for a in range(self.dim)]
        return list(np.meshgrid(*axes, indexing="ij", sparse=False)) if self.dim > 1 else [axes[0]]

    def centers(self) -> np.ndarray:
        """All node coordinates, shape (num_nodes, dim), C order."""
        mesh = self.center_mesh()
        return np.stack([m.ravel() for m in mesh], axis=1)

    def node_radii(self) -> np.ndarray:
        mesh = self.center_mesh()
        r2 = np.zeros(self.shape)
        for m in mesh:
            r2 += m * m
        return np.sqrt(r2)

    @property
    def reach(self) -> float:
        """Largest axis distance from the origin to a box face."""
        return max(max(abs(a), abs(b)) for a, b in zip(self.lo, self.hi))

    @property
    def circumradius(self) -> float:
        return math.sqrt(sum(max(a * a, b * b) for a, b in zip(self.lo, self.hi)))

    def same_grid(self, other: "Grid") -> bool:
        return (
            self.lo == other.lo
            and self.hi == other.hi
            and self.h == other.h
            and self.shape == other.shape
        )

    def window(self, lo_idx: Sequence[int], hi_idx: Sequence[int]) -> "Grid":
        """Aligned subgrid covering index range [lo_idx, hi_idx) per axis."""
        lo = tuple(self.lo[a] + lo_idx[a] * self.h for a in range(self.dim))
        hi = tuple(self.lo[a] + hi_idx[a] * self.h for a in range(self.dim))
        shape = tuple(hi_idx[a] - lo_idx[a] for a in range(self.dim))
        return Grid(lo, hi, self.h, shape, self.adjusted)

    def refined(self) -> "Grid":
        """Box scaled by 2 about the origin, h halved (stability reruns)."""
        lo = tuple(2.0 * v for v in self.lo)
        hi = tuple(2.0 * v for v in self.hi)
        return build_grid(Box(lo, hi), self.h / 2.0)

    def to_dict(self) -> dict:
        return {
            "lo": list(self.lo),
            "hi": list(self.hi),
            "h": self.h,
            "shape": list(self.shape),
            "adjusted": self.adjusted,
        }


def build_grid(box, h: float) -> Grid:
    """Build a grid over `box` (a Box or (lo, hi) pair) with spacing h.

    h must divide each edge to within a relative 1e-6; otherwise the node
    count is rounded, hi is pulled to lo + n*h, and the grid is flagged
    `adjusted`.  Axes with fewer than 3 cells are rejected.
    """
    if isinstance(box, Box):
        lo, hi = box.lo, box.hi
    else:
        lo, hi = _astuple(box[0]), _astuple(box[1])
    if h <= 0:
        raise ValueError(f"grid spacing must be positive, got {h}")
    if any(not math.isfinite(v) for v in lo + hi):
        raise ValueError("grid box must be finite")
    shape = []
    adjusted = False
    new_hi = []
    for a, (a_lo, a_hi) in enumerate(zip(lo, hi)):
        edge = a_hi - a_lo
        n = int(round(edge / h))
        if n < 3:
            raise ValueError(f"axis {a}: {n} cells at h={h}, need at least 3")
        if abs(n * h - edge) > 1e-6 * max(1.0, abs(edge)):
            adjusted = True
        shape.append(n)
        new_hi.append(a_lo + n * h)
    return Grid(tuple(lo), tuple(new_hi), float(h), tuple(shape), adjusted)


# ---------------------------------------------------------------------------
# fields


@dataclass
class DiscreteField:
    """Values on grid nodes.  +-inf is rejected unless allow_inf is set
    (only measure densities are allowed to carry inf)."""

    grid: Grid
    values: np.ndarray
    allow_inf: bool = field(default=False, repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.shape != self.grid.shape:
            raise ValueError(f"field shape {v.shape} != grid shape {self.grid.shape}")
        if np.isnan(v).any():
            raise ValueError("field contains NaN")
        if not self.allow_inf and np.isinf(v).any():
            raise ValueError("field contains inf (only measure densities may)")
        self.values = v

    def _check(self, other: "DiscreteField"):
        if not self.grid.same_grid(other.grid):
            raise GridMismatch("fields live on different grids")

    def __add__(self, other):
        if isinstance(other, DiscreteField):
            self._check(other)
            return DiscreteField(self.grid, self.values + other.values)
        return DiscreteField(self.grid, self.values + other)

    def __sub__(self, other):
        if isinstance(other, DiscreteField):
            self._check(other)
            return DiscreteField(self.grid, self.values - other.values)
        return DiscreteField(self.grid, self.values - other)

    def __mul__(self, scalar):
        return DiscreteField(self.grid, self.values * float(scalar))

    __rmul__ = __mul__

    def integral(self) -> float:
        return float(self.values.sum()) * self.grid.cell_volume

    def norm_l2(self) -> float:
        return float(np.sqrt((self.values**2).sum() * self.grid.cell_volume))

    def max(self) -> float:
        return float(self.values.max())

    def min(self) -> float:
        return float(self.values.min())


def constant_field(grid: Grid, value: float) -> DiscreteField:
    return DiscreteField(grid, np.full(grid.shape, float(value)))


def apply_neg_laplacian(u: DiscreteField, dirichlet_mask: np.ndarray | None = None) -> DiscreteField:
    """Five/seven-point -lap_h with homogeneous Dirichlet walls.

    Walls sit halfway between a node and any missing or masked neighbor
    (odd reflection), which keeps the operator second order up to the
    boundary.  Output is zero on masked nodes.
    """
    grid = u.grid
    if dirichlet_mask is None:
        dirichlet_mask = np.zeros(grid.shape, dtype=bool)
    mask = kernels.mask3d(dirichlet_mask)
    vals = kernels.as3d(u.values)
    pen = np.zeros_like(vals)
    out = np.zeros_like(vals)
    kernels.apply_operator(vals, pen, mask, grid.h * grid.h, 0.0, grid.dim, out)
    return DiscreteField(grid, out.reshape(grid.shape))
