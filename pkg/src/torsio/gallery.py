"""Named measure presets with known compactness verdicts.

Each preset fixes a measure, a grid box and spacing sized so the default
diagnosis resolves it, and the expected L2/L1 decisions.  The expected
values are what the diagnosis is supposed to produce at the default
settings, so running the gallery doubles as the regression suite for
the whole pipeline: geometry, rasterization, solvers, classifiers.

Preset geometry is chosen to keep every relevant length at least one
cell wide (slit bands, horns, small squares) and every box roughly three
times the structure it contains, so profiles have room to move before
the outer wall bends them.  Two presets are honest about desk-scale
limits: their torsion functions are summable in principle, but the
increments decay polynomially and do not stabilize inside any feasible
box, so the expected L1 decision is inconclusive by design.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .diagnostics import DiagnoseConfig, diagnose_l1, diagnose_l2
from .geometry import Box, Grid, HalfOpenCube, SlitStrip, Union, build_grid
from .measure import InfinityOutside, MeasureSpec, Potential, Zero

INF = float("inf")


@dataclass(frozen=True)
class Preset:
    name: str
    dim: int
    expected_l2: str
    expected_l1: str
    rationale: str
    box: tuple
    h: float
    build: object = field(repr=False)
    # radius schedule override; the default geometric ladder spends its
    # rungs low, which wastes resolution on steep exponential tails
    radii: tuple | None = None

    def measure(self) -> MeasureSpec:
        return self.build()

    def grid(self, refine: bool = False) -> Grid:
        g = build_grid(Box(*self.box), self.h)
        return g.refined() if refine else g

    def to_dict(self):
        return {
            "name": self.name,
            "dim": self.dim,
            "expected_l2": self.expected_l2,
            "expected_l1": self.expected_l1,
            "rationale": self.rationale,
            "box": [list(self.box[0]), list(self.box[1])],
            "h": self.h,
            "radii": list(self.radii) if self.radii else None,
            "measure": self.measure().to_dict(),
        }


def _zero():
    return Zero()


def _bounded_domain():
    from .geometry import Ball

    return InfinityOutside(Ball((0.0, 0.0), 2.0))


def _plain_strip():
    return InfinityOutside(Box((-INF, 0.0), (INF, 1.0)))


def _log_slits():
    # stop once the gaps shrink to three slit widths: beyond that the
    # slits merge into a solid wall anyway, so the strip honestly ends
    width = 0.02
    slits = []
    n = 1
    while True:
        gap = math.log(1.0 + 1.0 / n)
        if gap < 3.0 * width:
            break
        slits.append(math.log(1.0 + n))
        n += 1
    x_hi = math.log(1.0 + n)
    return InfinityOutside(
        SlitStrip(0.0, x_hi, (0.0,), (1.0,), tuple(slits), width)
    )


def _tuned_slits():
    # slits at n^0.8: compartments shrink like 0.8 n^(-0.2), so the local
    # eigenvalue climbs while the per-compartment torsion mass decays
    # only like n^(-0.6), whose sum diverges: the two verdicts split
    slits = []
    n = 1
    while n**0.8 <= 41.0:
        slits.append(n**0.8)
        n += 1
    return InfinityOutside(
        SlitStrip(0.0, INF, (0.0,), (1.0,), tuple(slits), 0.05)
    )


def _vanishing_volume():
    boxes = []
    for n in range(-15, 16):
        w = 1.0 / (1.0 + abs(n))
        boxes.append(Box((float(n), -w), (float(n + 1), w)))
    return InfinityOutside(Union(tuple(boxes)))


def _finite_measure():
    squares = []
    for n in range(-7, 8):
        s = (1.0 + abs(n)) ** -0.75
        squares.append(HalfOpenCube((2.0 * n - 0.5 * s, -0.5 * s), s))
    return InfinityOutside(Union(tuple(squares)))


def _growing_potential():
    return Potential("x1^2 + x2^2")


def _axes_potential():
    return Potential("abs(x1) * abs(x2)")


def _inverse_summable():
    return Potential("exp(sqrt(x1^2 + x2^2))")


PRESETS = {
    p.name: p
    for p in [
        Preset(
            name="zero",
            dim=2,
            expected_l2="not_compact",
            expected_l1="not_compact",
            rationale="free space: translated bumps go weakly to zero with no "
            "norm convergence, and the torsion function is flat near 1",
            box=((-10.0, -10.0), (10.0, 10.0)),
            h=1.0 / 8.0,
            build=_zero,
        ),
        Preset(
            name="bounded_domain",
            dim=2,
            expected_l2="compact",
            expected_l1="compact",
            rationale="a disk: every tail quantity empties out once the radius "
            "passes the boundary, the strongest possible positive signal",
            box=((-6.0, -6.0), (6.0, 6.0)),
            h=1.0 / 16.0,
            build=_bounded_domain,
        ),
        Preset(
            name="plain_strip",
            dim=2,
            expected_l2="not_compact",
            expected_l1="not_compact",
            rationale="an unbroken strip is translation invariant along its "
            "axis; all profiles go flat at the cross-section values",
            box=((-20.0, -1.0), (20.0, 2.0)),
            h=1.0 / 16.0,
            build=_plain_strip,
        ),
        Preset(
            name="slit_strip_log",
            dim=2,
            expected_l2="compact",
            expected_l1="compact",
            rationale="slits at log(1+n) shrink the compartments so fast the "
            "strip effectively terminates; both embeddings come out compact",
            box=((-1.0, -0.5), (9.0, 1.5)),
            h=1.0 / 64.0,
            build=_log_slits,
        ),
        Preset(
            name="slit_strip_tuned",
            dim=2,
            expected_l2="compact",
            expected_l1="not_compact",
            rationale="slits at n^0.8: compartment eigenvalues grow like "
            "sqrt(x), so L2 compactness holds, but the torsion mass keeps "
            "arriving and its integral diverges, so the L1 embedding is not "
            "even continuous",
            box=((-1.0, -0.5), (40.0, 1.5)),
            h=1.0 / 32.0,
            build=_tuned_slits,
        ),
        Preset(
            name="vanishing_volume",
            dim=2,
            expected_l2="compact",
            expected_l1="inconclusive",
            rationale="a horn of boxes with heights 1/(1+|n|): local volume "
            "vanishes, which forces compactness in L2; the torsion integral "
            "converges in principle but only as a slow polynomial tail, so "
            "the L1 increments never stabilize inside a feasible box",
            box=((-16.0, -1.25), (16.0, 1.25)),
            h=1.0 / 16.0,
            build=_vanishing_volume,
        ),
        Preset(
            name="finite_measure",
            dim=2,
            expected_l2="compact",
            expected_l1="inconclusive",
            rationale="disjoint squares with summable area: finite total "
            "volume gives L2 compactness; the L1 profile has the same slow "
            "polynomial tail as the horn and stays inconclusive at this size",
            box=((-16.0, -0.75), (16.0, 0.75)),
            h=1.0 / 16.0,
            build=_finite_measure,
        ),
        Preset(
            name="growing_potential",
            dim=2,
            expected_l2="compact",
            expected_l1="not_compact",
            rationale="V = |x|^2 grows at infinity, so localized states cost "
            "unbounded energy (compact in L2); but w ~ 1/V is not summable "
            "in the plane, so the L1 embedding fails",
            box=((-12.0, -12.0), (12.0, 12.0)),
            h=1.0 / 8.0,
            build=_growing_potential,
        ),
        Preset(
            name="axes_potential",
            dim=2,
            expected_l2="compact",
            expected_l1="not_compact",
            rationale="V = |x1 x2| vanishes on the axes yet still confines: "
            "far out along an axis the transverse well steepens and the "
            "local eigenvalue grows like R^(2/3)",
            box=((-16.0, -16.0), (16.0, 16.0)),
            h=1.0 / 8.0,
            build=_axes_potential,
        ),
        Preset(
            name="inverse_summable",
            dim=2,
            expected_l2="compact",
            expected_l1="compact",
            rationale="V = exp(|x|): the reciprocal of the potential is "
            "summable, the torsion function inherits that, and both "
            "embeddings are compact with strong margins; the top-heavy "
            "radius schedule puts two rungs past the knee of the "
            "exponential tail so the mass profile visibly stabilizes",
            box=((-18.0, -18.0), (18.0, 18.0)),
            h=1.0 / 8.0,
            radii=(2.0, 4.0, 8.0, 13.0, 16.0),
            build=_inverse_summable,
        ),
    ]
}


def preset_names() -> list:
    return list(PRESETS)


def preset(name: str) -> Preset:
    try:
        return PRESETS[name]
    except KeyError:
        raise KeyError(
            f"unknown preset {name!r}; known: {', '.join(PRESETS)}"
        ) from None


def run_preset(name: str, *, refine: bool = False, config: DiagnoseConfig | None = None) -> dict:
    """Diagnose one preset and compare against its expected verdicts."""
    p = preset(name)
    grid = p.grid(refine=refine)
    if config is None and p.radii is not None:
        radii = [2.0 * r for r in p.radii] if refine else list(p.radii)
        config = DiagnoseConfig(radii=radii)
    measure = p.measure()
    l2 = diagnose_l2(measure, grid, config)
    l1 = diagnose_l1(measure, grid, config)
    record = {
        "preset": p.to_dict(),
        "refined": refine,
        "grid": grid.to_dict(),
        "l2": l2.to_dict(),
        "l1": l1.to_dict(),
        "expected_l2": p.expected_l2,
        "expected_l1": p.expected_l1,
        "l2_matches": l2.decision == p.expected_l2,
        "l1_matches": l1.decision == p.expected_l1,
    }
    record["ok"] = record["l2_matches"] and record["l1_matches"]
    return record


def run_gallery(names=None, *, refine: bool = False, config: DiagnoseConfig | None = None) -> dict:
    """Run several presets (all by default); the gallery artifact."""
    names = list(names) if names else preset_names()
    records = [run_preset(n, refine=refine, config=config) for n in names]
    return {
        "records": records,
        "all_ok": all(r["ok"] for r in records),
        "names": names,
        "refined": refine,
    }
