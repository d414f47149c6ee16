"""Turn finite profiles into compactness verdicts.

A profile computed on a finite box can only ever witness a trend, so the
classifiers are deliberately conservative: they answer "diverges",
"bounded" or refuse ("inconclusive").  Three ways to call divergence, in
order of strength: the admissible set emptied out (+inf), the last value
cleared both a ratio against the start and an absolute floor, or the
profile grew monotonically with a sustained geometric step.  Decay and
L1 stabilization mirror these.

The final decision combines per-criterion verdicts: compact needs at
least one positive and no negative; a split between criteria is reported
as inconclusive with a warning rather than papered over.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from .geometry import Grid
from .measure import MeasureSpec
from .spectral import (
    DEFAULT_EIG_TOL,
    Profile,
    ball_probe_profile,
    box_mode_floor,
    cube_quotient_profile,
    tail_abscissa_profile,
)
from .torsion import default_radii, torsion_function

_TINY = 1e-300


@dataclass(frozen=True)
class Thresholds:
    """Classifier knobs; the defaults are tuned for 4-6 point geometric
    radius schedules, relaxed() for the slower nonlinear profiles."""

    flat_tol: float = 0.05         # spread of the last window counted as flat
    strong_ratio: float = 10.0     # last/first ratio for a strong call
    floor_factor: float = 1e3      # last must also clear floor_factor * scale floor
    sustained_tol: float = 0.08    # per-step geometric growth for the trend rule
    window: int = 3
    decay_floor: float = 1e-10     # below this a sup profile counts as vanished
    l1_stab_tol: float = 1e-4
    l1_grow_tol: float = 1e-3
    l1_incr_slack: float = 0.8     # increments may sag this much and still "grow"

    def relaxed(self) -> "Thresholds":
        return replace(
            self,
            flat_tol=0.10,
            strong_ratio=5.0,
            floor_factor=1e2,
            sustained_tol=0.04,
            l1_stab_tol=1e-3,
            l1_grow_tol=5e-3,
            l1_incr_slack=0.7,
        )


def classify_growth(values, floor: float, th: Thresholds | None = None):
    """Classify an increasing-radius profile that should diverge.

    Returns (classification, note).  floor is the problem's natural
    scale (empty-geometry bottom eigenvalue); the strong rule demands
    the last value clear floor_factor times it.
    """
    th = th or Thresholds()
    values = [float(v) for v in values]
    if not values:
        raise ValueError("empty profile")
    last = values[-1]
    if math.isinf(last):
        return "diverges_empty", "admissible set emptied out at the last radius"
    if any(math.isinf(v) for v in values):
        return "inconclusive", "infinite value before a finite one"
    first = values[0]
    if last >= th.strong_ratio * max(first, _TINY) and last >= th.floor_factor * max(floor, _TINY):
        return "diverges_strong", f"last value {last:.4g} cleared ratio and floor"
    w = th.window
    if len(values) >= w:
        tail = values[-w:]
        spread = max(tail) - min(tail)
        if spread <= th.flat_tol * max(abs(tail[-1]), _TINY):
            return "bounded_flat", f"last {w} values vary by {spread:.3g}"
    if len(values) >= w + 1:
        monotone = all(b >= a * (1.0 - 1e-12) for a, b in zip(values, values[1:]))
        ratios = [
            b / max(a, _TINY) for a, b in zip(values[-w - 1 : -1], values[-w:])
        ]
        if monotone and all(r >= 1.0 + th.sustained_tol for r in ratios):
            return "diverges_trend", f"monotone, last step ratios {[f'{r:.3f}' for r in ratios]}"
    return "inconclusive", "no rule fired"


def classify_decay(values, th: Thresholds | None = None):
    """Classify a sup-tail style profile that should vanish."""
    th = th or Thresholds()
    values = [float(v) for v in values]
    if not values:
        raise ValueError("empty profile")
    last = values[-1]
    if last <= th.decay_floor:
        return "decayed", f"last value {last:.3g} at or below the floor"
    w = th.window
    if len(values) >= w:
        tail = values[-w:]
        spread = max(tail) - min(tail)
        if spread <= th.flat_tol * max(abs(tail[-1]), _TINY):
            return "bounded_below", f"flat at {tail[-1]:.4g} over the last {w} radii"
    first = values[0]
    if first > 0 and last <= first / th.strong_ratio:
        return "decays_strong", f"dropped {first / max(last, _TINY):.3g}x from the first radius"
    if len(values) >= w + 1:
        monotone = all(b <= a * (1.0 + 1e-12) for a, b in zip(values, values[1:]))
        ratios = [
            b / max(a, _TINY) for a, b in zip(values[-w - 1 : -1], values[-w:])
        ]
        if monotone and all(r <= 1.0 / (1.0 + th.sustained_tol) for r in ratios):
            return "decays_trend", f"monotone, last step ratios {[f'{r:.3f}' for r in ratios]}"
    return "inconclusive", "no rule fired"


def classify_l1(l1_values, th: Thresholds | None = None):
    """Classify the exhaustion L1 profile: stabilized means the torsion
    function is summable, steadily growing increments mean it is not."""
    th = th or Thresholds()
    vals = [float(v) for v in l1_values]
    if len(vals) < 2:
        return "inconclusive", "need at least two radii"
    incr = [b - a for a, b in zip(vals, vals[1:])]
    rel_last = incr[-1] / max(abs(vals[-1]), _TINY)
    if rel_last < th.l1_stab_tol:
        return "stabilized", f"last relative increment {rel_last:.3g}"
    w = th.window
    if len(incr) >= w:
        tail = incr[-w:]
        sustained = all(b >= th.l1_incr_slack * a for a, b in zip(tail, tail[1:]))
        if sustained and rel_last > th.l1_grow_tol:
            return "growing", f"increments keep coming, last relative {rel_last:.3g}"
    return "inconclusive", "no rule fired"


_VERDICT = {
    "diverges_empty": "positive",
    "diverges_strong": "positive",
    "diverges_trend": "positive",
    "bounded_flat": "negative",
    "decayed": "positive",
    "decays_strong": "positive",
    "decays_trend": "positive",
    "bounded_below": "negative",
    "stabilized": "positive",
    "growing": "negative",
    "inconclusive": "inconclusive",
}


@dataclass
class CriterionReport:
    criterion: str
    verdict: str            # positive / negative / inconclusive
    classification: str
    note: str
    radii: list
    values: list

    def to_dict(self):
        enc = lambda v: v if math.isfinite(v) else "inf"
        return {
            "criterion": self.criterion,
            "verdict": self.verdict,
            "classification": self.classification,
            "note": self.note,
            "radii": list(self.radii),
            "values": [enc(float(v)) for v in self.values],
        }


def _report(criterion: str, profile: Profile, classification: str, note: str) -> CriterionReport:
    return CriterionReport(
        criterion=criterion,
        verdict=_VERDICT[classification],
        classification=classification,
        note=note,
        radii=profile.radii,
        values=profile.values,
    )


@dataclass
class DiagnoseConfig:
    radii: list | None = None
    ball_radius: float = 1.0
    cube_edge: float = 1.0
    solver_tol: float = 1e-10
    eig_tol: float = DEFAULT_EIG_TOL
    thresholds: Thresholds = field(default_factory=Thresholds)
    criteria: tuple = ("tail_sup", "tail_abscissa", "ball_probe", "cube_quotient")


@dataclass
class Diagnosis:
    target: str             # "l2" or "l1"
    decision: str           # compact / not_compact / inconclusive
    reports: list
    warnings: list
    grid: Grid = field(repr=False, default=None)

    def to_dict(self):
        return {
            "target": self.target,
            "decision": self.decision,
            "reports": [r.to_dict() for r in self.reports],
            "warnings": list(self.warnings),
            "grid": self.grid.to_dict() if self.grid is not None else None,
        }


def _decide(reports) -> tuple[str, list]:
    warnings = []
    pos = [r.criterion for r in reports if r.verdict == "positive"]
    neg = [r.criterion for r in reports if r.verdict == "negative"]
    if pos and neg:
        warnings.append(
            "criteria disagree: positive " + ",".join(pos) + " vs negative " + ",".join(neg)
        )
        return "inconclusive", warnings
    if pos:
        return "compact", warnings
    if neg:
        return "not_compact", warnings
    return "inconclusive", warnings


def diagnose_l2(measure: MeasureSpec, grid: Grid, config: DiagnoseConfig | None = None) -> Diagnosis:
    """Run the L2 compactness criteria and combine their verdicts.

    Four independent looks at the same question: does the torsion
    function vanish at infinity (sup tail), does the spectrum blow up
    on ball complements, on far small balls, and in far cubes.
    """
    cfg = config or DiagnoseConfig()
    th = cfg.thresholds
    radii = list(cfg.radii) if cfg.radii is not None else default_radii(grid, count=5, cap=0.7)
    reports = []
    if "tail_sup" in cfg.criteria:
        tors = torsion_function(measure, grid, radii, tol=cfg.solver_tol)
        cls, note = classify_decay(tors.sup_tail, th)
        prof = Profile(radii, tors.sup_tail, "tail_sup")
        reports.append(_report("tail_sup_decay", prof, cls, note))
    if "tail_abscissa" in cfg.criteria:
        prof = tail_abscissa_profile(measure, grid, radii, tol=cfg.eig_tol)
        cls, note = classify_growth(prof.values, 1.0 + box_mode_floor(grid), th)
        reports.append(_report("tail_abscissa_growth", prof, cls, note))
    if "ball_probe" in cfg.criteria:
        prof = ball_probe_profile(measure, grid, radii, cfg.ball_radius, tol=cfg.eig_tol)
        floor = 1.0 + grid.dim * (math.pi / (2.0 * cfg.ball_radius)) ** 2
        cls, note = classify_growth(prof.values, floor, th)
        reports.append(_report("ball_probe_growth", prof, cls, note))
    if "cube_quotient" in cfg.criteria:
        prof = cube_quotient_profile(measure, grid, radii, cfg.cube_edge)
        floor = grid.dim * (math.pi / cfg.cube_edge) ** 2
        cls, note = classify_growth(prof.values, floor, th)
        reports.append(_report("cube_quotient_growth", prof, cls, note))
    decision, warnings = _decide(reports)
    return Diagnosis("l2", decision, reports, warnings, grid)


def diagnose_l1(measure: MeasureSpec, grid: Grid, config: DiagnoseConfig | None = None) -> Diagnosis:
    """L1 compactness via summability of the torsion function.

    The exhaustion L1 norms stabilize exactly when the torsion function
    is summable, which characterizes the L1 continuous (hence compact)
    case.  Note this is strictly stronger than the L2 criteria: profiles
    that pass diagnose_l2 can and do fail here.
    """
    cfg = config or DiagnoseConfig()
    radii = list(cfg.radii) if cfg.radii is not None else default_radii(grid, count=5, cap=0.7)
    tors = torsion_function(measure, grid, radii, tol=cfg.solver_tol)
    cls, note = classify_l1(tors.l1_norms, cfg.thresholds)
    prof = Profile(radii, tors.l1_norms, "l1_norms")
    reports = [_report("torsion_l1_stabilization", prof, cls, note)]
    decision, warnings = _decide(reports)
    return Diagnosis("l1", decision, reports, warnings, grid)


@dataclass
class CrossCheck:
    base: Diagnosis
    refined: Diagnosis
    agree: bool
    warnings: list

    def to_dict(self):
        return {
            "base": self.base.to_dict(),
            "refined": self.refined.to_dict(),
            "agree": self.agree,
            "warnings": list(self.warnings),
        }


def cross_check(
    measure: MeasureSpec, grid: Grid, config: DiagnoseConfig | None = None, target: str = "l2"
) -> CrossCheck:
    """Re-run the diagnosis on a twice larger, twice finer grid.

    A verdict that flips under refinement is the classic signature of
    geometry living below the grid scale (slits narrower than h, thin
    necks), so the disagreement itself is the finding.
    """
    run = diagnose_l2 if target == "l2" else diagnose_l1
    base = run(measure, grid, config)
    fine_cfg = config
    if config is not None and config.radii is not None:
        fine_cfg = replace(config, radii=[2.0 * r for r in config.radii])
    refined = run(measure, grid.refined(), fine_cfg)
    warnings = list(base.warnings) + list(refined.warnings)
    agree = base.decision == refined.decision
    if not agree:
        warnings.append(
            f"decision changed under refinement: {base.decision} -> {refined.decision}; "
            "suspect sub-grid geometry (slits or necks near or below h)"
        )
    return CrossCheck(base, refined, agree, warnings)
