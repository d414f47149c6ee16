"""Profile classifiers on synthetic data, then whole-measure verdicts."""

import json
import math

from torsio.diagnostics import (
    DiagnoseConfig,
    Thresholds,
    classify_decay,
    classify_growth,
    classify_l1,
    cross_check,
    diagnose_l1,
    diagnose_l2,
)
from torsio.geometry import Ball, Box, build_grid
from torsio.measure import InfinityOutside, Potential, Zero

INF = float("inf")


# -- growth ----------------------------------------------------------------

def test_growth_empty_tail_is_strongest_call():
    cls, _ = classify_growth([2.0, 5.0, INF], floor=1.0)
    assert cls == "diverges_empty"


def test_growth_infinite_then_finite_is_suspicious():
    cls, _ = classify_growth([INF, 5.0, 6.0], floor=1.0)
    assert cls == "inconclusive"


def test_growth_strong_needs_ratio_and_floor():
    # clears 10x the start and 1e3x the floor
    cls, _ = classify_growth([1.0, 4.0, 2000.0], floor=1.0)
    assert cls == "diverges_strong"
    # same shape but a floor it cannot clear
    cls, _ = classify_growth([1.0, 4.0, 2000.0], floor=10.0)
    assert cls != "diverges_strong"


def test_growth_flat_profile_is_bounded():
    cls, _ = classify_growth([5.0, 5.1, 5.05, 5.08], floor=1.0)
    assert cls == "bounded_flat"


def test_growth_sustained_trend():
    vals = [1.0, 1.2, 1.45, 1.75, 2.1]  # step ratios about 1.2
    cls, _ = classify_growth(vals, floor=1.0)
    assert cls == "diverges_trend"


def test_growth_stalling_trend_refuses():
    # monotone, but the last step ratio sags below the sustained bar
    # while the tail is still too spread out to read as flat
    vals = [1.0, 1.5, 1.8, 2.0, 2.1]
    cls, _ = classify_growth(vals, floor=1.0)
    assert cls == "inconclusive"


def test_growth_nonmonotone_trend_refuses():
    vals = [1.0, 2.0, 1.5, 2.5, 3.5]
    cls, _ = classify_growth(vals, floor=1.0)
    assert cls == "inconclusive"


# -- decay -----------------------------------------------------------------

def test_decay_floor_hit():
    cls, _ = classify_decay([0.5, 1e-3, 1e-12])
    assert cls == "decayed"


def test_decay_strong_ratio():
    cls, _ = classify_decay([0.8, 0.3, 0.05])
    assert cls == "decays_strong"


def test_decay_flat_profile_is_bounded_below():
    cls, _ = classify_decay([0.5, 0.49, 0.5, 0.495])
    assert cls == "bounded_below"


def test_decay_trend():
    cls, _ = classify_decay([0.8, 0.64, 0.5, 0.4, 0.32])
    assert cls == "decays_trend"


def test_flat_beats_strong_when_profile_plateaus():
    # dropped 10x long ago but flat since: bounded below wins
    cls, _ = classify_decay([1.0, 0.05, 0.051, 0.0505])
    assert cls == "bounded_below"


# -- l1 --------------------------------------------------------------------

def test_l1_stabilized():
    cls, _ = classify_l1([1.0, 1.5, 1.50001])
    assert cls == "stabilized"


def test_l1_growing():
    cls, _ = classify_l1([1.0, 2.0, 3.0, 4.0, 5.0])
    assert cls == "growing"


def test_l1_sagging_increments_refuse():
    cls, _ = classify_l1([1.0, 2.0, 2.5, 2.6, 2.65])
    assert cls == "inconclusive"


def test_l1_short_profile_refuses():
    cls, _ = classify_l1([1.0])
    assert cls == "inconclusive"


def test_relaxed_thresholds_are_strictly_looser():
    a = Thresholds()
    b = a.relaxed()
    assert b.flat_tol > a.flat_tol
    assert b.strong_ratio < a.strong_ratio
    assert b.floor_factor < a.floor_factor
    assert b.sustained_tol < a.sustained_tol
    assert b.l1_stab_tol > a.l1_stab_tol


# -- full diagnosis ---------------------------------------------------------

def test_bounded_domain_is_l2_and_l1_compact():
    grid = build_grid(Box((-6.0, -6.0), (6.0, 6.0)), 1 / 8)
    dom = InfinityOutside(Ball((0.0, 0.0), 1.5))
    d2 = diagnose_l2(dom, grid)
    assert d2.decision == "compact"
    assert not d2.warnings
    d1 = diagnose_l1(dom, grid)
    assert d1.decision == "compact"


def test_plain_strip_is_not_l2_compact():
    grid = build_grid(Box((-10.0, -10.0), (10.0, 10.0)), 1 / 4)
    strip = InfinityOutside(Box((-INF, -0.5), (INF, 0.5)))
    d2 = diagnose_l2(strip, grid)
    assert d2.decision == "not_compact"


def test_zero_measure_verdicts():
    grid = build_grid(Box((-10.0, -10.0), (10.0, 10.0)), 1 / 4)
    d2 = diagnose_l2(Zero(), grid)
    # the torsion tail cannot vanish, so at minimum sup-tail votes against
    rep = next(r for r in d2.reports if r.criterion == "tail_sup_decay")
    assert rep.classification == "bounded_below"
    assert d2.decision != "compact"
    d1 = diagnose_l1(Zero(), grid)
    assert d1.decision == "not_compact"


def test_growing_potential_is_l2_compact():
    grid = build_grid(Box((-12.0, -12.0), (12.0, 12.0)), 1 / 4)
    d2 = diagnose_l2(Potential("x1^2 + x2^2"), grid)
    assert d2.decision == "compact"


def test_criteria_subset_is_respected():
    grid = build_grid(Box((-6.0, -6.0), (6.0, 6.0)), 1 / 8)
    cfg = DiagnoseConfig(criteria=("tail_sup",))
    d = diagnose_l2(InfinityOutside(Ball((0.0, 0.0), 1.5)), grid, cfg)
    assert len(d.reports) == 1
    assert d.reports[0].criterion == "tail_sup_decay"


def test_cross_check_agrees_on_stable_geometry():
    grid = build_grid(Box((-5.0, -5.0), (5.0, 5.0)), 1 / 4)
    cfg = DiagnoseConfig(criteria=("cube_quotient",))
    chk = cross_check(Zero(), grid, cfg)
    assert chk.agree
    assert chk.base.decision == chk.refined.decision == "not_compact"
    assert not chk.warnings


def test_reports_serialize_with_infinities():
    grid = build_grid(Box((-6.0, -6.0), (6.0, 6.0)), 1 / 8)
    d = diagnose_l2(InfinityOutside(Ball((0.0, 0.0), 1.0)), grid)
    payload = d.to_dict()
    assert payload["decision"] == "compact"
    vals = [v for rep in payload["reports"] for v in rep["values"]]
    assert any(v == "inf" for v in vals)  # emptied tails are encoded as text
    for v in vals:
        assert v == "inf" or (isinstance(v, float) and math.isfinite(v))
    json.dumps(payload, allow_nan=False)
