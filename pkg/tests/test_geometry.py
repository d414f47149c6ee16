"""Regions, grids and discrete fields."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from torsio.geometry import (
    Ball,
    Box,
    Complement,
    DiscreteField,
    Grid,
    GridMismatch,
    HalfOpenCube,
    Intersection,
    SlitStrip,
    Union,
    apply_neg_laplacian,
    build_grid,
    constant_field,
    everything,
    region_from_dict,
)

INF = float("inf")


def test_ball_membership_is_open():
    b = Ball((1.0, 0.0), 2.0)
    pts = np.array([[1.0, 0.0], [3.0, 0.0], [3.1, 0.0], [1.0, 1.9]])
    np.testing.assert_array_equal(b.contains_points(pts), [True, False, False, True])


def test_box_with_infinite_faces():
    strip = Box((-INF, 0.0), (INF, 1.0))
    pts = np.array([[1e9, 0.5], [0.0, -0.1], [0.0, 1.1]])
    np.testing.assert_array_equal(strip.contains_points(pts), [True, False, False])


def test_half_open_cube_excludes_far_faces():
    c = HalfOpenCube((0.0, 0.0), 1.0)
    pts = np.array([[0.0, 0.0], [0.999, 0.999], [1.0, 0.5], [0.5, 1.0]])
    np.testing.assert_array_equal(c.contains_points(pts), [True, True, False, False])


def test_boolean_regions_compose():
    left = Ball((-1.0, 0.0), 1.5)
    right = Ball((1.0, 0.0), 1.5)
    u = Union((left, right))
    i = Intersection((left, right))
    c = Complement(left)
    pts = np.array([[-1.0, 0.0], [1.0, 0.0], [0.0, 0.0], [5.0, 5.0]])
    np.testing.assert_array_equal(u.contains_points(pts), [True, True, True, False])
    np.testing.assert_array_equal(i.contains_points(pts), [False, False, True, False])
    np.testing.assert_array_equal(c.contains_points(pts), [False, True, False, True])


def test_slit_strip_blocks_at_slits_only():
    s = SlitStrip(0.0, 10.0, (0.0,), (1.0,), (2.0, 5.0), 0.1)
    pts = np.array(
        [
            [1.0, 0.5],    # plain strip interior
            [2.0, 0.5],    # on a slit, interior of the gap? slit spans full height
            [2.2, 0.5],    # past the slit half-width
            [5.0, 0.99],
            [-0.5, 0.5],   # before the strip
            [11.0, 0.5],   # past the strip
        ]
    )
    got = s.contains_points(pts)
    assert got[0] and got[2]
    assert not got[1] and not got[3]
    assert not got[4] and not got[5]


def test_region_dict_round_trip():
    regions = [
        Ball((0.0, 1.0), 2.0),
        Box((-INF, 0.0), (1.0, INF)),
        HalfOpenCube((0.0, 0.0), 0.5),
        Union((Ball((0.0, 0.0), 1.0), Ball((2.0, 0.0), 1.0))),
        Intersection((Ball((0.0, 0.0), 1.0), Box((0.0, 0.0), (1.0, 1.0)))),
        Complement(Ball((0.0, 0.0), 1.0)),
        SlitStrip(0.0, INF, (0.0,), (1.0,), (1.0, 2.0), 0.05),
    ]
    pts = np.array([[0.3, 0.4], [1.5, 0.2], [-2.0, 3.0]])
    for r in regions:
        back = region_from_dict(r.to_dict())
        assert type(back) is type(r)
        np.testing.assert_array_equal(back.contains_points(pts), r.contains_points(pts))


def test_everything_contains_everything():
    pts = np.array([[1e12, -1e12], [0.0, 0.0]])
    assert everything(2).contains_points(pts).all()


def test_build_grid_cell_centers():
    g = build_grid(Box((0.0,), (1.0,)), 0.25)
    assert g.shape == (4,)
    np.testing.assert_allclose(g.axis_centers(0), [0.125, 0.375, 0.625, 0.875])
    assert not g.adjusted
    assert g.cell_volume == pytest.approx(0.25)


def test_build_grid_adjusts_awkward_spacing():
    g = build_grid(Box((0.0,), (1.0,)), 0.3)
    assert g.adjusted
    assert g.shape[0] >= 3
    assert g.hi[0] == pytest.approx(g.lo[0] + g.shape[0] * g.h)


def test_build_grid_rejects_degenerate_boxes():
    with pytest.raises(ValueError):
        build_grid(Box((0.0,), (INF,)), 0.1)
    with pytest.raises(ValueError):
        build_grid(Box((0.0, 0.0), (1.0, 1.0)), 0.6)  # fewer than 3 cells per axis


def test_grid_window_preserves_alignment():
    g = build_grid(Box((-1.0, -1.0), (1.0, 1.0)), 0.25)
    w = g.window((2, 2), (6, 6))
    assert w.shape == (4, 4)
    np.testing.assert_allclose(w.axis_centers(0), g.axis_centers(0)[2:6])


def test_grid_refined_doubles_box_and_halves_h():
    g = build_grid(Box((-1.0, -2.0), (1.0, 2.0)), 0.25)
    r = g.refined()
    assert r.lo == (-2.0, -4.0)
    assert r.hi == (2.0, 4.0)
    assert r.h == pytest.approx(0.125)


def test_node_radii_and_reach():
    g = build_grid(Box((-1.0, -1.0), (1.0, 1.0)), 0.5)
    assert g.reach == pytest.approx(1.0)
    assert g.circumradius == pytest.approx(math.sqrt(2.0))
    r = g.node_radii()
    assert r.shape == g.shape
    assert r.min() == pytest.approx(math.sqrt(2 * 0.25**2))


def test_field_arithmetic_and_norms():
    g = build_grid(Box((0.0,), (1.0,)), 0.25)
    a = constant_field(g, 2.0)
    b = DiscreteField(g, np.arange(4, dtype=float))
    s = a + b
    np.testing.assert_allclose(s.values, [2, 3, 4, 5])
    assert (a - a).norm_l2() == 0.0
    assert a.integral() == pytest.approx(2.0)
    assert (a * 3).max() == pytest.approx(6.0)
    assert b.min() == 0.0
    # integral weights by cell volume
    assert b.integral() == pytest.approx(0.25 * (0 + 1 + 2 + 3))


def test_field_grid_mismatch_raises():
    g1 = build_grid(Box((0.0,), (1.0,)), 0.25)
    g2 = build_grid(Box((0.0,), (1.0,)), 0.125)
    with pytest.raises(GridMismatch):
        _ = constant_field(g1, 1.0) + constant_field(g2, 1.0)


def test_neg_laplacian_of_quadratic_is_constant_inside():
    # u = x^2 has -u'' = -2; walls pollute only the outermost nodes
    g = build_grid(Box((0.0,), (1.0,)), 1 / 32)
    x = g.axis_centers(0)
    u = DiscreteField(g, x**2)
    lap = apply_neg_laplacian(u)
    np.testing.assert_allclose(lap.values[1:-1], -2.0, atol=1e-9)


@settings(max_examples=30, deadline=None)
@given(
    cx=st.floats(-3, 3),
    cy=st.floats(-3, 3),
    r=st.floats(0.1, 2.5),
)
def test_ball_cell_intersects_is_outer_bound_for_membership(cx, cy, r):
    # any cell whose center lies in the ball must report an intersection
    b = Ball((cx, cy), r)
    g = build_grid(Box((-4.0, -4.0), (4.0, 4.0)), 0.5)
    centers = g.centers()
    inside = b.contains_points(centers)
    cell_lo = centers - 0.25
    cell_hi = centers + 0.25
    hit = b.cell_intersects(cell_lo, cell_hi)
    assert not np.any(inside & ~hit)
