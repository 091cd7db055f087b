import math

import pytest
from hypothesis import given, strategies as st

from planground.geometry import (
    EPS,
    Rect,
    angle_difference,
    segment_crosses_rect_interior,
    wrap_angle,
)

TAU = 2 * math.pi


def test_wrap_angle_basics():
    assert wrap_angle(0.0) == 0.0
    assert wrap_angle(TAU) == pytest.approx(0.0, abs=1e-12)
    assert wrap_angle(-math.pi / 2) == pytest.approx(3 * math.pi / 2)
    assert wrap_angle(5 * TAU + 1.0) == pytest.approx(1.0)


@given(st.floats(-100.0, 100.0))
def test_wrap_angle_range(theta):
    w = wrap_angle(theta)
    assert 0.0 <= w < TAU


def test_angle_difference_signed():
    assert angle_difference(0.1, 0.1) == pytest.approx(0.0)
    assert angle_difference(0.5, 0.1) == pytest.approx(0.4)
    assert angle_difference(0.1, 0.5) == pytest.approx(-0.4)
    # Wraps across 0/2pi to the short way around.
    assert angle_difference(0.1, TAU - 0.1) == pytest.approx(0.2)
    assert abs(angle_difference(0.0, math.pi)) == pytest.approx(math.pi)


@given(st.floats(-20.0, 20.0), st.floats(-20.0, 20.0))
def test_angle_difference_bounds(a, b):
    d = angle_difference(a, b)
    assert -math.pi < d <= math.pi + 1e-12


def test_rect_contains_closed_vs_open():
    r = Rect(0.0, 0.0, 2.0, 1.0)
    assert r.contains(0.0, 0.0)
    assert r.contains(2.0, 1.0)
    assert not r.contains(2.0 + 1e-6, 1.0)
    # strictly_contains excludes the boundary
    assert not r.strictly_contains(0.0, 0.5)
    assert not r.strictly_contains(2.0, 1.0)
    assert r.strictly_contains(1.0, 0.5)


def test_rect_validity_and_nesting():
    assert Rect(0, 0, 1, 1).is_valid()
    assert not Rect(0, 0, 0, 1).is_valid()
    assert not Rect(1, 0, 0, 1).is_valid()
    outer = Rect(0, 0, 5, 5)
    assert outer.contains_rect(Rect(1, 1, 2, 2))
    assert outer.contains_rect(Rect(0, 0, 5, 5))
    assert not outer.contains_rect(Rect(4, 4, 6, 5))


def test_rect_dict_round_trip():
    r = Rect(0.5, 1.5, 2.25, 3.0)
    assert Rect.from_dict(r.to_dict()) == r


def test_segment_crossing_through_interior():
    box = Rect(1.0, 1.0, 2.0, 2.0)
    assert segment_crosses_rect_interior((0.0, 1.5), (3.0, 1.5), box)
    assert segment_crosses_rect_interior((1.5, 0.0), (1.5, 3.0), box)
    # diagonal through the middle
    assert segment_crosses_rect_interior((0.0, 0.0), (3.0, 3.0), box)


def test_segment_missing_or_grazing():
    box = Rect(1.0, 1.0, 2.0, 2.0)
    assert not segment_crosses_rect_interior((0.0, 0.0), (0.5, 3.0), box)
    # sliding along an edge only touches the boundary
    assert not segment_crosses_rect_interior((0.0, 1.0), (3.0, 1.0), box)
    # touching a single corner
    assert not segment_crosses_rect_interior((0.0, 2.0), (2.0, 0.0), box)


def test_segment_endpoint_inside_counts():
    box = Rect(1.0, 1.0, 2.0, 2.0)
    assert segment_crosses_rect_interior((1.5, 1.5), (5.0, 5.0), box)
    assert segment_crosses_rect_interior((0.0, 1.5), (1.5, 1.5), box)


def test_segment_degenerate_cases():
    box = Rect(1.0, 1.0, 2.0, 2.0)
    # zero-length segment outside and clip spans below EPS
    assert not segment_crosses_rect_interior((0.0, 0.0), (0.0, 0.0), box)
    assert not segment_crosses_rect_interior((1.0, 1.0), (1.0 + EPS / 10, 1.0), box)
