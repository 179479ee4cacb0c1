import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from glucoread.geometry import (
    BoundingBox,
    Detection,
    edge_distance,
    horizontal_match,
    iou,
    validate_detections,
)

from conftest import box, det


def boxes(min_side=0.0):
    def build(x0, y0, w, h):
        x0, y0 = x0 * (1 - w), y0 * (1 - h)
        return BoundingBox(x0, y0, x0 + w, y0 + h)

    side = st.floats(min_side, 1.0, allow_nan=False, allow_infinity=False)
    unit = st.floats(0.0, 1.0, allow_nan=False, allow_infinity=False)
    return st.builds(build, unit, unit, side, side)


class TestBoundingBox:
    def test_valid_box_properties(self):
        b = box(0.1, 0.2, 0.5, 0.8)
        assert b.width == pytest.approx(0.4)
        assert b.height == pytest.approx(0.6)
        assert b.area == pytest.approx(0.24)

    @pytest.mark.parametrize(
        "coords",
        [
            (-0.1, 0.0, 0.5, 0.5),
            (0.0, 0.0, 1.2, 0.5),
            (0.5, 0.0, 0.4, 0.5),  # inverted x
            (0.0, 0.6, 0.5, 0.5),  # inverted y
            (math.nan, 0.0, 0.5, 0.5),
            (math.inf, 0.0, 0.5, 0.5),
        ],
    )
    def test_rejects_bad_coordinates(self, coords):
        with pytest.raises(ValueError):
            BoundingBox(*coords)

    def test_degenerate_box_allowed(self):
        assert box(0.3, 0.3, 0.3, 0.3).area == 0.0


class TestDetection:
    def test_rejects_unknown_label(self):
        with pytest.raises(ValueError):
            det("x", 0.5, 0, 0, 0.1, 0.1)

    @pytest.mark.parametrize("conf", [-0.01, 2.01])
    def test_rejects_out_of_range_confidence(self, conf):
        with pytest.raises(ValueError):
            det("1", conf, 0, 0, 0.1, 0.1)

    def test_fused_confidence_up_to_two_allowed(self):
        assert det("1", 2.0, 0, 0, 0.1, 0.1).confidence == 2.0


class TestIou:
    def test_frozen_example_one_seventh(self):
        # inter = 0.1*0.1 = 0.01, union = 0.04 + 0.04 - 0.01 = 0.07
        a = box(0.0, 0.0, 0.2, 0.2)
        b = box(0.1, 0.1, 0.3, 0.3)
        assert iou(a, b) == pytest.approx(1 / 7)

    def test_disjoint_is_zero(self):
        assert iou(box(0, 0, 0.1, 0.1), box(0.5, 0.5, 0.6, 0.6)) == 0.0

    def test_touching_edges_is_zero(self):
        assert iou(box(0, 0, 0.1, 0.1), box(0.1, 0, 0.2, 0.1)) == 0.0

    def test_identical_is_one(self):
        b = box(0.2, 0.2, 0.4, 0.5)
        assert iou(b, b) == pytest.approx(1.0)

    def test_zero_area_against_itself_is_zero(self):
        b = box(0.3, 0.3, 0.3, 0.3)
        assert iou(b, b) == 0.0

    @given(boxes(), boxes())
    def test_symmetric_and_bounded(self, a, b):
        v = iou(a, b)
        assert 0.0 <= v <= 1.0 + 1e-12
        assert v == iou(b, a)

    @given(boxes(min_side=0.01))
    def test_contained_box_ratio(self, a):
        # a box against the full frame equals its own area
        full = box(0.0, 0.0, 1.0, 1.0)
        assert iou(a, full) == pytest.approx(a.area)


class TestHorizontalMatch:
    def test_matches_within_epsilon(self):
        a = box(0.10, 0.1, 0.20, 0.3)
        b = box(0.13, 0.6, 0.22, 0.9)  # y completely different
        assert horizontal_match(a, b, 0.04)

    def test_epsilon_is_inclusive(self):
        # dyadic values so the edge difference is exactly the epsilon
        a = box(0.125, 0.1, 0.25, 0.3)
        b = box(0.1875, 0.1, 0.3125, 0.3)
        assert horizontal_match(a, b, 0.0625)

    def test_one_edge_beyond_epsilon_fails(self):
        a = box(0.10, 0.1, 0.20, 0.3)
        b = box(0.10, 0.1, 0.26, 0.3)
        assert not horizontal_match(a, b, 0.04)

    def test_negative_epsilon_rejected(self):
        with pytest.raises(ValueError):
            horizontal_match(box(0, 0, 0.1, 0.1), box(0, 0, 0.1, 0.1), -0.1)

    @given(boxes(), st.floats(0, 0.5, allow_nan=False))
    def test_reflexive_and_symmetric(self, a, eps):
        assert horizontal_match(a, a, eps)


def test_edge_distance_example():
    a = box(0.10, 0.0, 0.20, 0.1)
    b = box(0.12, 0.5, 0.19, 0.6)
    assert edge_distance(a, b) == pytest.approx(0.03)


def test_validate_detections_cap(rng):
    dets = [det("1", 0.5, 0, 0, 0.1, 0.1)] * 5
    validate_detections(dets, 5)
    with pytest.raises(ValueError):
        validate_detections(dets, 4)
