import numpy as np
import pytest

from finegrain_mot.tracking import geometry


def test_make_box_rejects_bad_corners():
    with pytest.raises(ValueError):
        geometry.make_box(10, 0, 5, 5)
    with pytest.raises(ValueError):
        geometry.make_box(0, 0, float('nan'), 5)


def test_tlwh_conversions():
    box = geometry.box_from_tlwh(10, 20, 30, 40)
    assert box == geometry.Box(10, 20, 40, 60)
    assert geometry.box_to_tlwh(box) == (10, 20, 30, 40)
    assert geometry.box_from_center(25, 40, 30, 40) == box
    assert geometry.center(box) == geometry.Point(25, 40)


def test_contains_is_closed():
    box = geometry.Box(0, 0, 10, 10)
    assert geometry.contains(box, geometry.Point(0, 0))
    assert geometry.contains(box, geometry.Point(10, 5))
    assert not geometry.contains(box, geometry.Point(10.001, 5))


def test_iou():
    a = geometry.Box(0, 0, 10, 10)
    assert geometry.iou(a, a) == 1.0
    assert geometry.iou(a, geometry.Box(5, 0, 15, 10)) == pytest.approx(50. / 150)
    assert geometry.iou(a, geometry.Box(10, 0, 20, 10)) == 0.0
    assert geometry.iou(a, geometry.Box(3, 3, 3, 3)) == 0.0


def test_iou_matrix_matches_scalar():
    rng = np.random.RandomState(3)
    boxes = []
    for _ in range(12):
        x, y = rng.uniform(0, 50, size=2)
        w, h = rng.uniform(0, 30, size=2)
        boxes.append(geometry.make_box(x, y, x + w, y + h))
    matrix = geometry.iou_matrix(boxes[:5], boxes[5:])
    for i in range(5):
        for j in range(7):
            assert matrix[i, j] == pytest.approx(geometry.iou(boxes[i], boxes[5 + j]), abs=1e-12)
    assert geometry.iou_matrix([], boxes).shape == (0, 12)


def test_attribute_pair():
    prev = geometry.box_from_center(10, 10, 10, 20)
    cur = geometry.box_from_center(13, 14, 20, 20)
    pair = geometry.attribute_pair(prev, cur)
    assert pair.arc == pytest.approx(0.5)
    assert pair.area_change == pytest.approx(0.5)
    assert pair.object_motion == pytest.approx(7)
    assert pair.adjacent_iou == pytest.approx(geometry.iou(prev, cur))


def test_attribute_pair_degenerate():
    pair = geometry.attribute_pair(geometry.Box(0, 0, 0, 10), geometry.Box(0, 0, 5, 10))
    assert pair.arc is None
    assert pair.area_change is None
    assert pair.adjacent_iou == 0.0
