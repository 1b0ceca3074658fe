import numpy as np
import pytest

from flowtrack.geometry import (
    BoundingBox, boxes_to_array, contains, ioa, ioa_matrix, iou, iou_matrix,
)


def random_box(rng):
    x1, y1 = rng.uniform(-50, 50, size=2)
    w, h = rng.uniform(0.5, 40, size=2)
    return BoundingBox(x1, y1, x1 + w, y1 + h)


def test_degenerate_box_rejected():
    with pytest.raises(ValueError):
        BoundingBox(0, 0, 0, 1)
    with pytest.raises(ValueError):
        BoundingBox(0, 2, 1, 1)


def test_iou_identity_and_disjoint():
    a = BoundingBox(0, 0, 2, 2)
    assert iou(a, a) == 1.0
    assert iou(a, BoundingBox(5, 5, 6, 6)) == 0.0


def test_iou_partial_overlap_analytic():
    a = BoundingBox(0, 0, 2, 2)
    b = BoundingBox(1, 0, 3, 2)
    assert iou(a, b) == pytest.approx(1 / 3)


def test_ioa_examples():
    a = BoundingBox(0, 0, 2, 2)
    b = BoundingBox(1, 0, 3, 2)
    assert ioa(a, a) == 1.0
    assert ioa(a, BoundingBox(5, 5, 6, 6)) == 0.0
    assert ioa(a, b) == pytest.approx(0.5)


def test_contains_boundary_is_inside():
    box = BoundingBox(0, 0, 2, 2)
    assert contains(box, 1, 1)
    assert contains(box, 0, 0)
    assert contains(box, 2, 1)
    assert not contains(box, 2 + 1e-9, 1)


def test_iou_symmetry_and_ioa_ordering():
    rng = np.random.Generator(np.random.PCG64(7))
    for _ in range(200):
        a, b = random_box(rng), random_box(rng)
        assert iou(a, b) == pytest.approx(iou(b, a), abs=1e-12)
        assert iou(a, b) <= ioa(a, b) + 1e-12
        assert iou(a, b) <= ioa(b, a) + 1e-12
        assert 0.0 <= iou(a, b) <= 1.0


def test_matrix_forms_match_scalar():
    rng = np.random.Generator(np.random.PCG64(8))
    boxes_a = [random_box(rng) for _ in range(7)]
    boxes_b = [random_box(rng) for _ in range(5)]
    arr_a, arr_b = boxes_to_array(boxes_a), boxes_to_array(boxes_b)
    got_iou = iou_matrix(arr_a, arr_b)
    got_ioa = ioa_matrix(arr_a, arr_b)
    for i, a in enumerate(boxes_a):
        for j, b in enumerate(boxes_b):
            assert got_iou[i, j] == pytest.approx(iou(a, b), abs=1e-12)
            assert got_ioa[i, j] == pytest.approx(ioa(a, b), abs=1e-12)


def test_empty_matrix_shapes():
    empty = boxes_to_array([])
    some = boxes_to_array([BoundingBox(0, 0, 1, 1)])
    assert iou_matrix(empty, some).shape == (0, 1)
    assert iou_matrix(some, empty).shape == (1, 0)
