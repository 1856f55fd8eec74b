import numpy as np
import pytest

from eitdsm.grid import CartesianGrid, IndexField
from eitdsm.metrics import (
    EvalReport,
    accuracy,
    config_digest,
    dice,
    iou,
    mse_field,
)

GRID = CartesianGrid(4, 4)


def _field(values):
    return IndexField(GRID, np.asarray(values, dtype=float))


def test_iou_and_dice_half_overlap():
    pred = np.zeros((4, 4))
    pred[:, :2] = 1.0  # left half
    truth = np.zeros((4, 4))
    truth[:2, :] = 1.0  # bottom half
    # intersection 4 nodes, union 12
    assert iou(_field(pred), _field(truth)) == pytest.approx(1 / 3)
    assert dice(_field(pred), _field(truth)) == pytest.approx(0.5)
    assert accuracy(_field(pred), _field(truth)) == pytest.approx(0.5)


def test_both_empty_conventions():
    empty = _field(np.zeros((4, 4)))
    assert iou(empty, empty) == 1.0
    assert dice(empty, empty) == 1.0
    assert accuracy(empty, empty) == 1.0
    assert mse_field(empty, empty) == 0.0


def test_disjoint_masks():
    a = np.zeros((4, 4))
    a[0, 0] = 1.0
    b = np.zeros((4, 4))
    b[3, 3] = 1.0
    assert iou(_field(a), _field(b)) == 0.0
    assert dice(_field(a), _field(b)) == 0.0


def test_threshold_semantics():
    pred = _field(np.full((4, 4), 0.4))
    truth = _field(np.ones((4, 4)))
    assert iou(pred, truth) == 0.0
    assert iou(pred, truth, threshold=0.3) == 1.0
    # exactly at the threshold counts as outside
    at = _field(np.full((4, 4), 0.5))
    assert iou(at, truth) in (0.0, 1.0)


def test_mse_field_value():
    a = _field(np.zeros((4, 4)))
    b = _field(np.full((4, 4), 0.25))
    assert mse_field(a, b) == pytest.approx(0.0625)


def test_grid_mismatch_rejected():
    other = IndexField(CartesianGrid(5, 5), np.zeros((5, 5)))
    with pytest.raises(ValueError):
        iou(_field(np.zeros((4, 4))), other)


def test_config_digest_stable():
    a = config_digest({"b": 2, "a": 1})
    b = config_digest({"a": 1, "b": 2})
    c = config_digest({"a": 1, "b": 3})
    assert a == b
    assert a != c
    assert len(a) == 64


def test_report_aggregates_and_serializes(tmp_path):
    report = EvalReport(digest="abc123")
    pred = np.zeros((4, 4))
    pred[:, :2] = 1.0
    truth = np.zeros((4, 4))
    truth[:2, :] = 1.0
    report.add(0, _field(pred), _field(truth))
    report.add(1, _field(truth), _field(truth))
    agg = report.aggregate()
    assert agg["count"] == 2
    assert agg["iou_mean"] == pytest.approx((1 / 3 + 1.0) / 2)
    assert agg["iou_std"] == pytest.approx(np.std([1 / 3, 1.0]))
    text = report.to_text()
    assert "digest=abc123" in text
    assert "sample\tiou\tdice\taccuracy\tmse" in text
    path = str(tmp_path / "report.txt")
    report.save(path)
    with open(path, encoding="utf-8") as fh:
        assert fh.read() == text
