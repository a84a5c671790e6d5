"""Tests for layout metrics."""

import json
import math
from types import SimpleNamespace

import numpy as np
import pytest

from src.dataset.loader import LayoutDataset
from src.errors import DatasetError
from src.layout.grid import Label, LayoutTensor, View
from src.metrics.evaluation import (
    CSV_HEADER,
    EvalEntry,
    EvalTable,
    LayoutClass,
    NetworkPredictor,
    OraclePredictor,
    average_precision,
    evaluate,
    format_score,
    iou,
)
from src.model.network import init_params
from src.model.variants import Variant
from src.pipeline import evaluate_dataset, run_gen


def brute_force_iou(pred: np.ndarray, gt: np.ndarray) -> float:
    inter = union = 0
    for p, g in zip(pred.ravel(), gt.ravel(), strict=True):
        inter += int(p and g)
        union += int(p or g)
    return 1.0 if union == 0 else inter / union


def threshold_sweep_ap(scores: np.ndarray, truth: np.ndarray) -> float:
    """Step-wise PR area, recomputing counts at every distinct threshold."""
    scores, truth = scores.ravel().tolist(), truth.ravel().tolist()
    positives = sum(truth)
    ap, previous_recall = 0.0, 0.0
    for threshold in sorted(set(scores), reverse=True):
        selected = [t for s, t in zip(scores, truth, strict=True) if s >= threshold]
        tp = sum(selected)
        recall = tp / positives
        ap += (recall - previous_recall) * (tp / len(selected))
        previous_recall = recall
    return ap


class TestIoU:
    """Test iou."""

    def test_random_grids(self):
        """Test iou against a cell-by-cell count on random label grids."""
        rng = np.random.default_rng(0)
        for _ in range(200):
            pred = rng.integers(0, 3, size=(8, 8)).astype(np.uint8)
            gt = rng.integers(0, 3, size=(8, 8)).astype(np.uint8)
            for cls in LayoutClass:
                expected = brute_force_iou(cls.mask(pred), cls.mask(gt))
                assert iou(pred, gt, cls) == pytest.approx(expected, abs=1e-9)

    def test_both_empty(self):
        """Test two empty masks score 1."""
        empty = np.zeros((4, 4), dtype=np.uint8)
        assert iou(empty, empty, LayoutClass.BOX) == 1.0

    def test_rack_includes_boxes(self):
        """Test the rack class covers unoccupied and occupied cells."""
        pred = np.array([[Label.UNOCCUPIED, Label.OCCUPIED]], dtype=np.uint8)
        gt = np.array([[Label.OCCUPIED, Label.OCCUPIED]], dtype=np.uint8)
        assert iou(pred, gt, LayoutClass.RACK) == 1.0
        assert iou(pred, gt, LayoutClass.BOX) == 0.5


class TestAveragePrecision:
    """Test average_precision."""

    def test_random_scores(self):
        """Test AP against a brute-force threshold sweep, ties included."""
        rng = np.random.default_rng(1)
        for _ in range(200):
            truth = rng.random((6, 6)) < 0.3
            if not truth.any() or truth.all():
                continue
            scores = np.round(rng.random((6, 6)), 1)
            assert average_precision(scores, truth) == pytest.approx(threshold_sweep_ap(scores, truth), abs=1e-9)

    def test_empty_ground_truth(self):
        """Test AP is undefined without positives."""
        assert average_precision(np.ones((3, 3)), np.zeros((3, 3), dtype=bool)) is None

    def test_perfect_ranking(self):
        """Test positives ranked above negatives give AP 1."""
        truth = np.array([True, True, False, False])
        assert average_precision(np.array([0.9, 0.8, 0.2, 0.1]), truth) == pytest.approx(1.0)

    def test_all_positive(self):
        """Test a mask with no negatives scores 1."""
        assert average_precision(np.zeros(5), np.ones(5, dtype=bool)) == 1.0


class TestEvaluate:
    """Test evaluate and EvalTable."""

    def test_oracle_scores_hundred(self, small_dataset):
        """Test ground truth fed through the metrics scores 100 everywhere."""
        samples = list(LayoutDataset(small_dataset))
        table = evaluate(OraclePredictor(), samples, batch_size=5)
        assert table.samples == len(samples)
        assert table.entries
        for entry in table.entries.values():
            assert entry.miou == pytest.approx(100.0)
            assert entry.map == pytest.approx(100.0)
            assert entry.iou_count > 0

    def test_single_view_oracle(self, small_dataset):
        """Test a single-view predictor only fills its own rows."""
        table = evaluate(OraclePredictor((View.FRONT,)), LayoutDataset(small_dataset, "test"))
        assert table.views == [View.FRONT]
        assert math.isnan(table.get(View.TOP, LayoutClass.BOX).miou)

    def test_empty_dataset(self):
        """Test evaluating nothing raises DatasetError."""
        with pytest.raises(DatasetError):
            evaluate(OraclePredictor(), [])

    def test_csv_format(self, tmp_path):
        """Test the CSV header and four-decimal rows."""
        table = EvalTable(
            entries={
                (View.TOP, LayoutClass.RACK): EvalEntry(miou=91.5, map=88.25),
                (View.TOP, LayoutClass.BOX): EvalEntry(),
            },
            samples=3,
        )
        path = tmp_path / "eval.csv"
        table.write_csv(path)
        lines = path.read_text().splitlines()
        assert lines[0] == ",".join(CSV_HEADER) == "view,class,miou,map"
        assert lines[1] == "top,rack,91.5000,88.2500"
        assert lines[2] == "top,box,nan,nan"

    def test_json(self, tmp_path):
        """Test the JSON export lists every entry with its counts."""
        table = EvalTable(entries={(View.FRONT, LayoutClass.BOX): EvalEntry(50.0, 40.0, 2, 1, 1)}, samples=2)
        table.write_json(tmp_path / "eval.json")
        data = table.to_dict()
        assert data["samples"] == 2
        assert data["entries"][0]["ap_undefined"] == 1

    def test_format_score(self):
        """Test score formatting."""
        assert format_score(12.345678) == "12.3457"
        assert format_score(math.nan) == "nan"


def one_hot(labels: np.ndarray) -> np.ndarray:
    """Probabilities [R, 3, D, D] putting all mass on the given labels."""
    return np.moveaxis(np.eye(3)[labels], -1, 1)


class FixedPredictor:
    """Returns a stored top-view prediction per sample index."""

    def __init__(self, labels: dict[int, np.ndarray]):
        self.labels = labels

    def predict_batch(self, samples):
        return [{View.TOP: (self.labels[s.index], one_hot(self.labels[s.index]))} for s in samples]


def top_sample(index: int, cells: np.ndarray) -> SimpleNamespace:
    return SimpleNamespace(index=index, layouts={View.TOP: LayoutTensor(View.TOP, cells, 1.0)})


class TestImageAveraging:
    """Test scores are averaged within each image before averaging over images."""

    def test_unequal_channel_counts(self):
        """Test an image with three scored shelves weighs the same as one with a single shelf."""
        full = np.zeros((4, 8, 8), dtype=np.uint8)
        for shelf in range(3):
            full[shelf, 2:5, 2:5] = Label.OCCUPIED
        single_gt = np.zeros((4, 8, 8), dtype=np.uint8)
        single_gt[0, 0:2, 0:2] = Label.OCCUPIED
        single_pred = np.zeros((4, 8, 8), dtype=np.uint8)
        single_pred[0, 5:7, 5:7] = Label.OCCUPIED

        predictor = FixedPredictor({0: full, 1: single_pred})
        table = evaluate(predictor, [top_sample(0, full), top_sample(1, single_gt)])

        box = table.get(View.TOP, LayoutClass.BOX)
        assert box.miou == pytest.approx(50.0)
        assert box.iou_count == 2
        missed_ap = average_precision(one_hot(single_pred)[0, Label.OCCUPIED], single_gt[0] == Label.OCCUPIED)
        assert box.map == pytest.approx(100.0 * (1.0 + missed_ap) / 2)
        assert table.get(View.TOP, LayoutClass.RACK).miou == pytest.approx(50.0)

    def test_channels_averaged_within_image(self):
        """Test one image's channel IoUs are averaged before entering the table."""
        gt = np.zeros((4, 8, 8), dtype=np.uint8)
        gt[0, 0:2, 0:4] = Label.OCCUPIED
        gt[1, 0:2, 0:4] = Label.OCCUPIED
        pred = gt.copy()
        pred[1, 0:2, 2:4] = Label.BACKGROUND

        table = evaluate(FixedPredictor({0: pred}), [top_sample(0, gt)])
        assert table.get(View.TOP, LayoutClass.BOX).miou == pytest.approx(75.0)
        assert table.samples == 1


class TestShardedEvaluation:
    """Test evaluate_dataset."""

    def test_workers_match_serial(self, tmp_path, small_dataset, small_config):
        """Test sharding across processes writes the same CSV as one process."""
        config = small_config.with_train(variant="d")
        params = init_params(config.network_config(), Variant.D, seed=5)
        dataset = LayoutDataset(small_dataset)
        serial = evaluate_dataset(NetworkPredictor(params), dataset, batch_size=2, workers=1)
        sharded = evaluate_dataset(NetworkPredictor(params), dataset, batch_size=2, workers=3)
        serial.write_csv(tmp_path / "serial.csv")
        sharded.write_csv(tmp_path / "sharded.csv")
        assert (tmp_path / "serial.csv").read_bytes() == (tmp_path / "sharded.csv").read_bytes()
        assert sharded.samples == serial.samples == 12

    def test_matches_evaluate(self, small_dataset):
        """Test the sharded path agrees with the in-process evaluate."""
        dataset = LayoutDataset(small_dataset, "train")
        expected = evaluate(OraclePredictor(), dataset, batch_size=3)
        table = evaluate_dataset(OraclePredictor(), dataset, batch_size=3, workers=2)
        assert json.dumps(table.to_dict()) == json.dumps(expected.to_dict())

    def test_empty_split(self, tmp_path, small_config):
        """Test evaluating an empty split raises DatasetError."""
        run_gen(small_config, 2, 0, tmp_path)
        with pytest.raises(DatasetError):
            evaluate_dataset(OraclePredictor(), LayoutDataset(tmp_path, "test"), workers=2)
