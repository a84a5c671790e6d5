"""Per-class mIoU and mAP over layout predictions.

Two classes are scored per view. The rack class is every non-background
cell (the shelf footprint or slab), the box class is the occupied cells.
AP ranks the cells of one channel by the class score (the rack score is
p(unoccupied) + p(occupied)) and is the step-wise area under the
precision-recall curve. Channel scores are averaged within each image first,
then over images.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from collections.abc import Iterable, Sequence
from dataclasses import asdict, dataclass, field
from enum import Enum
from pathlib import Path
from typing import TYPE_CHECKING, Protocol

import numpy as np
from sklearn.metrics import average_precision_score

from src.errors import DatasetError
from src.layout.grid import Label, View
from src.model.network import NetworkParams, predict_probs

if TYPE_CHECKING:
    from src.dataset.loader import Sample

logger = logging.getLogger(__name__)

CSV_HEADER = ["view", "class", "miou", "map"]

Prediction = dict[View, tuple[np.ndarray, np.ndarray]]


class LayoutClass(str, Enum):
    RACK = "rack"
    BOX = "box"

    def mask(self, labels: np.ndarray) -> np.ndarray:
        if self is LayoutClass.RACK:
            return labels != Label.BACKGROUND
        return labels == Label.OCCUPIED

    def scores(self, probs: np.ndarray) -> np.ndarray:
        """Class score per cell from probabilities [3, D, D]."""
        if self is LayoutClass.RACK:
            return probs[Label.UNOCCUPIED] + probs[Label.OCCUPIED]
        return probs[Label.OCCUPIED]


def iou(pred_labels: np.ndarray, gt_labels: np.ndarray, layout_class: LayoutClass) -> float:
    """Intersection over union of one class's masks; 1.0 when both are empty."""
    pred = layout_class.mask(pred_labels)
    gt = layout_class.mask(gt_labels)
    union = np.count_nonzero(pred | gt)
    if union == 0:
        return 1.0
    return np.count_nonzero(pred & gt) / union


def average_precision(scores: np.ndarray, gt_mask: np.ndarray) -> float | None:
    """Area under the precision-recall curve of cells ranked by score.

    Returns:
        AP in [0, 1], or None when the ground-truth mask is empty.
    """
    truth = np.asarray(gt_mask, dtype=bool).ravel()
    if not truth.any():
        return None
    if truth.all():
        return 1.0
    return float(average_precision_score(truth, np.asarray(scores, dtype=np.float64).ravel()))


@dataclass
class EvalEntry:
    """Aggregated scores of one (view, class) cell of the table.

    Attributes:
        miou: Mean IoU x 100, nan if nothing was scored.
        map: Mean AP x 100, nan if nothing was scored.
        iou_count: Images that contributed to the IoU mean.
        ap_count: Images that contributed to the AP mean.
        ap_undefined: Channels skipped for AP because the class was absent from GT.
    """

    miou: float = math.nan
    map: float = math.nan
    iou_count: int = 0
    ap_count: int = 0
    ap_undefined: int = 0


@dataclass
class EvalTable:
    """Evaluation results per view and class, scaled to [0, 100]."""

    entries: dict[tuple[View, LayoutClass], EvalEntry] = field(default_factory=dict)
    samples: int = 0

    def get(self, view: View, layout_class: LayoutClass) -> EvalEntry:
        return self.entries.get((View(view), LayoutClass(layout_class)), EvalEntry())

    @property
    def views(self) -> list[View]:
        return [v for v in View if any(key[0] == v for key in self.entries)]

    def rows(self) -> list[tuple[str, str, float, float]]:
        return [
            (view.value, cls.value, entry.miou, entry.map)
            for view in View
            for cls in LayoutClass
            if (entry := self.entries.get((view, cls))) is not None
        ]

    def write_csv(self, path: Path) -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(CSV_HEADER)
            for view, cls, miou, ap in self.rows():
                writer.writerow([view, cls, format_score(miou), format_score(ap)])

    def to_dict(self) -> dict:
        return {
            "version": 1,
            "samples": self.samples,
            "entries": [
                {"view": view.value, "class": cls.value, **asdict(entry)}
                for (view, cls), entry in sorted(self.entries.items(), key=lambda kv: (kv[0][0].value, kv[0][1].value))
            ],
        }

    def write_json(self, path: Path) -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_dict(), indent=2))


def format_score(value: float) -> str:
    return "nan" if math.isnan(value) else f"{value:.4f}"


class LayoutPredictor(Protocol):
    """Produces (labels [R, D, D], probs [R, 3, D, D]) per view for each sample."""

    def predict_batch(self, samples: Sequence[Sample]) -> list[Prediction]: ...


class OraclePredictor:
    """Ground-truth passthrough: labels are the GT, probabilities its one-hot encoding."""

    def __init__(self, views: Sequence[View] = (View.TOP, View.FRONT)):
        self.views = tuple(views)

    def predict_batch(self, samples: Sequence[Sample]) -> list[Prediction]:
        out = []
        for sample in samples:
            prediction = {}
            for view in self.views:
                layout = sample.layouts[view]
                prediction[view] = (layout.cells, layout.one_hot())
            out.append(prediction)
        return out


class NetworkPredictor:
    """Runs a trained network; one encode per image for every decoded view."""

    def __init__(self, params: NetworkParams):
        self.params = params

    def predict_batch(self, samples: Sequence[Sample]) -> list[Prediction]:
        probs = predict_probs(np.stack([s.image.pixels for s in samples]), self.params)
        out = []
        for i in range(len(samples)):
            out.append({view: (p[i].argmax(axis=1).astype(np.uint8), p[i]) for view, p in probs.items()})
        return out


@dataclass
class ImageScore:
    """One image's scores for one view and class, averaged over its scored channels.

    Attributes:
        iou: Mean channel IoU, None if no channel contributed.
        ap: Mean channel AP, None if no channel contributed.
        ap_undefined: Channels skipped for AP because the class was absent from GT.
    """

    iou: float | None = None
    ap: float | None = None
    ap_undefined: int = 0


SampleScores = dict[tuple[View, LayoutClass], ImageScore]


def score_channel(
    pred_labels: np.ndarray, probs: np.ndarray, gt_labels: np.ndarray, layout_class: LayoutClass
) -> tuple[float | None, float | None]:
    """(IoU, AP) of one channel; None where the class is absent from both or from GT."""
    pred_mask, gt_mask = layout_class.mask(pred_labels), layout_class.mask(gt_labels)
    channel_iou = iou(pred_labels, gt_labels, layout_class) if (pred_mask | gt_mask).any() else None
    return channel_iou, average_precision(layout_class.scores(probs), gt_mask)


def score_sample(sample: Sample, prediction: Prediction) -> SampleScores:
    """Per view and class scores of one image.

    Channels whose ground truth and prediction are both all background are
    skipped. Within a scored channel, a class contributes IoU only if it
    appears in the prediction or the GT, and AP only if it appears in the GT.
    """
    scores: SampleScores = {}
    for view, (labels, probs) in prediction.items():
        gt = sample.layouts[view].cells
        channels = [shelf for shelf in range(gt.shape[0]) if gt[shelf].any() or labels[shelf].any()]
        if not channels:
            continue
        for cls in LayoutClass:
            ious: list[float] = []
            aps: list[float] = []
            undefined = 0
            for shelf in channels:
                channel_iou, channel_ap = score_channel(labels[shelf], probs[shelf], gt[shelf], cls)
                if channel_iou is not None:
                    ious.append(channel_iou)
                if channel_ap is None:
                    undefined += 1
                else:
                    aps.append(channel_ap)
            scores[(view, cls)] = ImageScore(
                iou=float(np.mean(ious)) if ious else None,
                ap=float(np.mean(aps)) if aps else None,
                ap_undefined=undefined,
            )
    return scores


def score_batch(predictor: LayoutPredictor, samples: Sequence[Sample]) -> list[SampleScores]:
    """Scores of each sample in a batch, in input order."""
    return [
        score_sample(sample, prediction)
        for sample, prediction in zip(samples, predictor.predict_batch(samples), strict=True)
    ]


def reduce_scores(per_image: Sequence[SampleScores]) -> EvalTable:
    """Average per-image scores over the images, so every image weighs the same.

    Raises:
        DatasetError: If there are no images.
    """
    if not per_image:
        raise DatasetError("Cannot evaluate on an empty dataset")
    keys = sorted({key for scores in per_image for key in scores}, key=lambda k: (k[0].value, k[1].value))
    entries = {}
    for key in keys:
        image_scores = [scores[key] for scores in per_image if key in scores]
        ious = [s.iou for s in image_scores if s.iou is not None]
        aps = [s.ap for s in image_scores if s.ap is not None]
        entries[key] = EvalEntry(
            miou=100.0 * float(np.mean(ious)) if ious else math.nan,
            map=100.0 * float(np.mean(aps)) if aps else math.nan,
            iou_count=len(ious),
            ap_count=len(aps),
            ap_undefined=sum(s.ap_undefined for s in image_scores),
        )
    return EvalTable(entries=entries, samples=len(per_image))


def evaluate(
    predictor: LayoutPredictor, samples: Iterable[Sample], batch_size: int = 16
) -> EvalTable:
    """Score a predictor on a dataset in this process.

    Raises:
        DatasetError: If there are no samples.
    """
    per_image: list[SampleScores] = []
    batch: list[Sample] = []
    for sample in samples:
        batch.append(sample)
        if len(batch) == batch_size:
            per_image.extend(score_batch(predictor, batch))
            batch = []
    if batch:
        per_image.extend(score_batch(predictor, batch))

    table = reduce_scores(per_image)
    logger.info(f"Evaluated {table.samples} samples")
    return table
