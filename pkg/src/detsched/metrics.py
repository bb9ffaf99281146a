"""Box geometry and per-frame detection scoring.

Provides IoU, confidence-ordered greedy matching, per-image average
precision (AP) at a single IoU threshold or averaged over the standard
0.5:0.05:0.95 ladder, and the sequence-level mean-per-frame metric.

Scoring conventions used throughout:

* matching is class-aware, curves are pooled over classes (micro-averaged),
* AP uses 101-point interpolation: the interpolated precision at recall
  level r is the maximum precision attained at any recall >= r, and AP is
  the mean of the interpolated precision over r in {0, 0.01, ..., 1},
* a frame without ground truth scores 1.0 when nothing is predicted and
  0.0 otherwise,
* all functions are pure and never round coordinates or confidences.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

# Threshold ladder for the averaged metric column (exactly ten values).
COCO_IOU_THRESHOLDS: tuple[float, ...] = (
    0.5, 0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95,
)

_RECALL_LEVELS = np.arange(101) / 100.0


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned box in continuous pixel coordinates.

    Degenerate boxes (zero or negative extent) are rejected at
    construction time, so every live instance has positive area.
    """

    x_min: float
    y_min: float
    x_max: float
    y_max: float
    class_id: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "x_min", float(self.x_min))
        object.__setattr__(self, "y_min", float(self.y_min))
        object.__setattr__(self, "x_max", float(self.x_max))
        object.__setattr__(self, "y_max", float(self.y_max))
        object.__setattr__(self, "class_id", int(self.class_id))
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValueError(
                f"degenerate box: ({self.x_min}, {self.y_min}, "
                f"{self.x_max}, {self.y_max}) must satisfy x_min < x_max and y_min < y_max"
            )

    @property
    def area(self) -> float:
        return (self.x_max - self.x_min) * (self.y_max - self.y_min)


@dataclass(frozen=True)
class Detection:
    """A predicted box with a confidence score in [0, 1]."""

    box: BoundingBox
    confidence: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "confidence", float(self.confidence))
        if not (0.0 <= self.confidence <= 1.0):
            raise ValueError(f"confidence {self.confidence} outside [0, 1]")


@dataclass(frozen=True)
class DetectionSet:
    """Ordered collection of detections for one frame.

    The order is part of the value: it is preserved by serialization and
    breaks confidence ties deterministically during matching.
    """

    detections: tuple[Detection, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "detections", tuple(self.detections))

    def __len__(self) -> int:
        return len(self.detections)

    def __iter__(self):
        return iter(self.detections)


EMPTY_DETECTIONS = DetectionSet(())


@dataclass(frozen=True)
class IouThresholdSpec:
    """Either a single IoU threshold in (0, 1) or the ten-value ladder."""

    thresholds: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "thresholds", tuple(float(t) for t in self.thresholds))
        if len(self.thresholds) == 1:
            t = self.thresholds[0]
            if not (0.0 < t < 1.0):
                raise ValueError(f"IoU threshold {t} outside (0, 1)")
        elif self.thresholds != COCO_IOU_THRESHOLDS:
            raise ValueError(
                "threshold spec must be a single value or the 0.5:0.05:0.95 ladder"
            )

    @classmethod
    def single(cls, threshold: float) -> "IouThresholdSpec":
        return cls((float(threshold),))

    @classmethod
    def coco(cls) -> "IouThresholdSpec":
        return cls(COCO_IOU_THRESHOLDS)

    @classmethod
    def parse(cls, text: str) -> "IouThresholdSpec":
        """Parse a CLI-style spec: 'coco', '0.5:0.95', or a single number."""
        text = text.strip().lower()
        if text in ("coco", "0.5:0.95"):
            return cls.coco()
        return cls.single(float(text))

    @property
    def is_range(self) -> bool:
        return len(self.thresholds) > 1

    def label(self) -> str:
        return "0.5:0.95" if self.is_range else format(self.thresholds[0], "g")


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection-over-union of two boxes; 0.0 when disjoint."""
    ix = min(a.x_max, b.x_max) - max(a.x_min, b.x_min)
    iy = min(a.y_max, b.y_max) - max(a.y_min, b.y_min)
    if ix <= 0.0 or iy <= 0.0:
        return 0.0
    inter = ix * iy
    union = a.area + b.area - inter
    return inter / union


def _confidence_order(detections: Sequence[Detection]) -> list[int]:
    # Descending confidence; ties keep original list position.
    return sorted(range(len(detections)), key=lambda i: (-detections[i].confidence, i))


def _greedy_match_ordered(
    ordered: Sequence[Detection],
    gts: Sequence[BoundingBox],
    threshold: float,
    iou_rows: np.ndarray,
) -> list[int]:
    """Match already-ordered detections; returns per-detection GT index or -1.

    iou_rows[i, j] holds iou(ordered[i].box, gts[j]); rows for class
    mismatches must already be set to 0 by the caller.
    """
    matched = [False] * len(gts)
    out: list[int] = []
    for i in range(len(ordered)):
        best_j = -1
        best_iou = 0.0
        row = iou_rows[i]
        for j in range(len(gts)):
            if matched[j]:
                continue
            v = row[j]
            if v >= threshold and v > best_iou:
                best_iou = v
                best_j = j
        if best_j >= 0:
            matched[best_j] = True
        out.append(best_j)
    return out


def _iou_rows(ordered: Sequence[Detection], gts: Sequence[BoundingBox]) -> np.ndarray:
    rows = np.zeros((len(ordered), len(gts)))
    for i, det in enumerate(ordered):
        for j, gt in enumerate(gts):
            if det.box.class_id == gt.class_id:
                rows[i, j] = iou(det.box, gt)
    return rows


def match_greedy(
    preds: DetectionSet,
    gts: Sequence[BoundingBox],
    threshold: float,
) -> list[tuple[int, int | None]]:
    """Greedily match predictions to ground truth at one IoU threshold.

    Predictions are processed in descending confidence (ties broken by
    list position); each is paired with the unmatched same-class ground
    truth of highest IoU >= threshold, or None. Each ground truth is used
    at most once. Pairs are returned in processing order and carry the
    original prediction indices.
    """
    if not (0.0 < threshold < 1.0):
        raise ValueError(f"IoU threshold {threshold} outside (0, 1)")
    order = _confidence_order(preds.detections)
    ordered = [preds.detections[i] for i in order]
    assigned = _greedy_match_ordered(ordered, gts, threshold, _iou_rows(ordered, gts))
    return [(order[i], (j if j >= 0 else None)) for i, j in enumerate(assigned)]


def _ap_from_tp_flags(tp: np.ndarray, gt_count: int) -> float:
    cum_tp = np.cumsum(tp)
    recall = cum_tp / gt_count
    precision = cum_tp / np.arange(1, tp.size + 1)
    # Interpolated precision: running maximum from the right.
    precision = np.maximum.accumulate(precision[::-1])[::-1]
    idx = np.searchsorted(recall, _RECALL_LEVELS, side="left")
    interp = np.where(idx < recall.size, precision[np.minimum(idx, recall.size - 1)], 0.0)
    return float(interp.mean())


def ap_at_thresholds(
    preds: DetectionSet,
    gts: Sequence[BoundingBox],
    thresholds: Iterable[float],
) -> np.ndarray:
    """Per-image AP at each given IoU threshold (shares one IoU matrix).

    Applies the empty-frame rule: with no ground truth the score is 1.0
    if nothing was predicted and 0.0 otherwise, at every threshold.
    """
    thresholds = tuple(thresholds)
    if len(gts) == 0:
        return np.full(len(thresholds), 1.0 if len(preds) == 0 else 0.0)
    if len(preds) == 0:
        return np.zeros(len(thresholds))
    order = _confidence_order(preds.detections)
    ordered = [preds.detections[i] for i in order]
    rows = _iou_rows(ordered, gts)
    out = np.empty(len(thresholds))
    for k, thr in enumerate(thresholds):
        assigned = _greedy_match_ordered(ordered, gts, thr, rows)
        tp = np.array([j >= 0 for j in assigned], dtype=float)
        out[k] = _ap_from_tp_flags(tp, len(gts))
    return out


def ap_image(
    preds: DetectionSet,
    gts: Sequence[BoundingBox],
    spec: IouThresholdSpec,
) -> float:
    """Per-image AP under the given threshold spec.

    For the ten-threshold ladder this is the mean of the ten
    single-threshold values.
    """
    return float(ap_at_thresholds(preds, gts, spec.thresholds).mean())


def mean_ap_per_frame(frame_scores: Sequence[float]) -> float:
    """Arithmetic mean of per-frame AP scores; rejects an empty list."""
    if len(frame_scores) == 0:
        raise ValueError("cannot average an empty list of frame scores")
    for s in frame_scores:
        if not (0.0 <= s <= 1.0):
            raise ValueError(f"frame score {s} outside [0, 1]")
    return float(sum(frame_scores) / len(frame_scores))
