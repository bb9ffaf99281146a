"""Hand-controllable in-memory datasets for environment and agent tests."""

from __future__ import annotations

import numpy as np

from detsched.datastore import (
    FULLTRAIN,
    HOLDOUT,
    Dataset,
    DetectorSpec,
    FoldManifest,
    FrameRecord,
    ObservationPayload,
    PredictionStore,
    Sequence,
)
from detsched.metrics import BoundingBox, Detection, DetectionSet

PERFECT = "perfect"
SHIFTED = "shifted"
EMPTY = "empty"


def gt_box(frame_index: int) -> BoundingBox:
    return BoundingBox(10.0 + frame_index, 20.0, 30.0 + frame_index, 40.0, 0)


def make_sequence(seq_id: str, length: int, empty_frames: set[int] | None = None) -> Sequence:
    empty_frames = empty_frames or set()
    frames = []
    for i in range(length):
        gts = () if i in empty_frames else (gt_box(i),)
        obs = ObservationPayload(feature_vector=(0.5, i / 10.0, 0.1))
        frames.append(FrameRecord(seq_id, i, obs, gts))
    return Sequence(seq_id, tuple(frames))


def prediction_for(kind: str, frame_index: int, conf: float = 0.9) -> DetectionSet:
    if kind == EMPTY:
        return DetectionSet(())
    box = gt_box(frame_index)
    if kind == SHIFTED:
        box = BoundingBox(box.x_min + 100.0, box.y_min, box.x_max + 100.0, box.y_max, 0)
    return DetectionSet((Detection(box, conf),))


def toy_dataset(
    sequences: list[Sequence],
    detectors: tuple[DetectorSpec, ...],
    pred_fn,
    train_ids: tuple[str, ...] = (),
    variants=(FULLTRAIN, HOLDOUT),
) -> Dataset:
    """Build an in-memory dataset; pred_fn(seq_id, frame, det_id, variant) -> DetectionSet."""
    store = PredictionStore(detectors)
    for seq in sequences:
        for frame in seq.frames:
            for det in detectors:
                for variant in variants:
                    store.add(
                        seq.sequence_id,
                        frame.frame_index,
                        det.detector_id,
                        variant,
                        pred_fn(seq.sequence_id, frame.frame_index, det.detector_id, variant),
                    )
    folds = FoldManifest(5, {sid: i % 5 for i, sid in enumerate(train_ids)})
    return Dataset(tuple(sequences), detectors, store, folds)


def perfect_everywhere(seq_id, frame_index, det_id, variant):
    return prediction_for(PERFECT, frame_index)


def noisy_pred_fn(seed: int):
    """Randomized but deterministic prediction quality per (seq, frame, det, variant)."""

    def fn(seq_id, frame_index, det_id, variant):
        import zlib

        key = [seed, zlib.crc32(seq_id.encode()), frame_index, zlib.crc32(det_id.encode()),
               0 if variant == FULLTRAIN else 1]
        rng = np.random.default_rng(key)
        roll = rng.random()
        if roll < 0.25:
            return prediction_for(EMPTY, frame_index)
        if roll < 0.5:
            return prediction_for(SHIFTED, frame_index, conf=float(rng.uniform(0.1, 0.9)))
        box = gt_box(frame_index)
        jitter = rng.normal(0.0, 2.0, size=4)
        shifted = BoundingBox(
            box.x_min + jitter[0], box.y_min + jitter[1],
            max(box.x_max + jitter[2], box.x_min + jitter[0] + 1.0),
            max(box.y_max + jitter[3], box.y_min + jitter[1] + 1.0),
            0,
        )
        dets = [Detection(shifted, float(rng.uniform(0.3, 1.0)))]
        if rng.random() < 0.3:
            dets.append(
                Detection(BoundingBox(200.0, 200.0, 220.0, 220.0, 0), float(rng.uniform(0.05, 0.5)))
            )
        return DetectionSet(tuple(dets))

    return fn


INSTANT = DetectorSpec("instant", "rgb", 0)
SLOW = DetectorSpec("slow", "rgb", 3)
MID = DetectorSpec("mid", "lidar", 1)
