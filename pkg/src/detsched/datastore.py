"""On-disk dataset formats and in-memory prediction lookup.

All files are JSON Lines (one record per line) or single JSON documents,
written with a fixed field order and compact separators so serialization
is canonical: ``load(save(x)) == x`` and ``save(load(bytes)) == bytes``
for files produced by this module.

Files in a dataset directory:

* ``frames.jsonl``    - one line per frame:
  ``{"sequence_id", "frame_index", "observation": {"feature_vector"?,
  "gray_image"?}, "ground_truth": [{"x_min","y_min","x_max","y_max",
  "class_id"}]}``
* ``preds_<detector>.jsonl`` - one line per (frame, variant):
  ``{"sequence_id", "frame_index", "detector_id", "variant",
  "detections": [{"box": {...}, "confidence"}]}``
* ``detectors.json``  - ``{"version", "detectors": [{"detector_id",
  "modality", "latency_frames"}]}`` (list order fixes the action order)
* ``folds.json``      - ``{"version", "fold_count", "assignment":
  {sequence_id: fold}}``; membership in the assignment defines the
  training split, all other sequences are test.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .metrics import BoundingBox, Detection, DetectionSet

HOLDOUT = "holdout"
FULLTRAIN = "fulltrain"
VARIANTS = (HOLDOUT, FULLTRAIN)

SPLIT_TRAIN = "train"
SPLIT_TEST = "test"

IMAGE_SIZE = 84
_POOLED_SIZE = 12  # 84 / 7


class DatasetError(ValueError):
    """Malformed or inconsistent dataset content."""


class MissingPredictionError(LookupError):
    """A (sequence, frame, detector, variant) key has no stored prediction."""


@dataclass(frozen=True, eq=False)
class ObservationPayload:
    """Per-frame observation: a feature vector, an 84x84 intensity grid, or both.

    By convention the first feature of a feature vector is the mean scene
    intensity scaled to [0, 1]; ``mean_intensity()`` relies on this when no
    image is present.
    """

    feature_vector: tuple[float, ...] | None = None
    gray_image: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.feature_vector is None and self.gray_image is None:
            raise DatasetError("observation needs a feature vector or an image")
        if self.feature_vector is not None:
            object.__setattr__(
                self, "feature_vector", tuple(float(v) for v in self.feature_vector)
            )
        if self.gray_image is not None:
            img = np.asarray(self.gray_image, dtype=float)
            if img.shape != (IMAGE_SIZE, IMAGE_SIZE):
                raise DatasetError(f"gray image must be {IMAGE_SIZE}x{IMAGE_SIZE}, got {img.shape}")
            if img.min() < 0.0 or img.max() > 1.0:
                raise DatasetError("gray image intensities must lie in [0, 1]")
            img = img.copy()
            img.setflags(write=False)
            object.__setattr__(self, "gray_image", img)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ObservationPayload):
            return NotImplemented
        if self.feature_vector != other.feature_vector:
            return False
        if (self.gray_image is None) != (other.gray_image is None):
            return False
        if self.gray_image is not None:
            return bool(np.array_equal(self.gray_image, other.gray_image))
        return True

    def features(self) -> np.ndarray:
        """Feature vector if present, else the image average-pooled to 12x12."""
        if self.feature_vector is not None:
            return np.asarray(self.feature_vector, dtype=float)
        pooled = self.gray_image.reshape(_POOLED_SIZE, 7, _POOLED_SIZE, 7).mean(axis=(1, 3))
        return pooled.reshape(-1)

    def mean_intensity(self) -> float:
        """Mean intensity on a 0..255 scale."""
        if self.gray_image is not None:
            return float(self.gray_image.mean() * 255.0)
        return float(self.feature_vector[0] * 255.0)


@dataclass(frozen=True)
class FrameRecord:
    sequence_id: str
    frame_index: int
    observation: ObservationPayload
    ground_truth: tuple[BoundingBox, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "frame_index", int(self.frame_index))
        object.__setattr__(self, "ground_truth", tuple(self.ground_truth))
        if self.frame_index < 0:
            raise DatasetError(f"negative frame index {self.frame_index}")


@dataclass(frozen=True)
class Sequence:
    """One episode: consecutive frames of a single recorded sequence."""

    sequence_id: str
    frames: tuple[FrameRecord, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "frames", tuple(self.frames))
        if not self.frames:
            raise DatasetError(f"sequence {self.sequence_id!r} has no frames")
        for pos, frame in enumerate(self.frames):
            if frame.sequence_id != self.sequence_id:
                raise DatasetError(
                    f"frame {frame.frame_index} belongs to {frame.sequence_id!r}, "
                    f"not {self.sequence_id!r}"
                )
            if frame.frame_index != pos:
                raise DatasetError(
                    f"sequence {self.sequence_id!r}: expected frame index {pos}, "
                    f"found {frame.frame_index} (indices must be consecutive from 0)"
                )

    def __len__(self) -> int:
        return len(self.frames)


@dataclass(frozen=True)
class DetectorSpec:
    """A selectable detector: identity, sensor modality, and latency in frames."""

    detector_id: str
    modality: str
    latency_frames: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "latency_frames", int(self.latency_frames))
        if self.latency_frames < 0:
            raise DatasetError(f"detector {self.detector_id!r}: negative latency")


@dataclass(frozen=True)
class PredictionRecord:
    sequence_id: str
    frame_index: int
    detector_id: str
    variant: str
    detections: DetectionSet

    def __post_init__(self) -> None:
        if self.variant not in VARIANTS:
            raise DatasetError(f"unknown variant {self.variant!r}")


class PredictionStore:
    """Fast in-memory lookup of per-frame detector outputs.

    Keys are (sequence_id, frame_index, detector_id, variant); a missing
    key raises, it is never silently treated as an empty prediction.
    """

    def __init__(self, detectors: Iterable[DetectorSpec]):
        self._detectors = tuple(detectors)
        ids = [d.detector_id for d in self._detectors]
        if len(set(ids)) != len(ids):
            raise DatasetError("duplicate detector ids")
        self._by_id = {d.detector_id: d for d in self._detectors}
        self._entries: dict[tuple[str, int, str, str], DetectionSet] = {}

    @property
    def detectors(self) -> tuple[DetectorSpec, ...]:
        return self._detectors

    def detector(self, detector_id: str) -> DetectorSpec:
        try:
            return self._by_id[detector_id]
        except KeyError:
            raise DatasetError(f"unknown detector {detector_id!r}") from None

    def add(
        self,
        sequence_id: str,
        frame_index: int,
        detector_id: str,
        variant: str,
        detections: DetectionSet,
    ) -> None:
        if detector_id not in self._by_id:
            raise DatasetError(f"unknown detector {detector_id!r}")
        if variant not in VARIANTS:
            raise DatasetError(f"unknown variant {variant!r}")
        key = (sequence_id, int(frame_index), detector_id, variant)
        if key in self._entries:
            raise DatasetError(f"duplicate prediction for {key}")
        self._entries[key] = detections

    def get(
        self, sequence_id: str, frame_index: int, detector_id: str, variant: str
    ) -> DetectionSet:
        key = (sequence_id, int(frame_index), detector_id, variant)
        try:
            return self._entries[key]
        except KeyError:
            raise MissingPredictionError(
                f"no stored prediction for sequence={sequence_id!r} "
                f"frame={frame_index} detector={detector_id!r} variant={variant!r}"
            ) from None

    def has(
        self, sequence_id: str, frame_index: int, detector_id: str, variant: str
    ) -> bool:
        return (sequence_id, int(frame_index), detector_id, variant) in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def validate_complete(self, sequences: Iterable[Sequence]) -> None:
        """Every (sequence, frame) must be covered by every detector in >= 1 variant."""
        for seq in sequences:
            for frame in seq.frames:
                for det in self._detectors:
                    if not any(
                        self.has(seq.sequence_id, frame.frame_index, det.detector_id, v)
                        for v in VARIANTS
                    ):
                        raise DatasetError(
                            f"no prediction for sequence={seq.sequence_id!r} "
                            f"frame={frame.frame_index} detector={det.detector_id!r}"
                        )


@dataclass(frozen=True)
class FoldManifest:
    """Assignment of training sequences to cross-validation folds."""

    fold_count: int
    assignment: Mapping[str, int]

    def __post_init__(self) -> None:
        object.__setattr__(self, "fold_count", int(self.fold_count))
        object.__setattr__(self, "assignment", dict(self.assignment))
        if self.fold_count < 1:
            raise DatasetError(f"fold count must be >= 1, got {self.fold_count}")
        for seq_id, fold in self.assignment.items():
            if not (0 <= int(fold) < self.fold_count):
                raise DatasetError(
                    f"sequence {seq_id!r} assigned to fold {fold}, "
                    f"outside [0, {self.fold_count})"
                )

    def fold_of(self, sequence_id: str) -> int:
        try:
            return int(self.assignment[sequence_id])
        except KeyError:
            raise DatasetError(
                f"sequence {sequence_id!r} missing from the fold manifest"
            ) from None

    @property
    def train_sequence_ids(self) -> tuple[str, ...]:
        return tuple(sorted(self.assignment))


def select_variant(manifest: FoldManifest, sequence_id: str, split: str) -> str:
    """Pick the prediction variant for a sequence given its split.

    Training sequences use the holdout variant (produced by a detector
    that never saw the sequence's fold); test sequences use the variant
    trained on the full training set. A training sequence absent from the
    manifest is an error.
    """
    if split == SPLIT_TEST:
        return FULLTRAIN
    if split == SPLIT_TRAIN:
        manifest.fold_of(sequence_id)  # raises if unassigned
        return HOLDOUT
    raise DatasetError(f"unknown split {split!r}")


# ---------------------------------------------------------------------------
# Canonical JSON encoding


def _dumps(obj) -> str:
    return json.dumps(obj, separators=(",", ":"), allow_nan=False)


def _box_to_json(box: BoundingBox) -> dict:
    return {
        "x_min": box.x_min,
        "y_min": box.y_min,
        "x_max": box.x_max,
        "y_max": box.y_max,
        "class_id": box.class_id,
    }


def _box_from_json(obj: dict, ctx: str) -> BoundingBox:
    try:
        return BoundingBox(
            obj["x_min"], obj["y_min"], obj["x_max"], obj["y_max"], obj["class_id"]
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise DatasetError(f"{ctx}: bad bounding box: {exc}") from None


def _observation_to_json(obs: ObservationPayload) -> dict:
    out: dict = {}
    if obs.feature_vector is not None:
        out["feature_vector"] = list(obs.feature_vector)
    if obs.gray_image is not None:
        out["gray_image"] = [[float(v) for v in row] for row in obs.gray_image]
    return out


def _observation_from_json(obj: dict, ctx: str) -> ObservationPayload:
    if not isinstance(obj, dict):
        raise DatasetError(f"{ctx}: observation must be an object")
    fv = obj.get("feature_vector")
    img = obj.get("gray_image")
    try:
        return ObservationPayload(
            feature_vector=tuple(fv) if fv is not None else None,
            gray_image=np.asarray(img, dtype=float) if img is not None else None,
        )
    except (DatasetError, TypeError, ValueError) as exc:
        raise DatasetError(f"{ctx}: bad observation: {exc}") from None


def frame_to_json_line(frame: FrameRecord) -> str:
    return _dumps(
        {
            "sequence_id": frame.sequence_id,
            "frame_index": frame.frame_index,
            "observation": _observation_to_json(frame.observation),
            "ground_truth": [_box_to_json(b) for b in frame.ground_truth],
        }
    )


def prediction_to_json_line(record: PredictionRecord) -> str:
    return _dumps(
        {
            "sequence_id": record.sequence_id,
            "frame_index": record.frame_index,
            "detector_id": record.detector_id,
            "variant": record.variant,
            "detections": [
                {"box": _box_to_json(d.box), "confidence": d.confidence}
                for d in record.detections
            ],
        }
    )


def _parse_jsonl(path: Path):
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                yield lineno, json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetError(f"{path}:{lineno}: invalid JSON: {exc}") from None


def save_sequences(path: Path | str, sequences: Iterable[Sequence]) -> None:
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        for seq in sequences:
            for frame in seq.frames:
                fh.write(frame_to_json_line(frame) + "\n")


def load_sequences(path: Path | str) -> list[Sequence]:
    """Load frame records and group them into validated sequences.

    Sequences come back sorted by id, frames sorted by index; gaps or
    duplicate indices raise with the offending location.
    """
    path = Path(path)
    frames_by_seq: dict[str, list[tuple[int, FrameRecord]]] = {}
    for lineno, obj in _parse_jsonl(path):
        ctx = f"{path}:{lineno}"
        try:
            seq_id = obj["sequence_id"]
            frame_index = int(obj["frame_index"])
            observation = _observation_from_json(obj["observation"], ctx)
            gts = tuple(_box_from_json(b, ctx) for b in obj["ground_truth"])
        except KeyError as exc:
            raise DatasetError(f"{ctx}: missing field {exc}") from None
        record = FrameRecord(seq_id, frame_index, observation, gts)
        frames_by_seq.setdefault(seq_id, []).append((lineno, record))

    sequences = []
    for seq_id in sorted(frames_by_seq):
        entries = sorted(frames_by_seq[seq_id], key=lambda e: e[1].frame_index)
        for pos, (lineno, record) in enumerate(entries):
            if record.frame_index != pos:
                raise DatasetError(
                    f"{path}:{lineno}: sequence {seq_id!r} has a gap: expected "
                    f"frame index {pos}, found {record.frame_index}"
                )
        sequences.append(Sequence(seq_id, tuple(r for _, r in entries)))
    return sequences


def save_predictions(path: Path | str, records: Iterable[PredictionRecord]) -> None:
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(prediction_to_json_line(record) + "\n")


def load_predictions(
    path: Path | str,
    store: PredictionStore,
    sequences: Iterable[Sequence],
) -> PredictionStore:
    """Ingest a prediction log into the store, validating frame references."""
    path = Path(path)
    lengths = {seq.sequence_id: len(seq) for seq in sequences}
    for lineno, obj in _parse_jsonl(path):
        ctx = f"{path}:{lineno}"
        try:
            seq_id = obj["sequence_id"]
            frame_index = int(obj["frame_index"])
            detector_id = obj["detector_id"]
            variant = obj["variant"]
            dets = obj["detections"]
        except KeyError as exc:
            raise DatasetError(f"{ctx}: missing field {exc}") from None
        if seq_id not in lengths:
            raise DatasetError(f"{ctx}: prediction references unknown sequence {seq_id!r}")
        if not (0 <= frame_index < lengths[seq_id]):
            raise DatasetError(
                f"{ctx}: frame {frame_index} outside sequence {seq_id!r} "
                f"(length {lengths[seq_id]})"
            )
        detections = DetectionSet(
            tuple(
                Detection(_box_from_json(d["box"], ctx), d["confidence"]) for d in dets
            )
        )
        try:
            store.add(seq_id, frame_index, detector_id, variant, detections)
        except DatasetError as exc:
            raise DatasetError(f"{ctx}: {exc}") from None
    return store


def save_detectors(path: Path | str, detectors: Iterable[DetectorSpec]) -> None:
    doc = {
        "version": 1,
        "detectors": [
            {
                "detector_id": d.detector_id,
                "modality": d.modality,
                "latency_frames": d.latency_frames,
            }
            for d in detectors
        ],
    }
    Path(path).write_text(_dumps(doc) + "\n", encoding="utf-8")


def load_detectors(path: Path | str) -> tuple[DetectorSpec, ...]:
    path = Path(path)
    doc = json.loads(path.read_text(encoding="utf-8"))
    if doc.get("version") != 1:
        raise DatasetError(f"{path}: unsupported detectors file version {doc.get('version')}")
    return tuple(
        DetectorSpec(d["detector_id"], d["modality"], d["latency_frames"])
        for d in doc["detectors"]
    )


def save_folds(path: Path | str, manifest: FoldManifest) -> None:
    doc = {
        "version": 1,
        "fold_count": manifest.fold_count,
        "assignment": {k: manifest.assignment[k] for k in sorted(manifest.assignment)},
    }
    Path(path).write_text(_dumps(doc) + "\n", encoding="utf-8")


def load_folds(path: Path | str) -> FoldManifest:
    path = Path(path)
    doc = json.loads(path.read_text(encoding="utf-8"))
    if doc.get("version") != 1:
        raise DatasetError(f"{path}: unsupported folds file version {doc.get('version')}")
    return FoldManifest(doc["fold_count"], doc["assignment"])


# ---------------------------------------------------------------------------
# Dataset bundle


FRAMES_FILE = "frames.jsonl"
DETECTORS_FILE = "detectors.json"
FOLDS_FILE = "folds.json"


def predictions_file(detector_id: str) -> str:
    return f"preds_{detector_id}.jsonl"


@dataclass(frozen=True)
class Dataset:
    """A loaded dataset directory: sequences, detectors, predictions, folds."""

    sequences: tuple[Sequence, ...]
    detectors: tuple[DetectorSpec, ...]
    store: PredictionStore
    folds: FoldManifest

    def __post_init__(self) -> None:
        by_id = {seq.sequence_id: seq for seq in self.sequences}
        object.__setattr__(self, "_by_id", by_id)
        for seq_id in self.folds.assignment:
            if seq_id not in by_id:
                raise DatasetError(
                    f"fold manifest references unknown sequence {seq_id!r}"
                )

    def sequence(self, sequence_id: str) -> Sequence:
        try:
            return self._by_id[sequence_id]
        except KeyError:
            raise DatasetError(f"unknown sequence {sequence_id!r}") from None

    @property
    def train_sequence_ids(self) -> tuple[str, ...]:
        return self.folds.train_sequence_ids

    @property
    def test_sequence_ids(self) -> tuple[str, ...]:
        assigned = set(self.folds.assignment)
        return tuple(
            seq.sequence_id for seq in self.sequences if seq.sequence_id not in assigned
        )


def load_dataset(directory: Path | str) -> Dataset:
    """Load and fully validate a dataset directory."""
    directory = Path(directory)
    detectors = load_detectors(directory / DETECTORS_FILE)
    sequences = load_sequences(directory / FRAMES_FILE)
    folds = load_folds(directory / FOLDS_FILE)
    store = PredictionStore(detectors)
    for det in detectors:
        load_predictions(directory / predictions_file(det.detector_id), store, sequences)
    store.validate_complete(sequences)
    return Dataset(tuple(sequences), detectors, store, folds)
