"""Seeded generator of desk-scale scheduling datasets.

Worlds are sequences of frames holding moving ground-truth boxes under a
piecewise-constant day/night and static/moving regime. Simulated
detectors turn ground truth into noisy prediction logs whose quality
depends on the regime: regime-dependent recall, Gaussian box jitter,
Poisson false positives, and confidence draws under which true
detections stochastically dominate false ones. The holdout variant of a
detector is the same process with degraded recall and inflated jitter,
standing in for a model that never saw the sequence during training.

Everything is a pure function of (config, seed); rerunning a generation
yields byte-identical files.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Sequence as SequenceType

import numpy as np

from . import datastore
from .datastore import (
    DetectorSpec,
    FoldManifest,
    FrameRecord,
    ObservationPayload,
    PredictionRecord,
    Sequence,
    FULLTRAIN,
    HOLDOUT,
)
from .metrics import BoundingBox, Detection, DetectionSet

DAY_NIGHT_SPLIT = 127.5  # mean intensity at or above this counts as day


class ScenarioError(ValueError):
    """Invalid scenario configuration; messages carry the offending field."""


@dataclass(frozen=True)
class DetectorModel:
    """Quality profile of one simulated detector."""

    detector_id: str
    modality: str
    latency_frames: int
    tp_rate_day: float
    tp_rate_night: float
    loc_noise_sigma: float
    fp_rate: float
    conf_true: tuple[float, float]
    conf_false: tuple[float, float]
    holdout_degradation: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "conf_true", tuple(float(v) for v in self.conf_true))
        object.__setattr__(self, "conf_false", tuple(float(v) for v in self.conf_false))
        for name in ("tp_rate_day", "tp_rate_night"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise ScenarioError(f"detector {self.detector_id!r}: {name}={v} outside [0, 1]")
        if self.loc_noise_sigma < 0.0:
            raise ScenarioError(f"detector {self.detector_id!r}: loc_noise_sigma must be >= 0")
        if self.fp_rate < 0.0:
            raise ScenarioError(f"detector {self.detector_id!r}: fp_rate must be >= 0")
        if self.holdout_degradation < 1.0:
            raise ScenarioError(
                f"detector {self.detector_id!r}: holdout_degradation must be >= 1"
            )
        for name in ("conf_true", "conf_false"):
            lo, hi = getattr(self, name)
            if not (0.0 <= lo <= hi <= 1.0):
                raise ScenarioError(f"detector {self.detector_id!r}: {name}=({lo}, {hi}) invalid")
        if self.latency_frames < 0:
            raise ScenarioError(f"detector {self.detector_id!r}: latency_frames must be >= 0")

    def spec(self) -> DetectorSpec:
        return DetectorSpec(self.detector_id, self.modality, self.latency_frames)


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    world_width: float
    world_height: float
    train_count: int
    test_count: int
    frames_per_sequence: int
    segment_frames: int
    day_brightness: float
    night_brightness: float
    day_fraction: float
    moving_fraction: float
    speed_min: float
    speed_max: float
    min_objects: int
    max_objects: int
    size_min: float
    size_max: float
    spawn_rate: float
    despawn_rate: float
    motion_jitter: float
    class_count: int
    detectors: tuple[DetectorModel, ...]
    fold_count: int
    master_seed: int
    emit_gray_images: bool = False
    emit_both_variants: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "detectors", tuple(self.detectors))
        for name in ("day_fraction", "moving_fraction", "spawn_rate", "despawn_rate"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise ScenarioError(f"{name}={v} outside [0, 1]")
        for name in ("day_brightness", "night_brightness"):
            v = getattr(self, name)
            if not (0.0 <= v <= 255.0):
                raise ScenarioError(f"{name}={v} outside [0, 255]")
        if not (0 < self.size_min <= self.size_max):
            raise ScenarioError(f"size_min/size_max=({self.size_min}, {self.size_max}) invalid")
        if self.size_max >= min(self.world_width, self.world_height):
            raise ScenarioError("size_max must be smaller than the world")
        if not (0 <= self.min_objects <= self.max_objects):
            raise ScenarioError(
                f"min_objects/max_objects=({self.min_objects}, {self.max_objects}) invalid"
            )
        if not (0.0 <= self.speed_min <= self.speed_max):
            raise ScenarioError(f"speed_min/speed_max=({self.speed_min}, {self.speed_max}) invalid")
        if self.frames_per_sequence < 1 or self.segment_frames < 1:
            raise ScenarioError("frames_per_sequence and segment_frames must be positive")
        if self.class_count < 1:
            raise ScenarioError(f"class_count={self.class_count} must be >= 1")
        if self.fold_count < 1:
            raise ScenarioError(f"fold_count={self.fold_count} must be >= 1")
        if not self.detectors:
            raise ScenarioError("detectors list must not be empty")
        ids = [d.detector_id for d in self.detectors]
        if len(set(ids)) != len(ids):
            raise ScenarioError("duplicate detector_id in detectors")

    def detector_specs(self) -> tuple[DetectorSpec, ...]:
        return tuple(d.spec() for d in self.detectors)


@dataclass(frozen=True)
class RegimeTrace:
    """Per-frame brightness (0..255) and motion speed (pixels per frame)."""

    brightness: np.ndarray
    motion: np.ndarray


# ---------------------------------------------------------------------------
# Scenario JSON


def _require_fields(obj: dict, allowed: set[str], ctx: str) -> None:
    unknown = set(obj) - allowed
    if unknown:
        raise ScenarioError(f"{ctx}: unknown fields {sorted(unknown)}")
    missing = allowed - set(obj)
    if missing:
        raise ScenarioError(f"{ctx}: missing fields {sorted(missing)}")


_DETECTOR_FIELDS = {f.name for f in fields(DetectorModel)}


def scenario_to_json(config: ScenarioConfig) -> dict:
    return {
        "version": 1,
        "name": config.name,
        "world": {"width": config.world_width, "height": config.world_height},
        "sequences": {
            "train_count": config.train_count,
            "test_count": config.test_count,
            "frames_per_sequence": config.frames_per_sequence,
            "segment_frames": config.segment_frames,
        },
        "regime": {
            "day_brightness": config.day_brightness,
            "night_brightness": config.night_brightness,
            "day_fraction": config.day_fraction,
            "moving_fraction": config.moving_fraction,
            "speed_min": config.speed_min,
            "speed_max": config.speed_max,
        },
        "objects": {
            "min_count": config.min_objects,
            "max_count": config.max_objects,
            "size_min": config.size_min,
            "size_max": config.size_max,
            "spawn_rate": config.spawn_rate,
            "despawn_rate": config.despawn_rate,
            "motion_jitter": config.motion_jitter,
            "class_count": config.class_count,
        },
        "detectors": [
            {
                "detector_id": d.detector_id,
                "modality": d.modality,
                "latency_frames": d.latency_frames,
                "tp_rate_day": d.tp_rate_day,
                "tp_rate_night": d.tp_rate_night,
                "loc_noise_sigma": d.loc_noise_sigma,
                "fp_rate": d.fp_rate,
                "conf_true": list(d.conf_true),
                "conf_false": list(d.conf_false),
                "holdout_degradation": d.holdout_degradation,
            }
            for d in config.detectors
        ],
        "fold_count": config.fold_count,
        "master_seed": config.master_seed,
        "emit_gray_images": config.emit_gray_images,
        "emit_both_variants": config.emit_both_variants,
    }


def scenario_from_json(doc: dict) -> ScenarioConfig:
    if doc.get("version") != 1:
        raise ScenarioError(f"unsupported scenario version {doc.get('version')!r}")
    _require_fields(
        doc,
        {"version", "name", "world", "sequences", "regime", "objects", "detectors",
         "fold_count", "master_seed", "emit_gray_images", "emit_both_variants"},
        "scenario",
    )
    _require_fields(doc["world"], {"width", "height"}, "world")
    _require_fields(
        doc["sequences"],
        {"train_count", "test_count", "frames_per_sequence", "segment_frames"},
        "sequences",
    )
    _require_fields(
        doc["regime"],
        {"day_brightness", "night_brightness", "day_fraction", "moving_fraction",
         "speed_min", "speed_max"},
        "regime",
    )
    _require_fields(
        doc["objects"],
        {"min_count", "max_count", "size_min", "size_max", "spawn_rate",
         "despawn_rate", "motion_jitter", "class_count"},
        "objects",
    )
    det_models = []
    for i, d in enumerate(doc["detectors"]):
        _require_fields(d, _DETECTOR_FIELDS, f"detectors[{i}]")
        det_models.append(
            DetectorModel(
                detector_id=d["detector_id"],
                modality=d["modality"],
                latency_frames=d["latency_frames"],
                tp_rate_day=d["tp_rate_day"],
                tp_rate_night=d["tp_rate_night"],
                loc_noise_sigma=d["loc_noise_sigma"],
                fp_rate=d["fp_rate"],
                conf_true=tuple(d["conf_true"]),
                conf_false=tuple(d["conf_false"]),
                holdout_degradation=d["holdout_degradation"],
            )
        )
    return ScenarioConfig(
        name=doc["name"],
        world_width=float(doc["world"]["width"]),
        world_height=float(doc["world"]["height"]),
        train_count=int(doc["sequences"]["train_count"]),
        test_count=int(doc["sequences"]["test_count"]),
        frames_per_sequence=int(doc["sequences"]["frames_per_sequence"]),
        segment_frames=int(doc["sequences"]["segment_frames"]),
        day_brightness=float(doc["regime"]["day_brightness"]),
        night_brightness=float(doc["regime"]["night_brightness"]),
        day_fraction=float(doc["regime"]["day_fraction"]),
        moving_fraction=float(doc["regime"]["moving_fraction"]),
        speed_min=float(doc["regime"]["speed_min"]),
        speed_max=float(doc["regime"]["speed_max"]),
        min_objects=int(doc["objects"]["min_count"]),
        max_objects=int(doc["objects"]["max_count"]),
        size_min=float(doc["objects"]["size_min"]),
        size_max=float(doc["objects"]["size_max"]),
        spawn_rate=float(doc["objects"]["spawn_rate"]),
        despawn_rate=float(doc["objects"]["despawn_rate"]),
        motion_jitter=float(doc["objects"]["motion_jitter"]),
        class_count=int(doc["objects"]["class_count"]),
        detectors=tuple(det_models),
        fold_count=int(doc["fold_count"]),
        master_seed=int(doc["master_seed"]),
        emit_gray_images=bool(doc["emit_gray_images"]),
        emit_both_variants=bool(doc["emit_both_variants"]),
    )


def load_scenario(path: Path | str) -> ScenarioConfig:
    return scenario_from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def save_scenario(path: Path | str, config: ScenarioConfig) -> None:
    doc = scenario_to_json(config)
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# World generation


def _seed_key(seed) -> list[int]:
    if isinstance(seed, (list, tuple)):
        return [int(s) for s in seed]
    return [int(seed)]


def regime_trace(config: ScenarioConfig, seed, sequence_index: int) -> RegimeTrace:
    """Deterministic per-frame brightness and motion waveform for one sequence."""
    rng = np.random.default_rng(_seed_key(seed) + [0, int(sequence_index)])
    length = config.frames_per_sequence
    brightness = np.empty(length)
    motion = np.empty(length)
    n_segments = math.ceil(length / config.segment_frames)
    for s in range(n_segments):
        is_day = rng.random() < config.day_fraction
        is_moving = rng.random() < config.moving_fraction
        speed = rng.uniform(config.speed_min, config.speed_max) if is_moving else 0.0
        lo = s * config.segment_frames
        hi = min(length, lo + config.segment_frames)
        brightness[lo:hi] = config.day_brightness if is_day else config.night_brightness
        motion[lo:hi] = speed
    return RegimeTrace(brightness, motion)


@dataclass
class _WorldObject:
    cx: float
    cy: float
    width: float
    height: float
    dir_x: float
    dir_y: float
    speed_factor: float
    class_id: int

    def box(self) -> BoundingBox:
        return BoundingBox(
            self.cx - self.width / 2.0,
            self.cy - self.height / 2.0,
            self.cx + self.width / 2.0,
            self.cy + self.height / 2.0,
            self.class_id,
        )


def _spawn_object(rng: np.random.Generator, config: ScenarioConfig) -> _WorldObject:
    width = rng.uniform(config.size_min, config.size_max)
    height = rng.uniform(config.size_min, config.size_max)
    cx = rng.uniform(width / 2.0, config.world_width - width / 2.0)
    cy = rng.uniform(height / 2.0, config.world_height - height / 2.0)
    angle = rng.uniform(0.0, 2.0 * math.pi)
    return _WorldObject(
        cx=cx,
        cy=cy,
        width=width,
        height=height,
        dir_x=math.cos(angle),
        dir_y=math.sin(angle),
        speed_factor=rng.uniform(0.7, 1.3),
        class_id=int(rng.integers(config.class_count)),
    )


def _advance(obj: _WorldObject, speed: float, jitter: float,
             rng: np.random.Generator, config: ScenarioConfig) -> None:
    if speed <= 0.0:
        return
    step = speed * obj.speed_factor
    dx = obj.dir_x * step + rng.uniform(-jitter, jitter)
    dy = obj.dir_y * step + rng.uniform(-jitter, jitter)
    obj.cx += dx
    obj.cy += dy
    # Reflect at the borders so boxes stay fully inside the world.
    lo_x, hi_x = obj.width / 2.0, config.world_width - obj.width / 2.0
    lo_y, hi_y = obj.height / 2.0, config.world_height - obj.height / 2.0
    if obj.cx < lo_x:
        obj.cx = lo_x + (lo_x - obj.cx)
        obj.dir_x = -obj.dir_x
    elif obj.cx > hi_x:
        obj.cx = hi_x - (obj.cx - hi_x)
        obj.dir_x = -obj.dir_x
    if obj.cy < lo_y:
        obj.cy = lo_y + (lo_y - obj.cy)
        obj.dir_y = -obj.dir_y
    elif obj.cy > hi_y:
        obj.cy = hi_y - (obj.cy - hi_y)
        obj.dir_y = -obj.dir_y
    obj.cx = float(np.clip(obj.cx, lo_x, hi_x))
    obj.cy = float(np.clip(obj.cy, lo_y, hi_y))


def _render_gray_image(boxes: SequenceType[BoundingBox], brightness: float,
                       config: ScenarioConfig) -> np.ndarray:
    size = datastore.IMAGE_SIZE
    background = brightness / 255.0
    contrast = 0.2 if background >= 0.5 else -0.2
    img = np.full((size, size), background)
    sx = size / config.world_width
    sy = size / config.world_height
    for box in boxes:
        x0 = int(np.clip(math.floor(box.x_min * sx), 0, size - 1))
        x1 = int(np.clip(math.ceil(box.x_max * sx), 1, size))
        y0 = int(np.clip(math.floor(box.y_min * sy), 0, size - 1))
        y1 = int(np.clip(math.ceil(box.y_max * sy), 1, size))
        img[y0:y1, x0:x1] = np.clip(background - contrast, 0.0, 1.0)
    # Quantized so serialized files stay compact.
    return np.round(img, 3)


def _sequence_ids(config: ScenarioConfig) -> tuple[list[str], list[str]]:
    train = [f"train-{i:03d}" for i in range(config.train_count)]
    test = [f"test-{i:03d}" for i in range(config.test_count)]
    return train, test


def generate_world(config: ScenarioConfig, seed) -> list[Sequence]:
    """Generate ground truth and observations for every sequence.

    Training sequences come first ("train-XXX"), then test ("test-XXX");
    the output is fully determined by (config, seed).
    """
    train_ids, test_ids = _sequence_ids(config)
    sequences: list[Sequence] = []
    for index, seq_id in enumerate(train_ids + test_ids):
        trace = regime_trace(config, seed, index)
        rng = np.random.default_rng(_seed_key(seed) + [1, index])
        count = int(rng.integers(config.min_objects, config.max_objects + 1))
        objects = [_spawn_object(rng, config) for _ in range(count)]
        frames: list[FrameRecord] = []
        for frame_index in range(config.frames_per_sequence):
            if frame_index > 0:
                speed = float(trace.motion[frame_index])
                for obj in objects:
                    _advance(obj, speed, config.motion_jitter, rng, config)
                if config.despawn_rate > 0.0 and len(objects) > config.min_objects:
                    if rng.random() < config.despawn_rate:
                        objects.pop(int(rng.integers(len(objects))))
                if config.spawn_rate > 0.0 and len(objects) < config.max_objects:
                    if rng.random() < config.spawn_rate:
                        objects.append(_spawn_object(rng, config))
            boxes = tuple(obj.box() for obj in objects)
            brightness = float(trace.brightness[frame_index])
            count_noise = float(rng.normal(0.0, 0.3))
            feature_vector = (
                brightness / 255.0,
                float(trace.motion[frame_index]) / 10.0,
                max(0.0, (len(boxes) + count_noise) / 10.0),
            )
            gray = _render_gray_image(boxes, brightness, config) if config.emit_gray_images else None
            observation = ObservationPayload(feature_vector=feature_vector, gray_image=gray)
            frames.append(FrameRecord(seq_id, frame_index, observation, boxes))
        sequences.append(Sequence(seq_id, tuple(frames)))
    return sequences


def build_fold_manifest(config: ScenarioConfig) -> FoldManifest:
    """Round-robin assignment of the training sequences to folds."""
    train_ids, _ = _sequence_ids(config)
    return FoldManifest(
        config.fold_count, {seq_id: i % config.fold_count for i, seq_id in enumerate(train_ids)}
    )


# ---------------------------------------------------------------------------
# Detector simulation


def _sanitize_box(x0: float, y0: float, x1: float, y1: float,
                  width: float, height: float, class_id: int) -> BoundingBox:
    lo_x, hi_x = min(x0, x1), max(x0, x1)
    lo_y, hi_y = min(y0, y1), max(y0, y1)
    lo_x = float(np.clip(lo_x, 0.0, width - 1.0))
    lo_y = float(np.clip(lo_y, 0.0, height - 1.0))
    hi_x = float(np.clip(hi_x, lo_x + 1.0, width))
    hi_y = float(np.clip(hi_y, lo_y + 1.0, height))
    return BoundingBox(lo_x, lo_y, hi_x, hi_y, class_id)


def simulate_detector(
    config: ScenarioConfig,
    sequences: SequenceType[Sequence],
    model: DetectorModel,
    variant: str,
    seed,
) -> list[PredictionRecord]:
    """Prediction log of one simulated detector over the sequences.

    The holdout variant divides the true-positive rate and multiplies the
    localization noise by the model's degradation factor, with draws
    independent of the fulltrain variant.
    """
    if variant not in (HOLDOUT, FULLTRAIN):
        raise ScenarioError(f"unknown variant {variant!r}")
    degrade = model.holdout_degradation if variant == HOLDOUT else 1.0
    records: list[PredictionRecord] = []
    for index, seq in enumerate(sequences):
        rng = np.random.default_rng(_seed_key(seed) + [int(index)])
        for frame in seq.frames:
            is_day = frame.observation.mean_intensity() >= DAY_NIGHT_SPLIT
            tp_rate = (model.tp_rate_day if is_day else model.tp_rate_night) / degrade
            sigma = model.loc_noise_sigma * degrade
            detections: list[Detection] = []
            for gt in frame.ground_truth:
                if rng.random() >= tp_rate:
                    continue
                noise = rng.normal(0.0, sigma, size=4) if sigma > 0.0 else np.zeros(4)
                box = _sanitize_box(
                    gt.x_min + noise[0], gt.y_min + noise[1],
                    gt.x_max + noise[2], gt.y_max + noise[3],
                    config.world_width, config.world_height, gt.class_id,
                )
                detections.append(Detection(box, rng.uniform(*model.conf_true)))
            for _ in range(int(rng.poisson(model.fp_rate))):
                w = rng.uniform(config.size_min, config.size_max)
                h = rng.uniform(config.size_min, config.size_max)
                x0 = rng.uniform(0.0, config.world_width - w)
                y0 = rng.uniform(0.0, config.world_height - h)
                cls = int(rng.integers(config.class_count))
                box = _sanitize_box(x0, y0, x0 + w, y0 + h,
                                    config.world_width, config.world_height, cls)
                detections.append(Detection(box, rng.uniform(*model.conf_false)))
            records.append(
                PredictionRecord(
                    seq.sequence_id, frame.frame_index, model.detector_id,
                    variant, DetectionSet(tuple(detections)),
                )
            )
    return records


# ---------------------------------------------------------------------------
# Dataset orchestration


def generate_dataset(config: ScenarioConfig, out_dir: Path | str, seed: int | None = None) -> dict:
    """Write a complete dataset directory and validate it end to end."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if seed is None:
        seed = config.master_seed
    sequences = generate_world(config, seed)
    train_ids, test_ids = _sequence_ids(config)
    train_set = set(train_ids)
    by_split = {
        HOLDOUT: [s for s in sequences if s.sequence_id in train_set],
        FULLTRAIN: [s for s in sequences if s.sequence_id not in train_set],
    }
    if config.emit_both_variants:
        by_split = {HOLDOUT: list(sequences), FULLTRAIN: list(sequences)}

    datastore.save_sequences(out_dir / datastore.FRAMES_FILE, sequences)
    datastore.save_detectors(out_dir / datastore.DETECTORS_FILE, config.detector_specs())
    datastore.save_folds(out_dir / datastore.FOLDS_FILE, build_fold_manifest(config))

    prediction_count = 0
    for det_index, model in enumerate(config.detectors):
        records: list[PredictionRecord] = []
        for variant_code, variant in enumerate((FULLTRAIN, HOLDOUT)):
            subset = by_split[variant]
            if not subset:
                continue
            records.extend(
                simulate_detector(
                    config, subset, model, variant,
                    _seed_key(seed) + [2, det_index, variant_code],
                )
            )
        datastore.save_predictions(
            out_dir / datastore.predictions_file(model.detector_id), records
        )
        prediction_count += len(records)

    dataset = datastore.load_dataset(out_dir)
    return {
        "sequences": len(dataset.sequences),
        "train_sequences": len(dataset.train_sequence_ids),
        "test_sequences": len(dataset.test_sequence_ids),
        "frames": sum(len(s) for s in dataset.sequences),
        "detectors": len(dataset.detectors),
        "prediction_records": prediction_count,
    }


def build_paper_shaped_scenario() -> ScenarioConfig:
    """The bundled ``diurnal-v1`` scenario.

    Four detectors over two modalities with the latency split {0, 0, 3, 3}:
    a fast camera model that collapses at night, a modest
    regime-insensitive fast lidar model, a slow camera model that is the
    strongest in daylight, and a deliberately weak slow lidar model.
    Sequences alternate day/night and static/moving segments, so no single
    detector wins everywhere and cheap holding pays off only in static
    segments.
    """
    return ScenarioConfig(
        name="diurnal-v1",
        world_width=480.0,
        world_height=480.0,
        train_count=30,
        test_count=50,
        frames_per_sequence=200,
        segment_frames=40,
        day_brightness=200.0,
        night_brightness=30.0,
        day_fraction=0.5,
        moving_fraction=0.35,
        speed_min=3.0,
        speed_max=6.0,
        min_objects=6,
        max_objects=10,
        size_min=32.0,
        size_max=72.0,
        spawn_rate=0.02,
        despawn_rate=0.02,
        motion_jitter=0.8,
        class_count=2,
        detectors=(
            DetectorModel(
                detector_id="fast-rgb", modality="rgb", latency_frames=0,
                tp_rate_day=0.88, tp_rate_night=0.10, loc_noise_sigma=3.0,
                fp_rate=0.4, conf_true=(0.55, 0.95), conf_false=(0.05, 0.45),
                holdout_degradation=1.15,
            ),
            DetectorModel(
                detector_id="fast-lidar", modality="lidar", latency_frames=0,
                tp_rate_day=0.58, tp_rate_night=0.58, loc_noise_sigma=4.2,
                fp_rate=0.5, conf_true=(0.55, 0.95), conf_false=(0.05, 0.45),
                holdout_degradation=1.15,
            ),
            DetectorModel(
                detector_id="slow-rgb", modality="rgb", latency_frames=3,
                tp_rate_day=0.98, tp_rate_night=0.22, loc_noise_sigma=1.0,
                fp_rate=0.1, conf_true=(0.55, 0.95), conf_false=(0.05, 0.45),
                holdout_degradation=1.15,
            ),
            DetectorModel(
                detector_id="slow-lidar", modality="lidar", latency_frames=3,
                tp_rate_day=0.2, tp_rate_night=0.22, loc_noise_sigma=9.0,
                fp_rate=2.5, conf_true=(0.55, 0.95), conf_false=(0.05, 0.6),
                holdout_degradation=1.15,
            ),
        ),
        fold_count=5,
        master_seed=20240501,
        emit_gray_images=False,
        emit_both_variants=False,
    )
