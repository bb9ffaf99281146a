"""detsched: latency-aware scheduling of object detectors over video.

A simulator, a per-frame average-precision metrics suite, hand-crafted
baselines, and a distributional Q-learning agent that picks, frame by
frame, which detector from a portfolio should produce the next
prediction while slower detectors block and their last output is held.
"""

from .metrics import (
    BoundingBox,
    COCO_IOU_THRESHOLDS,
    Detection,
    DetectionSet,
    EMPTY_DETECTIONS,
    IouThresholdSpec,
    ap_image,
    iou,
    match_greedy,
    mean_ap_per_frame,
)
from .datastore import (
    Dataset,
    DatasetError,
    DetectorSpec,
    FoldManifest,
    FrameRecord,
    MissingPredictionError,
    ObservationPayload,
    PredictionRecord,
    PredictionStore,
    Sequence,
    load_dataset,
    select_variant,
)
from .env import (
    EnvConfig,
    EnvError,
    EnvState,
    FrameScore,
    HeldPrediction,
    SchedulingEnv,
    StepResult,
    optimal_return_dp,
)

__version__ = "0.1.0"
