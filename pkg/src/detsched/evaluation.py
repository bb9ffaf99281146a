"""Rollout scoring shared by the CLI, the baselines, and the tests.

A policy is rolled through the environment once; every frame's effective
prediction provenance (which detector's output from which source frame,
or nothing) is recorded and then scored at all ten IoU thresholds in one
pass. A cache keyed on provenance makes sweeps over many policies cheap,
since held predictions repeat heavily.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .env import Policy, SchedulingEnv
from .metrics import COCO_IOU_THRESHOLDS, EMPTY_DETECTIONS, ap_at_thresholds

METRIC_KEYS = ("ap@0.7", "ap@0.5", "ap@0.5:0.95")

_IDX_05 = COCO_IOU_THRESHOLDS.index(0.5)
_IDX_07 = COCO_IOU_THRESHOLDS.index(0.7)


class FrameApCache:
    """Memoizes the ten-threshold AP row of (provenance, frame) pairs."""

    def __init__(self, env: SchedulingEnv):
        self.env = env
        self._memo: dict[tuple[str, str | None, int | None, int], np.ndarray] = {}

    def coco_aps(
        self,
        sequence_id: str,
        frame_index: int,
        detector_id: str | None,
        source_frame: int | None,
    ) -> np.ndarray:
        key = (sequence_id, detector_id, source_frame, frame_index)
        row = self._memo.get(key)
        if row is None:
            if detector_id is None:
                dets = EMPTY_DETECTIONS
            else:
                dets = self.env.dataset.store.get(
                    sequence_id, source_frame, detector_id,
                    self.env.variant_for(sequence_id),
                )
            gts = self.env.dataset.sequence(sequence_id).frames[frame_index].ground_truth
            row = ap_at_thresholds(dets, gts, COCO_IOU_THRESHOLDS)
            self._memo[key] = row
        return row


@dataclass
class PolicyEvaluation:
    name: str
    portfolio: tuple[str, ...]
    frame_count: int
    decision_count: int
    metrics: dict[str, float]
    usage_counts: dict[str, int]

    def usage_percentages(self) -> dict[str, float]:
        total = max(1, self.decision_count)
        return {k: 100.0 * v / total for k, v in self.usage_counts.items()}


def evaluate_policy(
    env: SchedulingEnv,
    policy: Policy,
    sequence_ids,
    name: str,
    cache: FrameApCache | None = None,
) -> PolicyEvaluation:
    """Mean per-frame AP of a policy over the given sequences.

    Scores are reported at IoU 0.7, 0.5, and averaged over 0.5:0.95; the
    empty-frame rule applies at every threshold. Usage counts decisions,
    not frames.
    """
    if cache is None:
        cache = FrameApCache(env)
    portfolio = tuple(d.detector_id for d in env.config.detectors)
    usage = {detector_id: 0 for detector_id in portfolio}
    totals = np.zeros(len(COCO_IOU_THRESHOLDS))
    frame_count = 0
    decision_count = 0
    for seq_id in sequence_ids:
        policy.begin_episode(seq_id)
        state = env.reset(seq_id)
        while state is not None:
            action = policy.act(state)
            usage[portfolio[action]] += 1
            decision_count += 1
            result = env.step(state, action)
            for score in result.breakdown:
                totals += cache.coco_aps(
                    seq_id, score.frame_index, score.detector_id, score.source_frame
                )
                frame_count += 1
            state = result.next_state
    means = totals / max(1, frame_count)
    metrics = {
        "ap@0.7": float(means[_IDX_07]),
        "ap@0.5": float(means[_IDX_05]),
        "ap@0.5:0.95": float(means.mean()),
    }
    return PolicyEvaluation(name, portfolio, frame_count, decision_count, metrics, usage)
