"""Sequential decision process for latency-aware detector scheduling.

Each recorded sequence is one episode. At decision frame ``t`` the agent
picks a detector; a detector with latency ``k`` blocks the next ``k``
frames, during which the most recent completed prediction is held and
scored unchanged against the newer frames' ground truth. The step reward
is the sum of the per-frame AP values of the window:

    reward = AP(frame t, chosen detector's output for frame t)
           + sum over i in 1..k of AP(frame t+i, held output)

where the held output is the detection set produced by the previously
chosen detector for its own query frame (an empty set at episode start).
The cursor then advances to ``t + k + 1`` and the just-queried output
becomes the held prediction.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Protocol

import numpy as np

from .datastore import (
    Dataset,
    DetectorSpec,
    ObservationPayload,
    Sequence,
    select_variant,
)
from .metrics import DetectionSet, EMPTY_DETECTIONS, IouThresholdSpec, ap_image

CREDIT_QUERY = "query"
CREDIT_ARRIVAL = "arrival"


class EnvError(RuntimeError):
    """Invalid interaction with the environment (e.g. stepping a terminal state)."""


@dataclass(frozen=True)
class EnvConfig:
    """Environment parameters.

    ``detectors`` fixes the action order: action ``i`` selects
    ``detectors[i]``. ``split`` decides which prediction variant backs the
    rewards (train -> holdout, test -> fulltrain). With
    ``reward_empty_frame_rule`` on, frames without ground truth score 1.0
    for an empty prediction and 0.0 otherwise; with it off they always
    score 0.0. ``credit_mode`` 'query' credits the fresh output at its
    query frame (default); 'arrival' credits it k frames later, when it
    physically becomes available.
    """

    detectors: tuple[DetectorSpec, ...]
    reward_iou: IouThresholdSpec
    split: str
    reward_empty_frame_rule: bool = True
    credit_mode: str = CREDIT_QUERY
    include_held_age: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "detectors", tuple(self.detectors))
        if not self.detectors:
            raise ValueError("need at least one detector")
        if self.credit_mode not in (CREDIT_QUERY, CREDIT_ARRIVAL):
            raise ValueError(f"unknown credit mode {self.credit_mode!r}")

    @property
    def action_count(self) -> int:
        return len(self.detectors)


@dataclass(frozen=True)
class HeldPrediction:
    """Provenance of the most recent completed detector output."""

    detector_id: str
    source_frame: int


@dataclass(frozen=True)
class EnvState:
    sequence_id: str
    cursor: int
    held: HeldPrediction | None
    observation: ObservationPayload


@dataclass(frozen=True)
class FrameScore:
    """AP of one frame together with the provenance of the scored output."""

    frame_index: int
    detector_id: str | None
    source_frame: int | None
    ap: float


@dataclass(frozen=True)
class StepResult:
    reward: float
    next_state: EnvState | None
    frames_consumed: int
    breakdown: tuple[FrameScore, ...]


class Policy(Protocol):
    """Anything that can pick actions during an episode rollout."""

    def begin_episode(self, sequence_id: str) -> None: ...

    def act(self, state: EnvState) -> int: ...


class SchedulingEnv:
    """Deterministic environment over a loaded dataset.

    Instances are single-threaded, but many instances may share one
    dataset concurrently since all lookups are read-only.
    """

    def __init__(self, dataset: Dataset, config: EnvConfig):
        self.dataset = dataset
        self.config = config
        known = {d.detector_id for d in dataset.detectors}
        for det in config.detectors:
            if det.detector_id not in known:
                raise ValueError(f"detector {det.detector_id!r} not in the dataset")

    @property
    def action_count(self) -> int:
        return self.config.action_count

    def variant_for(self, sequence_id: str) -> str:
        return select_variant(self.dataset.folds, sequence_id, self.config.split)

    def _sequence(self, sequence: Sequence | str) -> Sequence:
        if isinstance(sequence, str):
            return self.dataset.sequence(sequence)
        return sequence

    def reset(self, sequence: Sequence | str) -> EnvState:
        seq = self._sequence(sequence)
        return EnvState(
            sequence_id=seq.sequence_id,
            cursor=0,
            held=None,
            observation=seq.frames[0].observation,
        )

    def _frame_ap(self, detections: DetectionSet, gts) -> float:
        if not self.config.reward_empty_frame_rule and len(gts) == 0:
            return 0.0
        return ap_image(detections, gts, self.config.reward_iou)

    def _held_detections(self, sequence_id: str, held: HeldPrediction | None) -> DetectionSet:
        if held is None:
            return EMPTY_DETECTIONS
        return self.dataset.store.get(
            sequence_id, held.source_frame, held.detector_id, self.variant_for(sequence_id)
        )

    def step(self, state: EnvState, action: int) -> StepResult:
        seq = self.dataset.sequence(state.sequence_id)
        if state.cursor >= len(seq):
            raise EnvError(f"episode over at frame {state.cursor}, cannot step")
        if not (0 <= action < self.action_count):
            raise EnvError(f"action {action} outside [0, {self.action_count})")

        detector = self.config.detectors[action]
        k = detector.latency_frames
        variant = self.variant_for(state.sequence_id)
        fresh = self.dataset.store.get(
            state.sequence_id, state.cursor, detector.detector_id, variant
        )
        held_dets = self._held_detections(state.sequence_id, state.held)

        breakdown: list[FrameScore] = []
        if self.config.credit_mode == CREDIT_QUERY:
            gts = seq.frames[state.cursor].ground_truth
            breakdown.append(
                FrameScore(
                    state.cursor,
                    detector.detector_id,
                    state.cursor,
                    self._frame_ap(fresh, gts),
                )
            )
            for i in range(1, k + 1):
                frame = state.cursor + i
                if frame >= len(seq):
                    break
                breakdown.append(
                    FrameScore(
                        frame,
                        state.held.detector_id if state.held else None,
                        state.held.source_frame if state.held else None,
                        self._frame_ap(held_dets, seq.frames[frame].ground_truth),
                    )
                )
        else:
            # Arrival credit: the held output covers frames t..t+k-1, the
            # fresh output (computed from frame t) is scored where it lands.
            for i in range(k):
                frame = state.cursor + i
                if frame >= len(seq):
                    break
                breakdown.append(
                    FrameScore(
                        frame,
                        state.held.detector_id if state.held else None,
                        state.held.source_frame if state.held else None,
                        self._frame_ap(held_dets, seq.frames[frame].ground_truth),
                    )
                )
            landing = state.cursor + k
            if landing < len(seq):
                breakdown.append(
                    FrameScore(
                        landing,
                        detector.detector_id,
                        state.cursor,
                        self._frame_ap(fresh, seq.frames[landing].ground_truth),
                    )
                )

        reward = float(sum(score.ap for score in breakdown))
        next_cursor = state.cursor + k + 1
        frames_consumed = min(k + 1, len(seq) - state.cursor)
        if next_cursor >= len(seq):
            next_state = None
        else:
            next_state = EnvState(
                sequence_id=state.sequence_id,
                cursor=next_cursor,
                held=HeldPrediction(detector.detector_id, state.cursor),
                observation=seq.frames[next_cursor].observation,
            )
        return StepResult(reward, next_state, frames_consumed, tuple(breakdown))

    def state_features(self, state: EnvState) -> np.ndarray:
        """Observation features, optionally extended with held-prediction age."""
        base = np.asarray(state.observation.features(), dtype=float)
        if not self.config.include_held_age:
            return base
        if state.held is None:
            extra = np.array([0.0, 1.0])
        else:
            extra = np.array([(state.cursor - state.held.source_frame) / 10.0, 0.0])
        return np.concatenate([base, extra])

    def episode_return(
        self, policy: Policy, sequence: Sequence | str
    ) -> tuple[float, list[float]]:
        """Roll out a policy; returns (total reward, per-frame AP list).

        The per-frame list has exactly one entry per frame of the sequence.
        """
        seq = self._sequence(sequence)
        policy.begin_episode(seq.sequence_id)
        state = self.reset(seq)
        per_frame: list[float] = []
        total = 0.0
        while state is not None:
            result = self.step(state, policy.act(state))
            total += result.reward
            per_frame.extend(score.ap for score in result.breakdown)
            state = result.next_state
        if len(per_frame) != len(seq):
            raise EnvError(
                f"breakdown covered {len(per_frame)} frames, expected {len(seq)}"
            )
        return total, per_frame


def _reward_fn(env: SchedulingEnv, seq: Sequence) -> Callable[[int, HeldPrediction | None, int], float]:
    """Step reward as a function of (cursor, held, action), memoized per frame."""
    variant = env.variant_for(seq.sequence_id)
    store = env.dataset.store
    ap_memo: dict[tuple[str | None, int | None, int], float] = {}

    def frame_ap(detector_id: str | None, source_frame: int | None, frame: int) -> float:
        key = (detector_id, source_frame, frame)
        if key not in ap_memo:
            if detector_id is None:
                dets = EMPTY_DETECTIONS
            else:
                dets = store.get(seq.sequence_id, source_frame, detector_id, variant)
            ap_memo[key] = env._frame_ap(dets, seq.frames[frame].ground_truth)
        return ap_memo[key]

    def reward(cursor: int, held: HeldPrediction | None, action: int) -> float:
        detector = env.config.detectors[action]
        k = detector.latency_frames
        held_id = held.detector_id if held else None
        held_src = held.source_frame if held else None
        if env.config.credit_mode == CREDIT_QUERY:
            total = frame_ap(detector.detector_id, cursor, cursor)
            for i in range(1, k + 1):
                if cursor + i >= len(seq):
                    break
                total += frame_ap(held_id, held_src, cursor + i)
        else:
            total = 0.0
            for i in range(k):
                if cursor + i >= len(seq):
                    break
                total += frame_ap(held_id, held_src, cursor + i)
            if cursor + k < len(seq):
                total += frame_ap(detector.detector_id, cursor, cursor + k)
        return total

    return reward


def optimal_return_dp(env: SchedulingEnv, sequence: Sequence | str) -> float:
    """Exact maximum episode return, by dynamic programming over (cursor, held).

    Requires full knowledge of every detector's stored predictions, so this
    is an oracle for regret measurements, not something a causal policy
    could realize.
    """
    seq = env._sequence(sequence)
    reward = _reward_fn(env, seq)
    value = _dp_values(env, seq, reward)
    return value[(0, None)]


def _dp_values(env, seq, reward):
    detectors = env.config.detectors
    length = len(seq)

    def helds_at(cursor: int) -> list[HeldPrediction | None]:
        # The held output at a decision frame always originates from the
        # previous decision frame, which sits latency+1 frames back.
        out: list[HeldPrediction | None] = []
        if cursor == 0:
            out.append(None)
        for action, det in enumerate(detectors):
            src = cursor - det.latency_frames - 1
            if src >= 0:
                out.append(HeldPrediction(det.detector_id, src))
        return out

    value: dict[tuple[int, HeldPrediction | None], float] = {}
    for cursor in range(length - 1, -1, -1):
        for held in helds_at(cursor):
            best = -np.inf
            for action, det in enumerate(detectors):
                r = reward(cursor, held, action)
                nxt = cursor + det.latency_frames + 1
                cont = value[(nxt, HeldPrediction(det.detector_id, cursor))] if nxt < length else 0.0
                total = r + cont
                if total > best:
                    best = total
            value[(cursor, held)] = best
    return value


def optimal_action_trace(env: SchedulingEnv, sequence: Sequence | str) -> list[int]:
    """One optimal action sequence (ties broken toward the lower action index)."""
    seq = env._sequence(sequence)
    reward = _reward_fn(env, seq)
    value = _dp_values(env, seq, reward)
    actions: list[int] = []
    cursor, held = 0, None
    while cursor < len(seq):
        best_action, best_total = 0, -np.inf
        for action, det in enumerate(env.config.detectors):
            nxt = cursor + det.latency_frames + 1
            cont = value[(nxt, HeldPrediction(det.detector_id, cursor))] if nxt < len(seq) else 0.0
            total = reward(cursor, held, action) + cont
            if total > best_total:
                best_total = total
                best_action = action
        actions.append(best_action)
        det = env.config.detectors[best_action]
        held = HeldPrediction(det.detector_id, cursor)
        cursor += det.latency_frames + 1
    return actions
