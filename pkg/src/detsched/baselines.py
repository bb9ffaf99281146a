"""Comparison policies: fixed, random, alternating, and a lighting heuristic.

Every policy here is deterministic given its constructor arguments: the
random policy reseeds per episode from (seed, sequence id), so replaying
an episode reproduces the identical action stream regardless of
evaluation order.
"""

from __future__ import annotations

import zlib
from typing import Mapping, Sequence

import numpy as np

from .env import EnvState

# Ten evenly spaced mean-intensity thresholds, endpoints included.
LIGHTING_THRESHOLD_COUNT = 10


class BasePolicy:
    def begin_episode(self, sequence_id: str) -> None:
        pass

    def act(self, state: EnvState) -> int:
        raise NotImplementedError


class FixedPolicy(BasePolicy):
    """Always picks the same detector."""

    def __init__(self, action: int):
        self.action = int(action)

    def act(self, state: EnvState) -> int:
        return self.action


class RandomPolicy(BasePolicy):
    """Uniform over an allowed action subset, seeded per episode."""

    def __init__(self, actions: Sequence[int], seed: int):
        if not actions:
            raise ValueError("random policy needs at least one allowed action")
        self.actions = tuple(int(a) for a in actions)
        self.seed = int(seed)
        self._rng = np.random.default_rng(self.seed)

    def begin_episode(self, sequence_id: str) -> None:
        episode_key = zlib.crc32(sequence_id.encode("utf-8"))
        self._rng = np.random.default_rng([self.seed, episode_key])

    def act(self, state: EnvState) -> int:
        return self.actions[int(self._rng.integers(len(self.actions)))]


class AlternatingPolicy(BasePolicy):
    """Cycles through a fixed action order, one advance per decision.

    Blocked frames do not advance the cycle; the counter resets at the
    start of every episode.
    """

    def __init__(self, order: Sequence[int]):
        if not order:
            raise ValueError("alternating policy needs a non-empty order")
        self.order = tuple(int(a) for a in order)
        self._next = 0

    def begin_episode(self, sequence_id: str) -> None:
        self._next = 0

    def act(self, state: EnvState) -> int:
        action = self.order[self._next % len(self.order)]
        self._next += 1
        return action


class LightingHeuristicPolicy(BasePolicy):
    """Picks by scene brightness: below the threshold use the dark action.

    Mean intensity is taken from the observation image when present,
    otherwise from the brightness feature, mapped to a 0..255 scale.
    """

    def __init__(self, threshold: float, dark_action: int, bright_action: int):
        if not (0.0 <= threshold <= 255.0):
            raise ValueError(f"threshold {threshold} outside [0, 255]")
        self.threshold = float(threshold)
        self.dark_action = int(dark_action)
        self.bright_action = int(bright_action)

    def act(self, state: EnvState) -> int:
        if state.observation.mean_intensity() < self.threshold:
            return self.dark_action
        return self.bright_action


def lighting_threshold_grid() -> tuple[float, ...]:
    """Ten evenly spaced thresholds between 0 and 255, endpoints included."""
    return tuple(float(t) for t in np.linspace(0.0, 255.0, LIGHTING_THRESHOLD_COUNT))


def usage_percentages(counts: Mapping[str, int]) -> dict[str, float]:
    """Selection shares per detector, in percent of decisions (not frames)."""
    total = sum(counts.values())
    if total == 0:
        return {key: 0.0 for key in counts}
    return {key: 100.0 * counts[key] / total for key in counts}


def sweep_lighting_thresholds(env, sequence_ids, dark_action: int, bright_action: int,
                              cache=None):
    """Evaluate the lighting heuristic at all ten thresholds.

    Returns (rows, best) where rows is the full score table and best maps
    each metric key to its (threshold, score) argmax. The threshold is
    fitted on the evaluation sequences themselves, so the result is an
    oracle for how much lighting alone can buy. Ties break toward the
    lower threshold.
    """
    from .evaluation import METRIC_KEYS, FrameApCache, evaluate_policy

    if cache is None:
        cache = FrameApCache(env)
    rows = []
    for threshold in lighting_threshold_grid():
        policy = LightingHeuristicPolicy(threshold, dark_action, bright_action)
        evaluation = evaluate_policy(
            env, policy, sequence_ids, f"lighting@{threshold:.2f}", cache
        )
        rows.append((threshold, dict(evaluation.metrics)))
    best: dict[str, tuple[float, float]] = {}
    for key in METRIC_KEYS:
        best_threshold, best_score = rows[0][0], rows[0][1][key]
        for threshold, metrics in rows[1:]:
            if metrics[key] > best_score:
                best_threshold, best_score = threshold, metrics[key]
        best[key] = (best_threshold, best_score)
    return rows, best
