"""Uniform replay over multi-step transitions."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Transition:
    """A multi-step transition.

    ``reward`` is the discounted sum of the next n one-step rewards and
    ``discount`` the matching bootstrap factor gamma^n (n shrinks at
    episode end). When ``done`` is set the bootstrap term is dropped
    entirely.
    """

    observation: np.ndarray
    action: int
    reward: float
    next_observation: np.ndarray
    done: bool
    discount: float


class ReplayBuffer:
    """Fixed-capacity ring buffer with seeded uniform sampling."""

    def __init__(self, capacity: int, seed):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = int(capacity)
        self._slots: list[Transition] = []
        self._cursor = 0
        self._rng = np.random.default_rng(seed)

    def add(self, transition: Transition) -> None:
        if len(self._slots) < self.capacity:
            self._slots.append(transition)
        else:
            self._slots[self._cursor] = transition
            self._cursor = (self._cursor + 1) % self.capacity

    def __len__(self) -> int:
        return len(self._slots)

    def sample(self, batch_size: int) -> list[Transition]:
        if not self._slots:
            raise ValueError("cannot sample from an empty buffer")
        idx = self._rng.integers(0, len(self._slots), size=int(batch_size))
        return [self._slots[i] for i in idx]


class NStepAccumulator:
    """Folds one-step experience into n-step transitions for one episode."""

    def __init__(self, n_step: int, gamma: float):
        if n_step < 1:
            raise ValueError("n_step must be >= 1")
        self.n_step = int(n_step)
        self.gamma = float(gamma)
        self._pending: deque[tuple[np.ndarray, int, float]] = deque()

    def _emit(self, next_observation: np.ndarray, done: bool) -> Transition:
        obs, action, _ = self._pending[0]
        reward = 0.0
        for j, (_, _, r) in enumerate(self._pending):
            reward += (self.gamma ** j) * r
        discount = self.gamma ** len(self._pending)
        self._pending.popleft()
        return Transition(obs, action, reward, next_observation, done, discount)

    def push(
        self,
        observation: np.ndarray,
        action: int,
        reward: float,
        next_observation: np.ndarray,
        done: bool,
    ) -> list[Transition]:
        """Record one step; returns the transitions that became complete."""
        self._pending.append((observation, int(action), float(reward)))
        out: list[Transition] = []
        if done:
            while self._pending:
                out.append(self._emit(next_observation, True))
        elif len(self._pending) == self.n_step:
            out.append(self._emit(next_observation, False))
        return out

    def reset(self) -> None:
        self._pending.clear()
