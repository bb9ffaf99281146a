"""Training loop for the distributional Q-learning scheduler.

Rainbow-style ingredients, minus prioritized replay and noisy layers:
multi-step returns, a categorical value head trained by cross-entropy to
the projected Bellman target, double-Q action selection for the
bootstrap, a periodically synced target network, uniform replay, and
epsilon-greedy exploration with a linear decay.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence as SequenceType

import numpy as np

from .distribution import atom_support, cross_entropy, project_batch
from .network import Adam, Approximator, ArchitectureSpec, softmax
from .replay import NStepAccumulator, ReplayBuffer, Transition


class DivergenceError(RuntimeError):
    """Training produced non-finite numbers; aborted rather than clipped."""


@dataclass(frozen=True)
class TrainSchedule:
    """Hyperparameters of one training run.

    Defaults follow the full-scale protocol (300k steps, epsilon decayed
    1.0 -> 0.01 across the run, target sync every 8000 steps, learning
    after 20000 warmup transitions, batch 32, 3-step returns, gamma 0.99,
    Adam at 6.25e-5, learning every 4th step); desk-scale runs override
    them via a config file.
    """

    total_steps: int = 300_000
    epsilon_start: float = 1.0
    epsilon_end: float = 0.01
    epsilon_decay_steps: int | None = None  # None -> total_steps
    target_sync_period: int = 8_000
    warmup_transitions: int = 20_000
    batch_size: int = 32
    learn_period: int = 4
    n_step: int = 3
    discount: float = 0.99
    learning_rate: float = 6.25e-5
    replay_capacity: int = 100_000
    hidden_sizes: tuple[int, ...] = (128, 128)
    n_atoms: int = 51
    v_min: float = 0.0
    v_max: float = 20.0
    dueling: bool = False
    log_period: int = 100

    def __post_init__(self) -> None:
        object.__setattr__(self, "hidden_sizes", tuple(int(h) for h in self.hidden_sizes))
        if self.total_steps < 1:
            raise ValueError("total_steps must be positive")
        if not (0.0 <= self.epsilon_end <= self.epsilon_start <= 1.0):
            raise ValueError("epsilon schedule must satisfy 0 <= end <= start <= 1")
        if not (0.0 <= self.discount <= 1.0):
            raise ValueError("discount must lie in [0, 1]")

    @property
    def decay_steps(self) -> int:
        return self.total_steps if self.epsilon_decay_steps is None else self.epsilon_decay_steps

    def epsilon_at(self, step: int) -> float:
        frac = min(1.0, step / max(1, self.decay_steps))
        return self.epsilon_start + (self.epsilon_end - self.epsilon_start) * frac


_SCHEDULE_FIELDS = {
    "total_steps", "epsilon_start", "epsilon_end", "epsilon_decay_steps",
    "target_sync_period", "warmup_transitions", "batch_size", "learn_period",
    "n_step", "discount", "learning_rate", "replay_capacity", "hidden_sizes",
    "n_atoms", "v_min", "v_max", "dueling", "log_period",
}


def schedule_from_json(obj: dict) -> TrainSchedule:
    """Build a schedule from a config document; unknown fields are rejected."""
    if obj.get("version") != 1:
        raise ValueError(f"unsupported schedule config version {obj.get('version')!r}")
    fields = {k: v for k, v in obj.items() if k != "version"}
    unknown = set(fields) - _SCHEDULE_FIELDS
    if unknown:
        raise ValueError(f"unknown schedule config fields: {sorted(unknown)}")
    if "hidden_sizes" in fields:
        fields["hidden_sizes"] = tuple(fields["hidden_sizes"])
    return TrainSchedule(**fields)


def act(
    approximator: Approximator,
    atoms: np.ndarray,
    features: np.ndarray,
    epsilon: float,
    rng: np.random.Generator,
) -> int:
    """Epsilon-greedy action for one observation."""
    if not (0.0 <= epsilon <= 1.0):
        raise ValueError(f"epsilon {epsilon} outside [0, 1]")
    n_actions = approximator.spec.n_actions
    if epsilon > 0.0 and rng.random() < epsilon:
        return int(rng.integers(n_actions))
    probs = approximator.probs(features[None, :])[0]
    return int(np.argmax(probs @ atoms))


def loss_and_gradient(
    batch: SequenceType[Transition],
    online: Approximator,
    target: Approximator,
    atoms: np.ndarray,
) -> tuple[float, dict[str, np.ndarray]]:
    """Mean cross-entropy to the projected target, and its exact gradient.

    The bootstrap action is chosen by the online network and evaluated by
    the target network. A non-finite loss raises instead of being clipped.
    """
    if not batch:
        raise ValueError("empty batch")
    obs = np.stack([t.observation for t in batch])
    next_obs = np.stack([t.next_observation for t in batch])
    actions = np.array([t.action for t in batch])
    rewards = np.array([t.reward for t in batch])
    discounts = np.array([t.discount for t in batch])
    dones = np.array([t.done for t in batch])

    online_next = softmax(online.forward(next_obs)[0])
    target_next = softmax(target.forward(next_obs)[0])
    next_q = online_next @ atoms
    bootstrap_actions = np.argmax(next_q, axis=1)
    rows = np.arange(len(batch))
    next_dist = target_next[rows, bootstrap_actions]

    projected = project_batch(rewards, discounts, next_dist, dones, atoms)

    logits, cache = online.forward(obs)
    probs = softmax(logits)
    chosen = probs[rows, actions]
    losses = np.array([cross_entropy(projected[i], chosen[i]) for i in range(len(batch))])
    loss = float(losses.mean())
    if not np.isfinite(loss):
        raise DivergenceError(f"non-finite loss {loss} (per-sample: {losses})")

    dlogits = np.zeros_like(logits)
    dlogits[rows, actions] = (chosen - projected) / len(batch)
    grads = online.backward(cache, dlogits)
    return loss, grads


@dataclass
class LogRow:
    step: int
    epsilon: float
    loss: float
    mean_return_last_100: float


@dataclass
class TrainResult:
    approximator: Approximator
    atoms: np.ndarray
    log: list[LogRow]
    episode_returns: list[float]


def train(
    env,
    sequence_ids: SequenceType[str],
    schedule: TrainSchedule,
    seed: int,
) -> TrainResult:
    """Run the full training loop over the given sequences.

    Episodes are drawn uniformly at random (seeded); all randomness flows
    from derived, explicitly seeded generators so reruns are bitwise
    reproducible.
    """
    if not sequence_ids:
        raise ValueError("no training sequences")
    probe = env.reset(sequence_ids[0])
    input_dim = env.state_features(probe).shape[0]
    spec = ArchitectureSpec(
        input_dim=input_dim,
        hidden_sizes=schedule.hidden_sizes,
        n_actions=env.action_count,
        n_atoms=schedule.n_atoms,
        v_min=schedule.v_min,
        v_max=schedule.v_max,
        dueling=schedule.dueling,
    )
    atoms = atom_support(schedule.n_atoms, schedule.v_min, schedule.v_max)
    online = Approximator.initialize(spec, seed=[seed, 0])
    target = online.copy()
    optimizer = Adam(online.params, schedule.learning_rate)
    buffer = ReplayBuffer(schedule.replay_capacity, seed=[seed, 1])
    explore_rng = np.random.default_rng([seed, 2])
    episode_rng = np.random.default_rng([seed, 3])

    accumulator = NStepAccumulator(schedule.n_step, schedule.discount)
    state = None
    episode_reward = 0.0
    episode_returns: list[float] = []
    log: list[LogRow] = []
    last_loss = float("nan")

    for step in range(schedule.total_steps):
        if state is None:
            seq_id = sequence_ids[int(episode_rng.integers(len(sequence_ids)))]
            state = env.reset(seq_id)
            accumulator.reset()
            episode_reward = 0.0
        epsilon = schedule.epsilon_at(step)
        features = env.state_features(state)
        action = act(online, atoms, features, epsilon, explore_rng)
        result = env.step(state, action)
        episode_reward += result.reward
        done = result.next_state is None
        next_features = (
            np.zeros_like(features) if done else env.state_features(result.next_state)
        )
        for transition in accumulator.push(features, action, result.reward, next_features, done):
            buffer.add(transition)
        if done:
            episode_returns.append(episode_reward)
            state = None
        else:
            state = result.next_state

        if len(buffer) >= schedule.warmup_transitions and (step + 1) % schedule.learn_period == 0:
            batch = buffer.sample(schedule.batch_size)
            last_loss, grads = loss_and_gradient(batch, online, target, atoms)
            optimizer.step(online.params, grads)
            for name, value in online.params.items():
                if not np.all(np.isfinite(value)):
                    raise DivergenceError(f"non-finite parameters in {name} at step {step + 1}")

        if (step + 1) % schedule.target_sync_period == 0:
            target = online.copy()

        if (step + 1) % schedule.log_period == 0 or step + 1 == schedule.total_steps:
            recent = episode_returns[-100:]
            mean_return = float(np.mean(recent)) if recent else float("nan")
            log.append(LogRow(step + 1, epsilon, last_loss, mean_return))

    return TrainResult(online, atoms, log, episode_returns)


class GreedyPolicy:
    """Episode policy wrapping a frozen approximator (epsilon = 0)."""

    def __init__(self, approximator: Approximator, atoms: np.ndarray,
                 feature_fn: Callable[[object], np.ndarray]):
        self.approximator = approximator
        self.atoms = atoms
        self.feature_fn = feature_fn

    def begin_episode(self, sequence_id: str) -> None:
        pass

    def act(self, state) -> int:
        probs = self.approximator.probs(self.feature_fn(state)[None, :])[0]
        return int(np.argmax(probs @ self.atoms))


CHECKPOINT_VERSION = 1


def save_checkpoint(path: Path | str, approximator: Approximator, metadata: dict) -> None:
    doc = {
        "version": CHECKPOINT_VERSION,
        "architecture": approximator.spec.to_json(),
        "metadata": metadata,
        "parameters": {
            name: approximator.params[name].tolist()
            for name in Approximator.param_names(approximator.spec)
        },
    }
    Path(path).write_text(json.dumps(doc, separators=(",", ":"), sort_keys=True) + "\n",
                          encoding="utf-8")


def load_checkpoint(
    path: Path | str,
    expected: ArchitectureSpec | None = None,
) -> tuple[Approximator, dict]:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {doc.get('version')!r}")
    spec = ArchitectureSpec.from_json(doc["architecture"])
    if expected is not None and spec != expected:
        raise ValueError(
            f"checkpoint architecture {spec} does not match expected {expected}"
        )
    params = {name: np.asarray(doc["parameters"][name], dtype=float)
              for name in Approximator.param_names(spec)}
    return Approximator(spec, params), doc.get("metadata", {})
