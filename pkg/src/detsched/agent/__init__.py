"""Distributional Q-learning scheduler: value head, replay, and training."""

from .distribution import (
    CategoricalDist,
    atom_support,
    cross_entropy,
    double_q_target_action,
    project_batch,
    project_target,
    q_values,
)
from .network import Adam, Approximator, ArchitectureSpec, softmax
from .replay import NStepAccumulator, ReplayBuffer, Transition
from .training import (
    DivergenceError,
    GreedyPolicy,
    LogRow,
    TrainResult,
    TrainSchedule,
    act,
    load_checkpoint,
    loss_and_gradient,
    save_checkpoint,
    schedule_from_json,
    train,
)

__all__ = [
    "Adam",
    "Approximator",
    "ArchitectureSpec",
    "CategoricalDist",
    "DivergenceError",
    "GreedyPolicy",
    "LogRow",
    "NStepAccumulator",
    "ReplayBuffer",
    "TrainResult",
    "TrainSchedule",
    "Transition",
    "act",
    "atom_support",
    "cross_entropy",
    "double_q_target_action",
    "load_checkpoint",
    "loss_and_gradient",
    "project_batch",
    "project_target",
    "q_values",
    "save_checkpoint",
    "schedule_from_json",
    "softmax",
    "train",
]
