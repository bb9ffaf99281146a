"""Categorical value distributions over a fixed atom support.

The value of each action is modeled as a categorical distribution over
atoms evenly spaced on [v_min, v_max]. Bellman targets are formed by
shifting and scaling the support, clamping to the range, and splitting
each atom's mass linearly between its two neighboring support atoms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Fractional atom positions closer than this to an integer are snapped, so
# that targets landing exactly on an atom project to an exact one-hot.
_SNAP_EPS = 1e-9

_PROB_TOL = 1e-9


def atom_support(n_atoms: int, v_min: float, v_max: float) -> np.ndarray:
    if n_atoms < 2:
        raise ValueError("need at least two atoms")
    if not v_min < v_max:
        raise ValueError(f"empty support [{v_min}, {v_max}]")
    return np.linspace(float(v_min), float(v_max), int(n_atoms))


@dataclass(frozen=True, eq=False)
class CategoricalDist:
    """Per-action probability masses over a shared atom support.

    ``probs`` has shape (actions, atoms); every row must be a valid
    probability vector.
    """

    atoms: np.ndarray
    probs: np.ndarray

    def __post_init__(self) -> None:
        atoms = np.asarray(self.atoms, dtype=float)
        probs = np.asarray(self.probs, dtype=float)
        if probs.ndim != 2 or probs.shape[1] != atoms.shape[0]:
            raise ValueError(f"probs shape {probs.shape} does not match {atoms.shape[0]} atoms")
        if np.any(probs < 0.0):
            raise ValueError("negative probability mass")
        sums = probs.sum(axis=1)
        if np.any(np.abs(sums - 1.0) > _PROB_TOL):
            raise ValueError(f"rows must sum to 1 within {_PROB_TOL}, got {sums}")
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "probs", probs)

    @property
    def action_count(self) -> int:
        return self.probs.shape[0]


def q_values(dist: CategoricalDist) -> np.ndarray:
    """Expected value per action: Q(a) = sum_i p_i(a) * z_i."""
    return dist.probs @ dist.atoms


def project_batch(
    rewards: np.ndarray,
    discounts: np.ndarray,
    next_probs: np.ndarray,
    dones: np.ndarray,
    atoms: np.ndarray,
) -> np.ndarray:
    """Project Bellman targets onto the atom support for a batch.

    ``next_probs`` has shape (batch, atoms); rows flagged done contribute
    their full mass at the clamped reward alone.
    """
    rewards = np.asarray(rewards, dtype=float).reshape(-1)
    discounts = np.asarray(discounts, dtype=float).reshape(-1)
    dones = np.asarray(dones, dtype=bool).reshape(-1)
    next_probs = np.asarray(next_probs, dtype=float)
    batch, n_atoms = next_probs.shape
    v_min, v_max = float(atoms[0]), float(atoms[-1])
    delta = (v_max - v_min) / (n_atoms - 1)

    eff_discount = np.where(dones, 0.0, discounts)
    weights = np.where(dones[:, None], 0.0, next_probs)
    # A done row carries all its mass at the reward via the first column.
    weights[dones, 0] = 1.0
    targets = rewards[:, None] + eff_discount[:, None] * atoms[None, :]
    targets = np.clip(targets, v_min, v_max)

    positions = (targets - v_min) / delta
    nearest = np.rint(positions)
    positions = np.where(np.abs(positions - nearest) < _SNAP_EPS, nearest, positions)
    lower = np.floor(positions).astype(int)
    frac = positions - lower
    upper = np.minimum(lower + 1, n_atoms - 1)

    out = np.zeros((batch, n_atoms))
    rows = np.repeat(np.arange(batch), n_atoms)
    np.add.at(out, (rows, lower.reshape(-1)), (weights * (1.0 - frac)).reshape(-1))
    np.add.at(out, (rows, upper.reshape(-1)), (weights * frac).reshape(-1))
    return out


def project_target(
    reward: float,
    discount: float,
    next_probs: np.ndarray | None,
    done: bool,
    atoms: np.ndarray,
) -> np.ndarray:
    """Single-transition categorical projection (see ``project_batch``)."""
    if next_probs is None:
        if not done:
            raise ValueError("next distribution required for non-terminal targets")
        next_probs = np.zeros(atoms.shape[0])
        next_probs[0] = 1.0
    return project_batch(
        np.array([reward]),
        np.array([discount]),
        np.asarray(next_probs, dtype=float)[None, :],
        np.array([done]),
        atoms,
    )[0]


def double_q_target_action(online_next: CategoricalDist, target_next: CategoricalDist) -> int:
    """Pick the bootstrap action with the online net, to be evaluated by the target net.

    Ties in the online Q values resolve to the lowest action index.
    """
    if online_next.probs.shape != target_next.probs.shape:
        raise ValueError("online and target distributions must have matching shapes")
    return int(np.argmax(q_values(online_next)))


def cross_entropy(target_probs: np.ndarray, pred_probs: np.ndarray) -> float:
    """Cross-entropy -sum(m * log p); may be +inf when p has zero mass where m > 0."""
    target_probs = np.asarray(target_probs, dtype=float)
    pred_probs = np.asarray(pred_probs, dtype=float)
    mask = target_probs > 0.0
    with np.errstate(divide="ignore"):
        logs = np.where(mask, np.log(np.where(mask, pred_probs, 1.0)), 0.0)
    return float(-(target_probs * logs).sum())
