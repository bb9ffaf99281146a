"""Small fully-connected function approximator with hand-written backprop.

The network maps an observation feature vector to one logit row per
action over the atom support. Keeping the forward and reverse passes in
plain numpy makes the gradients directly checkable against central
finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ArchitectureSpec:
    input_dim: int
    hidden_sizes: tuple[int, ...]
    n_actions: int
    n_atoms: int
    v_min: float
    v_max: float
    dueling: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "hidden_sizes", tuple(int(h) for h in self.hidden_sizes))
        if self.input_dim < 1 or self.n_actions < 1 or self.n_atoms < 2:
            raise ValueError("invalid architecture dimensions")
        if any(h < 1 for h in self.hidden_sizes):
            raise ValueError("hidden sizes must be positive")

    def to_json(self) -> dict:
        return {
            "input_dim": self.input_dim,
            "hidden_sizes": list(self.hidden_sizes),
            "n_actions": self.n_actions,
            "n_atoms": self.n_atoms,
            "v_min": self.v_min,
            "v_max": self.v_max,
            "dueling": self.dueling,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ArchitectureSpec":
        return cls(
            input_dim=int(obj["input_dim"]),
            hidden_sizes=tuple(obj["hidden_sizes"]),
            n_actions=int(obj["n_actions"]),
            n_atoms=int(obj["n_atoms"]),
            v_min=float(obj["v_min"]),
            v_max=float(obj["v_max"]),
            dueling=bool(obj["dueling"]),
        )


def softmax(logits: np.ndarray) -> np.ndarray:
    """Numerically stable softmax over the last axis."""
    shifted = logits - logits.max(axis=-1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=-1, keepdims=True)


class Approximator:
    """MLP with ReLU hidden layers and an (actions x atoms) logit head.

    The plain head is one linear layer; the dueling head splits into a
    value stream (one logit row) and an advantage stream whose per-atom
    mean over actions is subtracted before adding the value.
    """

    def __init__(self, spec: ArchitectureSpec, params: dict[str, np.ndarray]):
        self.spec = spec
        self.params = params

    @classmethod
    def param_names(cls, spec: ArchitectureSpec) -> list[str]:
        names: list[str] = []
        for i in range(len(spec.hidden_sizes)):
            names += [f"w{i}", f"b{i}"]
        if spec.dueling:
            names += ["w_val", "b_val", "w_adv", "b_adv"]
        else:
            names += ["w_out", "b_out"]
        return names

    @classmethod
    def initialize(cls, spec: ArchitectureSpec, seed) -> "Approximator":
        rng = np.random.default_rng(seed)
        params: dict[str, np.ndarray] = {}
        fan_in = spec.input_dim
        for i, width in enumerate(spec.hidden_sizes):
            params[f"w{i}"] = rng.standard_normal((fan_in, width)) * np.sqrt(2.0 / fan_in)
            params[f"b{i}"] = np.zeros(width)
            fan_in = width
        out_dim = spec.n_actions * spec.n_atoms
        if spec.dueling:
            params["w_val"] = rng.standard_normal((fan_in, spec.n_atoms)) / np.sqrt(fan_in)
            params["b_val"] = np.zeros(spec.n_atoms)
            params["w_adv"] = rng.standard_normal((fan_in, out_dim)) / np.sqrt(fan_in)
            params["b_adv"] = np.zeros(out_dim)
        else:
            params["w_out"] = rng.standard_normal((fan_in, out_dim)) / np.sqrt(fan_in)
            params["b_out"] = np.zeros(out_dim)
        return cls(spec, params)

    def copy(self) -> "Approximator":
        return Approximator(self.spec, {k: v.copy() for k, v in self.params.items()})

    def forward(self, x: np.ndarray) -> tuple[np.ndarray, dict]:
        """Batched forward pass; returns (logits, cache) with logits (B, A, N)."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[1] != self.spec.input_dim:
            raise ValueError(f"expected input dim {self.spec.input_dim}, got {x.shape[1]}")
        activations = [x]
        h = x
        for i in range(len(self.spec.hidden_sizes)):
            pre = h @ self.params[f"w{i}"] + self.params[f"b{i}"]
            h = np.maximum(pre, 0.0)
            activations.append(h)
        batch = x.shape[0]
        if self.spec.dueling:
            val = h @ self.params["w_val"] + self.params["b_val"]  # (B, N)
            adv = (h @ self.params["w_adv"] + self.params["b_adv"]).reshape(
                batch, self.spec.n_actions, self.spec.n_atoms
            )
            logits = val[:, None, :] + adv - adv.mean(axis=1, keepdims=True)
        else:
            logits = (h @ self.params["w_out"] + self.params["b_out"]).reshape(
                batch, self.spec.n_actions, self.spec.n_atoms
            )
        cache = {"activations": activations}
        return logits, cache

    def probs(self, x: np.ndarray) -> np.ndarray:
        logits, _ = self.forward(x)
        return softmax(logits)

    def backward(self, cache: dict, dlogits: np.ndarray) -> dict[str, np.ndarray]:
        """Gradients of a scalar loss given its gradient w.r.t. the logits."""
        activations = cache["activations"]
        batch = dlogits.shape[0]
        grads: dict[str, np.ndarray] = {}
        h = activations[-1]
        if self.spec.dueling:
            dval = dlogits.sum(axis=1)  # (B, N)
            dadv = dlogits - dlogits.mean(axis=1, keepdims=True)
            dadv = dadv.reshape(batch, -1)
            grads["w_val"] = h.T @ dval
            grads["b_val"] = dval.sum(axis=0)
            grads["w_adv"] = h.T @ dadv
            grads["b_adv"] = dadv.sum(axis=0)
            dh = dval @ self.params["w_val"].T + dadv @ self.params["w_adv"].T
        else:
            dflat = dlogits.reshape(batch, -1)
            grads["w_out"] = h.T @ dflat
            grads["b_out"] = dflat.sum(axis=0)
            dh = dflat @ self.params["w_out"].T
        for i in range(len(self.spec.hidden_sizes) - 1, -1, -1):
            dh = dh * (activations[i + 1] > 0.0)
            grads[f"w{i}"] = activations[i].T @ dh
            grads[f"b{i}"] = dh.sum(axis=0)
            dh = dh @ self.params[f"w{i}"].T
        return grads

    # Flat-vector views, used by the finite-difference checks.

    def get_flat(self) -> np.ndarray:
        names = self.param_names(self.spec)
        return np.concatenate([self.params[n].reshape(-1) for n in names])

    def set_flat(self, flat: np.ndarray) -> None:
        names = self.param_names(self.spec)
        offset = 0
        for n in names:
            size = self.params[n].size
            self.params[n] = flat[offset : offset + size].reshape(self.params[n].shape).copy()
            offset += size
        if offset != flat.size:
            raise ValueError("flat vector size mismatch")


class Adam:
    """Adam optimizer over a named parameter dict."""

    def __init__(self, params: dict[str, np.ndarray], learning_rate: float,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1.5e-4):
        self.learning_rate = float(learning_rate)
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        self.step_count += 1
        b1t = 1.0 - self.beta1 ** self.step_count
        b2t = 1.0 - self.beta2 ** self.step_count
        for name, g in grads.items():
            self.m[name] = self.beta1 * self.m[name] + (1.0 - self.beta1) * g
            self.v[name] = self.beta2 * self.v[name] + (1.0 - self.beta2) * (g * g)
            m_hat = self.m[name] / b1t
            v_hat = self.v[name] / b2t
            params[name] = params[name] - self.learning_rate * m_hat / (np.sqrt(v_hat) + self.eps)
