"""Generalized advantage estimation over a stored rollout."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["RolloutBatch", "GaeOutput", "compute_gae", "gae_bruteforce_oracle"]


@dataclass
class RolloutBatch:
    """``T`` transitions plus ``T + 1`` value estimates (last one is the bootstrap).

    ``dones[t]`` means the episode ended at step ``t``, so ``values[t + 1]``
    belongs to a different episode and is not bootstrapped from.  When an
    episode is cut by the time limit rather than terminated, ``bootstrap[t]``
    carries the value of the final observation and enters ``delta_t`` as
    ``gamma * bootstrap[t]``; it is zero everywhere else.  ``episodes`` lists
    ``(t, return, length)`` for every episode that finished inside the batch.
    """

    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    dones: np.ndarray
    values: np.ndarray
    log_probs: np.ndarray
    bootstrap: np.ndarray | None = None
    episodes: list = field(default_factory=list)

    def __post_init__(self):
        self.rewards = np.asarray(self.rewards, dtype=np.float64)
        self.dones = np.asarray(self.dones, dtype=bool)
        self.values = np.asarray(self.values, dtype=np.float64)
        self.log_probs = np.asarray(self.log_probs, dtype=np.float64)
        self.states = np.asarray(self.states, dtype=np.float64)
        self.actions = np.asarray(self.actions)
        T = self.rewards.shape[0]
        if T == 0:
            raise ValueError("empty rollout")
        lengths = {
            "states": len(self.states), "actions": len(self.actions),
            "dones": len(self.dones), "log_probs": len(self.log_probs),
        }
        if self.bootstrap is None:
            self.bootstrap = np.zeros(T)
        self.bootstrap = np.asarray(self.bootstrap, dtype=np.float64)
        lengths["bootstrap"] = len(self.bootstrap)
        bad = {k: n for k, n in lengths.items() if n != T}
        if bad or self.values.shape != (T + 1,):
            raise ValueError(
                f"inconsistent rollout lengths: T={T}, {bad}, values={self.values.shape}")

    def __len__(self) -> int:
        return self.rewards.shape[0]


@dataclass(frozen=True)
class GaeOutput:
    deltas: np.ndarray
    advantages: np.ndarray
    returns: np.ndarray


def _check_coeffs(gamma: float, lambda_gae: float) -> None:
    if not 0.0 < gamma <= 1.0:
        raise ValueError(f"gamma must lie in (0, 1], got {gamma}")
    if not 0.0 <= lambda_gae <= 1.0:
        raise ValueError(f"lambda_gae must lie in [0, 1], got {lambda_gae}")


def _deltas(batch: RolloutBatch, gamma: float) -> np.ndarray:
    v = batch.values
    not_done = 1.0 - batch.dones.astype(np.float64)
    return batch.rewards + gamma * (v[1:] * not_done + batch.bootstrap) - v[:-1]


def compute_gae(batch: RolloutBatch, gamma: float, lambda_gae: float) -> GaeOutput:
    _check_coeffs(gamma, lambda_gae)
    deltas = _deltas(batch, gamma)
    T = len(batch)
    adv = np.empty(T)
    running = 0.0
    decay = gamma * lambda_gae
    for t in range(T - 1, -1, -1):
        if batch.dones[t]:
            running = 0.0
        running = deltas[t] + decay * running
        adv[t] = running
    return GaeOutput(deltas, adv, adv + batch.values[:-1])


def gae_bruteforce_oracle(batch: RolloutBatch, gamma: float, lambda_gae: float) -> GaeOutput:
    """Literal double sum over ``(gamma*lambda)^l * delta_{t+l}``; O(T^2)."""
    _check_coeffs(gamma, lambda_gae)
    deltas = _deltas(batch, gamma)
    T = len(batch)
    adv = np.zeros(T)
    for t in range(T):
        total = 0.0
        for l in range(T - t):
            total += (gamma * lambda_gae) ** l * deltas[t + l]
            if batch.dones[t + l]:
                break
        adv[t] = total
    return GaeOutput(deltas, adv, adv + batch.values[:-1])
