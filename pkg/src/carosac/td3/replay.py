from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InsufficientBuffer


@dataclass
class Batch:
    obs: np.ndarray
    action: np.ndarray
    reward: np.ndarray
    next_obs: np.ndarray
    done: np.ndarray

    def __len__(self):
        return len(self.reward)


class ReplayBuffer:
    """Fixed-capacity FIFO of transitions with a seeded uniform sampler."""

    def __init__(self, obs_dim: int, act_dim: int, capacity: int = 1_000_000, seed=None, dtype=np.float32):
        self.capacity = int(capacity)
        self.obs = np.zeros((self.capacity, obs_dim), dtype=dtype)
        self.action = np.zeros((self.capacity, act_dim), dtype=dtype)
        self.reward = np.zeros(self.capacity, dtype=dtype)
        self.next_obs = np.zeros((self.capacity, obs_dim), dtype=dtype)
        self.done = np.zeros(self.capacity, dtype=dtype)
        self.ptr = 0
        self.size = 0
        self.rng = np.random.default_rng(seed)

    def __len__(self):
        return self.size

    def add(self, obs, action, reward, next_obs, done) -> None:
        if not np.isfinite(reward):
            raise ValueError("reward must be finite")
        i = self.ptr
        self.obs[i] = obs
        self.action[i] = action
        self.reward[i] = reward
        self.next_obs[i] = next_obs
        self.done[i] = float(done)
        self.ptr = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample_indices(self, k: int) -> np.ndarray:
        if self.size < k:
            raise InsufficientBuffer(f"buffer holds {self.size} transitions, batch needs {k}")
        return self.rng.choice(self.size, size=k, replace=False)

    def sample(self, k: int) -> Batch:
        idx = self.sample_indices(k)
        return Batch(self.obs[idx], self.action[idx], self.reward[idx], self.next_obs[idx], self.done[idx])
