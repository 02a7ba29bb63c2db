from __future__ import annotations

import numpy as np


class OUNoise:
    """Ornstein-Uhlenbeck exploration noise whose diffusion decays per episode.

    ``x <- x + theta * (mu - x) + sigma(episode) * N(0, 1)`` with
    ``sigma(episode) = sigma0 * decay ** episode``.
    """

    def __init__(self, size: int, theta: float = 0.15, sigma0: float = 0.3, decay: float = 1.0,
                 mu: float = 0.0, seed=None):
        if not 0.0 < decay <= 1.0:
            raise ValueError("decay must lie in (0, 1]")
        self.size = size
        self.theta = theta
        self.sigma0 = sigma0
        self.decay = decay
        self.mu = mu
        self.rng = np.random.default_rng(seed)
        self.state = np.full(size, mu, dtype=float)

    @classmethod
    def decaying_to(cls, size: int, fraction: float, n_episodes: int, **kw) -> "OUNoise":
        """Noise whose sigma reaches ``fraction * sigma0`` at episode ``n_episodes - 1``."""
        decay = fraction ** (1.0 / max(n_episodes - 1, 1))
        return cls(size, decay=decay, **kw)

    def sigma(self, episode: int) -> float:
        return self.sigma0 * self.decay ** episode

    def reset(self) -> None:
        self.state[:] = self.mu

    def sample(self, episode: int) -> np.ndarray:
        self.state += self.theta * (self.mu - self.state) + self.sigma(episode) * self.rng.standard_normal(self.size)
        return self.state.copy()
