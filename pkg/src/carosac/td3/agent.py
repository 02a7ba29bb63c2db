"""TD3 agent: deterministic actor, twin critics, target networks."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from ..errors import InsufficientBuffer
from .nn import Adam, Mlp, soft_update
from .replay import Batch

CHECKPOINT_FORMAT = "carosac-td3"
CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class Td3Config:
    n_episodes: int = 5000
    n_steps: int = 200
    batch_size: int = 256
    actor_lr: float = 3e-4
    critic_lr: float = 3e-3
    random_episodes: int = 100
    discount: float = 0.99
    tau: float = 0.005
    policy_delay: int = 2
    target_noise_std: float = 0.2
    target_noise_clip: float = 0.5
    ou_theta: float = 0.15
    ou_sigma0: float = 0.3
    ou_final_fraction: float = 0.05
    hidden: tuple[int, ...] = (256, 256)
    buffer_capacity: int = 1_000_000
    updates_per_step: int = 1
    checkpoint_every: int = 100
    dtype: str = "float32"

    def __post_init__(self):
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        positive = ("n_episodes", "n_steps", "batch_size", "actor_lr", "critic_lr", "discount", "tau",
                    "policy_delay", "buffer_capacity", "updates_per_step")
        for name in positive:
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.random_episodes < 0 or self.target_noise_std < 0 or self.target_noise_clip < 0:
            raise ValueError("noise parameters and random_episodes must be non-negative")

    @classmethod
    def carosim(cls, **kw) -> "Td3Config":
        return cls(**{"n_episodes": 1000, "n_steps": 30, **kw})


def critic_loss_and_grads(critic: Mlp, obs, action, y):
    """Mean-squared TD error and its gradient w.r.t. the critic parameters."""
    x = np.concatenate([obs, action], axis=1)
    q, acts = critic.forward(x, keep=True)
    diff = q[:, 0] - y
    loss = float(np.mean(diff * diff))
    grads, _ = critic.backward(acts, (2.0 / len(diff)) * diff[:, None])
    return loss, grads


def actor_loss_and_grads(actor: Mlp, critic: Mlp, obs):
    """Loss ``-mean Q(s, actor(s))`` and its gradient w.r.t. the actor parameters."""
    a, a_acts = actor.forward(obs, keep=True)
    q, q_acts = critic.forward(np.concatenate([obs, a], axis=1), keep=True)
    n = q.shape[0]
    _, dx = critic.backward(q_acts, np.full((n, 1), -1.0 / n, dtype=critic.dtype))
    grads, _ = actor.backward(a_acts, dx[:, obs.shape[1]:])
    return float(-np.mean(q)), grads


@dataclass
class UpdateStats:
    critic1: float
    critic2: float
    actor: float | None
    target_noise_abs_max: float


class Td3Agent:
    def __init__(self, obs_dim: int, act_dim: int, cfg: Td3Config = Td3Config(), seed=None):
        self.obs_dim, self.act_dim, self.cfg = obs_dim, act_dim, cfg
        self.rng = np.random.default_rng(seed)
        dtype = np.dtype(cfg.dtype)
        self.actor = Mlp((obs_dim, *cfg.hidden, act_dim), "tanh", self.rng, dtype)
        self.critic1 = Mlp((obs_dim + act_dim, *cfg.hidden, 1), "linear", self.rng, dtype)
        self.critic2 = Mlp((obs_dim + act_dim, *cfg.hidden, 1), "linear", self.rng, dtype)
        self._make_targets()
        self.update_calls = 0
        self.actor_updates = 0

    def _make_targets(self) -> None:
        cfg = self.cfg
        self.actor_target = self.actor.copy()
        self.critic1_target = self.critic1.copy()
        self.critic2_target = self.critic2.copy()
        self.actor_opt = Adam(self.actor.params, cfg.actor_lr)
        self.critic1_opt = Adam(self.critic1.params, cfg.critic_lr)
        self.critic2_opt = Adam(self.critic2.params, cfg.critic_lr)

    def act(self, obs) -> np.ndarray:
        obs = np.asarray(obs, dtype=self.actor.dtype)
        return self.actor(obs[None, :])[0].astype(float)

    def target_values(self, batch: Batch):
        """Clipped double-Q targets; also returns the smoothing noise used."""
        cfg = self.cfg
        noise = np.clip(self.rng.normal(0.0, cfg.target_noise_std, batch.action.shape),
                        -cfg.target_noise_clip, cfg.target_noise_clip).astype(self.actor.dtype)
        next_a = np.clip(self.actor_target(batch.next_obs) + noise, -1.0, 1.0)
        x = np.concatenate([batch.next_obs, next_a], axis=1)
        q1 = self.critic1_target(x)[:, 0]
        q2 = self.critic2_target(x)[:, 0]
        y = batch.reward + cfg.discount * (1.0 - batch.done) * np.minimum(q1, q2)
        return y.astype(self.actor.dtype), noise

    def update(self, batch: Batch) -> UpdateStats:
        if len(batch) < 1:
            raise InsufficientBuffer("empty batch")
        cfg = self.cfg
        y, noise = self.target_values(batch)
        l1, g1 = critic_loss_and_grads(self.critic1, batch.obs, batch.action, y)
        l2, g2 = critic_loss_and_grads(self.critic2, batch.obs, batch.action, y)
        self.critic1_opt.step(g1)
        self.critic2_opt.step(g2)
        self.update_calls += 1
        actor_loss = None
        if self.update_calls % cfg.policy_delay == 0:
            actor_loss, ga = actor_loss_and_grads(self.actor, self.critic1, batch.obs)
            self.actor_opt.step(ga)
            self.actor_updates += 1
            soft_update(self.actor_target, self.actor, cfg.tau)
            soft_update(self.critic1_target, self.critic1, cfg.tau)
            soft_update(self.critic2_target, self.critic2, cfg.tau)
        return UpdateStats(l1, l2, actor_loss, float(np.max(np.abs(noise))) if noise.size else 0.0)

    def networks(self) -> dict[str, Mlp]:
        return {"actor": self.actor, "critic1": self.critic1, "critic2": self.critic2,
                "actor_target": self.actor_target, "critic1_target": self.critic1_target,
                "critic2_target": self.critic2_target}

    def save(self, path) -> None:
        header = {"format": CHECKPOINT_FORMAT, "version": CHECKPOINT_VERSION, "obs_dim": self.obs_dim,
                  "act_dim": self.act_dim, "config": asdict(self.cfg),
                  "architectures": {k: {"sizes": list(m.sizes), "output": m.output_activation}
                                    for k, m in self.networks().items()}}
        arrays = {f"{name}/{i}": p for name, net in self.networks().items() for i, p in enumerate(net.params)}
        with open(path, "wb") as fh:
            np.savez(fh, header=np.array(json.dumps(header, sort_keys=True)), **arrays)

    @classmethod
    def load(cls, path) -> "Td3Agent":
        with np.load(path, allow_pickle=False) as data:
            header = json.loads(str(data["header"]))
            if header.get("format") != CHECKPOINT_FORMAT or header.get("version") != CHECKPOINT_VERSION:
                raise ValueError(f"unsupported checkpoint header {header.get('format')!r} v{header.get('version')}")
            cfg = Td3Config(**header["config"])
            agent = cls(header["obs_dim"], header["act_dim"], cfg)
            for name, net in agent.networks().items():
                arch = header["architectures"][name]
                if tuple(arch["sizes"]) != net.sizes:
                    raise ValueError(f"architecture mismatch for {name}")
                net.params[:] = [data[f"{name}/{i}"].copy() for i in range(len(net.params))]
        return agent


def select_action(actor: Mlp, obs, noise=None) -> np.ndarray:
    """Policy output plus optional additive noise, clamped to [-1, 1]."""
    a = actor(np.asarray(obs, dtype=actor.dtype)[None, :])[0].astype(float)
    if noise is not None:
        a = a + noise
    return np.clip(a, -1.0, 1.0)
