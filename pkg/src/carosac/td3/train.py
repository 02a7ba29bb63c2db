"""Staged TD3 training loop."""
from __future__ import annotations

import csv
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..envs import ACT_DIM, OBS_DIM, CdprEnv, EpisodeLog, decode_action
from .agent import Td3Agent, Td3Config, select_action
from .noise import OUNoise
from .replay import ReplayBuffer

log = logging.getLogger(__name__)

TRAIN_LOG_COLUMNS = ["episode", "phase", "steps", "cumulative_reward", "final_g_dist", "success"]


@dataclass
class EpisodeRecord:
    episode: int
    phase: str  # "random" or "policy"
    steps: int
    cumulative_reward: float
    final_g_dist: float
    success: bool
    wall_time: float


@dataclass
class TrainLog:
    episodes: list[EpisodeRecord] = field(default_factory=list)

    def __len__(self):
        return len(self.episodes)

    def rewards(self) -> np.ndarray:
        return np.array([e.cumulative_reward for e in self.episodes])

    def successes(self) -> np.ndarray:
        return np.array([e.success for e in self.episodes], dtype=bool)

    def phase_mask(self, phase: str) -> np.ndarray:
        return np.array([e.phase == phase for e in self.episodes], dtype=bool)

    def write_csv(self, path) -> None:
        # wall time is left out so that seeded runs produce identical files
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(TRAIN_LOG_COLUMNS)
            for e in self.episodes:
                writer.writerow([e.episode, e.phase, e.steps, repr(e.cumulative_reward),
                                 repr(e.final_g_dist), int(e.success)])

    @classmethod
    def read_csv(cls, path) -> "TrainLog":
        out = cls()
        with open(path, newline="") as fh:
            for row in csv.DictReader(fh):
                out.episodes.append(EpisodeRecord(int(row["episode"]), row["phase"], int(row["steps"]),
                                                  float(row["cumulative_reward"]), float(row["final_g_dist"]),
                                                  bool(int(row["success"])), float("nan")))
        return out


def train(env: CdprEnv, cfg: Td3Config, seed: int = 0, agent: Td3Agent | None = None,
          out_dir=None, episode_log_path=None, progress_every: int = 0):
    """Train ``agent`` (a fresh one if ``None``) on ``env``; returns ``(TrainLog, agent)``.

    The first ``cfg.random_episodes`` episodes act uniformly at random and only fill
    the replay buffer; afterwards the policy acts with decaying OU noise and one
    gradient update is made per environment step.
    """
    seeds = np.random.SeedSequence(seed).spawn(5)
    agent_seed, buffer_seed, noise_seed, env_seed, action_seed = (int(s.generate_state(1)[0]) for s in seeds)
    if agent is None:
        agent = Td3Agent(OBS_DIM, ACT_DIM, cfg, seed=agent_seed)
    else:
        agent.cfg = cfg
        agent.rng = np.random.default_rng(agent_seed)
    buffer = ReplayBuffer(OBS_DIM, ACT_DIM, cfg.buffer_capacity, seed=buffer_seed, dtype=np.dtype(cfg.dtype))
    policy_episodes = max(cfg.n_episodes - cfg.random_episodes, 1)
    noise = OUNoise.decaying_to(ACT_DIM, cfg.ou_final_fraction, policy_episodes, theta=cfg.ou_theta,
                                sigma0=cfg.ou_sigma0, seed=noise_seed)
    env_rng = np.random.default_rng(env_seed)
    action_rng = np.random.default_rng(action_seed)
    out_dir = Path(out_dir) if out_dir is not None else None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
    episode_log = EpisodeLog(episode_log_path) if episode_log_path is not None else None
    train_log = TrainLog()
    rig = env.rig
    threshold = env.cfg.goal_threshold
    try:
        for ep in range(cfg.n_episodes):
            t0 = time.perf_counter()
            random_phase = ep < cfg.random_episodes
            obs = env.reset(seed=int(env_rng.integers(2**31)))
            obs_n = obs.normalized(rig)
            noise.reset()
            total, steps, terms = 0.0, 0, None
            for t in range(cfg.n_steps):
                if random_phase:
                    a = action_rng.uniform(-1.0, 1.0, ACT_DIM)
                else:
                    a = select_action(agent.actor, obs_n, noise.sample(ep - cfg.random_episodes))
                next_obs, terms, done = env.step(decode_action(a, rig))
                next_n = next_obs.normalized(rig)
                # time-limit truncation still bootstraps; only reaching the goal is terminal
                terminal = terms.g_dist <= threshold and env.cfg.terminate_on_goal
                buffer.add(obs_n, a, terms.r_full, next_n, terminal)
                if episode_log is not None:
                    episode_log.write(ep, t, next_obs, decode_action(a, rig), terms, done)
                if not random_phase and len(buffer) >= cfg.batch_size:
                    for _ in range(cfg.updates_per_step):
                        agent.update(buffer.sample(cfg.batch_size))
                total += terms.r_full
                steps += 1
                obs_n = next_n
                if done:
                    break
            final_g = terms.g_dist if terms is not None else float("nan")
            train_log.episodes.append(EpisodeRecord(ep, "random" if random_phase else "policy", steps, total,
                                                    final_g, bool(final_g <= threshold),
                                                    time.perf_counter() - t0))
            if progress_every and (ep + 1) % progress_every == 0:
                recent = train_log.episodes[-progress_every:]
                log.info("episode %d: mean reward %.3f, success %.2f", ep + 1,
                         np.mean([e.cumulative_reward for e in recent]), np.mean([e.success for e in recent]))
            if out_dir is not None and cfg.checkpoint_every and (ep + 1) % cfg.checkpoint_every == 0:
                agent.save(out_dir / "checkpoint.npz")
    except Exception:
        if out_dir is not None:
            agent.save(out_dir / "checkpoint_aborted.npz")
            train_log.write_csv(out_dir / "train_log.csv")
        raise
    finally:
        if episode_log is not None:
            episode_log.close()
    if out_dir is not None:
        agent.save(out_dir / "checkpoint.npz")
        train_log.write_csv(out_dir / "train_log.csv")
    return train_log, agent
