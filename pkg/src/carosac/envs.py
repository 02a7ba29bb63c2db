"""Reinforcement-learning environments over the rig.

``NoSagEnv`` places the platform at the least-squares straight-line pose of the
commanded lengths; ``CarosimEnv`` reels the commanded lengths into the XPBD
cable simulation and reads the platform pose back from the scene.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import cable_sim
from .cable_sim import CableMaterial, SimParams
from .kinematics import FkSolver, FkSolverConfig, RigGeometry, inverse_kinematics
from .rewards import RewardTerms, carosim_aggregates, reward_carosim, reward_no_sag

OBS_DIM = 10
ACT_DIM = 4


class Variant(str, Enum):
    NO_SAG = "no_sag"
    CAROSIM = "carosim"


@dataclass(frozen=True)
class EnvConfig:
    max_steps_per_episode: int = 200
    goal_threshold: float = 0.05
    variant: Variant = Variant.NO_SAG
    seed: int = 0
    control_interval: float = 0.1  # s of simulated time per carosim step
    terminate_on_goal: bool = True
    include_goal_in_carosim: bool = True

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        if not self.goal_threshold > 0:
            raise ValueError("goal_threshold must be positive")
        if self.max_steps_per_episode < 1:
            raise ValueError("max_steps_per_episode must be >= 1")


@dataclass(frozen=True)
class Observation:
    current_lengths: np.ndarray
    current_position: np.ndarray
    target_position: np.ndarray

    def flat(self) -> np.ndarray:
        return np.concatenate([self.current_lengths, self.current_position, self.target_position])

    def normalized(self, rig: RigGeometry) -> np.ndarray:
        """Agent-facing copy with every entry mapped to [-1, 1] by the rig bounds."""
        lo, hi = rig.length_bounds
        lengths = 2.0 * (self.current_lengths - lo) / (hi - lo) - 1.0
        span = rig.workspace_max - rig.workspace_min
        pos = 2.0 * (self.current_position - rig.workspace_min) / span - 1.0
        tgt = 2.0 * (self.target_position - rig.workspace_min) / span - 1.0
        return np.concatenate([lengths, pos, tgt])


def decode_action(a, rig: RigGeometry) -> np.ndarray:
    """Normalized action in [-1, 1]^4 to absolute cable lengths in metres."""
    lo, hi = rig.length_bounds
    return lo + (np.clip(a, -1.0, 1.0) + 1.0) * 0.5 * (hi - lo)


def encode_action(lengths, rig: RigGeometry) -> np.ndarray:
    lo, hi = rig.length_bounds
    return 2.0 * (np.asarray(lengths, dtype=float) - lo) / (hi - lo) - 1.0


class CdprEnv:
    """Shared episode bookkeeping; subclasses supply the physics backend."""

    variant: Variant

    def __init__(self, rig: RigGeometry, cfg: EnvConfig = EnvConfig()):
        self.rig = rig
        self.cfg = cfg
        self._rng = np.random.default_rng(cfg.seed)
        self.steps = 0
        self.done = True
        self.position = rig.workspace_center.copy()
        self.lengths = inverse_kinematics(self.position, rig)
        self.target = rig.workspace_center.copy()
        self.clamped = False

    def observation(self) -> Observation:
        return Observation(self.lengths.copy(), self.position.copy(), self.target.copy())

    def goal_distance(self) -> float:
        return float(np.linalg.norm(self.position - self.target))

    def reset(self, seed: int | None = None, start=None, target=None) -> Observation:
        if seed is not None:
            self._rng = np.random.default_rng(seed)
        start = self.rig.sample_positions(self._rng) if start is None else np.asarray(start, dtype=float)
        target = self.rig.sample_positions(self._rng) if target is None else np.asarray(target, dtype=float)
        self.target = target.copy()
        self.steps = 0
        self.done = False
        self._place(start)
        return self.observation()

    def set_target(self, target) -> None:
        self.target = np.asarray(target, dtype=float).copy()

    def step(self, action) -> tuple[Observation, RewardTerms, bool]:
        """Apply absolute cable lengths (metres); returns observation, rewards, done."""
        if self.done:
            raise RuntimeError("episode finished; call reset()")
        a = np.asarray(action, dtype=float)
        if a.shape != (ACT_DIM,) or not np.all(np.isfinite(a)):
            raise ValueError("action must be 4 finite cable lengths")
        lo, hi = self.rig.length_bounds
        applied = np.clip(a, lo, hi)
        self.clamped = bool(np.any(applied != a))
        before = self.observation()
        self._advance(applied)
        self.steps += 1
        g_dist = self.goal_distance()
        d_norm = min(g_dist / self.rig.workspace_diagonal, 1.0)
        terms = self._reward(before, applied, g_dist, d_norm)
        reached = g_dist <= self.cfg.goal_threshold
        self.done = (reached and self.cfg.terminate_on_goal) or self.steps >= self.cfg.max_steps_per_episode
        return self.observation(), terms, self.done

    def _place(self, start) -> None:
        raise NotImplementedError

    def _advance(self, lengths) -> None:
        raise NotImplementedError

    def _reward(self, before: Observation, applied, g_dist, d_norm) -> RewardTerms:
        raise NotImplementedError


class NoSagEnv(CdprEnv):
    variant = Variant.NO_SAG

    def __init__(self, rig: RigGeometry, cfg: EnvConfig = EnvConfig(), fk_cfg: FkSolverConfig = FkSolverConfig()):
        super().__init__(rig, cfg)
        self.fk = FkSolver(rig, fk_cfg)

    def _place(self, start) -> None:
        self.position = self.rig.clip(start)
        self.lengths = inverse_kinematics(self.position, self.rig)
        self.fk.previous = self.position.copy()

    def _advance(self, lengths) -> None:
        p, _ = self.fk.best_fit(lengths)
        self.position = self.rig.clip(p)
        self.lengths = lengths.copy()

    def _reward(self, before, applied, g_dist, d_norm) -> RewardTerms:
        return reward_no_sag(g_dist, d_norm, self.cfg.goal_threshold)


class CarosimEnv(CdprEnv):
    variant = Variant.CAROSIM

    def __init__(self, rig: RigGeometry, cfg: EnvConfig = EnvConfig(variant=Variant.CAROSIM),
                 params: SimParams = SimParams(), material: CableMaterial = CableMaterial(),
                 settle_steps: int = 5000):
        super().__init__(rig, cfg)
        self.params = params
        self.material = material
        self.settle_steps = settle_steps
        self.scene = None

    @property
    def physics_steps_per_action(self) -> int:
        return max(1, int(round(self.cfg.control_interval / self.params.dt)))

    def _place(self, start) -> None:
        self.scene = cable_sim.build_scene(self.rig, self.params, self.material, start)
        cable_sim.settle(self.scene, max_steps=self.settle_steps)
        self._sync()

    def _sync(self) -> None:
        self.position = cable_sim.robot_position(self.scene)
        self.lengths = self.scene.rest_length.copy()

    def _advance(self, lengths) -> None:
        n = self.physics_steps_per_action
        cable_sim.set_commanded_lengths(self.scene, lengths, ramp_time=n * self.params.dt)
        for _ in range(n):
            cable_sim.step(self.scene)
        self._sync()

    def _reward(self, before, applied, g_dist, d_norm) -> RewardTerms:
        g_before = float(np.linalg.norm(before.current_position - before.target_position))
        c_diff, c_ratio, a_diff = carosim_aggregates(
            cable_sim.sag_deflection(self.scene), applied, before.current_lengths,
            inverse_kinematics(self.target, self.rig), g_before)
        return reward_carosim(g_dist, d_norm, c_diff, c_ratio, a_diff, self.cfg.goal_threshold,
                              self.cfg.include_goal_in_carosim)


def make_env(rig: RigGeometry, cfg: EnvConfig, params: SimParams = SimParams(),
             material: CableMaterial = CableMaterial()) -> CdprEnv:
    if cfg.variant is Variant.NO_SAG:
        return NoSagEnv(rig, cfg)
    return CarosimEnv(rig, cfg, params, material)


EPISODE_LOG_COLUMNS = (["episode", "step"]
                       + [f"obs_{k}" for k in ("L1", "L2", "L3", "L4", "x", "y", "z", "tx", "ty", "tz")]
                       + [f"action_L{i}" for i in range(1, 5)]
                       + list(RewardTerms.FIELDS) + ["done"])


class EpisodeLog:
    """CSV writer for per-step episode records."""

    def __init__(self, path):
        self._fh = open(path, "w", newline="")
        self._writer = csv.writer(self._fh)
        self._writer.writerow(EPISODE_LOG_COLUMNS)

    def write(self, episode: int, step: int, obs: Observation, action, terms: RewardTerms, done: bool) -> None:
        values = [*obs.flat(), *np.asarray(action, dtype=float), *terms.as_row()]
        self._writer.writerow([episode, step, *(repr(float(v)) for v in values), int(done)])

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
