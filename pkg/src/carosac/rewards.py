"""Reward stacks for the no-sag and sagging-cable environments."""
from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass

import numpy as np

R_STEP = 0.01
GOAL_REWARD = 1.0
RATIO_DISTANCE_FLOOR = 1e-3  # m, keeps c_ratio finite at the goal


@dataclass(frozen=True)
class RewardTerms:
    r_step: float
    r_dist: float
    r_goal: float
    r_csag: float
    r_cact: float
    r_cdev: float
    r_full: float
    g_dist: float
    d_norm: float
    c_diff_agg: float = 0.0
    c_ratio: float = 0.0
    a_diff_agg: float = 0.0

    FIELDS = ("r_step", "r_dist", "r_goal", "r_csag", "r_cact", "r_cdev", "r_full",
              "g_dist", "d_norm", "c_diff_agg", "c_ratio", "a_diff_agg")

    def as_row(self) -> list[float]:
        d = asdict(self)
        return [d[k] for k in self.FIELDS]


def distance_reward(d_norm: float) -> float:
    return -math.tanh(2.0 * (d_norm - 0.06)) + 0.002


def goal_reward(g_dist: float, threshold: float = 0.05) -> float:
    return GOAL_REWARD if g_dist <= threshold else 0.0


def sag_reward(c_diff: float) -> float:
    return -math.tanh(c_diff ** 2 + 0.09) * 0.7 - 0.035


def change_reward(c_ratio: float) -> float:
    return -math.tanh(c_ratio) ** 15 / 10.0


def deviation_reward(a_diff: float) -> float:
    return -math.tanh(a_diff) ** 4 / 5.0


def reward_no_sag(g_dist: float, d_norm: float, goal_threshold: float = 0.05) -> RewardTerms:
    r_dist = distance_reward(d_norm)
    r_goal = goal_reward(g_dist, goal_threshold)
    return RewardTerms(R_STEP, r_dist, r_goal, 0.0, 0.0, 0.0, R_STEP + r_dist + r_goal, g_dist, d_norm)


def reward_carosim(g_dist: float, d_norm: float, c_diff_agg: float, c_ratio: float, a_diff_agg: float,
                   goal_threshold: float = 0.05, include_goal: bool = True) -> RewardTerms:
    r_dist = distance_reward(d_norm)
    r_goal = goal_reward(g_dist, goal_threshold)
    r_csag = sag_reward(c_diff_agg)
    r_cact = change_reward(c_ratio)
    r_cdev = deviation_reward(a_diff_agg)
    total = R_STEP + r_dist + r_csag + r_cact + r_cdev + (r_goal if include_goal else 0.0)
    return RewardTerms(R_STEP, r_dist, r_goal, r_csag, r_cact, r_cdev, total, g_dist, d_norm,
                       c_diff_agg, c_ratio, a_diff_agg)


def carosim_aggregates(sag, action, current_lengths, ik_target, g_dist_before: float):
    """Collapse per-cable quantities into the scalar reward inputs (means over cables).

    ``sag`` is measured minus chord length, ``current_lengths`` are the lengths
    before the action and ``g_dist_before`` the goal distance at that moment.
    """
    action = np.asarray(action, dtype=float)
    c_diff = float(np.mean(sag))
    l_diff = np.abs(action - np.asarray(current_lengths, dtype=float))
    c_ratio = float(np.mean(l_diff) / max(g_dist_before, RATIO_DISTANCE_FLOOR))
    a_diff = float(np.mean(np.abs(np.asarray(ik_target, dtype=float) - action)))
    return c_diff, c_ratio, a_diff


def reward_shapes(n: int = 301) -> dict[str, np.ndarray]:
    """Each reward component swept over its own dependent variable."""
    d_norm = np.linspace(0.0, 1.0, n)
    c_diff = np.linspace(0.0, 3.0, n)
    c_ratio = np.linspace(0.0, 3.0, n)
    a_diff = np.linspace(0.0, 3.0, n)
    return {
        "d_norm": d_norm,
        "r_dist": np.array([distance_reward(v) for v in d_norm]),
        "c_diff": c_diff,
        "r_csag": np.array([sag_reward(v) for v in c_diff]),
        "c_ratio": c_ratio,
        "r_cact": np.array([change_reward(v) for v in c_ratio]),
        "a_diff": a_diff,
        "r_cdev": np.array([deviation_reward(v) for v in a_diff]),
    }


def reward_shapes_report(path, n: int = 301) -> None:
    shapes = reward_shapes(n)
    cols = list(shapes)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(cols)
        for i in range(n):
            writer.writerow([repr(float(shapes[c][i])) for c in cols])
