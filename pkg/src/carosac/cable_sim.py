"""Sagging-cable simulation of the suspended rig.

Each cable is a chain of XPBD particles pinned at its exit point; the platform is
a point mass joined to the last particle of every cable. Commanded cable lengths
are reeled in or out at a bounded rate, standing in for the winch controllers.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from . import _xpbd
from .errors import InvalidInitialPosition, NumericalDivergence
from .kinematics import RigGeometry, inverse_kinematics

GRAVITY = (0.0, 0.0, -9.81)


@dataclass(frozen=True)
class CableMaterial:
    linear_mass: float = 0.01055  # kg/m, aramid cable
    compliance: float = 1e-8  # m/N for a constraint of unit length
    damping: float = 0.98  # velocity retained per step

    def __post_init__(self):
        if not self.linear_mass > 0:
            raise ValueError("linear_mass must be positive")
        if self.compliance < 0:
            raise ValueError("compliance must be non-negative")
        if not 0.0 <= self.damping <= 1.0:
            raise ValueError("damping must lie in [0, 1]")


@dataclass(frozen=True)
class SimParams:
    particles_per_cable: int = 20
    substeps: int = 4
    constraint_iterations: int = 10
    dt: float = 0.01
    gravity: tuple[float, float, float] = GRAVITY
    robot_mass: float = 23.655
    actuation_rate_limit: float = 2.5  # m/s
    explosion_speed: float = 100.0  # m/s

    def __post_init__(self):
        object.__setattr__(self, "gravity", tuple(float(g) for g in self.gravity))
        if self.particles_per_cable < 3:
            raise ValueError("particles_per_cable must be >= 3")
        if self.substeps < 1:
            raise ValueError("substeps must be >= 1")
        if self.constraint_iterations < 1:
            raise ValueError("constraint_iterations must be >= 1")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.robot_mass > 0:
            raise ValueError("robot_mass must be positive")
        if not self.actuation_rate_limit > 0:
            raise ValueError("actuation_rate_limit must be positive")


@dataclass
class StepInfo:
    constraint_residual_max: float
    clamped: bool
    residual_history: np.ndarray | None = None  # (substeps, iterations)


@dataclass
class SimScene:
    rig: RigGeometry
    params: SimParams
    material: CableMaterial
    x: np.ndarray  # (4, n, 3) particle positions
    v: np.ndarray
    w: np.ndarray  # (4, n) inverse masses
    platform_x: np.ndarray
    platform_v: np.ndarray
    rest_length: np.ndarray
    target_length: np.ndarray
    winch_speed: np.ndarray
    time: float = 0.0
    clamped: bool = False
    _residuals: np.ndarray = field(default=None, repr=False)

    @property
    def n_segments(self) -> int:
        return self.x.shape[1] - 1

    def copy(self) -> "SimScene":
        return SimScene(self.rig, self.params, self.material, self.x.copy(), self.v.copy(),
                        self.w.copy(), self.platform_x.copy(), self.platform_v.copy(),
                        self.rest_length.copy(), self.target_length.copy(), self.winch_speed.copy(),
                        self.time, self.clamped)


def _particle_inverse_masses(rest_length, n, linear_mass):
    m = linear_mass * np.asarray(rest_length) / (n - 1)
    w = np.repeat((1.0 / m)[:, None], n, axis=1)
    w[:, 0] = 0.0
    return w


def build_scene(rig: RigGeometry, params: SimParams = SimParams(), material: CableMaterial = CableMaterial(),
                initial_position=None) -> SimScene:
    """Straight cables from each anchor to the platform at ``initial_position``."""
    p = rig.workspace_center if initial_position is None else np.asarray(initial_position, dtype=float)
    if p.shape != (3,) or not np.all(np.isfinite(p)) or not rig.contains(p):
        raise InvalidInitialPosition(f"initial position {np.asarray(p).tolist()} outside workspace")
    L = inverse_kinematics(p, rig)
    lo, hi = rig.length_bounds
    if np.any(L < lo) or np.any(L > hi):
        raise InvalidInitialPosition(f"IK lengths {L.tolist()} outside length bounds {[lo, hi]}")
    n = params.particles_per_cable
    s = np.linspace(0.0, 1.0, n)[None, :, None]
    attach = p + rig.offsets
    x = rig.anchors[:, None, :] * (1.0 - s) + attach[:, None, :] * s
    x[:, -1, :] = attach  # exact coincidence with the platform attachment
    return SimScene(rig, params, material, x, np.zeros_like(x),
                    _particle_inverse_masses(L, n, material.linear_mass),
                    p.copy(), np.zeros(3), L.copy(), L.copy(), np.full(4, params.actuation_rate_limit))


def set_commanded_lengths(scene: SimScene, targets, ramp_time: float = 0.0) -> bool:
    """Set winch targets, clamped into the rig length bounds. Returns the clamp flag.

    Each winch reels at ``|target - rest| / ramp_time``, capped by the actuation rate
    limit; ``ramp_time = 0`` means full rate. Spreading the motion over the command
    period keeps winch speed continuous along smooth length profiles.
    """
    t = np.asarray(targets, dtype=float)
    if t.shape != (4,) or not np.all(np.isfinite(t)):
        raise ValueError("targets must be 4 finite lengths")
    lo, hi = scene.rig.length_bounds
    clipped = np.clip(t, lo, hi)
    scene.clamped = bool(np.any(clipped != t))
    scene.target_length = clipped
    rate = scene.params.actuation_rate_limit
    if ramp_time > 0:
        scene.winch_speed = np.minimum(np.abs(clipped - scene.rest_length) / ramp_time, rate)
    else:
        scene.winch_speed = np.full(4, rate)
    return scene.clamped


def step(scene: SimScene, record_residuals: bool = False) -> StepInfo:
    """Advance the scene by one ``dt``."""
    prm, mat = scene.params, scene.material
    if scene._residuals is None or scene._residuals.shape != (prm.substeps, prm.constraint_iterations):
        scene._residuals = np.zeros((prm.substeps, prm.constraint_iterations))
    _xpbd.step_kernel(scene.x, scene.v, scene.w, scene.rest_length, scene.target_length, scene.winch_speed,
                      mat.linear_mass, mat.compliance, scene.rig.anchors, scene.rig.offsets,
                      scene.platform_x, scene.platform_v, 1.0 / prm.robot_mass, True,
                      np.asarray(prm.gravity), prm.dt, prm.substeps, prm.constraint_iterations,
                      mat.damping ** (1.0 / prm.substeps), scene._residuals)
    scene.time += prm.dt
    _check_divergence(scene)
    return StepInfo(float(scene._residuals[-1, -1]), scene.clamped,
                    scene._residuals.copy() if record_residuals else None)


def _check_divergence(scene: SimScene) -> None:
    limit = scene.params.explosion_speed
    if not (np.all(np.isfinite(scene.x)) and np.all(np.isfinite(scene.platform_x))):
        raise NumericalDivergence(f"non-finite state at t={scene.time:.3f}s")
    speed = max_speed(scene)
    if not speed <= limit:
        raise NumericalDivergence(f"speed {speed:.3g} m/s above explosion threshold {limit} m/s")


def max_speed(scene: SimScene) -> float:
    vp = float(np.sqrt(scene.platform_v @ scene.platform_v))
    vc = float(np.sqrt(np.max(np.einsum("ckj,ckj->ck", scene.v, scene.v))))
    return max(vp, vc)


def kinetic_energy(scene: SimScene) -> float:
    m = np.zeros_like(scene.w)
    free = scene.w > 0
    m[free] = 1.0 / scene.w[free]
    ke = 0.5 * np.sum(m * np.einsum("ckj,ckj->ck", scene.v, scene.v))
    return float(ke + 0.5 * scene.params.robot_mass * scene.platform_v @ scene.platform_v)


def settle(scene: SimScene, speed_tol: float = 1e-4, consecutive: int = 50, max_steps: int = 5000) -> int:
    """Step until every speed stays below ``speed_tol`` for ``consecutive`` steps.

    Returns the number of steps taken (``max_steps`` if never settled).
    """
    calm = 0
    for i in range(1, max_steps + 1):
        step(scene)
        calm = calm + 1 if max_speed(scene) < speed_tol else 0
        if calm >= consecutive:
            return i
    return max_steps


def measured_cable_lengths(scene: SimScene) -> np.ndarray:
    seg = np.diff(scene.x, axis=1)
    return np.sqrt(np.einsum("ckj,ckj->ck", seg, seg)).sum(axis=1)


def robot_position(scene: SimScene) -> np.ndarray:
    return scene.platform_x.copy()


def chord_lengths(scene: SimScene) -> np.ndarray:
    d = scene.platform_x + scene.rig.offsets - scene.rig.anchors
    return np.sqrt(np.einsum("ij,ij->i", d, d))


def sag_deflection(scene: SimScene) -> np.ndarray:
    """Arc length in excess of the straight anchor-to-attachment chord, per cable."""
    return measured_cable_lengths(scene) - chord_lengths(scene)


def attachment_gap(scene: SimScene) -> float:
    d = scene.x[:, -1, :] - (scene.platform_x + scene.rig.offsets)
    return float(np.max(np.linalg.norm(d, axis=1)))


def midpoint_sag(positions: np.ndarray) -> float:
    """Vertical drop of a chain's lowest particle below the line joining its ends."""
    ends_z = 0.5 * (positions[0, 2] + positions[-1, 2])
    return float(ends_z - positions[:, 2].min())


def simulate_pendant(span: float, arc_length: float, params: SimParams = SimParams(),
                     material: CableMaterial = CableMaterial(), max_steps: int = 20000) -> np.ndarray:
    """Settle a single cable pinned at both ends at equal height; return particle positions."""
    if arc_length <= span:
        raise ValueError("arc_length must exceed span for a hanging cable")
    n = params.particles_per_cable
    # start from a symmetric V of the right total length so constraints begin satisfied
    half = 0.5 * arc_length
    depth = math.sqrt(half ** 2 - (0.5 * span) ** 2)
    s = np.linspace(0.0, arc_length, n)
    xs = np.where(s <= half, s / half * 0.5 * span, span - (arc_length - s) / half * 0.5 * span)
    zs = -depth * np.where(s <= half, s / half, (arc_length - s) / half)
    x = np.zeros((1, n, 3))
    x[0, :, 0] = xs - 0.5 * span
    x[0, :, 2] = zs
    v = np.zeros_like(x)
    w = _particle_inverse_masses(np.array([arc_length]), n, material.linear_mass)
    w[0, -1] = 0.0
    rest = np.array([arc_length])
    residuals = np.zeros((params.substeps, params.constraint_iterations))
    dummy = np.zeros((1, 3))
    retention = material.damping ** (1.0 / params.substeps)
    calm = 0
    for _ in range(max_steps):
        _xpbd.step_kernel(x, v, w, rest, rest.copy(), np.zeros(1), material.linear_mass, material.compliance,
                          dummy, dummy, np.zeros(3), np.zeros(3), 0.0, False,
                          np.asarray(params.gravity), params.dt, params.substeps, params.constraint_iterations,
                          retention, residuals)
        if not np.all(np.isfinite(x)):
            raise NumericalDivergence("pendant cable diverged")
        calm = calm + 1 if np.max(np.abs(v)) < 1e-4 else 0
        if calm >= 50:
            break
    return x[0].copy()


SNAPSHOT_COLUMNS = ["t", "L1c", "L2c", "L3c", "L4c", "L1m", "L2m", "L3m", "L4m", "x", "y", "z"]


def snapshot_row(scene: SimScene) -> list[float]:
    return [scene.time, *scene.target_length, *measured_cable_lengths(scene), *scene.platform_x]


def write_snapshots(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SNAPSHOT_COLUMNS)
        for row in rows:
            writer.writerow([repr(float(v)) for v in row])
