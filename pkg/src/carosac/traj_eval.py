"""Reference trajectories, controller tracking, recorded-length replay and error statistics."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, replace

import numpy as np
from scipy.interpolate import CubicSpline

from . import cable_sim
from .cable_sim import CableMaterial, SimParams
from .envs import CarosimEnv, CdprEnv, decode_action
from .errors import (EmptyRecord, InfeasibleSpeed, InvalidCount, MalformedCsv, NonMonotoneTime,
                     NumericalDivergence)
from .kinematics import FkSolver, RigGeometry, inverse_kinematics, inverse_kinematics_batch

MAX_SPEED = 5.0  # m/s, fastest evaluation trajectories


@dataclass
class Trajectory:
    t: np.ndarray  # (N,)
    p: np.ndarray  # (N, 3)

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.p = np.asarray(self.p, dtype=float)
        if self.p.shape != (len(self.t), 3):
            raise ValueError("positions must be (N, 3) matching the time stamps")
        if len(self.t) > 1 and not np.all(np.diff(self.t) > 0):
            raise NonMonotoneTime("trajectory time stamps must be strictly increasing")

    def __len__(self):
        return len(self.t)

    @property
    def dt(self) -> float:
        return float(np.median(np.diff(self.t))) if len(self.t) > 1 else 0.0

    def speeds(self) -> np.ndarray:
        return np.linalg.norm(np.diff(self.p, axis=0), axis=1) / np.diff(self.t)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", "x", "y", "z"])
            for ti, pi in zip(self.t, self.p):
                writer.writerow([repr(float(ti)), *(repr(float(v)) for v in pi)])

    @classmethod
    def read_csv(cls, path) -> "Trajectory":
        cols = _read_columns(path, required=("t", "x", "y", "z"))
        return cls(cols["t"], np.column_stack([cols["x"], cols["y"], cols["z"]]))


def natural_spline_path(waypoints):
    """Natural cubic spline through ``waypoints`` parameterised by cumulative chord length."""
    W = np.asarray(waypoints, dtype=float)
    if W.ndim != 2 or W.shape[1] != 3 or len(W) < 2:
        raise InvalidCount("need at least two 3-D waypoints")
    chords = np.linalg.norm(np.diff(W, axis=0), axis=1)
    if np.any(chords <= 0):
        raise ValueError("consecutive waypoints must differ")
    u = np.concatenate([[0.0], np.cumsum(chords)])
    return u, CubicSpline(u, W, bc_type="natural")


def cubic_spline_trajectory(waypoints, speed_max: float, dt: float) -> Trajectory:
    """Sample a natural cubic spline with a rest-to-rest time law bounded by ``speed_max``.

    The arc parameter follows ``u(t) = U (3 s^2 - 2 s^3)``, ``s = t / T``, whose peak
    rate is ``1.5 U / T``; ``T`` is chosen so that the path speed never exceeds
    ``speed_max``, then rounded up to a whole number of samples.
    """
    if not (0.0 < speed_max <= MAX_SPEED):
        raise InfeasibleSpeed(f"speed_max must lie in (0, {MAX_SPEED}] m/s (got {speed_max})")
    if not dt > 0:
        raise ValueError("dt must be positive")
    u, spline = natural_spline_path(waypoints)
    U = u[-1]
    dense = np.linspace(0.0, U, 200 * len(u) + 1)
    tangent_max = float(np.max(np.linalg.norm(spline(dense, 1), axis=1))) * 1.001
    T = 1.5 * U * tangent_max / speed_max
    n = max(int(math.ceil(T / dt)), 1)
    T = n * dt
    t = np.arange(n + 1) * dt
    s = t / T
    p = spline(U * (3.0 * s ** 2 - 2.0 * s ** 3))
    p[0], p[-1] = np.asarray(waypoints, dtype=float)[[0, -1]]
    return Trajectory(t, p)


def random_waypoints(n: int, rig: RigGeometry, seed=None) -> np.ndarray:
    if n < 1:
        raise InvalidCount(f"waypoint count must be positive (got {n})")
    return rig.sample_positions(np.random.default_rng(seed), n)


def random_trajectory(rig: RigGeometry, n_waypoints: int, speed_max: float, dt: float, seed=None,
                      max_tries: int = 100) -> Trajectory:
    """Random spline trajectory whose samples all stay inside the workspace."""
    rng = np.random.default_rng(seed)
    for _ in range(max_tries):
        traj = cubic_spline_trajectory(random_waypoints(n_waypoints, rig, rng), speed_max, dt)
        if np.all(traj.p >= rig.workspace_min) and np.all(traj.p <= rig.workspace_max):
            return traj
    raise RuntimeError(f"no in-workspace spline found in {max_tries} draws")


class IkController:
    """Straight-line inverse kinematics of the commanded reference."""

    name = "ik"

    def __init__(self, rig: RigGeometry):
        self.rig = rig

    def __call__(self, obs) -> np.ndarray:
        return inverse_kinematics(obs.target_position, self.rig)


class PolicyController:
    name = "rl"

    def __init__(self, agent, rig: RigGeometry):
        self.agent = agent
        self.rig = rig

    def __call__(self, obs) -> np.ndarray:
        return decode_action(self.agent.act(obs.normalized(self.rig)), self.rig)


@dataclass
class TrackingRecord:
    t: np.ndarray
    reference: np.ndarray  # (N, 3), NaN when unknown
    achieved: np.ndarray  # (N, 3)
    commanded: np.ndarray  # (N, 4)
    measured: np.ndarray  # (N, 4)
    aborted: bool = False

    COLUMNS = (["t", "ref_x", "ref_y", "ref_z", "x", "y", "z"]
               + [f"L{i}c" for i in range(1, 5)] + [f"L{i}m" for i in range(1, 5)])

    def __post_init__(self):
        n = len(self.t)
        for name, width in (("reference", 3), ("achieved", 3), ("commanded", 4), ("measured", 4)):
            arr = np.asarray(getattr(self, name), dtype=float).reshape(-1, width)
            if len(arr) != n:
                raise ValueError(f"{name} has {len(arr)} rows, expected {n}")
            setattr(self, name, arr)
        self.t = np.asarray(self.t, dtype=float)

    def __len__(self):
        return len(self.t)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(self.COLUMNS)
            rows = np.column_stack([self.t, self.reference, self.achieved, self.commanded, self.measured])
            for row in rows:
                writer.writerow([repr(float(v)) for v in row])

    @classmethod
    def read_csv(cls, path) -> "TrackingRecord":
        cols = _read_columns(path, required=cls.COLUMNS)
        stack = lambda names: np.column_stack([cols[c] for c in names])  # noqa: E731
        return cls(cols["t"], stack(cls.COLUMNS[1:4]), stack(cls.COLUMNS[4:7]),
                   stack(cls.COLUMNS[7:11]), stack(cls.COLUMNS[11:15]))


@dataclass
class ErrorStats:
    rmse_xyz: tuple[float, float, float]
    mae_xyz: tuple[float, float, float]
    mean_euclidean: float
    mean_cable_error: float
    n_samples: int
    errors: np.ndarray  # (N, 3) achieved - reference

    def summary(self) -> dict:
        d = asdict(self)
        d.pop("errors")
        return d

    def write_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.summary(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def error_stats(rec: TrackingRecord) -> ErrorStats:
    """Per-axis RMSE and MAE plus the mean Euclidean position error."""
    if len(rec) == 0:
        raise EmptyRecord("tracking record is empty")
    if not np.all(np.isfinite(rec.reference)):
        raise ValueError("record has no reference positions")
    err = rec.achieved - rec.reference
    rmse = np.sqrt(np.mean(err ** 2, axis=0))
    mae = np.mean(np.abs(err), axis=0)
    cable = float(np.mean(np.abs(rec.commanded - rec.measured)))
    return ErrorStats(tuple(float(v) for v in rmse), tuple(float(v) for v in mae),
                      float(np.mean(np.linalg.norm(err, axis=1))), cable, len(rec), err)


def _measured_lengths(env: CdprEnv) -> np.ndarray:
    if isinstance(env, CarosimEnv):
        return cable_sim.measured_cable_lengths(env.scene)
    return inverse_kinematics(env.position, env.rig)


def track(controller, env: CdprEnv, traj: Trajectory) -> TrackingRecord:
    """Drive ``env`` along ``traj`` with one-sample preview of the reference.

    The platform starts at the first sample; at every sample the controller sees
    that sample as its target and the environment advances one control interval.
    A simulator divergence ends the run early with ``aborted=True``.
    """
    n = len(traj)
    saved_cfg = env.cfg
    changes = {"terminate_on_goal": False, "max_steps_per_episode": max(n, 1)}
    if isinstance(env, CarosimEnv) and n > 1:
        changes["control_interval"] = traj.dt
    env.cfg = replace(saved_cfg, **changes)
    rows = {"t": [], "reference": [], "achieved": [], "commanded": [], "measured": []}
    aborted = False
    try:
        env.reset(start=traj.p[0], target=traj.p[0])
        for k in range(n):
            env.set_target(traj.p[k])
            lengths = np.asarray(controller(env.observation()), dtype=float)
            try:
                env.step(lengths)
            except NumericalDivergence:
                aborted = True
                break
            rows["t"].append(traj.t[k])
            rows["reference"].append(traj.p[k])
            rows["achieved"].append(env.position.copy())
            rows["commanded"].append(np.clip(lengths, *env.rig.length_bounds))
            rows["measured"].append(_measured_lengths(env))
    finally:
        env.cfg = saved_cfg
    return TrackingRecord(np.array(rows["t"]), np.array(rows["reference"]).reshape(-1, 3),
                          np.array(rows["achieved"]).reshape(-1, 3), np.array(rows["commanded"]).reshape(-1, 4),
                          np.array(rows["measured"]).reshape(-1, 4), aborted)


LENGTH_LOG_COLUMNS = ["t", "L1", "L2", "L3", "L4", "x", "y", "z"]


def write_length_log(path, traj: Trajectory, rig: RigGeometry) -> None:
    """Straight-line cable lengths along ``traj`` with the positions as reference."""
    L = inverse_kinematics_batch(traj.p, rig)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(LENGTH_LOG_COLUMNS)
        for row in np.column_stack([traj.t, L, traj.p]):
            writer.writerow([repr(float(v)) for v in row])


def _read_columns(path, required) -> dict[str, np.ndarray]:
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None:
                raise MalformedCsv(f"{path}: empty file")
            header = [h.strip() for h in header]
            missing = [c for c in required if c not in header]
            if missing:
                raise MalformedCsv(f"{path}: missing columns {missing}")
            rows = [r for r in reader if r]
    except OSError as exc:
        raise MalformedCsv(f"{path}: {exc}") from exc
    if not rows:
        raise MalformedCsv(f"{path}: no data rows")
    try:
        data = np.array([[float(v) for v in r] for r in rows])
    except ValueError as exc:
        raise MalformedCsv(f"{path}: non-numeric value ({exc})") from exc
    if data.shape[1] != len(header):
        raise MalformedCsv(f"{path}: rows have {data.shape[1]} fields, header has {len(header)}")
    return {name: data[:, i] for i, name in enumerate(header)}


def replay_recorded_lengths(path, rig: RigGeometry, params: SimParams = SimParams(),
                            material: CableMaterial = CableMaterial()) -> TrackingRecord:
    """Feed a recorded cable-length log into the cable simulation.

    Each row's lengths are held (zero-order hold) as the winch command until the next
    time stamp, with the winches ramping to it over that interval; the simulated
    platform pose at the end of the interval is recorded. Reference
    positions are taken from optional ``x, y, z`` columns.
    """
    cols = _read_columns(path, required=("t", "L1", "L2", "L3", "L4"))
    t = cols["t"]
    if len(t) > 1 and not np.all(np.diff(t) > 0):
        raise NonMonotoneTime(f"{path}: time stamps must be strictly increasing")
    L = np.column_stack([cols[f"L{i}"] for i in range(1, 5)])
    has_ref = all(c in cols for c in ("x", "y", "z"))
    ref = np.column_stack([cols["x"], cols["y"], cols["z"]]) if has_ref else np.full((len(t), 3), np.nan)

    start, _ = FkSolver(rig).best_fit(L[0], rig.workspace_center)
    scene = cable_sim.build_scene(rig, params, material, rig.clip(start))
    cable_sim.set_commanded_lengths(scene, L[0])
    cable_sim.settle(scene)
    intervals = np.diff(t)
    last = float(np.median(intervals)) if len(intervals) else params.dt
    achieved, measured, commanded = [], [], []
    for k in range(len(t)):
        hold = intervals[k] if k < len(intervals) else last
        n = max(1, int(round(hold / params.dt)))
        cable_sim.set_commanded_lengths(scene, L[k], ramp_time=n * params.dt)
        for _ in range(n):
            cable_sim.step(scene)
        achieved.append(cable_sim.robot_position(scene))
        measured.append(cable_sim.measured_cable_lengths(scene))
        commanded.append(scene.target_length.copy())
    return TrackingRecord(t, ref, np.array(achieved), np.array(commanded), np.array(measured))
