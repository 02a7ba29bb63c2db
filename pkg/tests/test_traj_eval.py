import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from carosac.cable_sim import CableMaterial
from carosac.envs import CarosimEnv, EnvConfig, NoSagEnv
from carosac.errors import EmptyRecord, InfeasibleSpeed, InvalidCount, MalformedCsv, NonMonotoneTime
from carosac.td3 import Td3Agent, Td3Config
from carosac.traj_eval import (IkController, PolicyController, TrackingRecord, Trajectory, cubic_spline_trajectory,
                               error_stats, natural_spline_path, random_trajectory, random_waypoints,
                               replay_recorded_lengths, track, write_length_log)

STIFF_LIGHT = CableMaterial(linear_mass=1e-4, compliance=1e-9)

point = st.tuples(st.floats(-2, 2), st.floats(-2, 2), st.floats(0, 2))


def record(ref, achieved):
    ref, achieved = np.asarray(ref, float), np.asarray(achieved, float)
    n = len(ref)
    return TrackingRecord(np.arange(n) * 0.1, ref, achieved, np.zeros((n, 4)), np.zeros((n, 4)))


@settings(max_examples=25, deadline=None)
@given(st.lists(point, min_size=2, max_size=6, unique=True))
def test_spline_interpolates_waypoints(wps):
    W = np.array(wps)
    if np.min(np.linalg.norm(np.diff(W, axis=0), axis=1)) < 1e-3:
        return
    u, spline = natural_spline_path(W)
    np.testing.assert_allclose(spline(u), W, atol=1e-9)


@settings(max_examples=25, deadline=None)
@given(st.lists(point, min_size=2, max_size=5), st.floats(0.1, 5.0))
def test_speed_bound_and_rest_to_rest(wps, vmax):
    W = np.array(wps)
    if np.min(np.linalg.norm(np.diff(W, axis=0), axis=1)) < 1e-2:
        return
    traj = cubic_spline_trajectory(W, vmax, 0.05)
    assert traj.speeds().max() <= vmax + 1e-6
    np.testing.assert_array_equal(traj.p[0], W[0])
    np.testing.assert_array_equal(traj.p[-1], W[-1])
    assert np.all(np.diff(traj.t) > 0)
    # rest-to-rest law: the mean speed over an end interval is at most 2 vmax dt / T,
    # vanishing as the sampling is refined
    bound = 2.0 * vmax * 0.05 / traj.t[-1] + 1e-9
    assert traj.speeds()[0] <= bound and traj.speeds()[-1] <= bound


def test_two_waypoints_give_straight_segment():
    a, b = np.array([0.0, 0.0, 1.0]), np.array([1.0, -1.0, 0.5])
    traj = cubic_spline_trajectory([a, b], 1.0, 0.1)
    d = (b - a) / np.linalg.norm(b - a)
    rel = traj.p - a
    np.testing.assert_allclose(rel - np.outer(rel @ d, d), 0.0, atol=1e-12)


@pytest.mark.parametrize("v", [0.0, -1.0, 5.5])
def test_infeasible_speed(v):
    with pytest.raises(InfeasibleSpeed):
        cubic_spline_trajectory([[0, 0, 1], [1, 1, 1]], v, 0.1)


def test_random_waypoints(rig):
    a = random_waypoints(50, rig, seed=4)
    assert np.all(a >= rig.workspace_min) and np.all(a <= rig.workspace_max)
    np.testing.assert_array_equal(a, random_waypoints(50, rig, seed=4))
    with pytest.raises(InvalidCount):
        random_waypoints(0, rig)


def test_random_trajectory_inside(rig):
    traj = random_trajectory(rig, 5, 2.0, 0.05, seed=1)
    assert np.all(traj.p >= rig.workspace_min) and np.all(traj.p <= rig.workspace_max)


def test_error_stats_examples():
    ref = np.zeros((5, 3))
    s = error_stats(record(ref, ref))
    assert s.rmse_xyz == (0.0, 0.0, 0.0) and s.mae_xyz == (0.0, 0.0, 0.0) and s.mean_euclidean == 0.0
    s = error_stats(record(ref, ref + [0.1, 0.0, 0.0]))
    assert s.rmse_xyz[0] == pytest.approx(0.1) and s.mae_xyz[0] == pytest.approx(0.1)
    assert s.rmse_xyz[1:] == (0.0, 0.0)
    s = error_stats(record(np.zeros((2, 3)), [[0.0, 0.0, 0.0], [0.0, 0.2, 0.0]]))
    assert s.mae_xyz[1] == pytest.approx(0.1)
    assert s.rmse_xyz[1] == pytest.approx(0.141421356237, abs=1e-12)
    with pytest.raises(EmptyRecord):
        error_stats(record(np.zeros((0, 3)), np.zeros((0, 3))))


@given(st.lists(st.floats(-1, 1).filter(lambda x: x == 0.0 or abs(x) > 1e-100), min_size=3, max_size=10))
def test_error_stats_permutation_covariant(errs):
    e = np.array(errs)
    ref = np.zeros((len(e), 3))
    ach = np.column_stack([e, np.zeros_like(e), np.zeros_like(e)])
    a = error_stats(record(ref, ach))
    b = error_stats(record(ref, ach[::-1]))
    assert a.rmse_xyz[0] == pytest.approx(b.rmse_xyz[0]) and a.mae_xyz[0] == pytest.approx(b.mae_xyz[0])
    assert (a.mean_euclidean == 0.0) == bool(np.all(e == 0.0))


def test_ik_tracking_no_sag_exact_and_idempotent(rig):
    traj = random_trajectory(rig, 4, 1.0, 0.1, seed=2)
    env = NoSagEnv(rig)
    a = track(IkController(rig), env, traj)
    b = track(IkController(rig), env, traj)
    assert len(a) == len(traj) and not a.aborted
    assert error_stats(a).mean_euclidean < 1e-9
    assert np.array_equal(a.achieved, b.achieved)


def test_ik_tracking_carosim_has_sag_bias(rig):
    traj = random_trajectory(rig, 3, 1.0, 0.1, seed=5)
    rec = track(IkController(rig), CarosimEnv(rig, EnvConfig(variant="carosim")), traj)
    s = error_stats(rec)
    assert len(rec) == len(traj)
    assert 0.0 < s.mean_euclidean < 0.05
    assert np.all(rec.measured >= 0.0)


def test_policy_controller_runs(rig):
    agent = Td3Agent(10, 4, Td3Config(hidden=(8,)), seed=0)
    traj = random_trajectory(rig, 2, 1.0, 0.2, seed=0)
    rec = track(PolicyController(agent, rig), NoSagEnv(rig), traj)
    assert len(rec) == len(traj)
    assert np.all(rec.commanded >= 2.0) and np.all(rec.commanded <= 7.0)


def test_record_csv_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    rec = TrackingRecord(np.arange(4) * 0.1, rng.normal(size=(4, 3)), rng.normal(size=(4, 3)),
                         rng.normal(size=(4, 4)), rng.normal(size=(4, 4)))
    rec.write_csv(tmp_path / "r.csv")
    back = TrackingRecord.read_csv(tmp_path / "r.csv")
    for name in ("t", "reference", "achieved", "commanded", "measured"):
        assert np.array_equal(getattr(rec, name), getattr(back, name))


def test_trajectory_csv_round_trip(tmp_path, rig):
    traj = random_trajectory(rig, 3, 1.0, 0.1, seed=9)
    traj.write_csv(tmp_path / "t.csv")
    back = Trajectory.read_csv(tmp_path / "t.csv")
    assert np.array_equal(back.t, traj.t) and np.array_equal(back.p, traj.p)


def test_stats_json(tmp_path):
    s = error_stats(record(np.zeros((3, 3)), np.ones((3, 3))))
    s.write_json(tmp_path / "s.json")
    data = json.loads((tmp_path / "s.json").read_text())
    assert data["n_samples"] == 3 and data["rmse_xyz"] == [1.0, 1.0, 1.0]


def test_replay_stiff_light_reproduces_source(rig, tmp_path):
    traj = random_trajectory(rig, 3, 1.0, 0.1, seed=6)
    write_length_log(tmp_path / "L.csv", traj, rig)
    rec = replay_recorded_lengths(tmp_path / "L.csv", rig, material=STIFF_LIGHT)
    assert len(rec) == len(traj)
    assert max(error_stats(rec).rmse_xyz) < 0.05
    again = replay_recorded_lengths(tmp_path / "L.csv", rig, material=STIFF_LIGHT)
    assert np.array_equal(rec.achieved, again.achieved)


def test_replay_without_reference(rig, tmp_path):
    path = tmp_path / "L.csv"
    path.write_text("t,L1,L2,L3,L4\n0.0,4.2,4.2,4.2,4.2\n0.1,4.2,4.2,4.2,4.2\n")
    rec = replay_recorded_lengths(path, rig)
    assert len(rec) == 2 and np.all(np.isnan(rec.reference))


def test_replay_rejects_shuffled_time(rig, tmp_path):
    path = tmp_path / "L.csv"
    path.write_text("t,L1,L2,L3,L4\n0.1,4.2,4.2,4.2,4.2\n0.0,4.2,4.2,4.2,4.2\n")
    with pytest.raises(NonMonotoneTime):
        replay_recorded_lengths(path, rig)


@pytest.mark.parametrize("text", ["t,L1,L2\n0,1,2\n", "t,L1,L2,L3,L4\n0,4,4,x,4\n", "t,L1,L2,L3,L4\n",
                                  "t,L1,L2,L3,L4\n0,4,4,4\n"])
def test_replay_malformed(rig, tmp_path, text):
    path = tmp_path / "bad.csv"
    path.write_text(text)
    with pytest.raises(MalformedCsv):
        replay_recorded_lengths(path, rig)
