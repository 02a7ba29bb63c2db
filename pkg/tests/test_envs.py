import csv

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from carosac import cable_sim
from carosac.envs import (ACT_DIM, EPISODE_LOG_COLUMNS, OBS_DIM, CarosimEnv, EnvConfig, EpisodeLog, NoSagEnv,
                          Variant, decode_action, encode_action, make_env)
from carosac.errors import NumericalDivergence
from carosac.kinematics import inverse_kinematics


@pytest.fixture
def no_sag(rig):
    return NoSagEnv(rig, EnvConfig(max_steps_per_episode=20))


@pytest.fixture(scope="module")
def carosim():
    from carosac.kinematics import default_rig
    return CarosimEnv(default_rig(), EnvConfig(variant="carosim", max_steps_per_episode=5))


def test_reset_is_seeded(no_sag):
    a = no_sag.reset(seed=11).flat()
    b = no_sag.reset(seed=11).flat()
    c = no_sag.reset(seed=12).flat()
    assert np.array_equal(a, b) and not np.array_equal(a, c)


def test_reset_positions_inside_workspace(no_sag, rig):
    for seed in range(1000):
        obs = no_sag.reset(seed=seed)
        assert rig.contains(obs.current_position) and rig.contains(obs.target_position)


def test_ik_action_reaches_goal(no_sag, rig):
    no_sag.reset(seed=3)
    obs, terms, done = no_sag.step(inverse_kinematics(no_sag.target, rig))
    assert terms.g_dist <= 0.05
    assert done and terms.r_goal == 1.0
    assert obs.flat().shape == (OBS_DIM,)


def test_step_budget(no_sag, rig):
    no_sag.reset(seed=5, target=rig.workspace_max)
    far = inverse_kinematics(rig.workspace_min, rig)
    done, n = False, 0
    while not done:
        obs, _, done = no_sag.step(far)
        n += 1
        assert obs.flat().shape == (10,)
    assert n == 20
    with pytest.raises(RuntimeError):
        no_sag.step(far)


def test_actions_clamped(no_sag):
    no_sag.reset(seed=1)
    obs, _, _ = no_sag.step(np.array([0.5, 9.0, 4.0, 4.0]))
    assert no_sag.clamped
    np.testing.assert_array_equal(obs.current_lengths[:2], [2.0, 7.0])


def test_invalid_action_shape(no_sag):
    no_sag.reset(seed=1)
    with pytest.raises(ValueError):
        no_sag.step(np.ones(3))


def test_reward_sequence_reproducible(rig):
    actions = np.random.default_rng(0).uniform(2.5, 6.0, (15, ACT_DIM))

    def rollout():
        env = NoSagEnv(rig, EnvConfig(max_steps_per_episode=15))
        env.reset(seed=9)
        return [env.step(a)[1].r_full for a in actions]

    assert rollout() == rollout()


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-1.0, 1.0), min_size=4, max_size=4))
def test_action_codec_round_trip(a):
    from carosac.kinematics import default_rig
    rig = default_rig()
    L = decode_action(np.array(a), rig)
    assert np.all((L >= 2.0) & (L <= 7.0))
    np.testing.assert_allclose(encode_action(L, rig), a, atol=1e-12)


def test_normalized_observation_range(no_sag, rig):
    for seed in range(50):
        v = no_sag.reset(seed=seed).normalized(rig)
        assert v.shape == (10,) and np.all(np.abs(v) <= 1.0)


def test_d_norm_in_unit_interval(no_sag, rig):
    no_sag.reset(seed=0, start=rig.workspace_min, target=rig.workspace_max)
    _, terms, _ = no_sag.step(inverse_kinematics(rig.workspace_min, rig))
    assert terms.d_norm == pytest.approx(1.0)


def test_env_config_validation():
    with pytest.raises(ValueError):
        EnvConfig(goal_threshold=0.0)
    with pytest.raises(ValueError):
        EnvConfig(variant="unknown")
    assert EnvConfig(variant="carosim").variant is Variant.CAROSIM


def test_make_env_variants(rig):
    assert isinstance(make_env(rig, EnvConfig()), NoSagEnv)


def test_carosim_reset_sagging_cables(carosim):
    carosim.reset(seed=2)
    sc = carosim.scene
    assert np.all(cable_sim.measured_cable_lengths(sc) >= cable_sim.chord_lengths(sc) - 1e-9)
    assert cable_sim.max_speed(sc) < 1e-4


def test_carosim_step_rewards(carosim, rig):
    obs = carosim.reset(seed=4)
    t0 = carosim.scene.time
    obs2, terms, done = carosim.step(inverse_kinematics(obs.target_position, rig))
    active = terms.r_step + terms.r_dist + terms.r_csag + terms.r_cact + terms.r_cdev + terms.r_goal
    assert terms.r_full == pytest.approx(active)
    assert terms.c_diff_agg > 0.0
    assert terms.a_diff_agg == pytest.approx(0.0, abs=1e-12)
    assert obs2.flat().shape == (10,)
    assert carosim.scene.time - t0 == pytest.approx(0.1)


def test_carosim_reproducible(rig):
    def run():
        env = CarosimEnv(rig, EnvConfig(variant="carosim", max_steps_per_episode=3))
        env.reset(seed=8)
        return [env.step(np.full(4, 4.2))[1].r_full for _ in range(3)]

    assert run() == run()


def test_carosim_divergence_propagates(rig):
    env = CarosimEnv(rig, EnvConfig(variant="carosim"))
    env.reset(seed=0, start=(0.0, 0.0, 1.0), target=(1.0, 1.0, 1.0))
    env.scene.params = cable_sim.SimParams(explosion_speed=0.5)
    with pytest.raises(NumericalDivergence):
        env.step(np.full(4, 2.0))


def test_episode_log(tmp_path, no_sag, rig):
    path = tmp_path / "episodes.csv"
    no_sag.reset(seed=0)
    with EpisodeLog(path) as log:
        a = np.full(4, 4.0)
        obs, terms, done = no_sag.step(a)
        log.write(0, 0, obs, a, terms, done)
    with open(path) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == EPISODE_LOG_COLUMNS
    assert len(rows[1]) == len(EPISODE_LOG_COLUMNS)
