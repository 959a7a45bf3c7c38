import csv
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from auvrl import environment as env_mod
from auvrl.control import ActuatorCommand
from auvrl.environment import (ASSIST_FIELDS, END_TO_END_FIELDS, EPISODE_HEADER, EpisodeConfig, GuidanceState,
                               PathFollowingEnv, RewardWeights, evaluation_path, observe, reward_cross_track,
                               reward_end_to_end, reward_velocity, reward_vertical_track, turn_path,
                               write_episode_summaries)
from auvrl.errors import ConfigError
from auvrl.guidance import Path, TrackingError
from auvrl.simulator import SimState

W = RewardWeights()
unit = st.floats(-1, 1)
obs11 = st.lists(unit, min_size=11, max_size=11).map(np.array)


def guidance_state(e=0.0, h=0.0, chi_d=0.0, chi=0.0, ups_d=0.0, ups=0.0):
    return GuidanceState(TrackingError(0.0, e, h, 0), chi_d, ups_d, chi, ups)


def test_normalisation_constants():
    assert env_mod.ANGLE_MAX == math.pi
    assert env_mod.P_MAX == 1.2 and env_mod.Q_MAX == 0.4 and env_mod.R_MAX == 0.4
    assert env_mod.U_MAX == 2.0 and env_mod.TRACK_MAX == 25.0 and env_mod.SWAY_HEAVE_MAX == 0.3
    assert len(END_TO_END_FIELDS) == 11 and len(ASSIST_FIELDS) == 16


def test_observation_scaling_and_clamping():
    s = SimState([0, 0, 0, math.pi, 0, 0], [1.5, 0, 0, 0, 0, 0])
    obs = observe(s, guidance_state(e=50.0), ActuatorCommand(0, 0, 0), "end_to_end", 1.5)
    assert obs[0] == 1.0 and obs[9] == 1.0
    assert np.all(np.abs(obs) <= 1.0)


def test_on_path_at_cruise_speed_observes_zero():
    s = SimState(np.zeros(6), [1.5, 0, 0, 0, 0, 0])
    obs = observe(s, guidance_state(), ActuatorCommand(0, 0, 0), "end_to_end", 1.5)
    assert np.array_equal(obs, np.zeros(11))


def test_assist_layout():
    s = SimState(np.zeros(6), [1.5, 0.03, -0.03, 0, 0, 0])
    cmd = ActuatorCommand(0.7, 0.2, -0.4)
    g = guidance_state(e=2.5, h=-5.0)
    rud = observe(s, g, cmd, "pid_assist_rudder", 1.5)
    elev = observe(s, g, cmd, "pid_assist_elevator", 1.5)
    assert rud[12] == 0.1 and rud[13] == -0.2 and rud[14] == 0.7
    assert rud[15] == -0.4 and elev[15] == 0.2
    assert rud[1] == pytest.approx(0.1) and rud[2] == pytest.approx(-0.1)
    assert np.array_equal(rud[:15], elev[:15])


@given(st.lists(st.floats(-1e3, 1e3), min_size=6, max_size=6), st.floats(-100, 100), st.floats(-100, 100))
def test_observation_bounded_and_clamping_idempotent(nu, e, h):
    s = SimState(np.zeros(6), nu)
    obs = observe(s, guidance_state(e, h), ActuatorCommand(1, 1, -1), "pid_assist_rudder", 1.5)
    assert np.all(np.abs(obs) <= 1.0)
    assert np.array_equal(np.clip(obs, -1, 1), obs)


def test_end_to_end_reward_examples():
    assert reward_end_to_end(np.zeros(11)) == 0.0
    only_e = np.zeros(11)
    only_e[9] = 1.0
    assert reward_end_to_end(only_e) == -5e-3


@given(obs11)
def test_rewards_never_positive(obs):
    assert reward_end_to_end(obs) <= 0.0
    assert reward_velocity(obs) <= 0.0
    assert reward_cross_track(obs[0], obs[1], obs[2]) <= 0.0
    assert reward_vertical_track(obs[0], obs[1], obs[2]) <= 0.0


def test_cross_track_reward_examples(frozen):
    assert reward_cross_track(0, 0, 0) == 0.0
    assert reward_cross_track(1e3, 0, 0) == pytest.approx(W.tracking[0])
    assert reward_cross_track(0.5, 0.5, 0.5) == pytest.approx(frozen["cross_track_reward_half"], abs=1e-15)


@given(unit, unit, unit)
def test_cross_track_reward_even_and_decreasing(a, b, c):
    r = reward_cross_track(a, b, c)
    assert reward_cross_track(-a, b, c) == r and reward_cross_track(a, -b, c) == r
    assert reward_cross_track(a, b, -c) == r
    bigger = 1.1 * abs(a) + 0.01
    assert reward_cross_track(bigger, b, c) < r


def test_vertical_track_reward_examples():
    assert reward_vertical_track(0, 0, 0) == 0.0
    assert reward_vertical_track(1, 0, 0) == W.tracking[0]


@given(unit, unit, unit)
def test_vertical_track_reward_polynomial(a, b, c):
    a1, a2, a3 = W.tracking
    assert reward_vertical_track(a, b, c) == pytest.approx(a1 * a * a + a2 * b * b + a3 * c * c, abs=1e-15)


def test_vertical_track_gradient_grows_with_error():
    def slope(h, d=1e-6):
        return abs(reward_vertical_track(0, h + d, 0) - reward_vertical_track(0, h - d, 0)) / (2 * d)

    assert slope(0.8) > slope(0.2)


def test_positive_weights_rejected():
    with pytest.raises(ConfigError):
        RewardWeights(tracking=(0.1, -0.1, -0.1))
    with pytest.raises(ConfigError):
        EpisodeConfig(mode="flying")


def test_reset_deterministic_and_near_start():
    env = PathFollowingEnv(EpisodeConfig(mode="end_to_end"))
    for seed in range(50):
        a = env.reset(seed)
        assert np.linalg.norm(env.state.eta[:3] - env.path.waypoints[0]) <= 5.0
        b = env.reset(seed)
        assert np.array_equal(a, b)


def test_fixed_path_identical_across_episodes():
    env = PathFollowingEnv(EpisodeConfig(mode="pid_only", path=evaluation_path()))
    env.reset(1)
    first = env.path.waypoints.copy()
    env.reset(2)
    assert np.array_equal(env.path.waypoints, first)
    assert turn_path().n_segments == 2


def run_episode(env, seed, action):
    env.reset(seed)
    while True:
        _, _, done, info = env.step(action)
        if done:
            return info


def test_success_on_final_waypoint():
    path = Path(np.array([[0, 0, 0], [30, 0, 0]]))
    info = run_episode(PathFollowingEnv(EpisodeConfig(mode="pid_only", path=path)), 0, [])
    assert info["success"] and not info["failure"] and not info["truncated"]


def test_failure_below_reward_floor():
    cfg = EpisodeConfig(mode="end_to_end", min_cumulative_reward=-0.5)
    info = run_episode(PathFollowingEnv(cfg), 0, np.array([-1.0, 1.0, 1.0]))
    assert info["failure"] and info["cumulative_reward"] < -0.5


def test_truncation_at_max_steps():
    info = run_episode(PathFollowingEnv(EpisodeConfig(mode="pid_only", max_steps=25)), 0, [])
    assert info["truncated"] and info["steps"] == 25


def test_numerical_failure_ends_episode_at_floor():
    env = PathFollowingEnv(EpisodeConfig(mode="pid_only"))
    env.reset(0)
    env.state = SimState([0, 0, 0, 0, math.pi / 2 - 5e-4, 0], np.zeros(6))
    _, reward, done, info = env.step([])
    assert done and info["failure"] and "SingularAttitude" in info["error"]
    assert env.cumulative_reward == pytest.approx(-500.0)


def test_rewards_during_episode_are_non_positive():
    for mode, shape in (("pid_assist_rudder", None), ("pid_assist_elevator", None),
                        ("pid_assist_rudder", "quadratic"), ("velocity_only", None), ("end_to_end", None)):
        env = PathFollowingEnv(EpisodeConfig(mode=mode, reward_shape=shape, max_steps=200))
        rng = np.random.default_rng(0)
        env.reset(3)
        for _ in range(200):
            _, r, done, _ = env.step(rng.uniform(-1, 1, env.action_dim))
            assert r <= 0.0
            if done:
                break


def test_episode_summary_csv(tmp_path):
    info = run_episode(PathFollowingEnv(EpisodeConfig(mode="pid_only", max_steps=20)), 0, [])
    write_episode_summaries(tmp_path / "ep.csv", [info])
    rows = list(csv.reader((tmp_path / "ep.csv").open()))
    assert tuple(rows[0]) == EPISODE_HEADER and len(rows) == 2
