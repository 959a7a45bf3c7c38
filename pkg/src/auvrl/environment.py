"""Path-following task: episode lifecycle, observations, rewards, termination."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path as FilePath

import numpy as np

from . import guidance
from .control import (ACTION_DIMS, MODES, Autopilot, ActuatorCommand, pi_surge, pid_channels,
                      pid_heading, pid_pitch, route_actuators)
from .errors import ConfigError, NumericalDivergence, SingularAttitude
from .guidance import Path, TrackingError
from .kinematics import rotation_body_to_ned, wrap_angle
from .kinetics import ControlInput, HydroModel
from .simulator import CurrentState, SimState, relative_velocity, step as sim_step

# normalisation maxima
ANGLE_MAX = np.pi
P_MAX = 1.2
Q_MAX = R_MAX = 0.4
U_MAX = 2.0
TRACK_MAX = 25.0
SWAY_HEAVE_MAX = 0.3

END_TO_END_FIELDS = ("phi", "theta", "psi", "p", "q", "r", "u_err", "chi_err", "ups_err", "e", "h")
ASSIST_FIELDS = ("u_r", "v_r", "w_r", "phi", "theta", "psi", "p", "q", "r",
                 "u_err", "chi_err", "ups_err", "e", "h", "n", "other_fin")


# fixed evaluation path: turns in both planes with a depth change
EVALUATION_WAYPOINTS = ((0.0, 0.0, 0.0), (50.0, 0.0, 0.0), (90.0, 30.0, 8.0), (130.0, 30.0, 8.0), (170.0, -10.0, 0.0))
# short two-segment path with one horizontal turn, used for desk-scale rudder training
TURN_WAYPOINTS = ((0.0, 0.0, 0.0), (50.0, 0.0, 0.0), (85.0, 35.0, 5.0))


def evaluation_path() -> Path:
    return Path(np.array(EVALUATION_WAYPOINTS))


def turn_path() -> Path:
    return Path(np.array(TURN_WAYPOINTS))


@dataclass(frozen=True)
class RewardWeights:
    attitude: tuple[float, float, float] = (-5e-3, 0.0, 0.0)
    rates: tuple[float, float, float] = (-5e-3, -5e-4, -5e-4)
    # surge, course, elevation, cross-track, vertical-track
    errors: tuple[float, float, float, float, float] = (-5e-3, -2.5e-3, -2.5e-3, -5e-3, -5e-3)
    # (angle error, track error, fin) for the PID-assisted tracking rewards
    tracking: tuple[float, float, float] = (-2e-2, -5e-2, -1e-2)

    def __post_init__(self):
        for name in ("attitude", "rates", "errors", "tracking"):
            if any(w > 0 for w in getattr(self, name)):
                raise ConfigError(f"reward weights must be non-positive ({name})")


def reward_end_to_end(obs, weights: RewardWeights = RewardWeights()) -> float:
    """Weighted element-wise absolute penalty on an 11-element observation."""
    a = np.abs(np.asarray(obs, dtype=float))
    return float(np.dot(weights.attitude, a[0:3]) + np.dot(weights.rates, a[3:6])
                 + np.dot(weights.errors, a[6:11]))


def reward_velocity(obs, weights: RewardWeights = RewardWeights()) -> float:
    """Surge-error term of the end-to-end reward alone."""
    return float(weights.errors[0] * abs(obs[6]))


def reward_cross_track(chi_err: float, e: float, delta_r: float, weights: RewardWeights = RewardWeights()) -> float:
    """Gaussian-shaped penalty; arguments are normalised."""
    a1, a2, a3 = weights.tracking
    return float(a1 * (1 - np.exp(-5 * chi_err ** 2)) + a2 * (1 - np.exp(-5 * e ** 2))
                 + a3 * (1 - np.exp(-5 * delta_r ** 2)))


def reward_vertical_track(ups_err: float, h: float, delta_s: float, weights: RewardWeights = RewardWeights()) -> float:
    """Quadratic penalty; arguments are normalised."""
    a1, a2, a3 = weights.tracking
    return float(a1 * ups_err ** 2 + a2 * h ** 2 + a3 * delta_s ** 2)


_SHAPES = {"gaussian": reward_cross_track, "quadratic": reward_vertical_track}


@dataclass
class EpisodeConfig:
    mode: str = "end_to_end"
    u_d: float = 1.5
    init_radius: float = 5.0
    heading_spread: float = np.pi / 6
    max_steps: int = 2000
    min_cumulative_reward: float = -500.0
    current_enabled: bool = False
    dt: float = 0.1
    lookahead: float = guidance.DEFAULT_LOOKAHEAD
    n_waypoints: int = 5
    # fixed path used for every episode (test path); random per episode if None
    path: Path | None = None
    # reward shape for the PID-assisted modes; None -> gaussian for the
    # rudder agent, quadratic for the elevator agent
    reward_shape: str | None = None
    weights: RewardWeights = field(default_factory=RewardWeights)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}; choose from {MODES}")
        if self.max_steps <= 0:
            raise ConfigError("max_steps must be positive")
        if self.dt <= 0 or self.lookahead <= 0 or self.init_radius < 0:
            raise ConfigError("dt and lookahead must be positive, init_radius non-negative")
        if self.reward_shape not in (None, *_SHAPES):
            raise ConfigError(f"unknown reward shape {self.reward_shape!r}")

    @property
    def action_dim(self) -> int:
        return ACTION_DIMS[self.mode]

    @property
    def obs_dim(self) -> int:
        return len(ASSIST_FIELDS) if self.mode.startswith("pid_assist") else len(END_TO_END_FIELDS)


@dataclass
class GuidanceState:
    """Quantities the observation is built from, refreshed after every step."""

    tracking: TrackingError
    chi_d: float
    ups_d: float
    chi: float
    ups: float


def _clip(x):
    return np.clip(x, -1.0, 1.0)


def observe(state: SimState, g: GuidanceState, command: ActuatorCommand, mode: str, u_d: float) -> np.ndarray:
    """Normalised, clamped observation vector for ``mode``."""
    phi, theta, psi = state.eta[3:6]
    u, v, w, p, q, r = state.nu
    chi_err = wrap_angle(g.chi_d - g.chi)
    ups_err = wrap_angle(g.ups_d - g.ups)
    if mode.startswith("pid_assist"):
        nu_r = relative_velocity(state)
        other = command.delta_s if mode == "pid_assist_rudder" else command.delta_r
        obs = np.array([
            nu_r[0] / U_MAX, nu_r[1] / SWAY_HEAVE_MAX, nu_r[2] / SWAY_HEAVE_MAX,
            phi / ANGLE_MAX, theta / ANGLE_MAX, psi / ANGLE_MAX,
            p / P_MAX, q / Q_MAX, r / R_MAX,
            (u_d - u) / U_MAX, chi_err / ANGLE_MAX, ups_err / ANGLE_MAX,
            g.tracking.e / TRACK_MAX, g.tracking.h / TRACK_MAX,
            command.n, other,
        ])
    else:
        obs = np.array([
            phi / ANGLE_MAX, theta / ANGLE_MAX, psi / ANGLE_MAX,
            p / P_MAX, q / Q_MAX, r / R_MAX,
            (u_d - u) / U_MAX, chi_err / ANGLE_MAX, ups_err / ANGLE_MAX,
            g.tracking.e / TRACK_MAX, g.tracking.h / TRACK_MAX,
        ])
    return _clip(obs)


def assist_observation(state: SimState, g: GuidanceState, command: ActuatorCommand, channel: str, u_d: float) -> np.ndarray:
    """Observation for one trained tracking agent during combined deployment."""
    mode = "pid_assist_rudder" if channel == "rudder" else "pid_assist_elevator"
    return observe(state, g, command, mode, u_d)


def initial_state(path: Path, rng: np.random.Generator, radius: float, heading_spread: float,
                  current: CurrentState | None = None) -> SimState:
    """Uniform position in a ball around waypoint 0, level attitude facing waypoint 1."""
    direction = rng.standard_normal(3)
    direction /= max(np.linalg.norm(direction), 1e-12)
    offset = radius * rng.uniform() ** (1.0 / 3.0) * direction
    eta = np.zeros(6)
    eta[:3] = path.waypoints[0] + offset
    to_next = path.waypoints[1] - eta[:3]
    eta[5] = wrap_angle(np.arctan2(to_next[1], to_next[0]) + rng.uniform(-heading_spread, heading_spread))
    return SimState(eta, np.zeros(6), 0.0, current)


class PathFollowingEnv:
    """Gym-style environment (``reset`` / ``step``) around the AUV simulator."""

    def __init__(self, config: EpisodeConfig, model: HydroModel | None = None,
                 autopilot: Autopilot | None = None):
        self.config = config
        self.model = model if model is not None else HydroModel()
        self.autopilot = autopilot if autopilot is not None else Autopilot()
        self.state: SimState | None = None
        self.path: Path | None = None
        self.guidance_state: GuidanceState | None = None

    @property
    def obs_dim(self) -> int:
        return self.config.obs_dim

    @property
    def action_dim(self) -> int:
        return self.config.action_dim

    # -- lifecycle ---------------------------------------------------------

    def reset(self, seed: int) -> np.ndarray:
        cfg = self.config
        rng = np.random.default_rng(seed)
        path_seed, init_seed, current_seed = (int(s) for s in rng.integers(0, 2**31 - 1, size=3))
        self.path = cfg.path if cfg.path is not None else guidance.generate_random_path(path_seed, cfg.n_waypoints)
        current = CurrentState.random(current_seed) if cfg.current_enabled else None
        self.state = initial_state(self.path, np.random.default_rng(init_seed), cfg.init_radius,
                                   cfg.heading_spread, current)
        self.autopilot.reset()
        self.seed = seed
        self.steps = 0
        self.cumulative_reward = 0.0
        self.segment = 0
        self.command = ActuatorCommand(0.0, 0.0, 0.0)
        self._abs_e = self._abs_h = self._abs_u = 0.0
        self.guidance_state = self._guidance(self.state, (self.state.eta[5], 0.0))
        self.obs = observe(self.state, self.guidance_state, self.command, cfg.mode, cfg.u_d)
        return self.obs

    def _guidance(self, state: SimState, previous: tuple[float, float]) -> GuidanceState:
        tracking = guidance.tracking_errors(self.path, state.eta[:3], self.segment)
        chi_d, ups_d = guidance.desired_angles(self.path, tracking, self.config.lookahead)
        velocity = rotation_body_to_ned(state.eta[3:6]) @ state.nu[:3]
        chi, ups = guidance.course_elevation_of_velocity(velocity, previous)
        return GuidanceState(tracking, chi_d, ups_d, chi, ups)

    def pid_outputs(self) -> dict:
        """Classical loop outputs for the channels the mode leaves to them."""
        cfg, g, s = self.config, self.guidance_state, self.state
        surge, heading, pitch = pid_channels(cfg.mode)
        out = {}
        if surge:
            out["n"] = pi_surge(cfg.u_d, s.nu[0], self.autopilot.surge, cfg.dt)
        if heading:
            out["delta_r"] = pid_heading(g.chi_d, g.chi, s.nu[5], self.autopilot.heading, cfg.dt)
        if pitch:
            out["delta_s"] = pid_pitch(g.ups_d, g.ups, s.nu[4], self.autopilot.pitch, cfg.dt)
        return out

    def step(self, action) -> tuple[np.ndarray, float, bool, dict]:
        cfg = self.config
        command = route_actuators(cfg.mode, action, self.pid_outputs())
        fin = self.model.fin_limit_rad
        control = ControlInput(command.n, command.delta_r * fin, command.delta_s * fin)
        info = {"success": False, "failure": False, "truncated": False, "error": None}
        self.command = command
        self.steps += 1
        try:
            self.state = sim_step(self.model, self.state, control, cfg.dt)
        except (SingularAttitude, NumericalDivergence) as exc:
            info["failure"] = True
            info["error"] = f"{type(exc).__name__}: {exc}"
            # leaving the valid envelope costs whatever remains down to the reward floor
            reward = min(cfg.min_cumulative_reward - self.cumulative_reward, 0.0)
            self.cumulative_reward += reward
            info.update(self.summary())
            return self.obs, reward, True, info

        g = self._guidance(self.state, (self.guidance_state.chi, self.guidance_state.ups))
        segment, reached_end = guidance.maybe_switch_waypoint(self.path, g.tracking, self.state.eta[:3])
        if segment != self.segment:
            self.segment = segment
            g = self._guidance(self.state, (g.chi, g.ups))
        self.guidance_state = g
        self.obs = observe(self.state, g, command, cfg.mode, cfg.u_d)
        reward = self.reward(self.obs, command)
        self.cumulative_reward += reward

        self._abs_e += abs(g.tracking.e)
        self._abs_h += abs(g.tracking.h)
        self._abs_u += abs(cfg.u_d - self.state.nu[0])

        done = False
        if reached_end:
            done = info["success"] = True
        elif self.cumulative_reward < cfg.min_cumulative_reward:
            done = info["failure"] = True
        elif self.steps >= cfg.max_steps:
            done = info["truncated"] = True
        info["segment"] = self.segment
        if done:
            info.update(self.summary())
        return self.obs, reward, done, info

    def reward(self, obs, command: ActuatorCommand) -> float:
        cfg = self.config
        if cfg.mode in ("end_to_end", "combined", "pid_only"):
            return reward_end_to_end(obs, cfg.weights)
        if cfg.mode == "velocity_only":
            return reward_velocity(obs, cfg.weights)
        if cfg.mode == "pid_assist_rudder":
            shape = cfg.reward_shape or "gaussian"
            return _SHAPES[shape](obs[10], obs[12], command.delta_r, cfg.weights)
        shape = cfg.reward_shape or "quadratic"
        return _SHAPES[shape](obs[11], obs[13], command.delta_s, cfg.weights)

    def summary(self) -> dict:
        n = max(self.steps, 1)
        return {
            "seed": self.seed,
            "mode": self.config.mode,
            "steps": self.steps,
            "cumulative_reward": self.cumulative_reward,
            "mean_abs_e": self._abs_e / n,
            "mean_abs_h": self._abs_h / n,
            "mean_abs_surge_error": self._abs_u / n,
        }


EPISODE_HEADER = ("seed", "mode", "steps", "cumulative_reward", "mean_abs_e", "mean_abs_h",
                  "mean_abs_surge_error", "success")


def write_episode_summaries(path, summaries):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(EPISODE_HEADER)
        for s in summaries:
            writer.writerow([s["seed"], s["mode"], s["steps"], repr(float(s["cumulative_reward"])),
                             repr(float(s["mean_abs_e"])), repr(float(s["mean_abs_h"])),
                             repr(float(s["mean_abs_surge_error"])), int(bool(s.get("success", False)))])
