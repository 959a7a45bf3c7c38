"""PI/PID autopilots and the mode-dependent actuator router."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .kinematics import clamp, wrap_angle

MODES = ("end_to_end", "pid_assist_rudder", "pid_assist_elevator", "velocity_only", "combined", "pid_only")

#: Number of agent action components each mode expects.
ACTION_DIMS = {
    "end_to_end": 3,
    "pid_assist_rudder": 1,
    "pid_assist_elevator": 1,
    "velocity_only": 1,
    "combined": 2,
    "pid_only": 0,
}


@dataclass(frozen=True)
class PidGains:
    kp: float
    ki: float = 0.0
    kd: float = 0.0
    # bound on the integral term's contribution to the output
    integral_limit: float = 1.0
    output_limit: float = 1.0

    def __post_init__(self):
        if self.output_limit <= 0:
            raise ConfigError("output_limit must be positive")
        if self.integral_limit < 0:
            raise ConfigError("integral_limit must be non-negative")


# Deliberately soft defaults, tuned against the shipped coefficient file.
DEFAULT_SURGE_GAINS = PidGains(kp=0.5, ki=0.2, integral_limit=1.0)
DEFAULT_HEADING_GAINS = PidGains(kp=1.0, ki=0.05, kd=1.0, integral_limit=0.3)
DEFAULT_PITCH_GAINS = PidGains(kp=1.0, ki=0.05, kd=1.0, integral_limit=0.3)


@dataclass
class PidController:
    """PID with rate feedback and a clamped integral term.

    ``integral`` stores the integral *term* (``ki * int(e) dt``) so the
    anti-windup clamp bounds its contribution directly.
    """

    gains: PidGains
    integral: float = 0.0

    def reset(self):
        self.integral = 0.0

    def update(self, error: float, rate: float, dt: float, lower: float | None = None) -> float:
        if dt <= 0:
            raise ValueError("dt must be positive")
        g = self.gains
        lim = g.integral_limit
        self.integral = clamp(self.integral + g.ki * error * dt, -lim, lim)
        out = g.kp * error + self.integral - g.kd * rate
        lo = -g.output_limit if lower is None else lower
        return clamp(out, lo, g.output_limit)


def pi_surge(u_d: float, u: float, controller: PidController, dt: float) -> float:
    """Propeller command in [0, 1] from a PI law on the surge error."""
    return controller.update(u_d - u, 0.0, dt, lower=0.0)


def pid_heading(chi_d: float, chi: float, r: float, controller: PidController, dt: float) -> float:
    """Normalised rudder command from the wrapped course error, yaw rate damping."""
    return controller.update(wrap_angle(chi_d - chi), r, dt)


def pid_pitch(ups_d: float, ups: float, q: float, controller: PidController, dt: float) -> float:
    """Normalised elevator command from the wrapped elevation error, pitch rate damping."""
    return controller.update(wrap_angle(ups_d - ups), q, dt)


@dataclass
class Autopilot:
    surge: PidController = field(default_factory=lambda: PidController(DEFAULT_SURGE_GAINS))
    heading: PidController = field(default_factory=lambda: PidController(DEFAULT_HEADING_GAINS))
    pitch: PidController = field(default_factory=lambda: PidController(DEFAULT_PITCH_GAINS))

    @classmethod
    def from_gains(cls, surge: PidGains, heading: PidGains, pitch: PidGains) -> "Autopilot":
        return cls(PidController(surge), PidController(heading), PidController(pitch))

    def reset(self):
        self.surge.reset()
        self.heading.reset()
        self.pitch.reset()


@dataclass(frozen=True)
class ActuatorCommand:
    """Normalised actuator command; fins are scaled to +-fin_limit downstream."""

    n: float
    delta_r: float
    delta_s: float

    def __post_init__(self):
        object.__setattr__(self, "n", clamp(self.n, 0.0, 1.0))
        object.__setattr__(self, "delta_r", clamp(self.delta_r, -1.0, 1.0))
        object.__setattr__(self, "delta_s", clamp(self.delta_s, -1.0, 1.0))


def thrust_from_action(a: float) -> float:
    """Map an agent action in [-1, 1] onto the propeller range [0, 1]."""
    return 0.5 * (float(a) + 1.0)


#: Actuators the learning agent commands in each mode.
AGENT_ACTUATORS = {
    "end_to_end": ("n", "delta_r", "delta_s"),
    "pid_assist_rudder": ("delta_r",),
    "pid_assist_elevator": ("delta_s",),
    "velocity_only": ("n",),
    "combined": ("delta_r", "delta_s"),
    "pid_only": (),
}


def pid_channels(mode: str) -> tuple[bool, bool, bool]:
    """Which of (surge, heading, pitch) the classical loops drive in ``mode``."""
    return {
        "end_to_end": (False, False, False),
        "pid_assist_rudder": (True, False, True),
        "pid_assist_elevator": (True, True, False),
        "velocity_only": (False, False, False),
        "combined": (True, False, False),
        "pid_only": (True, True, True),
    }[mode]


def route_actuators(mode: str, agent_action, pid_outputs: dict) -> ActuatorCommand:
    """Combine agent actions and PID outputs into one command.

    ``pid_outputs`` maps ``"n"``, ``"delta_r"``, ``"delta_s"`` to classical
    controller outputs; only the entries the mode needs are read.
    """
    if mode not in ACTION_DIMS:
        raise ConfigError(f"unknown mode {mode!r}")
    a = np.atleast_1d(np.asarray(agent_action if agent_action is not None else [], dtype=float))
    if a.shape != (ACTION_DIMS[mode],):
        raise ConfigError(f"mode {mode!r} expects {ACTION_DIMS[mode]} action(s), got shape {a.shape}")
    if mode == "end_to_end":
        return ActuatorCommand(thrust_from_action(a[0]), a[1], a[2])
    if mode == "pid_assist_rudder":
        return ActuatorCommand(pid_outputs["n"], a[0], pid_outputs["delta_s"])
    if mode == "pid_assist_elevator":
        return ActuatorCommand(pid_outputs["n"], pid_outputs["delta_r"], a[0])
    if mode == "velocity_only":
        return ActuatorCommand(thrust_from_action(a[0]), 0.0, 0.0)
    if mode == "combined":
        return ActuatorCommand(pid_outputs["n"], a[0], a[1])
    return ActuatorCommand(pid_outputs["n"], pid_outputs["delta_r"], pid_outputs["delta_s"])
