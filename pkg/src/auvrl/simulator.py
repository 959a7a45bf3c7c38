"""Fixed-step RK4 integration of the coupled kinematic/kinetic model."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import _fastdyn
from .errors import NumericalDivergence, SingularAttitude
from .kinematics import angular_rate_transform, clamp, rotation_body_to_ned, wrap_angle
from .kinetics import ControlInput, HydroModel, acceleration

DEFAULT_DT = 0.1
DIVERGENCE_LIMIT = 1e6

CURRENT_MIN = 0.5
CURRENT_MAX = 1.0
#: Random-walk step deviation of the current intensity, m/s per sqrt(s).
CURRENT_WALK_SIGMA = 0.05


@dataclass
class CurrentState:
    """Irrotational ocean current with a fixed NED direction.

    ``rng`` is advanced in place by :func:`advance_current`, so a state
    created from a seed replays the same intensity sequence.
    """

    direction_ned: np.ndarray
    intensity: float
    rng_seed: int = 0
    sigma_walk: float = CURRENT_WALK_SIGMA
    rng: np.random.Generator = field(default=None, repr=False)

    def __post_init__(self):
        self.direction_ned = np.asarray(self.direction_ned, dtype=float)
        norm = np.linalg.norm(self.direction_ned)
        if not norm > 0:
            raise ValueError("current direction must be non-zero")
        self.direction_ned = self.direction_ned / norm
        self.intensity = float(np.clip(self.intensity, CURRENT_MIN, CURRENT_MAX))
        if self.rng is None:
            self.rng = np.random.default_rng(self.rng_seed)

    @classmethod
    def random(cls, seed: int, sigma_walk: float = CURRENT_WALK_SIGMA) -> "CurrentState":
        """Direction uniform on the unit sphere, intensity uniform in range."""
        rng = np.random.default_rng(seed)
        direction = rng.standard_normal(3)
        while np.linalg.norm(direction) < 1e-9:
            direction = rng.standard_normal(3)
        intensity = rng.uniform(CURRENT_MIN, CURRENT_MAX)
        return cls(direction, intensity, seed, sigma_walk, rng)

    @property
    def velocity_ned(self) -> np.ndarray:
        return self.intensity * self.direction_ned


def advance_current(current: CurrentState, dt: float) -> CurrentState:
    """One random-walk step of the intensity, clamped to [0.5, 1.0] m/s."""
    step = current.rng.normal(0.0, current.sigma_walk * np.sqrt(dt)) if current.sigma_walk > 0 else 0.0
    intensity = clamp(current.intensity + step, CURRENT_MIN, CURRENT_MAX)
    return replace(current, intensity=intensity)


@dataclass
class SimState:
    eta: np.ndarray
    nu: np.ndarray
    time_s: float = 0.0
    current: CurrentState | None = None

    def __post_init__(self):
        self.eta = np.asarray(self.eta, dtype=float).copy()
        self.nu = np.asarray(self.nu, dtype=float).copy()

    @classmethod
    def at_rest(cls, eta=None, current=None) -> "SimState":
        return cls(np.zeros(6) if eta is None else eta, np.zeros(6), 0.0, current)


def current_body(eta, current: CurrentState | None) -> np.ndarray:
    """Current velocity expressed in the body frame (linear part only)."""
    if current is None:
        return np.zeros(3)
    return rotation_body_to_ned(eta[3:6]).T @ current.velocity_ned


def relative_velocity(state: SimState) -> np.ndarray:
    """nu_r = nu - [R^T v_c; 0]; angular rates are unaffected."""
    nu_r = state.nu.copy()
    nu_r[:3] -= current_body(state.eta, state.current)
    return nu_r


def state_derivative(model: HydroModel, eta, nu, control: ControlInput, current_ned=None) -> tuple[np.ndarray, np.ndarray]:
    """(eta_dot, nu_dot) for a saturated control input and a constant NED current."""
    attitude = eta[3:6]
    R = rotation_body_to_ned(attitude)
    eta_dot = np.empty(6)
    eta_dot[:3] = R @ nu[:3]
    eta_dot[3:] = angular_rate_transform(attitude) @ nu[3:]
    nu_r = nu.copy()
    if current_ned is not None:
        nu_r[:3] -= R.T @ current_ned
    return eta_dot, acceleration(model, nu_r, attitude, control)


def _check_finite(eta, nu):
    if not (np.all(np.isfinite(eta)) and np.all(np.isfinite(nu))):
        raise NumericalDivergence("non-finite state")
    if np.max(np.abs(eta)) > DIVERGENCE_LIMIT or np.max(np.abs(nu)) > DIVERGENCE_LIMIT:
        raise NumericalDivergence("state magnitude exceeded 1e6")


def _packed(model: HydroModel) -> np.ndarray:
    packed = model.__dict__.get("_packed")
    if packed is None:
        packed = _fastdyn.pack(model)
        model.__dict__["_packed"] = packed
    return packed


def _finish(state: SimState, eta, nu, dt) -> SimState:
    eta[3] = wrap_angle(eta[3])
    eta[5] = wrap_angle(eta[5])
    current = None if state.current is None else advance_current(state.current, dt)
    return SimState(eta, nu, state.time_s + dt, current)


def step(model: HydroModel, state: SimState, control: ControlInput, dt: float = DEFAULT_DT) -> SimState:
    """Advance one classical RK4 step; returns a new state.

    The control is saturated first and the current velocity is frozen in NED
    for the step; the current's intensity then takes one random-walk step.
    """
    if dt == 0:
        return SimState(state.eta, state.nu, state.time_s, state.current)
    control = control.saturated(model.fin_limit_rad)
    v_c = np.zeros(3) if state.current is None else state.current.velocity_ned
    eta, nu = np.empty(6), np.empty(6)
    status = _fastdyn.rk4_step(
        _packed(model), model.mass_inverse, state.eta, state.nu,
        control.as_array(), v_c, float(dt), eta, nu,
    )
    if status == _fastdyn.SINGULAR:
        raise SingularAttitude("pitch reached the Euler-angle singularity guard")
    if status == _fastdyn.DIVERGED:
        raise NumericalDivergence("state magnitude exceeded 1e6")
    return _finish(state, eta, nu, dt)


def step_reference(model: HydroModel, state: SimState, control: ControlInput, dt: float = DEFAULT_DT) -> SimState:
    """Same integrator as :func:`step`, built from the matrix-level functions."""
    if dt == 0:
        return SimState(state.eta, state.nu, state.time_s, state.current)
    control = control.saturated(model.fin_limit_rad)
    v_c = None if state.current is None else state.current.velocity_ned
    eta0, nu0 = state.eta, state.nu
    k1e, k1n = state_derivative(model, eta0, nu0, control, v_c)
    k2e, k2n = state_derivative(model, eta0 + 0.5 * dt * k1e, nu0 + 0.5 * dt * k1n, control, v_c)
    k3e, k3n = state_derivative(model, eta0 + 0.5 * dt * k2e, nu0 + 0.5 * dt * k2n, control, v_c)
    k4e, k4n = state_derivative(model, eta0 + dt * k3e, nu0 + dt * k3n, control, v_c)
    eta = eta0 + dt / 6.0 * (k1e + 2 * k2e + 2 * k3e + k4e)
    nu = nu0 + dt / 6.0 * (k1n + 2 * k2n + 2 * k3n + k4n)
    _check_finite(eta, nu)
    return _finish(state, eta, nu, dt)


TRAJECTORY_HEADER = (
    "time", "x", "y", "z", "phi", "theta", "psi",
    "u", "v", "w", "p", "q", "r",
    "u_r", "v_r", "w_r",
    "n", "delta_r", "delta_s",
    "current_intensity",
)


def trajectory_row(state: SimState, control: ControlInput) -> list[float]:
    nu_r = relative_velocity(state)
    intensity = 0.0 if state.current is None else state.current.intensity
    return [state.time_s, *state.eta, *state.nu, *nu_r[:3], control.n, control.delta_r, control.delta_s, intensity]


class TrajectoryLog:
    """Append-only CSV trajectory writer (header in TRAJECTORY_HEADER)."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._fh = self.path.open("w", newline="")
        self._writer = csv.writer(self._fh)
        self._writer.writerow(TRAJECTORY_HEADER)

    def append(self, state: SimState, control: ControlInput):
        self._writer.writerow([repr(float(x)) for x in trajectory_row(state, control)])

    def close(self):
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
