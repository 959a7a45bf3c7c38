"""Rigid-body plus hydrodynamic force model of a torpedo-shaped AUV.

All matrices follow the SNAME ordering ``[u, v, w, p, q, r]`` and act on the
velocity relative to the (irrotational) current.  Coefficient signs follow
the usual derivative convention: damping and added-mass derivatives are
negative, forces on the right-hand side are ``tau - C nu - D nu - g``.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field, fields
from functools import cached_property
from importlib import resources
from pathlib import Path

import numpy as np
import scipy.linalg

from .errors import ConfigError, NonPositiveDefinite
from .kinematics import clamp

FIN_LIMIT = np.pi / 6

# Coefficient-file spelling of the sway quadratic term as typeset in the
# literature ("X_v|v|"); read as the sway coefficient.
_ALIASES = {"X_vv": "Y_vv"}

_LINEAR_DAMPING = ("X_u", "Y_v", "Y_r", "Z_w", "Z_q", "K_p", "M_w", "M_q", "N_v", "N_r")
_QUADRATIC_DAMPING = ("X_uu", "Y_vv", "Z_ww", "K_pp", "M_ww", "N_vv", "Y_rr", "Z_qq", "M_qq", "N_rr")


@dataclass(frozen=True)
class HydroModel:
    """Coefficient set for the 6-DOF model.

    Defaults describe an 18 kg, 1.08 m long, 0.15 m diameter vehicle.  Mass,
    weight, buoyancy, CG offset and the added-mass/inertia differences are
    fixed by published data; the damping, lift and fin coefficients are
    implementer defaults (see ``data/lauv.coef``).
    """

    mass_kg: float = 18.0
    weight_N: float = 176.0
    buoyancy_N: float = 177.0
    z_g_m: float = 0.01
    length_m: float = 1.08
    diameter_m: float = 0.15

    # added mass
    X_udot: float = -1.0
    Y_vdot: float = -16.0
    Z_wdot: float = -16.0
    K_pdot: float = 0.0
    M_qdot: float = -0.73
    N_rdot: float = -0.73

    # rigid body inertia about the centre of control
    I_x: float = 0.04
    I_y: float = 1.07
    I_z: float = 1.07

    # linear damping
    X_u: float = -6.0
    Y_v: float = -10.0
    Y_r: float = -0.5
    Z_w: float = -10.0
    Z_q: float = -0.5
    K_p: float = -0.5
    M_w: float = -0.5
    M_q: float = -3.0
    N_v: float = -0.5
    N_r: float = -3.0

    # quadratic damping; X_uu is X_{u|u|}, etc.
    X_uu: float = -2.0
    Y_vv: float = -80.0
    Z_ww: float = -80.0
    K_pp: float = -0.1
    M_ww: float = -0.5
    N_vv: float = -0.5
    Y_rr: float = -0.5
    Z_qq: float = -0.5
    M_qq: float = -10.0
    N_rr: float = -10.0

    # body (b) and fin (f) lift, multiplied by u_r
    Y_uvf: float = -19.2
    Y_uvb: float = -10.956
    Z_uwf: float = -19.2
    Z_uwb: float = -10.956
    M_uwf: float = -7.68
    M_uwb: float = -3.308
    N_uvf: float = 7.68
    N_uvb: float = 3.308
    Y_urf: float = 7.68
    Z_uqf: float = -7.68
    M_uqf: float = -3.072
    N_urf: float = -3.072

    # fin actuation, multiplied by u_r^2
    Y_uudr: float = -19.2
    N_uudr: float = 7.68
    Z_uuds: float = 19.2
    M_uuds: float = 7.68

    fin_limit_rad: float = FIN_LIMIT
    # None -> the force balancing linear + quadratic surge drag at 2 m/s
    thrust_max_N: float | None = None

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if value is not None and not np.isfinite(value):
                raise ConfigError(f"coefficient {f.name} is not finite")
        for name in _LINEAR_DAMPING + _QUADRATIC_DAMPING:
            if getattr(self, name) >= 0:
                raise ConfigError(f"damping coefficient {name} must be negative")
        if self.buoyancy_N <= self.weight_N:
            raise ConfigError("vehicle must be slightly buoyant (B > W)")
        if self.thrust_max_N is None:
            u_max = 2.0
            object.__setattr__(self, "thrust_max_N", -(self.X_u * u_max + self.X_uu * u_max * u_max))
        if self.thrust_max_N <= 0 or self.fin_limit_rad <= 0:
            raise ConfigError("thrust_max_N and fin_limit_rad must be positive")

    def replace(self, **changes) -> "HydroModel":
        return dataclasses.replace(self, **changes)

    @cached_property
    def mass(self) -> np.ndarray:
        return mass_matrix(self)

    @cached_property
    def mass_factor(self):
        """Cholesky factor of the (constant) mass matrix."""
        try:
            return scipy.linalg.cho_factor(self.mass)
        except np.linalg.LinAlgError as exc:
            raise NonPositiveDefinite(f"mass matrix not positive definite: {exc}") from exc

    @cached_property
    def mass_inverse(self) -> np.ndarray:
        return scipy.linalg.cho_solve(self.mass_factor, np.eye(6))


def load_coefficients(path: str | Path) -> HydroModel:
    """Read a ``key = value`` coefficient file; ``#`` starts a comment."""
    known = {f.name for f in fields(HydroModel)}
    values = {}
    text = Path(path).read_text()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        key = _ALIASES.get(key, key)
        if key not in known:
            raise ConfigError(f"{path}:{lineno}: unknown coefficient {key!r}")
        if key in values:
            raise ConfigError(f"{path}:{lineno}: duplicate coefficient {key!r}")
        try:
            values[key] = float(value)
        except ValueError:
            raise ConfigError(f"{path}:{lineno}: {key} is not a number: {value!r}") from None
    model = HydroModel(**values)
    model.mass_factor  # fail early on a bad coefficient file
    return model


def default_coefficient_file() -> Path:
    return Path(str(resources.files("auvrl") / "data" / "lauv.coef"))


def mass_matrix(model: HydroModel) -> np.ndarray:
    """Rigid-body plus added-mass inertia matrix at the centre of control."""
    mz = model.mass_kg * model.z_g_m
    M = np.diag([
        model.mass_kg - model.X_udot,
        model.mass_kg - model.Y_vdot,
        model.mass_kg - model.Z_wdot,
        model.I_x - model.K_pdot,
        model.I_y - model.M_qdot,
        model.I_z - model.N_rdot,
    ])
    M[0, 4] = M[4, 0] = mz
    M[1, 3] = M[3, 1] = -mz
    try:
        np.linalg.cholesky(M)
    except np.linalg.LinAlgError:
        raise NonPositiveDefinite("mass matrix not positive definite; check the coefficient file") from None
    return M


def coriolis_matrix(model: HydroModel, nu_r) -> np.ndarray:
    """Skew-symmetric Coriolis-centripetal matrix C(nu_r)."""
    u, v, w, p, q, r = np.asarray(nu_r, dtype=float)
    mz = model.mass_kg * model.z_g_m
    mu = (model.mass_kg - model.X_udot) * u
    mv = (model.mass_kg - model.Y_vdot) * v
    mw = (model.mass_kg - model.Z_wdot) * w
    ip = (model.I_x - model.K_pdot) * p
    iq = (model.I_y - model.M_qdot) * q
    ir = (model.I_z - model.N_rdot) * r
    C = np.zeros((6, 6))
    C[:3, 3:] = [
        [mz * r, mw, -mv],
        [-mw, mz * r, mu],
        [-mz * p + mv, -mz * q - mu, 0.0],
    ]
    C[3:, :3] = -C[:3, 3:].T
    C[3:, 3:] = [
        [0.0, ir, -iq],
        [-ir, 0.0, ip],
        [iq, -ip, 0.0],
    ]
    return C


def linear_damping(model: HydroModel) -> np.ndarray:
    m = model
    return -np.array([
        [m.X_u, 0, 0, 0, 0, 0],
        [0, m.Y_v, 0, 0, 0, m.Y_r],
        [0, 0, m.Z_w, 0, m.Z_q, 0],
        [0, 0, 0, m.K_p, 0, 0],
        [0, 0, m.M_w, 0, m.M_q, 0],
        [0, m.N_v, 0, 0, 0, m.N_r],
    ], dtype=float)


def quadratic_damping(model: HydroModel, nu_r) -> np.ndarray:
    u, v, w, p, q, r = np.abs(np.asarray(nu_r, dtype=float))
    m = model
    D = np.zeros((6, 6))
    D[0, 0] = m.X_uu * u
    D[1, 1] = m.Y_vv * v
    D[1, 5] = m.Y_rr * r
    D[2, 2] = m.Z_ww * w
    D[2, 4] = m.Z_qq * q
    D[3, 3] = m.K_pp * p
    D[4, 2] = m.M_ww * w
    D[4, 4] = m.M_qq * q
    D[5, 1] = m.N_vv * v
    D[5, 5] = m.N_rr * r
    return -D


def lift_matrix(model: HydroModel, nu_r) -> np.ndarray:
    u_r = float(nu_r[0])
    m = model
    L = np.zeros((6, 6))
    L[1, 1] = m.Y_uvf + m.Y_uvb
    L[1, 5] = m.Y_urf
    L[2, 2] = m.Z_uwf + m.Z_uwb
    L[2, 4] = m.Z_uqf
    L[4, 2] = m.M_uwf + m.M_uwb
    L[4, 4] = m.M_uqf
    L[5, 1] = m.N_uvf + m.N_uvb
    L[5, 5] = m.N_urf
    return -L * u_r


def damping_matrix(model: HydroModel, nu_r) -> np.ndarray:
    """Total damping D + D_n(nu_r) + L(nu_r)."""
    return linear_damping(model) + quadratic_damping(model, nu_r) + lift_matrix(model, nu_r)


def restoring_vector(model: HydroModel, attitude) -> np.ndarray:
    """Gravity/buoyancy vector g(eta); depends on roll and pitch only."""
    phi, theta = float(attitude[0]), float(attitude[1])
    W, B, zg = model.weight_N, model.buoyancy_N, model.z_g_m
    cth = np.cos(theta)
    return np.array([
        (W - B) * np.sin(theta),
        -(W - B) * cth * np.sin(phi),
        -(W - B) * cth * np.cos(phi),
        zg * W * cth * np.sin(phi),
        zg * W * np.sin(theta),
        0.0,
    ])


@dataclass(frozen=True)
class ControlInput:
    """Propeller command in [0, 1] and fin angles in radians."""

    n: float = 0.0
    delta_r: float = 0.0
    delta_s: float = 0.0

    def saturated(self, fin_limit: float = FIN_LIMIT) -> "ControlInput":
        return ControlInput(
            clamp(self.n, 0.0, 1.0),
            clamp(self.delta_r, -fin_limit, fin_limit),
            clamp(self.delta_s, -fin_limit, fin_limit),
        )

    def as_array(self) -> np.ndarray:
        return np.array([self.n, self.delta_r, self.delta_s])


def input_matrix(model: HydroModel, u_r: float) -> np.ndarray:
    """B(u_r) mapping [thrust force, delta_r, delta_s] to tau."""
    uu = u_r * u_r
    B = np.zeros((6, 3))
    B[0, 0] = 1.0
    B[1, 1] = model.Y_uudr * uu
    B[5, 1] = model.N_uudr * uu
    B[2, 2] = model.Z_uuds * uu
    B[4, 2] = model.M_uuds * uu
    return B


def control_force(model: HydroModel, control: ControlInput, u_r: float) -> np.ndarray:
    """Generalised control force; ``control.n`` is scaled by thrust_max_N."""
    c = control.saturated(model.fin_limit_rad)
    return input_matrix(model, u_r) @ np.array([c.n * model.thrust_max_N, c.delta_r, c.delta_s])


def acceleration(model: HydroModel, nu_r, attitude, control: ControlInput) -> np.ndarray:
    """Solve M nu_r_dot = tau - C nu_r - D nu_r - g for nu_r_dot."""
    nu_r = np.asarray(nu_r, dtype=float)
    rhs = (
        control_force(model, control, nu_r[0])
        - coriolis_matrix(model, nu_r) @ nu_r
        - damping_matrix(model, nu_r) @ nu_r
        - restoring_vector(model, attitude)
    )
    return scipy.linalg.cho_solve(model.mass_factor, rhs)
