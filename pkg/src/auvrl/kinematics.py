"""Body/NED frame transforms and the pose differential equation.

Poses are 6-vectors ``eta = [x, y, z, phi, theta, psi]`` in NED, body
velocities are 6-vectors ``nu = [u, v, w, p, q, r]``.  Angles are radians.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import SingularAttitude

#: Guard band below pi/2 where the Euler-rate transform is refused.
SINGULARITY_MARGIN = 1e-3


def wrap_angle(angle):
    """Wrap an angle (or array of angles) into (-pi, pi]."""
    if isinstance(angle, (float, int, np.floating)):
        a = float(angle)
        if -math.pi < a <= math.pi:
            return a
        return math.pi - (math.pi - a) % (2.0 * math.pi)
    a = np.asarray(angle, dtype=float)
    inside = (a > -np.pi) & (a <= np.pi)
    wrapped = np.where(inside, a, np.pi - np.mod(np.pi - a, 2.0 * np.pi))
    if np.ndim(wrapped) == 0:
        return float(wrapped)
    return wrapped


@dataclass(frozen=True)
class EulerAngles:
    phi: float = 0.0
    theta: float = 0.0
    psi: float = 0.0

    def __post_init__(self):
        if not all(np.isfinite([self.phi, self.theta, self.psi])):
            raise ValueError("Euler angles must be finite")
        if abs(self.theta) >= np.pi / 2:
            raise SingularAttitude(f"pitch {self.theta} outside (-pi/2, pi/2)")

    def as_array(self) -> np.ndarray:
        return np.array([self.phi, self.theta, self.psi])


@dataclass(frozen=True)
class Pose:
    position_ned: tuple[float, float, float] = (0.0, 0.0, 0.0)
    attitude: EulerAngles = EulerAngles()

    def as_array(self) -> np.ndarray:
        return np.concatenate([np.asarray(self.position_ned, float), self.attitude.as_array()])

    @classmethod
    def from_array(cls, eta) -> "Pose":
        eta = np.asarray(eta, dtype=float)
        return cls(tuple(eta[:3]), EulerAngles(*eta[3:6]))


@dataclass(frozen=True)
class BodyVelocity:
    linear: tuple[float, float, float] = (0.0, 0.0, 0.0)
    angular: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def as_array(self) -> np.ndarray:
        return np.concatenate([np.asarray(self.linear, float), np.asarray(self.angular, float)])

    @classmethod
    def from_array(cls, nu) -> "BodyVelocity":
        nu = np.asarray(nu, dtype=float)
        return cls(tuple(nu[:3]), tuple(nu[3:6]))


def clamp(x: float, lo: float, hi: float) -> float:
    """Scalar clip; much cheaper than np.clip on Python floats."""
    return lo if x < lo else hi if x > hi else float(x)


def _angles(attitude):
    if isinstance(attitude, EulerAngles):
        return attitude.phi, attitude.theta, attitude.psi
    phi, theta, psi = attitude
    return float(phi), float(theta), float(psi)


def rotation_body_to_ned(attitude) -> np.ndarray:
    """Rotation matrix R_b^n (zyx convention); its transpose maps NED to body."""
    phi, theta, psi = _angles(attitude)
    cphi, sphi = np.cos(phi), np.sin(phi)
    cth, sth = np.cos(theta), np.sin(theta)
    cpsi, spsi = np.cos(psi), np.sin(psi)
    return np.array([
        [cpsi * cth, -spsi * cphi + cpsi * sth * sphi, spsi * sphi + cpsi * cphi * sth],
        [spsi * cth, cpsi * cphi + sphi * sth * spsi, -cpsi * sphi + sth * spsi * cphi],
        [-sth, cth * sphi, cth * cphi],
    ])


def angular_rate_transform(attitude) -> np.ndarray:
    """T(Theta) mapping body rates (p, q, r) to Euler-angle rates.

    Raises SingularAttitude when |theta| >= pi/2 - SINGULARITY_MARGIN.
    """
    phi, theta, _ = _angles(attitude)
    if abs(theta) >= np.pi / 2 - SINGULARITY_MARGIN:
        raise SingularAttitude(f"pitch {theta:.6f} rad too close to +-pi/2")
    cphi, sphi = np.cos(phi), np.sin(phi)
    cth, tth = np.cos(theta), np.tan(theta)
    return np.array([
        [1.0, sphi * tth, cphi * tth],
        [0.0, cphi, -sphi],
        [0.0, sphi / cth, cphi / cth],
    ])


def kinematic_jacobian(eta) -> np.ndarray:
    """Block-diagonal J(eta) with eta_dot = J(eta) nu."""
    eta = np.asarray(eta, dtype=float)
    J = np.zeros((6, 6))
    J[:3, :3] = rotation_body_to_ned(eta[3:6])
    J[3:, 3:] = angular_rate_transform(eta[3:6])
    return J


def pose_derivative(eta, nu) -> np.ndarray:
    """Time derivative of the pose for body velocity ``nu``."""
    if isinstance(eta, Pose):
        eta = eta.as_array()
    if isinstance(nu, BodyVelocity):
        nu = nu.as_array()
    eta = np.asarray(eta, dtype=float)
    nu = np.asarray(nu, dtype=float)
    attitude = eta[3:6]
    return np.concatenate([
        rotation_body_to_ned(attitude) @ nu[:3],
        angular_rate_transform(attitude) @ nu[3:6],
    ])
