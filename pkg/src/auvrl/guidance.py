"""Piecewise-linear waypoint paths, Serret-Frenet errors and look-ahead steering."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path as FilePath

import numpy as np

from .kinematics import clamp, rotation_body_to_ned, wrap_angle

DEFAULT_LOOKAHEAD = 5.0
#: Sphere-of-acceptance radius, two body lengths.
ACCEPTANCE_RADIUS = 2 * 1.08


@dataclass(frozen=True)
class Path:
    """Straight segments between consecutive NED waypoints."""

    waypoints: np.ndarray

    def __post_init__(self):
        wps = np.array(self.waypoints, dtype=float)
        if wps.ndim != 2 or wps.shape[1] != 3 or len(wps) < 2:
            raise ValueError("a path needs at least two 3-D waypoints")
        if not np.all(np.isfinite(wps)):
            raise ValueError("waypoints must be finite")
        if np.any(np.linalg.norm(np.diff(wps, axis=0), axis=1) == 0):
            raise ValueError("consecutive waypoints must be distinct")
        wps.setflags(write=False)
        object.__setattr__(self, "waypoints", wps)

    @property
    def n_segments(self) -> int:
        return len(self.waypoints) - 1

    @cached_property
    def lengths(self) -> np.ndarray:
        return np.linalg.norm(np.diff(self.waypoints, axis=0), axis=1)

    @cached_property
    def azimuths(self) -> np.ndarray:
        d = np.diff(self.waypoints, axis=0)
        return np.arctan2(d[:, 1], d[:, 0])

    @cached_property
    def elevations(self) -> np.ndarray:
        # positive elevation climbs, i.e. z decreases
        d = np.diff(self.waypoints, axis=0)
        return np.arctan2(-d[:, 2], np.hypot(d[:, 0], d[:, 1]))

    @cached_property
    def frames(self) -> np.ndarray:
        """Per-segment rotation {SF} -> {n}; first column is the unit tangent."""
        return np.array([rotation_body_to_ned((0.0, ups, chi))
                         for chi, ups in zip(self.azimuths, self.elevations)])

    def point(self, segment: int, s: float) -> np.ndarray:
        """Point at along-track distance ``s`` on ``segment`` (parametric form)."""
        chi, ups = self.azimuths[segment], self.elevations[segment]
        x0, y0, z0 = self.waypoints[segment]
        return np.array([
            x0 + s * np.cos(chi) * np.cos(ups),
            y0 + s * np.sin(chi) * np.cos(ups),
            z0 - s * np.sin(ups),
        ])

    def total_length(self) -> float:
        return float(self.lengths.sum())

    def save_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["x", "y", "z"])
            for row in self.waypoints:
                writer.writerow([repr(float(c)) for c in row])

    @classmethod
    def load_csv(cls, path) -> "Path":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if [h.strip() for h in header] != ["x", "y", "z"]:
                raise ValueError(f"{path}: expected header x,y,z")
            return cls(np.array([[float(c) for c in row] for row in reader if row]))


def generate_random_path(
    seed: int,
    n_waypoints: int,
    segment_length: tuple[float, float] = (40.0, 60.0),
    max_azimuth_step: float = np.pi / 4,
    max_elevation_step: float = np.pi / 6,
    max_elevation: float = np.pi / 6,
    initial_azimuth: float | None = None,
) -> Path:
    """Random path starting at the NED origin, built with the parametric equations.

    The first segment's azimuth is uniform on the circle unless given, its
    elevation starts at zero; later segments perturb both by bounded uniform
    steps, with the absolute elevation clipped to ``max_elevation``.
    """
    if n_waypoints < 2:
        raise ValueError("n_waypoints must be >= 2")
    rng = np.random.default_rng(seed)
    chi = rng.uniform(-np.pi, np.pi) if initial_azimuth is None else float(initial_azimuth)
    ups = 0.0
    points = [np.zeros(3)]
    for i in range(n_waypoints - 1):
        if i > 0:
            chi = wrap_angle(chi + rng.uniform(-max_azimuth_step, max_azimuth_step))
            ups = float(np.clip(ups + rng.uniform(-max_elevation_step, max_elevation_step),
                                -max_elevation, max_elevation))
        s = rng.uniform(*segment_length)
        x0, y0, z0 = points[-1]
        points.append(np.array([
            x0 + s * np.cos(chi) * np.cos(ups),
            y0 + s * np.sin(chi) * np.cos(ups),
            z0 - s * np.sin(ups),
        ]))
    return Path(np.array(points))


@dataclass(frozen=True)
class TrackingError:
    s: float
    e: float
    h: float
    segment_index: int


def tracking_errors(path: Path, position_ned, segment: int) -> TrackingError:
    """Along-track, cross-track and vertical-track errors w.r.t. ``segment``.

    The closest point is the projection onto the segment with ``s`` clamped
    to ``[0, length]``; the offset is rotated into the Serret-Frenet frame.
    """
    p = np.asarray(position_ned, dtype=float)
    R = path.frames[segment]
    start = path.waypoints[segment]
    s = clamp(float(R[:, 0] @ (p - start)), 0.0, float(path.lengths[segment]))
    eps = R.T @ (p - (start + s * R[:, 0]))
    return TrackingError(s, float(eps[1]), float(eps[2]), segment)


def along_track_projection(path: Path, position_ned, segment: int) -> float:
    """Unclamped projection of the position onto the segment tangent."""
    R = path.frames[segment]
    return float(R[:, 0] @ (np.asarray(position_ned, float) - path.waypoints[segment]))


def corrective_angles(e: float, h: float, lookahead: float = DEFAULT_LOOKAHEAD) -> tuple[float, float]:
    if lookahead <= 0:
        raise ValueError("look-ahead distance must be positive")
    return math.atan(-e / lookahead), math.atan(h / math.sqrt(e * e + lookahead * lookahead))


def desired_angles(path: Path, tracking: TrackingError, lookahead: float = DEFAULT_LOOKAHEAD) -> tuple[float, float]:
    """Desired course and elevation: path angles plus corrective steering."""
    chi_r, ups_r = corrective_angles(tracking.e, tracking.h, lookahead)
    seg = tracking.segment_index
    return wrap_angle(path.azimuths[seg] + chi_r), wrap_angle(path.elevations[seg] + ups_r)


def maybe_switch_waypoint(path: Path, tracking: TrackingError, position_ned,
                          radius: float = ACCEPTANCE_RADIUS) -> tuple[int, bool]:
    """Return ``(segment_index, terminal)`` after the switching rule.

    The active segment advances when the vehicle is inside the sphere of
    acceptance of its end waypoint or has passed the end along-track.
    ``terminal`` is set once the final waypoint has been reached.
    """
    seg = tracking.segment_index
    offset = np.asarray(position_ned, float) - path.waypoints[seg + 1]
    reached = (math.sqrt(offset @ offset) <= radius
               or along_track_projection(path, position_ned, seg) >= path.lengths[seg])
    if not reached:
        return seg, False
    if seg + 1 >= path.n_segments:
        return seg, True
    return seg + 1, False


def course_elevation_of_velocity(velocity_ned, previous: tuple[float, float] = (0.0, 0.0)) -> tuple[float, float]:
    """Course and elevation of an NED velocity; holds ``previous`` near zero speed."""
    vx, vy, vz = (float(c) for c in velocity_ned)
    speed = math.sqrt(vx * vx + vy * vy + vz * vz)
    if speed <= 1e-6:
        return previous
    return math.atan2(vy, vx), -math.asin(clamp(vz / speed, -1.0, 1.0))
