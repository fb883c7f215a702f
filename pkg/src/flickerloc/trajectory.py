"""Reference trajectories with closed-form kinematics.

The body frame is x-forward, y-left, z-up; identity attitude means body axes
aligned with the landmark frame. Positions follow minimum-jerk (quintic)
segments between waypoints, so velocity and acceleration are continuous and
available analytically, which keeps the synthetic IMU exact. Attitude is
Z-Y-X Euler with constant offsets plus optional rate and sinusoidal terms.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

TRAJECTORY_KINDS = ("hover", "square", "waypoints")


@dataclass
class TrajectorySpec:
    """Declarative trajectory description (all SI units, radians)."""

    kind: str = "hover"
    position: tuple[float, float, float] = (6.0, 0.0, 1.2)
    yaw: float = np.pi  # facing -x toward the landmark frame origin
    pitch: float = 0.0
    roll: float = 0.0
    # hover
    takeoff_height: float = 0.0
    takeoff_time: float = 0.0
    # square (in the x-y plane, centered on `position`, looping)
    square_side: float = 1.5
    segment_time: float = 4.0
    # explicit waypoints: rows (t, x, y, z); overrides kind-specific shape
    waypoints: Sequence[Sequence[float]] | None = None
    loop: bool = False
    # attitude motion: angle(t) = offset + rate * t + amp * sin(2 pi freq t)
    yaw_rate: float = 0.0
    yaw_amp: float = 0.0
    yaw_freq: float = 0.0
    pitch_amp: float = 0.0
    pitch_freq: float = 0.0
    roll_amp: float = 0.0
    roll_freq: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in TRAJECTORY_KINDS:
            raise ValueError(f"unknown trajectory kind {self.kind!r}, expected {TRAJECTORY_KINDS}")


class TrajectorySample(NamedTuple):
    """Kinematic state arrays at the queried times (leading axis = time)."""

    position: np.ndarray  # (N, 3) m
    velocity: np.ndarray  # (N, 3) m/s
    acceleration: np.ndarray  # (N, 3) m/s^2
    r_lb: np.ndarray  # (N, 3, 3) body -> landmark frame
    omega_body: np.ndarray  # (N, 3) rad/s, body frame
    euler: np.ndarray  # (N, 3) yaw, pitch, roll


def _quintic(s: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Minimum-jerk blend and its first two derivatives on s in [0, 1]."""
    s2, s3 = s * s, s * s * s
    pos = 10.0 * s3 - 15.0 * s3 * s + 6.0 * s3 * s2
    vel = 30.0 * s2 - 60.0 * s3 + 30.0 * s2 * s2
    acc = 60.0 * s - 180.0 * s2 + 120.0 * s3
    return pos, vel, acc


class _WaypointPath:
    """Piecewise quintic interpolation through timed waypoints."""

    def __init__(self, times: np.ndarray, points: np.ndarray, loop: bool) -> None:
        if len(times) != len(points):
            raise ValueError("waypoint times and points must match")
        if len(times) < 1:
            raise ValueError("need at least one waypoint")
        if np.any(np.diff(times) <= 0):
            raise ValueError("waypoint times must be strictly increasing")
        self.times = np.asarray(times, float)
        self.points = np.asarray(points, float).reshape(len(times), 3)
        self.loop = loop
        self.period = float(self.times[-1] - self.times[0]) if len(times) > 1 else 0.0

    def sample(self, t: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        t = np.asarray(t, float)
        pos = np.empty(t.shape + (3,))
        vel = np.zeros_like(pos)
        acc = np.zeros_like(pos)
        if len(self.times) == 1:
            pos[:] = self.points[0]
            return pos, vel, acc

        tq = t - self.times[0]
        if self.loop and self.period > 0:
            tq = np.mod(tq, self.period)
        tq = np.clip(tq, 0.0, self.period) + self.times[0]

        seg = np.clip(np.searchsorted(self.times, tq, side="right") - 1, 0, len(self.times) - 2)
        t0 = self.times[seg]
        dt = self.times[seg + 1] - t0
        s = np.clip((tq - t0) / dt, 0.0, 1.0)
        b, bd, bdd = _quintic(s)
        delta = self.points[seg + 1] - self.points[seg]
        pos[:] = self.points[seg] + b[..., None] * delta
        vel[:] = (bd / dt)[..., None] * delta
        acc[:] = (bdd / (dt * dt))[..., None] * delta
        return pos, vel, acc


def _angle_profile(t, offset, rate, amp, freq):
    w = 2.0 * np.pi * freq
    ang = offset + rate * t + amp * np.sin(w * t)
    angd = rate + amp * w * np.cos(w * t)
    return ang, angd


def _rot_zyx(yaw, pitch, roll) -> np.ndarray:
    """Batched Z-Y-X rotation matrices, shape (N, 3, 3)."""
    cy, sy = np.cos(yaw), np.sin(yaw)
    cp, sp = np.cos(pitch), np.sin(pitch)
    cr, sr = np.cos(roll), np.sin(roll)
    R = np.empty(np.shape(yaw) + (3, 3))
    R[..., 0, 0] = cy * cp
    R[..., 0, 1] = cy * sp * sr - sy * cr
    R[..., 0, 2] = cy * sp * cr + sy * sr
    R[..., 1, 0] = sy * cp
    R[..., 1, 1] = sy * sp * sr + cy * cr
    R[..., 1, 2] = sy * sp * cr - cy * sr
    R[..., 2, 0] = -sp
    R[..., 2, 1] = cp * sr
    R[..., 2, 2] = cp * cr
    return R


class Trajectory:
    """Compiled trajectory; all queries are vectorized over time arrays."""

    def __init__(self, spec: TrajectorySpec) -> None:
        self.spec = spec
        p0 = np.asarray(spec.position, float)
        if spec.waypoints is not None:
            wp = np.asarray(spec.waypoints, float)
            self._path = _WaypointPath(wp[:, 0], wp[:, 1:4], spec.loop)
        elif spec.kind == "square":
            h = spec.square_side / 2.0
            corners = p0 + np.array(
                [[-h, -h, 0.0], [h, -h, 0.0], [h, h, 0.0], [-h, h, 0.0], [-h, -h, 0.0]]
            )
            times = np.arange(5) * spec.segment_time
            self._path = _WaypointPath(times, corners, loop=True)
        elif spec.kind == "waypoints":
            raise ValueError("kind 'waypoints' requires an explicit waypoint table")
        else:  # hover, with optional takeoff ramp
            if spec.takeoff_time > 0.0:
                start = p0 - np.array([0.0, 0.0, spec.takeoff_height])
                self._path = _WaypointPath(
                    np.array([0.0, spec.takeoff_time]), np.stack([start, p0]), loop=False
                )
            else:
                self._path = _WaypointPath(np.zeros(1), p0.reshape(1, 3), loop=False)

    def sample(self, t) -> TrajectorySample:
        t = np.atleast_1d(np.asarray(t, float))
        pos, vel, acc = self._path.sample(t)
        s = self.spec
        yaw, yawd = _angle_profile(t, s.yaw, s.yaw_rate, s.yaw_amp, s.yaw_freq)
        pitch, pitchd = _angle_profile(t, s.pitch, 0.0, s.pitch_amp, s.pitch_freq)
        roll, rolld = _angle_profile(t, s.roll, 0.0, s.roll_amp, s.roll_freq)
        r_lb = _rot_zyx(yaw, pitch, roll)
        sp_, cp_ = np.sin(pitch), np.cos(pitch)
        sr_, cr_ = np.sin(roll), np.cos(roll)
        omega = np.stack(
            [
                rolld - yawd * sp_,
                pitchd * cr_ + yawd * cp_ * sr_,
                yawd * cp_ * cr_ - pitchd * sr_,
            ],
            axis=-1,
        )
        euler = np.stack([yaw, pitch, roll], axis=-1)
        return TrajectorySample(pos, vel, acc, r_lb, omega, euler)
