"""Pinhole camera model, relative pose, and projection.

Frames: the landmark frame has its z axis up (antiparallel to gravity). The
camera frame is the usual optical convention, z forward along the optical
axis, x right, y down. A :class:`Pose` stores where the camera sits in the
landmark frame and how camera vectors map into it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .rotations import matrix_to_quat, quat_to_matrix


class BehindCameraError(ValueError):
    """Raised when a single-point projection has non-positive depth."""


def focal_from_fov(width_px: int, fov_deg: float) -> float:
    """Focal length in pixels from the horizontal field of view."""
    return width_px / (2.0 * np.tan(np.radians(fov_deg) / 2.0))


@dataclass(frozen=True)
class CameraModel:
    """Intrinsics. ``fu``/``fv`` in pixels, principal point (``u0``, ``v0``)."""

    fu: float
    fv: float
    u0: float
    v0: float
    width: int = 640
    height: int = 480
    skew: float = 0.0

    @classmethod
    def from_fov(cls, fov_deg: float = 45.0, width: int = 640, height: int = 480) -> "CameraModel":
        f = focal_from_fov(width, fov_deg)
        return cls(fu=f, fv=f, u0=width / 2.0, v0=height / 2.0, width=width, height=height)

    @property
    def K(self) -> np.ndarray:
        return np.array(
            [[self.fu, self.skew, self.u0], [0.0, self.fv, self.v0], [0.0, 0.0, 1.0]]
        )

    def contains(self, pixel: np.ndarray, margin: float = 0.0) -> bool:
        u, v = float(pixel[0]), float(pixel[1])
        return (
            -margin <= u <= self.width - 1 + margin
            and -margin <= v <= self.height - 1 + margin
        )


@dataclass
class Pose:
    """Camera pose relative to the landmark frame.

    ``rotation`` maps camera-frame vectors into the landmark frame;
    ``translation`` is the camera origin expressed in the landmark frame.
    """

    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    @classmethod
    def from_quat(cls, quat: np.ndarray, translation: np.ndarray) -> "Pose":
        return cls(quat_to_matrix(np.asarray(quat, float)), np.asarray(translation, float).copy())

    @property
    def quat(self) -> np.ndarray:
        """Unit quaternion (w, x, y, z) of the camera-to-landmark rotation."""
        return matrix_to_quat(self.rotation)

    def world_to_camera(self, points: np.ndarray) -> np.ndarray:
        """Landmark-frame points (..., 3) expressed in the camera frame."""
        return (np.asarray(points, float) - self.translation) @ self.rotation

    def camera_to_world(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(points, float) @ self.rotation.T + self.translation

    def copy(self) -> "Pose":
        return Pose(self.rotation.copy(), self.translation.copy())


@dataclass(frozen=True)
class ExtrinsicCalib:
    """Body (IMU) to camera rotation; lever arm is neglected by design."""

    r_cb: np.ndarray = field(default_factory=lambda: np.eye(3))

    @classmethod
    def identity(cls) -> "ExtrinsicCalib":
        return cls(np.eye(3))

    @classmethod
    def forward_mount(cls) -> "ExtrinsicCalib":
        """Camera looks along body +x; body is x-forward, y-left, z-up.

        Optical x = -body y, optical y = -body z, optical z = body x.
        """
        return cls(np.array([[0.0, -1.0, 0.0], [0.0, 0.0, -1.0], [1.0, 0.0, 0.0]]))

    def body_to_camera(self, vectors: np.ndarray) -> np.ndarray:
        return np.asarray(vectors, float) @ self.r_cb.T


class Projection(NamedTuple):
    pixel: np.ndarray
    depth: float
    in_view: bool


def project(camera: CameraModel, pose: Pose, point: np.ndarray) -> Projection:
    """Project one landmark-frame point; raises BehindCameraError on depth <= 0.

    Being outside the sensor bounds is reported through ``in_view``, not an
    error, so callers can distinguish "invisible" from "invalid".
    """
    xc = pose.world_to_camera(np.asarray(point, float))
    z = float(xc[2])
    if z <= 0.0:
        raise BehindCameraError(f"point behind camera plane (depth {z:.3g} m)")
    u = camera.u0 + (camera.fu * xc[0] + camera.skew * xc[1]) / z
    v = camera.v0 + camera.fv * xc[1] / z
    pixel = np.array([u, v])
    return Projection(pixel, z, camera.contains(pixel))


def project_points(
    camera: CameraModel, pose: Pose, points: np.ndarray, margin: float = 0.0
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized projection of (N, 3) points.

    Returns (pixels (N, 2), depths (N,), visible (N,)); points at or behind
    the camera plane get NaN pixels and visible=False instead of raising.
    """
    xc = pose.world_to_camera(np.atleast_2d(points))
    z = xc[:, 2]
    ok = z > 0.0
    pixels = np.full((xc.shape[0], 2), np.nan)
    zs = np.where(ok, z, 1.0)
    pixels[:, 0] = camera.u0 + (camera.fu * xc[:, 0] + camera.skew * xc[:, 1]) / zs
    pixels[:, 1] = camera.v0 + camera.fv * xc[:, 1] / zs
    pixels[~ok] = np.nan
    inside = (
        ok
        & (pixels[:, 0] >= -margin)
        & (pixels[:, 0] <= camera.width - 1 + margin)
        & (pixels[:, 1] >= -margin)
        & (pixels[:, 1] <= camera.height - 1 + margin)
    )
    return pixels, z, inside
