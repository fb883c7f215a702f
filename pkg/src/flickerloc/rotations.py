"""Small rotation toolbox shared by the simulator and the estimators.

Conventions
-----------
* Quaternions are Hamilton, scalar-first ``[w, x, y, z]``, unit norm.
* ``q_AB`` rotates frame-B vectors into frame A: ``v_A = R(q_AB) @ v_B``.
* Euler angles are intrinsic Z-Y-X (yaw about z, then pitch, then roll).
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "quat_normalize",
    "quat_multiply",
    "quat_conjugate",
    "quat_rotate",
    "quat_to_matrix",
    "matrix_to_quat",
    "quat_from_euler_zyx",
    "euler_zyx_from_matrix",
    "euler_zyx_from_quat",
    "quat_slerp",
    "rotvec_to_matrix",
    "geodesic_angle",
    "skew",
    "body_rates_from_euler_zyx",
]


def quat_normalize(q: np.ndarray) -> np.ndarray:
    """Return q scaled to unit norm, keeping the scalar part non-negative."""
    q = np.asarray(q, dtype=float)
    n = np.linalg.norm(q)
    if n == 0.0:
        raise ValueError("zero quaternion cannot be normalized")
    q = q / n
    return -q if q[0] < 0.0 else q


def quat_multiply(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ]
    )


def quat_conjugate(q: np.ndarray) -> np.ndarray:
    return np.array([q[0], -q[1], -q[2], -q[3]])


def quat_rotate(q: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Rotate vector v by quaternion q (same result as quat_to_matrix(q) @ v)."""
    w, x, y, z = q
    u = np.array([x, y, z])
    uv = np.cross(u, v)
    return np.asarray(v, dtype=float) + 2.0 * (w * uv + np.cross(u, uv))


def quat_to_matrix(q: np.ndarray) -> np.ndarray:
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def matrix_to_quat(R: np.ndarray) -> np.ndarray:
    """Shepperd's method; numerically safe for all rotation matrices."""
    R = np.asarray(R, dtype=float)
    tr = np.trace(R)
    if tr > 0.0:
        s = np.sqrt(tr + 1.0) * 2.0
        q = np.array(
            [0.25 * s, (R[2, 1] - R[1, 2]) / s, (R[0, 2] - R[2, 0]) / s, (R[1, 0] - R[0, 1]) / s]
        )
    else:
        i = int(np.argmax(np.diag(R)))
        if i == 0:
            s = np.sqrt(1.0 + R[0, 0] - R[1, 1] - R[2, 2]) * 2.0
            q = np.array(
                [(R[2, 1] - R[1, 2]) / s, 0.25 * s, (R[0, 1] + R[1, 0]) / s, (R[0, 2] + R[2, 0]) / s]
            )
        elif i == 1:
            s = np.sqrt(1.0 - R[0, 0] + R[1, 1] - R[2, 2]) * 2.0
            q = np.array(
                [(R[0, 2] - R[2, 0]) / s, (R[0, 1] + R[1, 0]) / s, 0.25 * s, (R[1, 2] + R[2, 1]) / s]
            )
        else:
            s = np.sqrt(1.0 - R[0, 0] - R[1, 1] + R[2, 2]) * 2.0
            q = np.array(
                [(R[1, 0] - R[0, 1]) / s, (R[0, 2] + R[2, 0]) / s, (R[1, 2] + R[2, 1]) / s, 0.25 * s]
            )
    return quat_normalize(q)


def quat_from_euler_zyx(yaw: float, pitch: float, roll: float) -> np.ndarray:
    cy, sy = np.cos(yaw / 2), np.sin(yaw / 2)
    cp, sp = np.cos(pitch / 2), np.sin(pitch / 2)
    cr, sr = np.cos(roll / 2), np.sin(roll / 2)
    return quat_normalize(
        np.array(
            [
                cy * cp * cr + sy * sp * sr,
                cy * cp * sr - sy * sp * cr,
                cy * sp * cr + sy * cp * sr,
                sy * cp * cr - cy * sp * sr,
            ]
        )
    )


def euler_zyx_from_matrix(R: np.ndarray) -> tuple[float, float, float]:
    """Return (yaw, pitch, roll). Near pitch = +-90 deg yaw/roll degenerate."""
    pitch = float(np.arcsin(np.clip(-R[2, 0], -1.0, 1.0)))
    yaw = float(np.arctan2(R[1, 0], R[0, 0]))
    roll = float(np.arctan2(R[2, 1], R[2, 2]))
    return yaw, pitch, roll


def euler_zyx_from_quat(q: np.ndarray) -> tuple[float, float, float]:
    return euler_zyx_from_matrix(quat_to_matrix(q))


def quat_slerp(q0: np.ndarray, q1: np.ndarray, alpha: float) -> np.ndarray:
    """Spherical interpolation along the shorter arc, alpha in [0, 1]."""
    q0 = quat_normalize(q0)
    q1 = quat_normalize(q1)
    dot = float(np.dot(q0, q1))
    if dot < 0.0:
        q1, dot = -q1, -dot
    if dot > 1.0 - 1e-10:  # nearly parallel: lerp avoids 0/0
        return quat_normalize(q0 + alpha * (q1 - q0))
    theta = np.arccos(np.clip(dot, -1.0, 1.0))
    s = np.sin(theta)
    return quat_normalize(
        q0 * (np.sin((1.0 - alpha) * theta) / s) + q1 * (np.sin(alpha * theta) / s)
    )


def rotvec_to_matrix(w: np.ndarray) -> np.ndarray:
    """Rodrigues formula, exact for any magnitude, stable near zero."""
    w = np.asarray(w, dtype=float)
    angle = np.linalg.norm(w)
    K = skew(w)
    if angle < 1e-12:
        return np.eye(3) + K  # first order is exact to machine eps here
    a, b = np.sin(angle) / angle, (1.0 - np.cos(angle)) / (angle * angle)
    return np.eye(3) + a * K + b * (K @ K)


def geodesic_angle(Ra: np.ndarray, Rb: np.ndarray) -> float:
    """Rotation angle (rad) between two rotation matrices."""
    c = 0.5 * (np.trace(Ra.T @ Rb) - 1.0)
    return float(np.arccos(np.clip(c, -1.0, 1.0)))


def skew(v: np.ndarray) -> np.ndarray:
    x, y, z = v
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def body_rates_from_euler_zyx(
    pitch: float, roll: float, yaw_rate: float, pitch_rate: float, roll_rate: float
) -> np.ndarray:
    """Body angular velocity for a Z-Y-X Euler parameterization.

    Standard kinematic map; yaw itself does not appear.
    """
    sp, cp = np.sin(pitch), np.cos(pitch)
    sr, cr = np.sin(roll), np.cos(roll)
    return np.array(
        [
            roll_rate - yaw_rate * sp,
            pitch_rate * cr + yaw_rate * cp * sr,
            yaw_rate * cp * cr - pitch_rate * sr,
        ]
    )
