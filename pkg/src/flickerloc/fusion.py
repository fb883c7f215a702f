"""Inertial fusion: orientation filtering and translation estimation.

The orientation filter is a Madgwick-style gradient complementary filter on
the camera attitude, with the pose solver's yaw feeding the correction slot
a magnetometer would normally occupy. Accelerations rotated into the
landmark frame drive a 9-state translation Kalman filter (position,
velocity, accelerometer bias per axis) corrected by pose-solver
translations.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .camera import ExtrinsicCalib
from .rotations import euler_zyx_from_quat, quat_multiply, quat_normalize, quat_to_matrix

LOG = logging.getLogger(__name__)

GRAVITY = 9.81

DEFAULT_BETA = 0.1  # rad/s, gradient-step magnitude
DEFAULT_YAW_GAIN = 1.0  # 1/s, heading feedback toward the last pose yaw
DEFAULT_TDKF_GATE = 13.93  # chi-square(3 dof, 0.997)
DEFAULT_ACCEL_SIGMA = 0.05  # m/s^2/sqrt(Hz) white accel noise
DEFAULT_BIAS_SIGMA = 0.001  # m/s^2*sqrt(s) bias random walk
DEFAULT_PNP_SIGMA = 0.02  # m, translation measurement noise


# ---------------------------------------------------------------------------
# Orientation (camera attitude in the landmark frame)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OrientationState:
    """Attitude filter snapshot; q maps camera vectors to landmark frame."""

    q: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0, 0.0, 0.0]))
    beta: float = DEFAULT_BETA
    yaw_gain: float = DEFAULT_YAW_GAIN
    phi: float = 0.0  # last pose-derived yaw (rad)
    phi_t_us: int = -1

    def __post_init__(self):
        object.__setattr__(self, "q", quat_normalize(np.asarray(self.q, float)))

    @property
    def rotation(self) -> np.ndarray:
        return quat_to_matrix(self.q)

    @property
    def yaw(self) -> float:
        return euler_zyx_from_quat(self.q)[0]


def _gravity_gradient(q: np.ndarray, accel_unit: np.ndarray) -> np.ndarray:
    """Gradient of || R(q)^T z_up - accel_unit ||^2 with respect to q."""
    w, x, y, z = q
    ax, ay, az = accel_unit
    f = np.array([
        2.0 * (x * z - w * y) - ax,
        2.0 * (w * x + y * z) - ay,
        w * w - x * x - y * y + z * z - az,
    ])
    jt = np.array([
        [-2 * y, 2 * x, 2 * w],
        [2 * z, 2 * w, -2 * x],
        [-2 * w, 2 * z, -2 * y],
        [2 * x, 2 * y, 2 * z],
    ])
    return jt @ f


def _wrap_angle(a: float) -> float:
    return float(np.arctan2(np.sin(a), np.cos(a)))


def madgwick_step(
    state: OrientationState,
    gyro_c: np.ndarray,
    accel_c: np.ndarray,
    dt: float,
    phi_pnp: float | None = None,
    phi_t_us: int | None = None,
) -> OrientationState:
    """One filter step from camera-frame gyro and accelerometer samples.

    The gravity direction corrects roll and pitch; yaw is unobservable from
    those two alone and drifts with the gyro until a pose yaw arrives.
    """
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    q = state.q
    qdot = 0.5 * quat_multiply(q, np.concatenate([[0.0], np.asarray(gyro_c, float)]))

    a = np.asarray(accel_c, float)
    norm = np.linalg.norm(a)
    if norm > 1e-12:
        grad = _gravity_gradient(q, a / norm)
        gnorm = np.linalg.norm(grad)
        if gnorm > 1e-12:
            qdot = qdot - state.beta * grad / gnorm

    phi = state.phi
    t_phi = state.phi_t_us
    if phi_pnp is not None:
        phi = float(phi_pnp)
        t_phi = int(phi_t_us) if phi_t_us is not None else t_phi
        err = _wrap_angle(phi - state.yaw)
        # heading feedback as a world-z angular rate, standing in for the
        # magnetometer term
        wz = np.array([0.0, 0.0, 0.0, state.yaw_gain * err])
        qdot = qdot + 0.5 * quat_multiply(wz, q)

    q_new = quat_normalize(q + dt * qdot)
    return replace(state, q=q_new, phi=phi, phi_t_us=t_phi)


def accel_to_landmark(
    a_b: np.ndarray,
    extrinsics: ExtrinsicCalib,
    q: np.ndarray,
    gravity: float = GRAVITY,
) -> np.ndarray:
    """Body accelerometer sample expressed in the landmark frame, gravity
    removed up to attitude error and sensor bias."""
    a_c = extrinsics.r_cb @ np.asarray(a_b, float)
    a_l = quat_to_matrix(np.asarray(q, float)) @ a_c
    a_l[2] -= gravity
    return a_l


# ---------------------------------------------------------------------------
# Translation filter (9-state: position, velocity, accel bias)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TdkfState:
    """Translation filter snapshot; all vectors in the landmark frame."""

    t: np.ndarray = field(default_factory=lambda: np.zeros(3))
    v: np.ndarray = field(default_factory=lambda: np.zeros(3))
    a_b: np.ndarray = field(default_factory=lambda: np.zeros(3))
    p: np.ndarray = field(default_factory=lambda: np.diag(
        [1.0, 1.0, 1.0, 0.25, 0.25, 0.25, 0.01, 0.01, 0.01]))

    def __post_init__(self):
        object.__setattr__(self, "t", np.asarray(self.t, float).reshape(3))
        object.__setattr__(self, "v", np.asarray(self.v, float).reshape(3))
        object.__setattr__(self, "a_b", np.asarray(self.a_b, float).reshape(3))
        object.__setattr__(self, "p", np.asarray(self.p, float).reshape(9, 9))
        if not np.all(np.isfinite(self.x)):
            raise ValueError("filter state must be finite")

    @property
    def x(self) -> np.ndarray:
        return np.concatenate([self.t, self.v, self.a_b])

    @classmethod
    def from_vector(cls, x: np.ndarray, p: np.ndarray) -> "TdkfState":
        x = np.asarray(x, float)
        return cls(t=x[:3], v=x[3:6], a_b=x[6:9], p=p)


@dataclass
class TdkfConfig:
    accel_sigma: float = DEFAULT_ACCEL_SIGMA
    bias_sigma: float = DEFAULT_BIAS_SIGMA
    pnp_sigma: float = DEFAULT_PNP_SIGMA
    gate: float = DEFAULT_TDKF_GATE
    literal: bool = False  # position row uses dt^2 instead of dt^2/2


def _tdkf_f_b(dt: float, c: float) -> tuple[np.ndarray, np.ndarray]:
    i3 = np.eye(3)
    f = np.block([
        [i3, dt * i3, -c * dt * dt * i3],
        [np.zeros((3, 3)), i3, -dt * i3],
        [np.zeros((3, 3)), np.zeros((3, 3)), i3],
    ])
    b = np.vstack([c * dt * dt * i3, dt * i3, np.zeros((3, 3))])
    return f, b


def _tdkf_q(dt: float, accel_sigma: float, bias_sigma: float) -> np.ndarray:
    i3 = np.eye(3)
    sa2 = accel_sigma * accel_sigma
    q = np.zeros((9, 9))
    q[0:3, 0:3] = sa2 * dt ** 4 / 4.0 * i3
    q[0:3, 3:6] = q[3:6, 0:3] = sa2 * dt ** 3 / 2.0 * i3
    q[3:6, 3:6] = sa2 * dt * dt * i3
    q[6:9, 6:9] = bias_sigma * bias_sigma * dt * i3
    return q


def tdkf_predict(state: TdkfState, a_l: np.ndarray, dt: float = 0.005,
                 config: TdkfConfig | None = None) -> TdkfState:
    """Propagate with the landmark-frame acceleration as control input."""
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    cfg = config or TdkfConfig()
    c = 1.0 if cfg.literal else 0.5
    f, b = _tdkf_f_b(dt, c)
    x = f @ state.x + b @ np.asarray(a_l, float)
    p = f @ state.p @ f.T + _tdkf_q(dt, cfg.accel_sigma, cfg.bias_sigma)
    return TdkfState.from_vector(x, 0.5 * (p + p.T))


def tdkf_update(state: TdkfState, z: np.ndarray, r_meas=None,
                config: TdkfConfig | None = None) -> tuple[TdkfState, bool]:
    """Translation correction; returns (state, accepted). A measurement
    outside the Mahalanobis gate (pose flips, misidentifications) is
    rejected and the state passes through unchanged."""
    cfg = config or TdkfConfig()
    if r_meas is None:
        r_meas = cfg.pnp_sigma ** 2 * np.eye(3)
    r = np.asarray(r_meas, float).reshape(3, 3)
    if not np.allclose(r, r.T, rtol=0.0, atol=1e-12) or np.min(np.linalg.eigvalsh(r)) < 0.0:
        raise ValueError("measurement covariance must be symmetric PSD")
    nu = np.asarray(z, float).reshape(3) - state.t
    s = state.p[:3, :3] + r
    d2 = float(nu @ np.linalg.solve(s, nu))
    if d2 > cfg.gate:
        LOG.debug("tdkf gated translation (d2=%.1f)", d2)
        return state, False
    k = np.linalg.solve(s.T, state.p[:, :3].T).T  # (9,3)
    x = state.x + k @ nu
    ikh = np.eye(9)
    ikh[:, :3] -= k
    p = ikh @ state.p @ ikh.T + k @ r @ k.T  # Joseph form
    return TdkfState.from_vector(x, 0.5 * (p + p.T)), True
