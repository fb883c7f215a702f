"""Image-plane landmark tracking.

One linear Kalman filter per identified landmark: the state is the subpixel
blob center, predicted between corrections by integrating the pixel velocity
that the interaction matrix maps from the camera twist, and corrected by the
identified centroid measurements. Identification supplies the data
association, so there is no search; tracks live and die with field-of-view
membership.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import Mapping

import numpy as np
import pandas as pd

from .camera import CameraModel
from .identification import NvbmFrame

LOG = logging.getLogger(__name__)

# chi-square(2 dof) tail point used to reject clutter measurements
DEFAULT_GATE = 11.83
DEFAULT_T_LOST = 3
DEFAULT_Q_P = (0.25, 0.25)  # px^2 added per prediction step
DEFAULT_R = (1.0, 1.0)  # px^2 measurement noise
DEFAULT_SPAWN_P = (4.0, 4.0)  # px^2 at track birth
DEFAULT_BOUNDS_MARGIN = 8.0  # px a track may drift past the sensor edge

TRACK_LOG_COLUMNS = ("t_us", "id", "u", "v", "Puu", "Pvv", "source")


class InvalidDepthError(ValueError):
    """Interaction matrix evaluated at non-positive depth."""


def interaction_matrix(c, z: float, camera: CameraModel) -> np.ndarray:
    """2x6 map from camera twist [v; w] (camera frame) to pixel velocity.

    `c` is the pixel position; the closed form uses coordinates centered on
    the principal point. Twist convention: v is the camera's linear velocity
    and w its angular velocity, both expressed in camera axes, so a static
    scene point p moves at -v - w x p relative to the camera.
    """
    if z <= 0.0:
        raise InvalidDepthError(f"depth must be positive, got {z}")
    u = float(c[0]) - camera.u0
    v = float(c[1]) - camera.v0
    fu, fv = camera.fu, camera.fv
    return np.array(
        [
            [-fu / z, 0.0, u / z, u * v / fv, -(fu + u * u / fu), (fu / fv) * v],
            [0.0, -fv / z, v / z, fv + v * v / fv, -(u * v) / fu, -(fv / fu) * u],
        ]
    )


def pixel_velocity(c, z: float, camera: CameraModel, v_cam, w_cam) -> np.ndarray:
    """Pixel velocity (px/s) of the landmark at depth z under the camera twist."""
    twist = np.concatenate([np.asarray(v_cam, float), np.asarray(w_cam, float)])
    return interaction_matrix(c, z, camera) @ twist


@dataclass(frozen=True)
class LtkfTrack:
    """Per-landmark filter snapshot. Operations return new snapshots."""

    ident: int
    c: np.ndarray  # (2,) subpixel center
    p: np.ndarray  # (2,2) covariance
    t_us: int  # last correction time
    misses: int = 0
    n_updates: int = 1

    def __post_init__(self):
        object.__setattr__(self, "c", np.asarray(self.c, float).reshape(2))
        object.__setattr__(self, "p", np.asarray(self.p, float).reshape(2, 2))
        _check_spd(self.p, "track covariance")


def _check_spd(p: np.ndarray, what: str) -> None:
    # 2x2 symmetric positive definite: positive diagonal and determinant
    if not np.allclose(p, p.T, rtol=0.0, atol=1e-9):
        raise ValueError(f"{what} must be symmetric")
    if not (p[0, 0] > 0.0 and p[1, 1] > 0.0 and float(np.linalg.det(p)) > 0.0):
        raise ValueError(f"{what} must be positive definite")


def spawn_track(ident: int, center, t_us: int, spawn_p=DEFAULT_SPAWN_P) -> LtkfTrack:
    return LtkfTrack(ident=int(ident), c=np.asarray(center, float),
                     p=np.diag(spawn_p).astype(float), t_us=int(t_us))


def ltkf_predict(track: LtkfTrack, c_dot, dt: float = 0.005,
                 q_p=DEFAULT_Q_P) -> LtkfTrack:
    """Integrate pixel velocity into the state and inflate the covariance."""
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    c = track.c + dt * np.asarray(c_dot, float).reshape(2)
    p = track.p + np.diag(q_p)
    _check_spd(p, "predicted covariance")
    return replace(track, c=c, p=p)


def ltkf_update(track: LtkfTrack, z, t_us: int | None = None, r=DEFAULT_R,
                gate: float = DEFAULT_GATE) -> LtkfTrack:
    """Measurement update with identity observation matrix and a
    Mahalanobis gate; a gated measurement only bumps the miss counter."""
    r = np.diag(r) if np.ndim(r) == 1 else np.asarray(r, float).reshape(2, 2)
    if not np.allclose(r, r.T, rtol=0.0, atol=1e-9) or np.min(np.linalg.eigvalsh(r)) < 0.0:
        raise ValueError("measurement covariance must be symmetric PSD")
    nu = np.asarray(z, float).reshape(2) - track.c
    s = track.p + r
    d2 = float(nu @ np.linalg.solve(s, nu))
    if d2 > gate:
        LOG.debug("track %d gated measurement (d2=%.1f)", track.ident, d2)
        return replace(track, misses=track.misses + 1)
    k = np.linalg.solve(s.T, track.p.T).T
    c = track.c + k @ nu
    ik = np.eye(2) - k
    p = ik @ track.p @ ik.T + k @ r @ k.T  # Joseph form keeps P symmetric PSD
    # the floor keeps P strictly PD even at the exact R = 0 limit
    p = 0.5 * (p + p.T) + 1e-12 * np.eye(2)
    _check_spd(p, "updated covariance")
    return replace(track, c=c, p=p, misses=0, n_updates=track.n_updates + 1,
                   t_us=track.t_us if t_us is None else int(t_us))


@dataclass
class TrackerConfig:
    q_p: tuple[float, float] = DEFAULT_Q_P
    r: tuple[float, float] = DEFAULT_R
    spawn_p: tuple[float, float] = DEFAULT_SPAWN_P
    gate: float = DEFAULT_GATE
    t_lost: int = DEFAULT_T_LOST
    bounds_margin: float = DEFAULT_BOUNDS_MARGIN


def track_lifecycle(
    tracks: Mapping[int, LtkfTrack],
    frame: NvbmFrame,
    camera: CameraModel | None = None,
    config: TrackerConfig | None = None,
) -> dict[int, LtkfTrack]:
    """Correct, spawn, and retire tracks against one identified frame.

    Known IDs get a gated update; unseen IDs miss, and a track is dropped
    after t_lost consecutive misses or once its state leaves the sensor
    bounds by more than the margin.
    """
    cfg = config or TrackerConfig()
    seen = {e.landmark_id: e for e in frame.entries}
    out: dict[int, LtkfTrack] = {}
    for ident in sorted(tracks):
        track = tracks[ident]
        entry = seen.pop(ident, None)
        if entry is not None:
            track = ltkf_update(track, entry.center, t_us=frame.t_us,
                                r=cfg.r, gate=cfg.gate)
        else:
            track = replace(track, misses=track.misses + 1)
        if track.misses >= cfg.t_lost:
            LOG.debug("track %d lost after %d misses", ident, track.misses)
            continue
        if camera is not None and not camera.contains(track.c, cfg.bounds_margin):
            LOG.debug("track %d left the sensor bounds", ident)
            continue
        out[ident] = track
    for ident, entry in seen.items():
        out[ident] = spawn_track(ident, entry.center, frame.t_us, cfg.spawn_p)
    return out


def predict_all(
    tracks: Mapping[int, LtkfTrack],
    dt: float,
    camera: CameraModel,
    depth_of=None,
    v_cam=None,
    w_cam=None,
    q_p=DEFAULT_Q_P,
) -> dict[int, LtkfTrack]:
    """Predict every track one step; zero twist means pure inflation.

    `depth_of(ident)` supplies the per-landmark depth estimate; without it
    (or without a twist) the pixel velocity is zero.
    """
    have_twist = v_cam is not None and w_cam is not None and depth_of is not None
    out: dict[int, LtkfTrack] = {}
    for ident in sorted(tracks):
        track = tracks[ident]
        c_dot = np.zeros(2)
        if have_twist:
            z = float(depth_of(ident))
            if z > 0.0:
                c_dot = pixel_velocity(track.c, z, camera, v_cam, w_cam)
        out[ident] = ltkf_predict(track, c_dot, dt, q_p)
    return out


# ---------------------------------------------------------------------------
# Track log IO
# ---------------------------------------------------------------------------


@dataclass
class TrackLog:
    """Row-per-step trace of every track, in time order."""

    rows: list[tuple] = None

    def __post_init__(self):
        if self.rows is None:
            self.rows = []

    def append(self, t_us: int, track: LtkfTrack, source: str) -> None:
        self.rows.append((int(t_us), track.ident, float(track.c[0]),
                          float(track.c[1]), float(track.p[0, 0]),
                          float(track.p[1, 1]), source))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows, columns=list(TRACK_LOG_COLUMNS))


def write_track_log(path, log: TrackLog) -> None:
    log.to_frame().to_csv(path, index=False, float_format="%.6f")


def read_track_log(path) -> pd.DataFrame:
    df = pd.read_csv(path)
    missing = [c for c in TRACK_LOG_COLUMNS if c not in df.columns]
    if missing:
        raise ValueError(f"track log missing columns: {missing}")
    return df
