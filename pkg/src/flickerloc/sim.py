"""Synthetic event-camera and IMU scene generator.

Generates the ideal scene (flickering disk landmarks observed by a moving
pinhole camera), converts it to an event stream with a per-pixel threshold
model, and produces time-aligned IMU samples plus a ground-truth log that
serves as the oracle for the estimation pipeline.

Model notes:

* Each landmark is a filled disk whose apparent radius scales with 1/depth,
  flickering as a square wave in log intensity with amplitude A (default two
  contrast thresholds, so each edge fires exactly one event per pixel when
  noise is off).
* The trajectory is integrated on an internal frame grid (default 1 kHz).
  Flicker edges are placed at their exact analytic times; disk-boundary
  coverage changes are placed by linear interpolation of the signed
  pixel-to-rim distance between frames.
* Per-pixel refractory dead time is enforced on true event times, then
  timestamp jitter is added and times are rounded to integer microseconds.
* The IMU reports specific force in the body frame (x-forward, y-left, z-up):
  a_body = R_bl (a_inertial - g), with g the gravity vector. Its clock leads
  the camera clock by a configurable offset.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
import pandas as pd

from .camera import CameraModel, ExtrinsicCalib, Pose, project_points
from .events import EventArray, US_PER_S
from .rotations import matrix_to_quat
from .trajectory import Trajectory, TrajectorySpec

GRAVITY = 9.81


@dataclass(frozen=True)
class Landmark:
    """One flickering marker. Frequencies are nominal registry values (Hz)."""

    position: tuple[float, float, float]
    frequency: float
    radius_px_at_1m: float = 12.0
    duty: float = 0.5
    phase: float = 0.0  # fraction of a period
    off_intervals: tuple[tuple[float, float], ...] = ()

    @property
    def ident(self) -> int:
        """Landmark ID is its nominal frequency in integer hertz."""
        return int(round(self.frequency))


@dataclass
class LandmarkConstellation:
    """Registry of landmarks in the landmark frame (z up).

    The optional drift velocity moves the whole constellation rigidly; the
    relative pose is then expressed against the moving frame, so registry
    positions stay valid.
    """

    landmarks: tuple[Landmark, ...]
    drift_velocity: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self) -> None:
        self.landmarks = tuple(self.landmarks)
        freqs = [lm.frequency for lm in self.landmarks]
        if len(set(freqs)) != len(freqs):
            raise ValueError("landmark frequencies must be distinct")
        low = [f for f in freqs if f < 200.0]
        if low:
            raise ValueError(f"landmark frequencies must be >= 200 Hz, got {sorted(low)}")

    def __len__(self) -> int:
        return len(self.landmarks)

    @property
    def ids(self) -> np.ndarray:
        return np.array([lm.ident for lm in self.landmarks], dtype=np.int64)

    @property
    def frequencies(self) -> np.ndarray:
        return np.array([lm.frequency for lm in self.landmarks])

    @property
    def positions(self) -> np.ndarray:
        return np.array([lm.position for lm in self.landmarks], dtype=float).reshape(-1, 3)

    def position_of(self, ident: int) -> np.ndarray:
        for lm in self.landmarks:
            if lm.ident == ident:
                return np.asarray(lm.position, float)
        raise KeyError(f"no landmark with id {ident}")

    def drift_per_correction(self, correction_rate_hz: float) -> float:
        """Unmodeled displacement per correction interval under drift (m)."""
        return float(np.linalg.norm(self.drift_velocity)) / correction_rate_hz


@dataclass
class SensorNoiseSpec:
    """Noise and device parameters for both sensors."""

    contrast_threshold: float = 0.2  # log-intensity units
    flicker_amplitude: float | None = None  # defaults to 2 * threshold
    jitter_us: float = 0.5  # per-event timestamp jitter (std)
    # rare readout-latency spikes: a small fraction of events arrives late by
    # tens of us, producing per-transition frequency outliers of tens of Hz
    latency_spike_prob: float = 2e-5
    latency_spike_us: tuple[float, float] = (10.0, 50.0)
    background_rate: float = 0.01  # noise events / pixel / s
    refractory_us: float = 100.0
    accel_noise: float = 0.02  # m/s^2 per sample (std)
    accel_bias: tuple[float, float, float] = (0.0, 0.0, 0.0)
    gyro_noise: float = 0.002  # rad/s per sample (std)
    gyro_bias: tuple[float, float, float] = (0.0, 0.0, 0.0)
    gravity: float = GRAVITY
    clock_offset_ms: float = 3.2  # IMU clock minus camera clock

    @property
    def amplitude(self) -> float:
        if self.flicker_amplitude is None:
            return 2.0 * self.contrast_threshold
        return self.flicker_amplitude


@dataclass
class ImuData:
    """IMU samples on the IMU's own clock (body frame)."""

    t_us: np.ndarray
    accel: np.ndarray  # (N, 3) specific force, m/s^2
    gyro: np.ndarray  # (N, 3) rad/s

    def __len__(self) -> int:
        return len(self.t_us)

    def to_csv(self, path) -> None:
        pd.DataFrame(
            {
                "t_us": self.t_us,
                "ax": self.accel[:, 0],
                "ay": self.accel[:, 1],
                "az": self.accel[:, 2],
                "gx": self.gyro[:, 0],
                "gy": self.gyro[:, 1],
                "gz": self.gyro[:, 2],
            }
        ).to_csv(path, index=False)

    @classmethod
    def from_csv(cls, path) -> "ImuData":
        df = pd.read_csv(path)
        need = ["t_us", "ax", "ay", "az", "gx", "gy", "gz"]
        missing = [c for c in need if c not in df.columns]
        if missing:
            raise ValueError(f"IMU CSV missing columns: {missing}")
        return cls(
            df["t_us"].to_numpy(np.int64),
            df[["ax", "ay", "az"]].to_numpy(float),
            df[["gx", "gy", "gz"]].to_numpy(float),
        )


@dataclass
class GroundTruthLog:
    """True relative state sampled on the camera clock.

    ``translation`` is the camera origin in the landmark frame, ``quat`` the
    camera-to-landmark rotation (w, x, y, z). Per-landmark pixel centers and
    depths are the oracle for the image-plane tracker.
    """

    t_us: np.ndarray
    translation: np.ndarray  # (N, 3)
    quat: np.ndarray  # (N, 4)
    velocity: np.ndarray | None = None  # (N, 3)
    landmark_ids: np.ndarray | None = None  # (J,)
    centers: np.ndarray | None = None  # (N, J, 2)
    depths: np.ndarray | None = None  # (N, J)
    visible: np.ndarray | None = None  # (N, J) bool

    def __len__(self) -> int:
        return len(self.t_us)

    def to_csv(self, path) -> None:
        pd.DataFrame(
            {
                "t_us": self.t_us,
                "tx": self.translation[:, 0],
                "ty": self.translation[:, 1],
                "tz": self.translation[:, 2],
                "qw": self.quat[:, 0],
                "qx": self.quat[:, 1],
                "qy": self.quat[:, 2],
                "qz": self.quat[:, 3],
            }
        ).to_csv(path, index=False)

    def landmarks_to_csv(self, path) -> None:
        if self.centers is None:
            raise ValueError("this log carries no landmark truth")
        n, j = self.centers.shape[:2]
        pd.DataFrame(
            {
                "t_us": np.repeat(self.t_us, j),
                "id": np.tile(self.landmark_ids, n),
                "u": self.centers[:, :, 0].ravel(),
                "v": self.centers[:, :, 1].ravel(),
                "depth": self.depths.ravel(),
                "visible": self.visible.ravel().astype(int),
            }
        ).to_csv(path, index=False)

    @classmethod
    def from_csv(cls, path, landmarks_path=None) -> "GroundTruthLog":
        df = pd.read_csv(path)
        need = ["t_us", "tx", "ty", "tz", "qw", "qx", "qy", "qz"]
        missing = [c for c in need if c not in df.columns]
        if missing:
            raise ValueError(f"ground-truth CSV missing columns: {missing}")
        log = cls(
            df["t_us"].to_numpy(np.int64),
            df[["tx", "ty", "tz"]].to_numpy(float),
            df[["qw", "qx", "qy", "qz"]].to_numpy(float),
        )
        if landmarks_path is not None:
            lf = pd.read_csv(landmarks_path)
            ids = np.unique(lf["id"].to_numpy(np.int64))
            j = len(ids)
            n = len(log.t_us)
            order = {int(i): k for k, i in enumerate(ids)}
            cols = np.array([order[int(i)] for i in lf["id"]])
            rows = np.searchsorted(log.t_us, lf["t_us"].to_numpy(np.int64))
            centers = np.full((n, j, 2), np.nan)
            depths = np.full((n, j), np.nan)
            vis = np.zeros((n, j), bool)
            centers[rows, cols, 0] = lf["u"]
            centers[rows, cols, 1] = lf["v"]
            depths[rows, cols] = lf["depth"]
            vis[rows, cols] = lf["visible"].to_numpy(int) > 0
            log.landmark_ids, log.centers, log.depths, log.visible = ids, centers, depths, vis
        return log


@dataclass
class ScenarioConfig:
    """Complete simulated-scene description."""

    camera: CameraModel
    constellation: LandmarkConstellation
    trajectory: TrajectorySpec
    noise: SensorNoiseSpec = field(default_factory=SensorNoiseSpec)
    duration_s: float = 10.0
    seed: int = 0
    extrinsics: ExtrinsicCalib = field(default_factory=ExtrinsicCalib.forward_mount)
    frame_rate_hz: int = 1000
    imu_rate_hz: int = 200
    gt_rate_hz: int = 200


@dataclass
class SimulationResult:
    events: EventArray
    imu: ImuData
    ground_truth: GroundTruthLog
    config: ScenarioConfig


# ---------------------------------------------------------------------------
# Scene kinematics
# ---------------------------------------------------------------------------


def camera_poses(config: ScenarioConfig, t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Camera rotation (N,3,3, camera->landmark) and position (N,3) at times t.

    With constellation drift, the relative position is expressed against the
    moving landmark frame.
    """
    sample = Trajectory(config.trajectory).sample(t)
    r_lc = sample.r_lb @ config.extrinsics.r_cb.T
    drift = np.asarray(config.constellation.drift_velocity, float)
    pos = sample.position - np.atleast_1d(t)[:, None] * drift
    return r_lc, pos


def _signal_high(lm: Landmark, t: np.ndarray) -> np.ndarray:
    """Square-wave state including scripted off intervals."""
    t = np.asarray(t, float)
    if lm.frequency <= 0.0:
        return np.zeros(t.shape, bool)
    high = np.mod(t * lm.frequency - lm.phase, 1.0) < lm.duty
    for a, b in lm.off_intervals:
        high &= ~((t >= a) & (t < b))
    return high


def _switch_times(lm: Landmark, t0: float, t1: float) -> tuple[np.ndarray, np.ndarray]:
    """Exact toggle times of the emitted light in [t0, t1) with polarities."""
    if lm.frequency <= 0.0:
        return np.zeros(0), np.zeros(0, np.int8)
    period = 1.0 / lm.frequency
    n0 = int(np.floor(t0 / period)) - 1
    n1 = int(np.ceil(t1 / period)) + 1
    n = np.arange(n0, n1 + 1, dtype=float)
    cand = np.concatenate([(n + lm.phase) * period, (n + lm.phase + lm.duty) * period])
    for a, b in lm.off_intervals:
        cand = np.concatenate([cand, [a, b]])
    cand = np.unique(cand)
    cand = cand[(cand >= t0) & (cand < t1)]
    if len(cand) == 0:
        return cand, np.zeros(0, np.int8)
    # Sample strictly inside the half-periods on either side: evaluating at
    # the exact edge time is ulp-sensitive and silently drops toggles.
    after = _signal_high(lm, cand + 1e-9)
    before = _signal_high(lm, cand - 1e-9)
    toggles = after != before
    pol = np.where(after[toggles], 1, -1).astype(np.int8)
    return cand[toggles], pol


def _apply_refractory(pixel: np.ndarray, t: np.ndarray, refrac_s: float) -> np.ndarray:
    """Greedy per-pixel dead time. Inputs sorted by (pixel, t); returns keep mask."""
    keep = np.ones(len(t), bool)
    if len(t) < 2 or refrac_s <= 0.0:
        return keep
    same = pixel[1:] == pixel[:-1]
    close = same & (np.diff(t) < refrac_s)
    if not np.any(close):
        return keep
    starts = np.nonzero(np.r_[True, pixel[1:] != pixel[:-1]])[0]
    bad_groups = np.unique(np.searchsorted(starts, np.nonzero(close)[0], side="right") - 1)
    ends = np.r_[starts[1:], len(t)]
    for g in bad_groups:  # rare: only pixels with at least one close pair
        last = t[starts[g]]
        for i in range(starts[g] + 1, ends[g]):
            if t[i] - last < refrac_s:
                keep[i] = False
            else:
                last = t[i]
    return keep


# ---------------------------------------------------------------------------
# Event synthesis
# ---------------------------------------------------------------------------


def synthesize_events(config: ScenarioConfig, rng: np.random.Generator | None = None):
    """Render the event stream for the scenario.

    Returns an EventArray in canonical (t, y, x) order. Deterministic for a
    given config and seed.
    """
    if rng is None:
        rng = np.random.default_rng(np.random.SeedSequence(config.seed).spawn(1)[0])
    cam = config.camera
    noise = config.noise
    duration = float(config.duration_s)
    rate = config.frame_rate_hz
    n_frames = int(np.ceil(duration * rate))

    ts_list: list[np.ndarray] = []
    xs_list: list[np.ndarray] = []
    ys_list: list[np.ndarray] = []
    ps_list: list[np.ndarray] = []

    flicker_on = noise.amplitude >= noise.contrast_threshold and noise.amplitude > 0.0
    chunk = rate  # one-second chunks bound peak memory
    if flicker_on and len(config.constellation):
        for k0 in range(0, n_frames, chunk):
            k1 = min(k0 + chunk, n_frames)
            f_t = np.arange(k0, k1 + 1) / rate
            r_lc, pos = camera_poses(config, f_t)
            for lm in config.constellation.landmarks:
                out = _landmark_chunk_events(cam, lm, f_t, r_lc, pos, rate, duration)
                if out is not None:
                    ts_list.append(out[0])
                    xs_list.append(out[1])
                    ys_list.append(out[2])
                    ps_list.append(out[3])

    # Uncorrelated background noise over the whole sensor.
    if noise.background_rate > 0.0:
        lam = noise.background_rate * cam.width * cam.height * duration
        n_noise = int(rng.poisson(lam))
        if n_noise:
            ts_list.append(np.sort(rng.uniform(0.0, duration, n_noise)))
            xs_list.append(rng.integers(0, cam.width, n_noise))
            ys_list.append(rng.integers(0, cam.height, n_noise))
            ps_list.append(rng.choice(np.array([-1, 1], np.int8), n_noise))

    if not ts_list:
        return EventArray.empty()

    t = np.concatenate(ts_list)
    x = np.concatenate(xs_list).astype(np.int64)
    y = np.concatenate(ys_list).astype(np.int64)
    p = np.concatenate(ps_list).astype(np.int8)

    pixel = y * cam.width + x
    order = np.lexsort((t, pixel))
    pixel, t, x, y, p = pixel[order], t[order], x[order], y[order], p[order]
    keep = _apply_refractory(pixel, t, noise.refractory_us / US_PER_S)
    t, x, y, p = t[keep], x[keep], y[keep], p[keep]

    t_us = t * US_PER_S
    if noise.jitter_us > 0.0:
        t_us = t_us + rng.normal(0.0, noise.jitter_us, len(t_us))
    if noise.latency_spike_prob > 0.0:
        late = rng.random(len(t_us)) < noise.latency_spike_prob
        lo, hi = noise.latency_spike_us
        t_us[late] += rng.uniform(lo, hi, int(late.sum()))
    t_us = np.maximum(np.rint(t_us), 0.0).astype(np.int64)

    return EventArray(t_us, x, y, p).sorted_canonical()


def _landmark_chunk_events(cam, lm, f_t, r_lc, pos, rate, duration):
    """Events of one landmark over one chunk of internal frames."""
    point = np.asarray(lm.position, float)
    xc = np.einsum("nij,nj->ni", np.swapaxes(r_lc, 1, 2), point - pos)
    depth = xc[:, 2]
    front = depth > 0.0
    if not np.any(front):
        return None
    z = np.where(front, depth, 1.0)
    cx = cam.u0 + (cam.fu * xc[:, 0] + cam.skew * xc[:, 1]) / z
    cy = cam.v0 + cam.fv * xc[:, 1] / z
    radius = np.where(front, lm.radius_px_at_1m / z, 0.0)

    ok = front & (radius > 0.0)
    if not np.any(ok):
        return None
    x_lo = max(0, int(np.floor((cx[ok] - radius[ok]).min())))
    x_hi = min(cam.width - 1, int(np.ceil((cx[ok] + radius[ok]).max())))
    y_lo = max(0, int(np.floor((cy[ok] - radius[ok]).min())))
    y_hi = min(cam.height - 1, int(np.ceil((cy[ok] + radius[ok]).max())))
    if x_hi < x_lo or y_hi < y_lo:
        return None
    gx, gy = np.meshgrid(np.arange(x_lo, x_hi + 1), np.arange(y_lo, y_hi + 1))
    gx = gx.ravel()
    gy = gy.ravel()

    # Signed distance of each pixel center to the disk rim, per frame.
    dist = np.sqrt(
        (gx[None, :] - cx[:, None].astype(np.float64)) ** 2
        + (gy[None, :] - cy[:, None]) ** 2
    ) - radius[:, None]
    dist[~front] = 1e9  # behind the camera: never covered
    covered = dist <= 0.0

    ever = covered.any(axis=0)
    if not np.any(ever):
        return None
    gx, gy, dist, covered = gx[ever], gy[ever], dist[:, ever], covered[:, ever]

    ts: list[np.ndarray] = []
    xs: list[np.ndarray] = []
    ys: list[np.ndarray] = []
    ps: list[np.ndarray] = []

    # Flicker edges at exact times, emitted by pixels covered in the edge's frame.
    t0, t1 = f_t[0], min(f_t[-1], duration)
    e_times, e_pol = _switch_times(lm, t0, t1)
    if len(e_times):
        rows = np.minimum((e_times * rate).astype(np.int64) - int(round(f_t[0] * rate)),
                          covered.shape[0] - 2)
        hit = covered[rows, :]  # (E, P)
        e_idx, p_idx = np.nonzero(hit)
        if len(e_idx):
            ts.append(e_times[e_idx])
            xs.append(gx[p_idx])
            ys.append(gy[p_idx])
            ps.append(e_pol[e_idx])

    # Disk-rim crossings: place by linear interpolation of the signed distance.
    change = covered[1:, :] != covered[:-1, :]
    k_idx, p_idx = np.nonzero(change)
    if len(k_idx):
        d0 = dist[k_idx, p_idx]
        d1 = dist[k_idx + 1, p_idx]
        frac = d0 / (d0 - d1)
        t_star = f_t[k_idx] + frac / rate
        inside = t_star < duration
        t_star, k_idx, p_idx = t_star[inside], k_idx[inside], p_idx[inside]
        if len(t_star):
            high = _signal_high(lm, t_star)
            entering = covered[k_idx + 1, p_idx]
            emit = high  # rim crossings are silent while the light is off
            if np.any(emit):
                ts.append(t_star[emit])
                xs.append(gx[p_idx[emit]])
                ys.append(gy[p_idx[emit]])
                ps.append(np.where(entering[emit], 1, -1).astype(np.int8))

    if not ts:
        return None
    return (
        np.concatenate(ts),
        np.concatenate(xs),
        np.concatenate(ys),
        np.concatenate(ps),
    )


# ---------------------------------------------------------------------------
# IMU synthesis and ground truth
# ---------------------------------------------------------------------------


def synthesize_imu(config: ScenarioConfig, rng: np.random.Generator | None = None) -> ImuData:
    """IMU samples; timestamps carry the configured clock offset."""
    if rng is None:
        rng = np.random.default_rng(np.random.SeedSequence(config.seed).spawn(2)[1])
    noise = config.noise
    n = int(np.floor(config.duration_s * config.imu_rate_hz)) + 1
    t = np.arange(n) / config.imu_rate_hz
    sample = Trajectory(config.trajectory).sample(t)

    g_vec = np.array([0.0, 0.0, -noise.gravity])  # gravity points down (z up)
    specific = sample.acceleration - g_vec
    accel = np.einsum("ni,nij->nj", specific, sample.r_lb)  # = R_bl @ specific
    accel = accel + np.asarray(noise.accel_bias, float)
    gyro = sample.omega_body + np.asarray(noise.gyro_bias, float)
    if noise.accel_noise > 0.0:
        accel = accel + rng.normal(0.0, noise.accel_noise, accel.shape)
    if noise.gyro_noise > 0.0:
        gyro = gyro + rng.normal(0.0, noise.gyro_noise, gyro.shape)

    t_us = np.rint((t + noise.clock_offset_ms / 1000.0) * US_PER_S).astype(np.int64)
    return ImuData(t_us, accel, gyro)


def ground_truth_log(config: ScenarioConfig) -> GroundTruthLog:
    """Oracle log on the camera clock: relative pose, velocity, pixel centers."""
    n = int(np.floor(config.duration_s * config.gt_rate_hz)) + 1
    t = np.arange(n) / config.gt_rate_hz
    r_lc, pos = camera_poses(config, t)
    sample = Trajectory(config.trajectory).sample(t)
    drift = np.asarray(config.constellation.drift_velocity, float)
    vel = sample.velocity - drift

    quat = np.stack([matrix_to_quat(r_lc[i]) for i in range(n)])
    points = config.constellation.positions
    j = len(points)
    centers = np.full((n, j, 2), np.nan)
    depths = np.full((n, j), np.nan)
    vis = np.zeros((n, j), bool)
    for i in range(n):
        pose = Pose(r_lc[i], pos[i])
        pix, z, inside = project_points(config.camera, pose, points)
        centers[i] = pix
        depths[i] = z
        vis[i] = inside

    return GroundTruthLog(
        t_us=np.rint(t * US_PER_S).astype(np.int64),
        translation=pos,
        quat=quat,
        velocity=vel,
        landmark_ids=config.constellation.ids,
        centers=centers,
        depths=depths,
        visible=vis,
    )


def simulate(config: ScenarioConfig) -> SimulationResult:
    """Run the full generator: events, IMU, and ground truth."""
    children = np.random.SeedSequence(config.seed).spawn(3)
    events = synthesize_events(config, np.random.default_rng(children[0]))
    imu = synthesize_imu(config, np.random.default_rng(children[1]))
    gt = ground_truth_log(config)
    return SimulationResult(events, imu, gt, config)


# ---------------------------------------------------------------------------
# Bundled nominal scene
# ---------------------------------------------------------------------------

NOMINAL_FREQUENCIES = (200.0, 250.0, 300.0, 350.0, 400.0, 500.0, 600.0)

_NOMINAL_POSITIONS = (
    (0.5, -1.0, 0.3),
    (-0.5, -0.7, 1.1),
    (0.5, 0.0, 1.3),
    (-0.5, 0.7, 1.1),
    (0.5, 1.0, 0.3),
    (-0.3, 0.35, 0.25),
    (-0.3, -0.35, 0.25),
)


def nominal_constellation(count: int = 7) -> LandmarkConstellation:
    """First `count` landmarks of the bundled scene (distinct frequencies)."""
    if not 1 <= count <= len(NOMINAL_FREQUENCIES):
        raise ValueError(f"count must be in 1..{len(NOMINAL_FREQUENCIES)}")
    lms = tuple(
        Landmark(position=_NOMINAL_POSITIONS[i], frequency=NOMINAL_FREQUENCIES[i],
                 radius_px_at_1m=12.0, phase=(0.137 * i) % 1.0)
        for i in range(count)
    )
    return LandmarkConstellation(lms)


def hover_scenario(
    duration_s: float = 10.0,
    seed: int = 0,
    count: int = 7,
    distance: float = 6.0,
    noise: SensorNoiseSpec | None = None,
) -> ScenarioConfig:
    """Static hover at the given range, facing the constellation."""
    return ScenarioConfig(
        camera=CameraModel.from_fov(),
        constellation=nominal_constellation(count),
        trajectory=TrajectorySpec(kind="hover", position=(distance, 0.0, 0.8)),
        noise=noise or SensorNoiseSpec(),
        duration_s=duration_s,
        seed=seed,
    )


def square_scenario(
    duration_s: float = 30.0,
    seed: int = 0,
    noise: SensorNoiseSpec | None = None,
) -> ScenarioConfig:
    """Gentle square trajectory spanning roughly 5 m to 7 m of range."""
    traj = TrajectorySpec(
        kind="square",
        position=(6.0, 0.0, 0.8),
        square_side=1.5,
        segment_time=6.0,
    )
    return ScenarioConfig(
        camera=CameraModel.from_fov(),
        constellation=nominal_constellation(7),
        trajectory=traj,
        noise=noise or SensorNoiseSpec(),
        duration_s=duration_s,
        seed=seed,
    )
