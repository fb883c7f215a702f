"""End-to-end orchestration: dataset plumbing, the two-rate filter cadence,
metrics, and report emission.

Analysis windows close at the detection rate (100 Hz default); each close
runs clustering, identification, tracker correction, a pose solve, and a
translation-filter update. Between closes the inertial side advances the
orientation filter, the translation filter, and every image-plane track at
the IMU rate (200 Hz default). Every run is deterministic for a given
config: the only wall-clock-dependent artifact is the timing table, which
is kept out of the report files and written separately.
"""

from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import pandas as pd
from scipy import ndimage

from .camera import CameraModel, ExtrinsicCalib
from .config import ConfigError, RunConfig, dump_config
from .events import (
    EventArray,
    detect_transitions,
    iter_windows,
    read_events_binary,
    read_events_csv,
)
from .fusion import (
    OrientationState,
    TdkfConfig,
    TdkfState,
    accel_to_landmark,
    madgwick_step,
    tdkf_predict,
    tdkf_update,
)
from .identification import (
    InsufficientDataError,
    NvbmFrame,
    assign_clusters,
    em_fit,
    identify_landmarks,
    select_model,
)
from .pnp import PoseEstimate, pnp_solve, yaw_extract
from .rotations import (
    euler_zyx_from_quat,
    quat_multiply,
    quat_normalize,
    quat_to_matrix,
)
from .sim import (
    GroundTruthLog,
    ImuData,
    Landmark,
    LandmarkConstellation,
    ScenarioConfig,
    SensorNoiseSpec,
    TrajectorySpec,
    nominal_constellation,
    simulate,
)
from .tracking import TrackLog, TrackerConfig, predict_all, track_lifecycle

LOG = logging.getLogger(__name__)

US_PER_S = 1_000_000

POSE_LOG_COLUMNS = (
    "t_us", "tx", "ty", "tz", "vx", "vy", "vz",
    "bx", "by", "bz", "qw", "qx", "qy", "qz", "pnp_valid",
)
NVBM_LOG_COLUMNS = ("t_us", "id", "f_hz", "u", "v", "n_pixels", "ambiguous")
WINDOW_LOG_COLUMNS = ("t_us", "n_transitions", "j_opt", "n_identified", "dead_reckon")
TIMING_STAGES = ("transitions", "clustering", "ltkf", "madgwick", "pnp", "tdkf")
LANDMARK_MAP_COLUMNS = ("id", "frequency_hz", "x", "y", "z")


# ---------------------------------------------------------------------------
# Scenario and dataset plumbing
# ---------------------------------------------------------------------------


def scenario_from_config(config: RunConfig) -> ScenarioConfig:
    """Build the generator scene described by the run config."""
    sc = config.scenario
    noise = SensorNoiseSpec(
        contrast_threshold=sc.contrast_threshold,
        jitter_us=sc.jitter_us,
        latency_spike_prob=sc.latency_spike_prob,
        background_rate=sc.background_rate,
        refractory_us=sc.refractory_us,
        accel_noise=sc.accel_noise,
        accel_bias=tuple(sc.accel_bias),
        gyro_noise=sc.gyro_noise,
        gyro_bias=tuple(sc.gyro_bias),
        clock_offset_ms=sc.clock_offset_ms,
    )
    constellation = nominal_constellation(sc.count)
    if tuple(sc.drift_velocity) != (0.0, 0.0, 0.0):
        constellation = LandmarkConstellation(
            constellation.landmarks, tuple(sc.drift_velocity))
    if sc.kind == "hover":
        traj = TrajectorySpec(kind="hover", position=(sc.distance, 0.0, 0.8))
    elif sc.kind == "square":
        traj = TrajectorySpec(
            kind="square",
            position=(sc.distance, 0.0, 0.8),
            square_side=sc.square_side,
            segment_time=sc.segment_time,
        )
    else:
        raise ConfigError(f"unknown scenario kind {sc.kind!r}")
    return ScenarioConfig(
        camera=CameraModel.from_fov(),
        constellation=constellation,
        trajectory=traj,
        noise=noise,
        duration_s=sc.duration_s,
        seed=config.seed,
        imu_rate_hz=config.pipeline.imu_rate_hz,
    )


def write_landmark_map(path, constellation: LandmarkConstellation) -> None:
    """Registry file: one row per landmark, id, flicker rate, position."""
    pos = constellation.positions
    pd.DataFrame(
        {
            "id": constellation.ids,
            "frequency_hz": constellation.frequencies,
            "x": pos[:, 0],
            "y": pos[:, 1],
            "z": pos[:, 2],
        }
    ).to_csv(path, index=False, float_format="%.9g")


def read_landmark_map(path) -> LandmarkConstellation:
    df = pd.read_csv(path)
    missing = [c for c in LANDMARK_MAP_COLUMNS if c not in df.columns]
    if missing:
        raise ValueError(f"landmark map missing columns: {missing}")
    lms = tuple(
        Landmark(
            position=(float(r.x), float(r.y), float(r.z)),
            frequency=float(r.frequency_hz),
        )
        for r in df.itertuples()
    )
    return LandmarkConstellation(lms)


@dataclass
class PipelineInputs:
    """Everything run_pipeline consumes, from files or from the generator."""

    events: EventArray
    imu: ImuData
    constellation: LandmarkConstellation
    camera: CameraModel
    extrinsics: ExtrinsicCalib
    ground_truth: GroundTruthLog | None = None


def load_inputs(config: RunConfig) -> PipelineInputs:
    """Recorded streams when the config names files, otherwise a fresh
    simulation of the configured scenario."""
    sc = config.scenario
    if sc.events_file or sc.imu_file:
        if not (sc.events_file and sc.imu_file and sc.landmarks_file):
            raise ConfigError(
                "file-based runs need scenario.events_file, scenario.imu_file "
                "and scenario.landmarks_file together")
        reader = read_events_binary if str(sc.events_file).endswith(".bin") else read_events_csv
        events = reader(sc.events_file)
        imu = ImuData.from_csv(sc.imu_file)
        constellation = read_landmark_map(sc.landmarks_file)
        gt = None
        if sc.ground_truth_file:
            gt = GroundTruthLog.from_csv(sc.ground_truth_file)
        return PipelineInputs(
            events, imu, constellation, CameraModel.from_fov(),
            ExtrinsicCalib.forward_mount(), gt)

    scenario = scenario_from_config(config)
    sim = simulate(scenario)
    return PipelineInputs(
        sim.events, sim.imu, scenario.constellation, scenario.camera,
        scenario.extrinsics, sim.ground_truth)


# ---------------------------------------------------------------------------
# Soft time synchronization
# ---------------------------------------------------------------------------


def synchronize(event_t_us, imu_t_us, offset_ms: float) -> np.ndarray:
    """IMU timestamps moved onto the camera clock.

    The offset is the IMU clock minus the camera clock, so it is subtracted.
    Streams that never overlap cannot drive the filter cadence and are a
    configuration error, not a warning.
    """
    event_t = np.asarray(event_t_us, np.int64)
    shifted = np.asarray(imu_t_us, np.int64) - int(round(offset_ms * 1000.0))
    if len(event_t) and len(shifted):
        if shifted[-1] < event_t[0] or shifted[0] > event_t[-1]:
            raise ConfigError(
                f"event stream [{event_t[0]}, {event_t[-1]}] us and shifted IMU "
                f"stream [{shifted[0]}, {shifted[-1]}] us do not overlap")
    return shifted


def _boxcar(x: np.ndarray, width: int) -> np.ndarray:
    # edge-replicating; zero padding would carve cliffs into a series that
    # sits on a large constant level
    if width <= 1:
        return x
    return ndimage.uniform_filter1d(x, size=width, mode="nearest")


def estimate_time_offset(
    events: EventArray,
    imu: ImuData,
    bin_ms: float = 1.0,
    max_lag_ms: float = 20.0,
    smooth_bins: int = 25,
) -> float:
    """Clock offset (IMU minus camera, ms) from a step-test recording.

    The flicker dominates the raw event rate, so the maneuver is read from
    geometry instead: the accumulated count image is split into one blob
    per landmark, per-blob centroid tracks are projected onto their travel
    directions and averaged into an image copy of the maneuver ramp, and
    its speed curve is cross-correlated against the platform speed the IMU
    sees by integrating the force deviation from rest. A parabola fitted
    through the correlation scores gives sub-bin resolution. Expects the
    step-test protocol: start at rest, then one clear move; a pure hover
    has nothing to align and raises ValueError.
    """
    if len(events) == 0 or len(imu) == 0:
        raise ValueError("offset estimation needs both streams non-empty")
    bin_us = bin_ms * 1000.0
    t0 = float(min(events.t_us[0], imu.t_us[0]))
    t1 = float(max(events.t_us[-1], imu.t_us[-1]))
    n_bins = int(np.floor((t1 - t0) / bin_us)) + 1
    centers = t0 + (np.arange(n_bins) + 0.5) * bin_us

    # split the count image into blobs; each landmark plus the tube it
    # sweeps while moving must stay one connected component, and a moving
    # blob spends little time over any tube pixel, so the threshold is a
    # low absolute count rather than a fraction of the static-pixel peak
    count_img = np.zeros((int(events.y.max()) + 1, int(events.x.max()) + 1))
    np.add.at(count_img, (events.y, events.x), 1.0)
    labels, n_labels = ndimage.label(count_img > 4.0)
    if n_labels == 0:
        raise ValueError("offset estimation found no persistent blobs")
    mass = ndimage.sum_labels(count_img, labels, index=np.arange(1, n_labels + 1))
    keep = np.flatnonzero(mass >= 0.01 * mass.sum()) + 1

    # per-blob centroid track, gap-filled and projected onto the blob's own
    # travel direction; a signed projection keeps the noise zero-mean where
    # a magnitude would fold it and warp the onset ramp
    cid = labels[events.y, events.x]
    b = np.clip(((events.t_us - t0) / bin_us).astype(np.int64), 0, n_bins - 1)
    disp = np.zeros(n_bins)
    n_used = 0
    for c in keep:
        sel = cid == c
        n_cb = np.bincount(b[sel], minlength=n_bins).astype(float)
        seen = n_cb > 0
        if seen.sum() < 8:
            continue
        u_cb = np.bincount(b[sel], weights=events.x[sel], minlength=n_bins)
        v_cb = np.bincount(b[sel], weights=events.y[sel], minlength=n_bins)
        u_seen = u_cb[seen] / n_cb[seen]
        v_seen = v_cb[seen] / n_cb[seen]
        # travel direction from the first and last quarter of sightings
        n_q = max(1, int(seen.sum()) // 4)
        du = np.median(u_seen[-n_q:]) - np.median(u_seen[:n_q])
        dv = np.median(v_seen[-n_q:]) - np.median(v_seen[:n_q])
        travel = np.hypot(du, dv)
        if travel < 2.0:
            continue
        u = np.interp(centers, centers[seen], u_seen)
        v = np.interp(centers, centers[seen], v_seen)
        disp += (u * du + v * dv) / travel
        n_used += 1
    if n_used == 0:
        raise ValueError("offset estimation needs a maneuver in the recording")

    # inertial side: platform velocity by integrating the force deviation
    # from its static value (trapezoid; a rectangle rule skews the ramp by
    # half a sample), then the same signed projection treatment
    t_imu = imu.t_us.astype(float)
    static = np.median(imu.accel, axis=0)
    dev = imu.accel - static
    dt_seg = (np.diff(t_imu) / US_PER_S)[:, None]
    vel = np.vstack([np.zeros(3), np.cumsum(0.5 * (dev[1:] + dev[:-1]) * dt_seg, axis=0)])
    pos = np.vstack([np.zeros(3), np.cumsum(0.5 * (vel[1:] + vel[:-1]) * dt_seg, axis=0)])
    heading = pos[-1] - pos[0]
    span = np.linalg.norm(heading)
    if span < 0.02:
        raise ValueError("offset estimation needs a maneuver in the recording")
    imu_disp = np.interp(centers, t_imu, pos @ (heading / span))

    # identical smoothing and differentiation on both sides, so the two
    # speed humps share any residual phase distortion and it cancels; the
    # trim discards the ends where one-sided differences live
    trim = slice(smooth_bins, n_bins - smooth_bins)
    ev_act = np.gradient(_boxcar(disp / n_used, smooth_bins))[trim]
    imu_act = np.gradient(_boxcar(imu_disp, smooth_bins))[trim]
    ev_act = ev_act - ev_act.mean()
    imu_act = imu_act - imu_act.mean()

    max_lag = int(round(max_lag_ms / bin_ms))
    lags = np.arange(-max_lag, max_lag + 1)
    score = np.empty(len(lags))
    for k, lag in enumerate(lags):
        # positive lag: the IMU copy of the burst arrives later than the
        # event copy, the sign convention of the config offset
        if lag >= 0:
            a, b = ev_act[: len(ev_act) - lag], imu_act[lag:]
        else:
            a, b = ev_act[-lag:], imu_act[: len(imu_act) + lag]
        denom = np.linalg.norm(a) * np.linalg.norm(b)
        score[k] = float(np.dot(a, b) / denom) if denom > 0 else 0.0

    # the maneuver hump is far wider than the lag window, so the score is
    # the gently curved top of the correlation peak plus noise ripple; a
    # least-squares parabola over the whole window averages the ripple
    # away, where a raw argmax would chase it
    c0, c1, c2 = np.polynomial.polynomial.polyfit(lags.astype(float), score, 2)
    if c2 < 0:
        best = float(np.clip(-0.5 * c1 / c2, lags[0], lags[-1]))
    else:
        best = float(lags[int(np.argmax(score))])
    return best * bin_ms


# ---------------------------------------------------------------------------
# Run orchestration
# ---------------------------------------------------------------------------


@dataclass
class _StageClock:
    """Wall-clock accumulator per pipeline stage."""

    totals: dict = field(default_factory=lambda: {s: 0.0 for s in TIMING_STAGES})
    _t0: float = 0.0
    _stage: str = ""

    def start(self, stage: str) -> None:
        self._stage = stage
        self._t0 = time.perf_counter()

    def stop(self) -> None:
        self.totals[self._stage] += time.perf_counter() - self._t0

    def table(self, n_windows: int) -> dict:
        total = sum(self.totals.values())
        rows = {}
        for stage in TIMING_STAGES:
            t = self.totals[stage]
            rows[stage] = {
                "total_ms": 1e3 * t,
                "per_window_ms": 1e3 * t / max(n_windows, 1),
                "share": t / total if total > 0 else 0.0,
            }
        rows["total"] = {
            "total_ms": 1e3 * total,
            "per_window_ms": 1e3 * total / max(n_windows, 1),
            "share": 1.0,
        }
        return {"n_windows": n_windows, "stages": rows}


def _tilt_quat(accel_c: np.ndarray) -> np.ndarray:
    """Roll/pitch initialization: the shortest rotation taking the measured
    specific-force direction to straight up. Yaw stays free (zero)."""
    a = np.asarray(accel_c, float)
    norm = np.linalg.norm(a)
    if norm < 1e-9:
        return np.array([1.0, 0.0, 0.0, 0.0])
    a = a / norm
    up = np.array([0.0, 0.0, 1.0])
    w = 1.0 + float(np.dot(a, up))
    if w < 1e-9:
        # antipodal: any horizontal axis works
        return np.array([0.0, 1.0, 0.0, 0.0])
    return quat_normalize(np.concatenate([[w], np.cross(a, up)]))


def _snap_yaw(state: OrientationState, phi: float, t_us: int) -> OrientationState:
    """Hard-set heading to the first pose-derived yaw; later fixes feed the
    continuous yaw-rate correction instead."""
    err = phi - state.yaw
    half = 0.5 * err
    q_world_z = np.array([np.cos(half), 0.0, 0.0, np.sin(half)])
    q_new = quat_normalize(quat_multiply(q_world_z, state.q))
    return replace(state, q=q_new, phi=float(phi), phi_t_us=int(t_us))


@dataclass
class PipelineResult:
    """Logs, metrics, and timing for one deterministic run."""

    pose_log: pd.DataFrame
    track_log: pd.DataFrame
    nvbm_log: pd.DataFrame
    window_log: pd.DataFrame
    metrics: "MetricsReport"
    timing: dict
    ground_truth: GroundTruthLog | None
    config: RunConfig


def run_pipeline(config: RunConfig) -> PipelineResult:
    """Execute the full estimator chain for one config.

    Returns the pose, track, and identified-landmark logs together with the
    evaluated metrics (empty metrics when the inputs carry no ground truth).
    """
    pl = config.pipeline
    inputs = load_inputs(config)
    camera, ext = inputs.camera, inputs.extrinsics
    constellation = inputs.constellation
    nominal = constellation.frequencies
    positions = {int(i): p for i, p in zip(constellation.ids, constellation.positions)}

    clock = _StageClock()
    clock.start("transitions")
    transitions = detect_transitions(
        inputs.events, tau_s=pl.tau_s, width=camera.width, height=camera.height)
    clock.stop()

    imu_t = synchronize(inputs.events.t_us, inputs.imu.t_us, pl.offset_ms)
    tau_us = int(round(pl.tau_s * US_PER_S))
    steps = pl.imu_rate_hz // pl.detection_rate_hz
    step_us = tau_us // steps
    dt_i = 1.0 / pl.imu_rate_hz
    t_end = int(inputs.events.t_us[-1]) if len(inputs.events) else 0

    ltkf_cfg = TrackerConfig(
        q_p=tuple(config.ltkf.q_p), r=tuple(config.ltkf.r),
        spawn_p=tuple(config.ltkf.spawn_p), gate=config.ltkf.gate,
        t_lost=config.ltkf.t_lost)
    tdkf_cfg = TdkfConfig(
        accel_sigma=config.tdkf.accel_sigma, bias_sigma=config.tdkf.bias_sigma,
        pnp_sigma=config.tdkf.pnp_sigma, gate=config.tdkf.gate,
        literal=config.tdkf.literal)
    # a gate with no escape hatch turns one bad stretch into divergence
    rescue_cfg = replace(tdkf_cfg, gate=float("inf"))

    ori: OrientationState | None = None
    tdkf: TdkfState | None = None
    tracks: dict = {}
    last_pose: PoseEstimate | None = None
    pending_phi: float | None = None
    pending_phi_t: int | None = None
    warm_params: list = []
    cur_j: int | None = None
    since_select = 0
    last_fix_us: int | None = None
    reject_streak = 0

    pose_rows: list[tuple] = []
    track_log = TrackLog()
    nvbm_rows: list[tuple] = []
    window_rows: list[tuple] = []
    nan3 = (np.nan, np.nan, np.nan)

    def pose_row(t_us: int, pnp_valid: int) -> tuple:
        t = tuple(tdkf.t) if tdkf is not None else nan3
        v = tuple(tdkf.v) if tdkf is not None else nan3
        b = tuple(tdkf.a_b) if tdkf is not None else nan3
        q = tuple(ori.q) if ori is not None else (np.nan,) * 4
        return (t_us, *t, *v, *b, *q, pnp_valid)

    def depth_of(ident: int) -> float:
        if tdkf is None or ori is None or ident not in positions:
            return -1.0
        p_c = quat_to_matrix(ori.q).T @ (positions[ident] - tdkf.t)
        return float(p_c[2])

    prev_close = 0
    n_windows = 0
    for window in iter_windows(transitions, pl.tau_s, 0, t_end):
        t_close = window.t_now_us
        n_windows += 1

        # inertial substeps covering (prev_close, t_close]
        for step in range(steps):
            t_s = prev_close + (step + 1) * step_us
            i = int(np.searchsorted(imu_t, t_s, side="right")) - 1
            if i < 0:
                # no IMU sample yet; the close row still gets written below
                if t_s != t_close:
                    pose_rows.append(pose_row(t_s, -1))
                continue
            gyro_c = ext.r_cb @ inputs.imu.gyro[i]
            accel_c = ext.r_cb @ inputs.imu.accel[i]

            clock.start("madgwick")
            if ori is None:
                ori = OrientationState(
                    q=_tilt_quat(accel_c), beta=config.madgwick.beta,
                    yaw_gain=config.madgwick.yaw_gain)
            ori = madgwick_step(
                ori, gyro_c, accel_c, dt_i,
                phi_pnp=pending_phi, phi_t_us=pending_phi_t)
            pending_phi = pending_phi_t = None
            clock.stop()

            clock.start("tdkf")
            if tdkf is not None:
                a_l = accel_to_landmark(inputs.imu.accel[i], ext, ori.q)
                tdkf = tdkf_predict(tdkf, a_l, dt_i, tdkf_cfg)
            clock.stop()

            clock.start("ltkf")
            if tracks:
                v_cam = w_cam = None
                if tdkf is not None:
                    r_lc = quat_to_matrix(ori.q)
                    v_cam = r_lc.T @ tdkf.v
                    w_cam = gyro_c
                tracks = predict_all(
                    tracks, dt_i, camera, depth_of=depth_of,
                    v_cam=v_cam, w_cam=w_cam, q_p=ltkf_cfg.q_p)
                for tr in tracks.values():
                    track_log.append(t_s, tr, "predict")
            clock.stop()

            if t_s != t_close:
                pose_rows.append(pose_row(t_s, -1))

        # window close: cluster, identify, correct, solve, update
        frame = NvbmFrame(t_close, ())
        j_opt = 0
        if len(window) >= pl.min_window_samples:
            clock.start("clustering")
            f_win = window.frequencies
            clusters = None
            # between scheduled selections a single warm refit carries the
            # current count; a degenerate fit or a merged-away component
            # sends the window back through full selection
            if cur_j is not None and since_select < pl.select_every:
                init = next((p for p in warm_params if len(p[0]) == cur_j), None)
                try:
                    refit = em_fit(f_win, cur_j, seed=config.seed, init=init)
                except InsufficientDataError:
                    refit = None
                if refit is not None and not refit.degenerate:
                    cand = assign_clusters(window, refit, cur_j)
                    if len(cand.clusters) == cur_j:
                        clusters = cand
                        warm_params = [
                            p if len(p[0]) != cur_j
                            else (refit.means, refit.variances, refit.weights)
                            for p in warm_params]
            if clusters is None:
                try:
                    sel = select_model(
                        f_win, j_max=pl.j_max, seed=config.seed,
                        warm=warm_params or None, bic_mode=pl.bic_mode)
                except InsufficientDataError:
                    sel = None
                if sel is not None:
                    cur_j = sel.j_opt
                    warm_params = list(sel.params)
                    since_select = 0
                    clusters = assign_clusters(window, sel.model, sel.j_opt)
            if clusters is not None:
                since_select += 1
                j_opt = cur_j
                frame = identify_landmarks(clusters, nominal)
            clock.stop()

        clock.start("ltkf")
        tracks = track_lifecycle(tracks, frame, camera, ltkf_cfg)
        for tr in tracks.values():
            track_log.append(t_close, tr, "update")
        clock.stop()

        for e in frame.entries:
            nvbm_rows.append((t_close, e.landmark_id, e.frequency_hz,
                              e.center[0], e.center[1], e.n_pixels,
                              int(e.ambiguous)))

        pnp_valid = -1
        corr = [
            (positions[ident], np.array(tr.c, float))
            for ident, tr in sorted(tracks.items())
            if tr.misses == 0 and ident in positions
        ]
        if len(corr) >= 4:
            clock.start("pnp")
            est = pnp_solve(
                corr, camera, init=last_pose,
                max_iter=config.pnp.max_iter,
                rms_threshold=config.pnp.rms_threshold,
                accept_rms=config.pnp.accept_rms)
            clock.stop()
            pnp_valid = int(est.valid)
            if est.valid:
                last_pose = est
                last_fix_us = t_close
                reading = yaw_extract(est.rotation)
                if not reading.gimbal and ori is not None:
                    if ori.phi_t_us < 0:
                        ori = _snap_yaw(ori, reading.phi, t_close)
                    else:
                        pending_phi, pending_phi_t = reading.phi, t_close
                clock.start("tdkf")
                if tdkf is None:
                    tdkf = TdkfState(
                        t=est.translation, v=np.zeros(3), a_b=np.zeros(3))
                else:
                    use = (rescue_cfg
                           if reject_streak >= config.tdkf.rescue_after
                           else tdkf_cfg)
                    tdkf, accepted = tdkf_update(tdkf, est.translation, config=use)
                    reject_streak = 0 if accepted else reject_streak + 1
                clock.stop()

        pose_rows.append(pose_row(t_close, pnp_valid))
        dead = (
            last_fix_us is None
            or t_close - last_fix_us > pl.dead_reckon_timeout_s * US_PER_S
        )
        window_rows.append((t_close, len(window), j_opt, len(frame), int(dead)))
        prev_close = t_close

    pose_log = pd.DataFrame(pose_rows, columns=list(POSE_LOG_COLUMNS))
    nvbm_log = pd.DataFrame(nvbm_rows, columns=list(NVBM_LOG_COLUMNS))
    window_log = pd.DataFrame(window_rows, columns=list(WINDOW_LOG_COLUMNS))
    track_df = track_log.to_frame()
    timing = clock.table(n_windows)

    if inputs.ground_truth is not None:
        metrics = evaluate(
            pose_log, track_df, inputs.ground_truth,
            nvbm_log=nvbm_log, window_log=window_log,
            timing=timing, seed=config.seed)
    else:
        metrics = MetricsReport(seed=config.seed, timing=timing)
        metrics.dead_reckon_windows = int(window_log["dead_reckon"].sum())

    return PipelineResult(
        pose_log, track_df, nvbm_log, window_log, metrics, timing,
        inputs.ground_truth, config)


# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------

_AXES = ("x", "y", "z", "norm")


@dataclass
class MetricsReport:
    """Everything the run is judged on, plus the wall-clock table.

    Error statistics cover only timestamps where ground truth exists
    (linear interpolation between truth samples). Timing is wall-clock and
    therefore excluded from the deterministic report files.
    """

    seed: int = 0
    pos_mean_m: dict = field(default_factory=dict)  # axis -> mean abs error
    pos_max_m: dict = field(default_factory=dict)
    ori_mean_deg: float = float("nan")  # geodesic
    ori_max_deg: float = float("nan")
    ori_euler_mean_deg: dict = field(default_factory=dict)
    ori_euler_max_deg: dict = field(default_factory=dict)
    ltkf_rms_px: float = float("nan")
    n_track_points: int = 0
    freq_err_mean_hz: float = float("nan")
    freq_err_max_hz: float = float("nan")
    n_nvbm_entries: int = 0
    window_count_rate: float = float("nan")  # identified count == visible count
    n_windows: int = 0
    n_pose_rows: int = 0
    dead_reckon_windows: int = 0
    timing: dict = field(default_factory=dict)

    @property
    def dead_reckoning(self) -> bool:
        return self.dead_reckon_windows > 0

    def to_json_dict(self) -> dict:
        """Deterministic metrics payload; timing stays out on purpose."""
        return {
            "seed": self.seed,
            "position_error_m": {
                "mean": {k: self.pos_mean_m.get(k) for k in _AXES},
                "max": {k: self.pos_max_m.get(k) for k in _AXES},
            },
            "orientation_error_deg": {
                "geodesic_mean": self.ori_mean_deg,
                "geodesic_max": self.ori_max_deg,
                "euler_mean": dict(self.ori_euler_mean_deg),
                "euler_max": dict(self.ori_euler_max_deg),
            },
            "ltkf_rms_px": self.ltkf_rms_px,
            "n_track_points": self.n_track_points,
            "frequency_error_hz": {
                "mean": self.freq_err_mean_hz,
                "max": self.freq_err_max_hz,
                "n_entries": self.n_nvbm_entries,
            },
            "window_count_rate": self.window_count_rate,
            "n_windows": self.n_windows,
            "n_pose_rows": self.n_pose_rows,
            "dead_reckon_windows": self.dead_reckon_windows,
            "dead_reckoning": self.dead_reckoning,
        }

    def to_text(self) -> str:
        def fmt(x, unit=""):
            if x is None or (isinstance(x, float) and not np.isfinite(x)):
                return "n/a"
            return f"{x:.6g}{unit}"

        lines = [
            "relative localization run report",
            f"seed: {self.seed}",
            f"windows: {self.n_windows}   pose rows: {self.n_pose_rows}",
            "",
            "position error (m), mean / max:",
        ]
        for k in _AXES:
            lines.append(
                f"  {k:<5} {fmt(self.pos_mean_m.get(k))} / {fmt(self.pos_max_m.get(k))}")
        lines += [
            "",
            "orientation error (deg), mean / max:",
            f"  geodesic {fmt(self.ori_mean_deg)} / {fmt(self.ori_max_deg)}",
        ]
        for k in ("yaw", "pitch", "roll"):
            lines.append(
                f"  {k:<8} {fmt(self.ori_euler_mean_deg.get(k))}"
                f" / {fmt(self.ori_euler_max_deg.get(k))}")
        lines += [
            "",
            f"tracker pixel rms: {fmt(self.ltkf_rms_px)}"
            f" over {self.n_track_points} points",
            f"frequency id error (Hz): mean {fmt(self.freq_err_mean_hz)},"
            f" max {fmt(self.freq_err_max_hz)},"
            f" entries {self.n_nvbm_entries}",
            f"window count correctness: {fmt(self.window_count_rate)}",
            f"dead reckoning: "
            + (f"{self.dead_reckon_windows} windows" if self.dead_reckoning else "never"),
            "",
            "timing: wall-clock table in timing.json (kept out of this report"
            " so reruns are byte-identical)",
        ]
        return "\n".join(lines) + "\n"


def timing_table_text(timing: dict) -> str:
    """The per-stage wall-clock table as aligned text."""
    lines = [f"{'stage':<12} {'total ms':>12} {'per-window ms':>14} {'share':>7}"]
    for stage, row in timing.get("stages", {}).items():
        lines.append(
            f"{stage:<12} {row['total_ms']:>12.3f}"
            f" {row['per_window_ms']:>14.4f} {row['share']:>7.1%}")
    return "\n".join(lines) + "\n"


def _interp_columns(t_query: np.ndarray, t_ref: np.ndarray, values: np.ndarray) -> np.ndarray:
    out = np.empty((len(t_query), values.shape[1]))
    for k in range(values.shape[1]):
        out[:, k] = np.interp(t_query, t_ref, values[:, k])
    return out


def evaluate(
    pose_log: pd.DataFrame,
    track_log: pd.DataFrame,
    ground_truth: GroundTruthLog,
    nvbm_log: pd.DataFrame | None = None,
    window_log: pd.DataFrame | None = None,
    timing: dict | None = None,
    seed: int = 0,
) -> MetricsReport:
    """Score logs against truth; linear interpolation onto log timestamps.

    Pose rows from before the first fix (NaN state) and rows outside the
    truth's time range are excluded; an empty remainder is an error.
    """
    gt_t = ground_truth.t_us.astype(float)
    report = MetricsReport(seed=seed, timing=timing or {})
    report.n_pose_rows = int(len(pose_log))

    rows = pose_log.dropna(subset=["tx"])
    rows = rows[(rows["t_us"] >= gt_t[0]) & (rows["t_us"] <= gt_t[-1])]
    if len(rows) == 0:
        raise ValueError("no pose rows overlap the ground-truth time range")
    t_q = rows["t_us"].to_numpy(float)

    est_t = rows[["tx", "ty", "tz"]].to_numpy(float)
    true_t = _interp_columns(t_q, gt_t, ground_truth.translation)
    err = est_t - true_t
    abs_err = np.abs(err)
    norm = np.linalg.norm(err, axis=1)
    for k, ax in enumerate(("x", "y", "z")):
        report.pos_mean_m[ax] = float(abs_err[:, k].mean())
        report.pos_max_m[ax] = float(abs_err[:, k].max())
    report.pos_mean_m["norm"] = float(norm.mean())
    report.pos_max_m["norm"] = float(norm.max())

    q_rows = rows.dropna(subset=["qw"])
    if len(q_rows):
        t_o = q_rows["t_us"].to_numpy(float)
        q_est = q_rows[["qw", "qx", "qy", "qz"]].to_numpy(float)
        q_true = _interp_columns(t_o, gt_t, ground_truth.quat)
        q_true /= np.linalg.norm(q_true, axis=1, keepdims=True)
        dots = np.clip(np.abs(np.sum(q_est * q_true, axis=1)), -1.0, 1.0)
        geo = np.degrees(2.0 * np.arccos(dots))
        report.ori_mean_deg = float(geo.mean())
        report.ori_max_deg = float(geo.max())
        eul_est = np.array([euler_zyx_from_quat(q) for q in q_est])
        eul_true = np.array([euler_zyx_from_quat(q) for q in q_true])
        d = np.degrees(np.abs(
            (eul_est - eul_true + np.pi) % (2.0 * np.pi) - np.pi))
        for k, ax in enumerate(("yaw", "pitch", "roll")):
            report.ori_euler_mean_deg[ax] = float(d[:, k].mean())
            report.ori_euler_max_deg[ax] = float(d[:, k].max())

    if len(track_log) and ground_truth.centers is not None:
        sq_sum = 0.0
        n_pts = 0
        ids = ground_truth.landmark_ids
        col_of = {int(i): k for k, i in enumerate(ids)}
        for ident, grp in track_log.groupby("id"):
            j = col_of.get(int(ident))
            if j is None:
                continue
            t_g = grp["t_us"].to_numpy(float)
            inside = (t_g >= gt_t[0]) & (t_g <= gt_t[-1])
            if not inside.any():
                continue
            t_g = t_g[inside]
            est = grp[["u", "v"]].to_numpy(float)[inside]
            # NaN truth (landmark out of view) poisons its interpolation
            # neighborhood and those samples drop out below
            truth = _interp_columns(t_g, gt_t, ground_truth.centers[:, j, :])
            good = np.isfinite(truth).all(axis=1)
            if ground_truth.visible is not None:
                vis = ground_truth.visible[:, j].astype(float)
                good &= np.interp(t_g, gt_t, vis) >= 1.0
            if not good.any():
                continue
            d2 = np.sum((est[good] - truth[good]) ** 2, axis=1)
            sq_sum += float(d2.sum())
            n_pts += int(good.sum())
        if n_pts:
            report.ltkf_rms_px = float(np.sqrt(sq_sum / n_pts))
            report.n_track_points = n_pts

    if nvbm_log is not None and len(nvbm_log):
        ferr = np.abs(nvbm_log["f_hz"].to_numpy(float)
                      - nvbm_log["id"].to_numpy(float))
        report.freq_err_mean_hz = float(ferr.mean())
        report.freq_err_max_hz = float(ferr.max())
        report.n_nvbm_entries = int(len(nvbm_log))

    if window_log is not None and len(window_log):
        report.n_windows = int(len(window_log))
        report.dead_reckon_windows = int(window_log["dead_reckon"].sum())
        if ground_truth.visible is not None:
            t_w = window_log["t_us"].to_numpy(float)
            idx = np.clip(np.searchsorted(gt_t, t_w), 0, len(gt_t) - 1)
            vis_count = ground_truth.visible[idx].sum(axis=1)
            found = window_log["n_identified"].to_numpy(int)
            report.window_count_rate = float(np.mean(found == vis_count))

    return report


# ---------------------------------------------------------------------------
# Artifacts
# ---------------------------------------------------------------------------


def write_pose_log(path, pose_log: pd.DataFrame) -> None:
    pose_log.to_csv(path, index=False, float_format="%.9g")


def read_pose_log(path) -> pd.DataFrame:
    df = pd.read_csv(path)
    missing = [c for c in POSE_LOG_COLUMNS if c not in df.columns]
    if missing:
        raise ValueError(f"pose log missing columns: {missing}")
    return df


def write_nvbm_log(path, nvbm_log: pd.DataFrame) -> None:
    nvbm_log.to_csv(path, index=False, float_format="%.9g")


def read_nvbm_log(path) -> pd.DataFrame:
    df = pd.read_csv(path)
    missing = [c for c in NVBM_LOG_COLUMNS if c not in df.columns]
    if missing:
        raise ValueError(f"identified-landmark log missing columns: {missing}")
    return df


def write_report(out_dir, metrics: MetricsReport, config: RunConfig | None = None):
    """report.txt + report.json (deterministic) and timing.json (not).

    Returns the three paths.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    txt = out / "report.txt"
    js = out / "report.json"
    tj = out / "timing.json"
    txt.write_text(metrics.to_text())
    payload = metrics.to_json_dict()
    if config is not None:
        payload["config"] = dump_config(config)
    js.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    tj.write_text(json.dumps(metrics.timing, indent=2, sort_keys=True) + "\n")
    return txt, js, tj


def write_run_outputs(out_dir, result: PipelineResult):
    """All run artifacts under one directory; returns the directory."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_pose_log(out / "pose_log.csv", result.pose_log)
    result.track_log.to_csv(out / "track_log.csv", index=False, float_format="%.6f")
    write_nvbm_log(out / "nvbm_log.csv", result.nvbm_log)
    result.window_log.to_csv(out / "window_log.csv", index=False)
    if result.ground_truth is not None:
        result.ground_truth.to_csv(out / "ground_truth.csv")
        if result.ground_truth.centers is not None:
            result.ground_truth.landmarks_to_csv(out / "gt_landmarks.csv")
    write_report(out, result.metrics, result.config)
    return out
