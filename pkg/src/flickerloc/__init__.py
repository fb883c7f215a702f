"""Relative localization from flickering landmarks seen by an event camera.

The package covers the full chain: a synthetic event/IMU scene generator,
polarity-transition detection, frequency clustering and landmark
identification, image-plane tracking, pose estimation, inertial fusion,
and an end-to-end pipeline with metrics and reports.
"""

from .camera import BehindCameraError, CameraModel, ExtrinsicCalib, Pose, project
from .config import ConfigError, RunConfig, dump_config, load_config
from .events import (
    EventArray,
    TransitionArray,
    TransitionWindow,
    advance_window,
    detect_transitions,
    iter_windows,
    read_events_binary,
    read_events_csv,
    write_events_binary,
    write_events_csv,
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
    GmmModel,
    InsufficientDataError,
    NvbmEntry,
    NvbmFrame,
    SelectionResult,
    assign_clusters,
    em_fit,
    extract_centroid,
    identify_landmarks,
    select_model,
)
from .pipeline import (
    MetricsReport,
    PipelineResult,
    estimate_time_offset,
    evaluate,
    run_pipeline,
    scenario_from_config,
    synchronize,
)
from .pnp import (
    InsufficientPointsError,
    PoseEstimate,
    layout_check,
    pnp_solve,
    yaw_extract,
)
from .sim import (
    GroundTruthLog,
    ImuData,
    Landmark,
    LandmarkConstellation,
    ScenarioConfig,
    SensorNoiseSpec,
    TrajectorySpec,
    ground_truth_log,
    hover_scenario,
    nominal_constellation,
    simulate,
    square_scenario,
    synthesize_events,
    synthesize_imu,
)
from .tracking import (
    LtkfTrack,
    TrackerConfig,
    interaction_matrix,
    ltkf_predict,
    ltkf_update,
    pixel_velocity,
    predict_all,
    spawn_track,
    track_lifecycle,
)

__version__ = "0.1.0"

__all__ = [
    "BehindCameraError", "CameraModel", "ExtrinsicCalib", "Pose", "project",
    "ConfigError", "RunConfig", "dump_config", "load_config",
    "EventArray", "TransitionArray", "TransitionWindow", "advance_window",
    "detect_transitions", "iter_windows", "read_events_binary",
    "read_events_csv", "write_events_binary", "write_events_csv",
    "OrientationState", "TdkfConfig", "TdkfState", "accel_to_landmark",
    "madgwick_step", "tdkf_predict", "tdkf_update",
    "GmmModel", "InsufficientDataError", "NvbmEntry", "NvbmFrame",
    "SelectionResult", "assign_clusters", "em_fit", "extract_centroid",
    "identify_landmarks", "select_model",
    "MetricsReport", "PipelineResult", "estimate_time_offset", "evaluate",
    "run_pipeline", "scenario_from_config", "synchronize",
    "InsufficientPointsError", "PoseEstimate", "layout_check", "pnp_solve",
    "yaw_extract",
    "GroundTruthLog", "ImuData", "Landmark", "LandmarkConstellation",
    "ScenarioConfig", "SensorNoiseSpec", "TrajectorySpec", "ground_truth_log",
    "hover_scenario", "nominal_constellation", "simulate", "square_scenario",
    "synthesize_events", "synthesize_imu",
    "LtkfTrack", "TrackerConfig", "interaction_matrix", "ltkf_predict",
    "ltkf_update", "pixel_velocity", "predict_all", "spawn_track",
    "track_lifecycle",
    "__version__",
]
