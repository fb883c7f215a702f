"""Run configuration: flat dotted-key text files with JSON values.

The format is `[section]` headers over `key = value` lines; values parse as
JSON with a bare-string fallback. A whole-file JSON document (top-level
object of sections) is accepted as an alternative. Unknown keys are hard
errors so typos cannot silently fall back to defaults.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields
from pathlib import Path

DEFAULT_OFFSET_MS = 3.2


class ConfigError(ValueError):
    """Malformed config file or unknown key."""


@dataclass
class ScenarioSection:
    kind: str = "square"  # hover | square | waypoints
    duration_s: float = 30.0
    count: int = 7
    distance: float = 6.0
    square_side: float = 1.5
    segment_time: float = 6.0
    jitter_us: float = 0.5
    background_rate: float = 0.01
    latency_spike_prob: float = 2e-5
    contrast_threshold: float = 0.2
    refractory_us: float = 100.0
    accel_noise: float = 0.02
    gyro_noise: float = 0.002
    accel_bias: tuple = (0.0, 0.0, 0.0)
    gyro_bias: tuple = (0.0, 0.0, 0.0)
    clock_offset_ms: float = DEFAULT_OFFSET_MS
    drift_velocity: tuple = (0.0, 0.0, 0.0)
    events_file: str = ""  # external inputs override synthesis
    imu_file: str = ""
    ground_truth_file: str = ""
    landmarks_file: str = ""


@dataclass
class PipelineSection:
    tau_s: float = 0.01
    detection_rate_hz: int = 100  # window close rate f_d
    imu_rate_hz: int = 200  # filter prediction rate f_i
    offset_ms: float = DEFAULT_OFFSET_MS
    j_max: int = 10
    select_every: int = 10  # full model selection cadence in windows
    min_window_samples: int = 8
    bic_mode: str = "pooled"  # pooled | literal | standard
    dead_reckon_timeout_s: float = 1.0


@dataclass
class LtkfSection:
    q_p: tuple = (0.25, 0.25)
    r: tuple = (1.0, 1.0)
    spawn_p: tuple = (4.0, 4.0)
    gate: float = 11.83
    t_lost: int = 3


@dataclass
class TdkfSection:
    accel_sigma: float = 0.05
    # wider than a sensor-grade bias walk on purpose: the bias state also
    # absorbs attitude-induced gravity leak, which swings over seconds
    # whenever the platform sustains an acceleration
    bias_sigma: float = 0.05
    pnp_sigma: float = 0.02
    gate: float = 13.93
    literal: bool = False
    # consecutive gate rejections before a forced update; the gate exists
    # for isolated outliers, not for locking out a diverged filter
    rescue_after: int = 5


@dataclass
class MadgwickSection:
    beta: float = 0.1
    yaw_gain: float = 1.0


@dataclass
class PnpSection:
    rms_threshold: float = 5.0
    max_iter: int = 50
    # warm-started solves stop at the first fit at or below this residual
    accept_rms: float = 1.0


@dataclass
class OutputSection:
    plots: bool = True


@dataclass
class RunConfig:
    seed: int = 0
    scenario: ScenarioSection = field(default_factory=ScenarioSection)
    pipeline: PipelineSection = field(default_factory=PipelineSection)
    ltkf: LtkfSection = field(default_factory=LtkfSection)
    tdkf: TdkfSection = field(default_factory=TdkfSection)
    madgwick: MadgwickSection = field(default_factory=MadgwickSection)
    pnp: PnpSection = field(default_factory=PnpSection)
    output: OutputSection = field(default_factory=OutputSection)

    def __post_init__(self):
        if self.pipeline.imu_rate_hz % self.pipeline.detection_rate_hz != 0:
            raise ConfigError(
                "pipeline.imu_rate_hz must be an integer multiple of "
                "pipeline.detection_rate_hz, got "
                f"{self.pipeline.imu_rate_hz}/{self.pipeline.detection_rate_hz}")

    def apply(self, dotted: dict) -> "RunConfig":
        """Set dotted keys; unknown keys raise listing every offender."""
        sections = {f.name: getattr(self, f.name) for f in fields(self)
                    if f.name != "seed"}
        unknown = []
        for key, value in dotted.items():
            if key == "seed":
                self.seed = int(value)
                continue
            part = key.split(".", 1)
            if len(part) != 2 or part[0] not in sections:
                unknown.append(key)
                continue
            section, name = part
            target = sections[section]
            if not hasattr(target, name):
                unknown.append(key)
                continue
            current = getattr(target, name)
            if isinstance(current, tuple) and isinstance(value, list):
                value = tuple(value)
            setattr(target, name, value)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        self.__post_init__()
        return self


def _parse_value(raw: str):
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw  # bare strings (paths, names) pass through


def _flatten(doc: dict, prefix: str = "") -> dict:
    out = {}
    for key, value in doc.items():
        dotted = f"{prefix}{key}"
        if isinstance(value, dict):
            out.update(_flatten(value, f"{dotted}."))
        else:
            out[dotted] = value
    return out


def parse_config_text(text: str) -> dict:
    """Dotted key/value pairs from the `[section]` + `key = value` format."""
    dotted = {}
    section = ""
    for lineno, line in enumerate(text.splitlines(), 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if body.startswith("[") and body.endswith("]"):
            section = body[1:-1].strip()
            continue
        if "=" not in body:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = (s.strip() for s in body.split("=", 1))
        full = f"{section}.{key}" if section and "." not in key else key
        dotted[full] = _parse_value(raw)
    return dotted


def load_config(path) -> RunConfig:
    """RunConfig from a text or JSON config file."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    text = path.read_text()
    if path.suffix == ".json":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}: invalid JSON ({e})") from e
        if not isinstance(doc, dict):
            raise ConfigError(f"{path}: top level must be an object")
        dotted = _flatten(doc)
    else:
        dotted = parse_config_text(text)
    return RunConfig().apply(dotted)


def dump_config(config: RunConfig) -> str:
    """Round-trippable text form of a RunConfig."""
    lines = [f"seed = {config.seed}", ""]
    for f in fields(config):
        if f.name == "seed":
            continue
        section = getattr(config, f.name)
        lines.append(f"[{f.name}]")
        for sf in fields(section):
            value = getattr(section, sf.name)
            if isinstance(value, tuple):
                value = list(value)
            lines.append(f"{sf.name} = {json.dumps(value)}")
        lines.append("")
    return "\n".join(lines)
