"""Command-line entry points: simulate, run, eval, sweep.

Every subcommand exits 0 on success and 2 on configuration or IO errors,
with the offending path or key named on stderr. Config files use the
dotted-key text format (JSON accepted); unknown keys are hard errors.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import pandas as pd

from .config import ConfigError, RunConfig, load_config
from .events import write_events_csv
from .pipeline import (
    evaluate,
    read_nvbm_log,
    read_pose_log,
    run_pipeline,
    scenario_from_config,
    timing_table_text,
    write_landmark_map,
    write_report,
    write_run_outputs,
)
from .sim import GroundTruthLog, simulate

# friendly sweep names for the most common study axes
SWEEP_ALIASES = {
    "range": "scenario.distance",
    "noise": "scenario.jitter_us",
    "count": "scenario.count",
}


def _load_run_config(path: str | None, args) -> RunConfig:
    if path is None:
        config = RunConfig()
    else:
        p = Path(path)
        if not p.exists():
            raise FileNotFoundError(f"config file not found: {p}")
        config = load_config(p)
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if getattr(args, "paper_literal", False):
        overrides["pipeline.bic_mode"] = "literal"
        overrides["tdkf.literal"] = True
    if overrides:
        config.apply(overrides)
    return config


def _cmd_simulate(args) -> int:
    config = _load_run_config(args.config, args)
    scenario = scenario_from_config(config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    sim = simulate(scenario)
    write_events_csv(out / "events.csv", sim.events)
    sim.imu.to_csv(out / "imu.csv")
    sim.ground_truth.to_csv(out / "ground_truth.csv")
    sim.ground_truth.landmarks_to_csv(out / "gt_landmarks.csv")
    write_landmark_map(out / "landmarks.csv", scenario.constellation)
    print(f"wrote {len(sim.events)} events, {len(sim.imu)} imu samples, "
          f"{len(sim.ground_truth)} truth rows to {out}")
    return 0


def _cmd_run(args) -> int:
    config = _load_run_config(args.config, args)
    result = run_pipeline(config)
    out = write_run_outputs(args.out, result)
    if config.output.plots:
        from .plots import render_all

        render_all(result, out)
    print(result.metrics.to_text())
    print(timing_table_text(result.timing))
    print(f"artifacts in {out}")
    return 0


def _require(path: Path) -> Path:
    if not path.exists():
        raise FileNotFoundError(f"missing input file: {path}")
    return path


def _cmd_eval(args) -> int:
    d = Path(args.dir)
    pose = read_pose_log(_require(d / "pose_log.csv"))
    track = pd.read_csv(_require(d / "track_log.csv"))
    nvbm = read_nvbm_log(_require(d / "nvbm_log.csv"))
    gt_path = _require(d / "ground_truth.csv")
    lm_path = d / "gt_landmarks.csv"
    gt = GroundTruthLog.from_csv(gt_path, lm_path if lm_path.exists() else None)
    window_path = d / "window_log.csv"
    window = pd.read_csv(window_path) if window_path.exists() else None
    seed = 0
    report_path = d / "report.json"
    if report_path.exists():
        import json

        seed = int(json.loads(report_path.read_text()).get("seed", 0))
    metrics = evaluate(pose, track, gt, nvbm_log=nvbm, window_log=window, seed=seed)
    write_report(d, metrics)
    print(metrics.to_text())
    return 0


def _parse_points(text: str) -> list[float]:
    """Accepts '1..10' (unit steps, inclusive) or a comma list '1,2,5'."""
    if ".." in text:
        lo_s, hi_s = text.split("..", 1)
        lo, hi = float(lo_s), float(hi_s)
        n = int(round(hi - lo)) + 1
        if n < 1:
            raise ConfigError(f"empty sweep range: {text!r}")
        return [lo + k for k in range(n)]
    return [float(v) for v in text.split(",") if v.strip()]


def _cmd_sweep(args) -> int:
    key = SWEEP_ALIASES.get(args.param, args.param)
    points = _parse_points(args.range)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for value in points:
        config = _load_run_config(args.config, args)
        overrides = {key: value, "scenario.duration_s": args.duration,
                     "output.plots": False}
        if key == "scenario.distance":
            overrides["scenario.kind"] = "hover"
        if key == "scenario.count":
            overrides[key] = int(value)
        config.apply(overrides)
        metrics = run_pipeline(config).metrics
        rows.append({
            "param": key,
            "value": value,
            "pos_mean_m": metrics.pos_mean_m.get("norm"),
            "pos_max_m": metrics.pos_max_m.get("norm"),
            "ori_mean_deg": metrics.ori_mean_deg,
            "ori_max_deg": metrics.ori_max_deg,
            "ltkf_rms_px": metrics.ltkf_rms_px,
            "freq_err_mean_hz": metrics.freq_err_mean_hz,
            "window_count_rate": metrics.window_count_rate,
            "n_windows": metrics.n_windows,
        })
        print(f"{key} = {value}: pos mean {rows[-1]['pos_mean_m']}")
    path = out / "sweep.csv"
    pd.DataFrame(rows).to_csv(path, index=False, float_format="%.9g")
    print(f"wrote {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="flickerloc",
        description="event-camera relative localization from flickering landmarks")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=None,
                       help="override the config seed")
        p.add_argument("--paper-literal", action="store_true",
                       help="printed-form score and transition variants")

    p_sim = sub.add_parser("simulate", help="generate a synthetic dataset")
    p_sim.add_argument("config", nargs="?", default=None,
                       help="run config (defaults: 30 s square scenario)")
    p_sim.add_argument("-o", "--out", default="out", help="output directory")
    common(p_sim)
    p_sim.set_defaults(func=_cmd_simulate)

    p_run = sub.add_parser("run", help="run the full pipeline")
    p_run.add_argument("config", nargs="?", default=None)
    p_run.add_argument("-o", "--out", default="out")
    common(p_run)
    p_run.set_defaults(func=_cmd_run)

    p_eval = sub.add_parser("eval", help="re-score a run directory")
    p_eval.add_argument("dir")
    p_eval.set_defaults(func=_cmd_eval)

    p_sweep = sub.add_parser("sweep", help="metrics across one parameter")
    p_sweep.add_argument("param",
                         help="config key or alias: " + ", ".join(SWEEP_ALIASES))
    p_sweep.add_argument("range", help="'1..10' or comma list")
    p_sweep.add_argument("config", nargs="?", default=None)
    p_sweep.add_argument("-o", "--out", default="out")
    p_sweep.add_argument("--duration", type=float, default=5.0,
                         help="seconds simulated per sweep point")
    common(p_sweep)
    p_sweep.set_defaults(func=_cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
